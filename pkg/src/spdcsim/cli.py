"""Command-line front end: spectra, dip/fringe traces, visibility sweeps,
matching-point solves and the closed-form-vs-quadrature validation suite,
all written as deterministic CSV data products.

Config precedence: command-line flag > config-file key > built-in default.
Exit codes: 0 ok, 1 invalid input, 2 numerical non-convergence, 3 I/O.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .biphoton import BiphotonAmplitude, PumpSpectrum, grid, truncation_halfwidth
from .dispersion import (
    DegenerateGammas,
    DispersionModel,
    KnobSpec,
    PhaseMatchParams,
    PolynomialBranch,
    ZeroCurvature,
    check_condition,
    fluorescence_bandwidth,
    polar_params,
    solve_epm,
    taylor_gammas,
    validity_bound,
)
from .interferometry import (
    TraceKind,
    closed_form_params,
    hom_rate_closed,
    hom_trace_integral,
    mz_rate_closed,
    mz_trace_integral,
    sweep_visibility,
)
from .numerics import Interval, NonConvergence, QuadratureSpec

__all__ = ["RunConfig", "main"]

DEFAULT_THETAS = (-math.pi / 4, -math.pi / 5, -math.pi / 6, 0.0, math.pi / 5)

# the six reference parameter sets exercised by the validate command
VALIDATION_SETS = (
    ("epm_hom", TraceKind.HOM, -math.pi / 4, 1e3),
    ("epm_mz", TraceKind.MZ, -math.pi / 4, 1e3),
    ("conv_hom_pos", TraceKind.HOM, math.pi / 5, 2e4),
    ("conv_mz_pos", TraceKind.MZ, math.pi / 5, 2e4),
    ("conv_hom_neg", TraceKind.HOM, -math.pi / 6, 2e4),
    ("conv_mz_neg", TraceKind.MZ, -math.pi / 6, 2e4),
)


class CliError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    omega_p: float = 2000.0     # rad/ps
    pump_bw: float = 40.0       # rad/ps
    gamma: float = 8e-5         # ps/um
    theta: float = -math.pi / 4
    length_um: float = 1e3
    tau_max: float | None = None
    tau_steps: int | None = None
    grid_span: float | None = None
    grid_steps: int = 101
    method: str = "closed"
    rel_tol: float | None = None
    abs_tol: float | None = None
    threads: int = 1
    out: str = "out.csv"
    kind: str = "hom"
    sweep_lo: float | None = None
    sweep_hi: float | None = None
    sweep_steps: int = 41
    thetas: tuple[float, ...] = DEFAULT_THETAS
    crystal: str | None = None
    omega_lo: float | None = None
    omega_hi: float | None = None
    zeta_lo: float | None = None
    zeta_hi: float | None = None
    units: str = "radps"

    def validate(self) -> None:
        if self.omega_p <= 0 or self.pump_bw <= 0 or self.gamma <= 0 or self.length_um <= 0:
            raise CliError("omega_p, pump_bw, gamma and length_um must all be > 0")
        if not (-math.pi < self.theta <= math.pi):
            raise CliError("theta must lie in (-pi, pi]")
        if self.tau_steps is not None and self.tau_steps < 2:
            raise CliError("tau_steps must be >= 2")
        if self.grid_steps < 2:
            raise CliError("grid_steps must be >= 2")
        if self.method not in ("closed", "quadrature", "both"):
            raise CliError("method must be closed, quadrature or both")
        if self.kind not in ("hom", "mz"):
            raise CliError("kind must be hom or mz")
        if self.threads < 1:
            raise CliError("threads must be >= 1")
        if self.units not in ("radps", "si"):
            raise CliError("units must be radps or si")

    @property
    def params(self) -> PhaseMatchParams:
        return PhaseMatchParams(omega_p=self.omega_p, gamma=self.gamma,
                                theta=self.theta, length=self.length_um)

    @property
    def pump(self) -> PumpSpectrum:
        return PumpSpectrum(omega_p=self.omega_p, bandwidth=self.pump_bw)

    @property
    def quad_spec(self) -> QuadratureSpec | None:
        if self.rel_tol is None and self.abs_tol is None:
            return None
        return QuadratureSpec(rel_tol=self.rel_tol if self.rel_tol is not None else 1e-6,
                              abs_tol=self.abs_tol if self.abs_tol is not None else 1e-7)


_FLOAT_KEYS = {"omega_p", "pump_bw", "gamma", "theta", "length_um", "tau_max",
               "grid_span", "rel_tol", "abs_tol", "sweep_lo", "sweep_hi",
               "omega_lo", "omega_hi", "zeta_lo", "zeta_hi"}
_INT_KEYS = {"tau_steps", "grid_steps", "threads", "sweep_steps"}
_STR_KEYS = {"method", "out", "kind", "crystal", "units"}
_ANGULAR_FREQ_KEYS = ("omega_p", "pump_bw", "omega_lo", "omega_hi")


def _parse_kv_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        raw[key] = value
    return raw


def _coerce_config(raw: dict[str, str], path: str) -> dict:
    out: dict = {}
    for key, value in raw.items():
        if key in _FLOAT_KEYS:
            out[key] = float(value)
        elif key in _INT_KEYS:
            out[key] = int(value)
        elif key in _STR_KEYS:
            out[key] = value
        elif key == "thetas":
            out[key] = tuple(float(tok) for tok in value.split(",") if tok.strip())
        else:
            raise CliError(f"{path}: unknown config key {key!r}")
    return out


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = replace(cfg, **_coerce_config(_parse_kv_file(args.config), args.config))
    overrides = {}
    for f in fields(RunConfig):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = tuple(val) if f.name == "thetas" else val
    cfg = replace(cfg, **overrides)
    if cfg.units == "si":
        # angular frequencies supplied in 1/s: convert to rad/ps
        si = {k: getattr(cfg, k) * 1e-12 for k in _ANGULAR_FREQ_KEYS
              if getattr(cfg, k) is not None}
        if cfg.kind == "hom" and cfg.sweep_lo is not None:
            si["sweep_lo"] = cfg.sweep_lo * 1e-12
            si["sweep_hi"] = cfg.sweep_hi * 1e-12
        cfg = replace(cfg, **si)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    return format(float(value), ".9g")


def _meta_lines(cfg: RunConfig, extra: dict | None = None) -> list[str]:
    # threads is an execution detail with no effect on the numbers, and
    # keeping it out preserves byte-identical output across worker counts
    entries: dict[str, object] = {f.name: getattr(cfg, f.name) for f in fields(RunConfig)
                                  if f.name != "threads"}
    if extra:
        entries.update(extra)
    lines = []
    for key in sorted(entries):
        value = entries[key]
        if value is None:
            continue
        if isinstance(value, tuple):
            value = ",".join(repr(v) for v in value)
        lines.append(f"# {key}={value!r}" if isinstance(value, str) else f"# {key}={value}")
    return lines


def _write_csv(path: str, cfg: RunConfig, extra_meta: dict | None,
               header: list[str], rows) -> None:
    lines = _meta_lines(cfg, extra_meta)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Trace helpers
# ---------------------------------------------------------------------------

def _tau_grid(cfg: RunConfig, kind: TraceKind) -> np.ndarray:
    cfp = closed_form_params(cfg.params, cfg.pump)
    tau_max = cfg.tau_max if cfg.tau_max is not None else 2.0 * cfp.tau_theta + 8.0 / cfg.pump_bw
    steps = cfg.tau_steps
    if steps is None:
        steps = 201
        if kind is TraceKind.MZ:
            # at least 40 samples per fringe period, else the fringes alias
            fringe = 2.0 * math.pi / cfg.omega_p
            steps = max(steps, int(math.ceil(2.0 * tau_max / fringe * 40.0)) + 1)
    return np.linspace(-tau_max, tau_max, steps)


def _quadrature_trace(cfg: RunConfig, kind: TraceKind, taus: np.ndarray) -> np.ndarray:
    run = hom_trace_integral if kind is TraceKind.HOM else mz_trace_integral
    tau_max = float(np.max(np.abs(taus)))
    if cfg.threads <= 1 or len(taus) < 8:
        return run(cfg.params, cfg.pump, taus, cfg.quad_spec, tau_max=tau_max)
    # warm the engine cache so the workers only do dot products; chunk
    # boundaries cannot affect the per-delay values
    run(cfg.params, cfg.pump, taus[:1], cfg.quad_spec, tau_max=tau_max)
    chunks = np.array_split(taus, cfg.threads)
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        parts = list(pool.map(
            lambda part: run(cfg.params, cfg.pump, part, cfg.quad_spec, tau_max=tau_max),
            chunks))
    return np.concatenate(parts)


def _closed_trace(cfg: RunConfig, kind: TraceKind, taus: np.ndarray) -> np.ndarray:
    cfp = closed_form_params(cfg.params, cfg.pump)
    if kind is TraceKind.HOM:
        return np.array([hom_rate_closed(cfp, t) for t in taus])
    return np.array([mz_rate_closed(cfp, cfg.pump, cfg.params, t) for t in taus])


def _trace_command(cfg: RunConfig, kind: TraceKind) -> int:
    taus = _tau_grid(cfg, kind)
    columns: list[tuple[str, np.ndarray]] = [("tau_ps", taus)]
    if cfg.method in ("closed", "both"):
        columns.append(("P_closed", _closed_trace(cfg, kind, taus)))
    if cfg.method in ("quadrature", "both"):
        columns.append(("P_quadrature", _quadrature_trace(cfg, kind, taus)))
    header = [name for name, _ in columns]
    rows = zip(*(col for _, col in columns))
    _write_csv(cfg.out, cfg, {"tau_max_effective": taus[-1], "tau_steps_effective": len(taus)},
               header, rows)
    return 0


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> int:
    params, pump = cfg.params, cfg.pump
    span = cfg.grid_span if cfg.grid_span is not None else truncation_halfwidth(
        params, pump, lobes=3.0, sigmas=3.0)
    center = 0.5 * cfg.omega_p
    iv = Interval(center - span, center + span)
    g = grid(BiphotonAmplitude(params=params, pump=pump), iv, iv, cfg.grid_steps)
    rows = ((g.axis_s[j], g.axis_i[k], g.values[j, k])
            for j in range(len(g.axis_s)) for k in range(len(g.axis_i)))
    _write_csv(cfg.out, cfg, {"grid_span_effective": span},
               ["omega_s", "omega_i", "abs_A"], rows)
    return 0


def cmd_hom(cfg: RunConfig) -> int:
    return _trace_command(cfg, TraceKind.HOM)


def cmd_mz(cfg: RunConfig) -> int:
    return _trace_command(cfg, TraceKind.MZ)


def cmd_visibility(cfg: RunConfig) -> int:
    kind = TraceKind(cfg.kind)
    if cfg.sweep_lo is None or cfg.sweep_hi is None:
        raise CliError("visibility needs sweep_lo and sweep_hi")
    curves = sweep_visibility(kind, cfg.thetas, Interval(cfg.sweep_lo, cfg.sweep_hi),
                              cfg.sweep_steps, omega_p=cfg.omega_p, gamma=cfg.gamma,
                              length=cfg.length_um, pump_bw=cfg.pump_bw)
    rows = ((curves[0].xs[j], curve.theta, curve.vs[j])
            for j in range(len(curves[0].xs)) for curve in curves)
    _write_csv(cfg.out, cfg, {"swept": curves[0].swept},
               ["sweep_value", "theta", "visibility"], rows)
    return 0


def _parse_crystal_file(path: str) -> DispersionModel:
    raw = _parse_kv_file(path)
    coeffs: dict[str, dict[int, float]] = {"p": {}, "s": {}, "i": {}}
    validity: dict[str, float] = {}
    knob: dict[str, str] = {}
    for key, value in raw.items():
        parts = key.split(".")
        if parts[0] == "branch" and len(parts) == 3 and parts[1] in coeffs and parts[2].startswith("c"):
            coeffs[parts[1]][int(parts[2][1:])] = float(value)
        elif parts[0] == "validity" and len(parts) == 2 and parts[1] in ("lo", "hi"):
            validity[parts[1]] = float(value)
        elif parts[0] == "knob" and len(parts) == 2 and parts[1] in ("branch", "order"):
            knob[parts[1]] = value
        else:
            raise CliError(f"{path}: unknown crystal key {key!r}")
    if "lo" not in validity or "hi" not in validity:
        raise CliError(f"{path}: validity.lo and validity.hi are required")
    branches = {}
    for name, cmap in coeffs.items():
        if not cmap:
            raise CliError(f"{path}: branch.{name} has no coefficients")
        branches[name] = PolynomialBranch([cmap.get(j, 0.0) for j in range(max(cmap) + 1)])
    spec = None
    if knob:
        if "branch" not in knob or "order" not in knob:
            raise CliError(f"{path}: knob needs both knob.branch and knob.order")
        spec = KnobSpec(branch=knob["branch"], order=int(knob["order"]))
    return DispersionModel(k_p=branches["p"], k_s=branches["s"], k_i=branches["i"],
                           validity=Interval(validity["lo"], validity["hi"]), knob=spec)


def cmd_match(cfg: RunConfig) -> int:
    if cfg.crystal is None:
        raise CliError("match needs --crystal")
    missing = [k for k in ("omega_lo", "omega_hi", "zeta_lo", "zeta_hi")
               if getattr(cfg, k) is None]
    if missing:
        raise CliError(f"match needs {', '.join(missing)}")
    model = _parse_crystal_file(cfg.crystal)
    omega_p, zeta = solve_epm(model, Interval(cfg.omega_lo, cfg.omega_hi),
                              Interval(cfg.zeta_lo, cfg.zeta_hi))
    solved = model.with_zeta(zeta) if model.knob is not None else model
    lines = [f"omega_p = {_fmt(omega_p)} rad/ps", f"zeta = {_fmt(zeta)}"]
    for order in range(4):
        lines.append(f"residual_order{order} = {_fmt(check_condition(solved, omega_p, order))}")
    gs, gi = taylor_gammas(solved, omega_p)
    lines.append(f"gamma_s = {_fmt(gs)} ps/um")
    lines.append(f"gamma_i = {_fmt(gi)} ps/um")
    try:
        gamma, theta = polar_params(gs, gi)
    except DegenerateGammas:
        lines.append("gamma = degenerate (gamma_s = gamma_i = 0, first-order model invalid)")
    else:
        lines.append(f"gamma = {_fmt(gamma)} ps/um")
        lines.append(f"theta = {_fmt(theta)} rad")
        params = PhaseMatchParams(omega_p=omega_p, gamma=gamma, theta=theta,
                                  length=cfg.length_um)
        try:
            lines.append(f"omega_f = {_fmt(fluorescence_bandwidth(params))} rad/ps")
        except ValueError:
            lines.append("omega_f = inf (gamma_s = gamma_i)")
    try:
        lines.append(f"l_max = {_fmt(validity_bound(solved, omega_p, cfg.pump_bw).l_max)} um")
    except ZeroCurvature:
        lines.append("l_max = inf (zero curvature)")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if cfg.out != RunConfig.out:
        Path(cfg.out).write_text(report)
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    rows = []
    for name, kind, theta, length in VALIDATION_SETS:
        sub = replace(cfg, theta=theta, length_um=length)
        taus = np.linspace(-1, 1, 201)
        cfp = closed_form_params(sub.params, sub.pump)
        span = 2.0 * cfp.tau_theta + 8.0 / sub.pump_bw
        taus = taus * span
        closed = _closed_trace(sub, kind, taus)
        quad = _quadrature_trace(sub, kind, taus)
        dev = float(np.max(np.abs(closed - quad)))
        print(f"{name}: kind={kind.value} theta={_fmt(theta)} length_um={_fmt(length)} "
              f"max_dev={dev:.3e}")
        rows.append((theta, length, dev))
    _write_csv(cfg.out, cfg, {"sets": ",".join(s[0] for s in VALIDATION_SETS)},
               ["theta", "length_um", "max_abs_deviation"], rows)
    worst = max(r[2] for r in rows)
    print(f"overall max deviation: {worst:.3e}")
    return 0


COMMANDS = {
    "spectrum": cmd_spectrum,
    "hom": cmd_hom,
    "mz": cmd_mz,
    "visibility": cmd_visibility,
    "match": cmd_match,
    "validate": cmd_validate,
}


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):  # keep exit codes: argparse's default is 2
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="spdcsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: _Parser) -> None:
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--out", help="output path (CSV, or text for match)")
        p.add_argument("--units", choices=["radps", "si"],
                       help="angular-frequency input units (si means 1/s)")
        p.add_argument("--threads", type=int)
        p.add_argument("--omega-p", dest="omega_p", type=float)
        p.add_argument("--pump-bw", dest="pump_bw", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--theta", type=float)
        p.add_argument("--length-um", dest="length_um", type=float)
        p.add_argument("--rel-tol", dest="rel_tol", type=float)
        p.add_argument("--abs-tol", dest="abs_tol", type=float)

    p = sub.add_parser("spectrum", help="joint spectral amplitude magnitude grid")
    add_common(p)
    p.add_argument("--grid-span", dest="grid_span", type=float)
    p.add_argument("--grid-steps", dest="grid_steps", type=int)

    for name, blurb in (("hom", "dip coincidence trace"), ("mz", "fringe coincidence trace")):
        p = sub.add_parser(name, help=blurb)
        add_common(p)
        p.add_argument("--tau-max", dest="tau_max", type=float)
        p.add_argument("--tau-steps", dest="tau_steps", type=int)
        p.add_argument("--method", choices=["closed", "quadrature", "both"])

    p = sub.add_parser("visibility", help="visibility sweep curves")
    add_common(p)
    p.add_argument("--kind", choices=["hom", "mz"])
    p.add_argument("--sweep-lo", dest="sweep_lo", type=float)
    p.add_argument("--sweep-hi", dest="sweep_hi", type=float)
    p.add_argument("--sweep-steps", dest="sweep_steps", type=int)
    p.add_argument("--thetas", type=lambda s: tuple(float(t) for t in s.split(",")))

    p = sub.add_parser("match", help="solve the matching conditions for a crystal file")
    add_common(p)
    p.add_argument("--crystal")
    p.add_argument("--omega-lo", dest="omega_lo", type=float)
    p.add_argument("--omega-hi", dest="omega_hi", type=float)
    p.add_argument("--zeta-lo", dest="zeta_lo", type=float)
    p.add_argument("--zeta-hi", dest="zeta_hi", type=float)

    p = sub.add_parser("validate", help="closed form vs quadrature deviation suite")
    add_common(p)
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        cfg = _resolve_config(args)
        return COMMANDS[args.command](cfg)
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
