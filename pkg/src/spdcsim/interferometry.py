"""Normalized coincidence rates for the two interferometer arrangements,
computed two independent ways: closed form and brute-force quadrature of
the underlying double integral.  Also the visibility figures of merit and
the parameter sweeps behind the visibility curves.

Normalization convention: the raw double-sided rate integral is divided by
its asymptotic large-delay baseline (the cross term averages out), so dip
traces approach 1 and fringe traces average to 1 far from zero delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .biphoton import BiphotonAmplitude, PumpSpectrum, factorization_check, phi_L
from .dispersion import PhaseMatchParams
from .numerics import Interval, NonConvergence, QuadratureSpec, erf, integrate_1d

__all__ = [
    "DegenerateDip",
    "NotFactorizable",
    "TraceKind",
    "TraceMethod",
    "ClosedFormParams",
    "CoincidenceTrace",
    "VisibilityCurve",
    "closed_form_params",
    "hom_rate_closed",
    "mz_rate_closed",
    "fringe_envelope_terms",
    "hom_rate_integral",
    "mz_rate_integral",
    "hom_trace_integral",
    "mz_trace_integral",
    "symmetric_rates",
    "v_hom",
    "v_mz",
    "sweep_visibility",
    "default_tau_grid",
    "coincidence_trace",
]

_SQRT_PI = math.sqrt(math.pi)

# Self-check tolerance for the panel quadrature engine (the adaptive
# kernel's defaults are meant for smooth 1-d integrands, not for these
# wide oscillatory domains).
TRACE_SPEC = QuadratureSpec(rel_tol=1e-6, abs_tol=1e-7, max_subdivisions=2**15)


class DegenerateDip(ValueError):
    """Dip half-width is zero (gamma_s == gamma_i ray): the trace is flat."""


class NotFactorizable(ValueError):
    """Amplitude does not split into sum x difference factors."""


class TraceKind(Enum):
    HOM = "hom"
    MZ = "mz"


class TraceMethod(Enum):
    CLOSED = "closed"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class ClosedFormParams:
    """Dimensionless pump/crystal ratio xi and dip half-width tau_theta (ps).

    xi = 4 / (pump_bw * gamma * L * |cos theta + sin theta|); it is exactly
    +inf on the gamma_s = -gamma_i ray, where the closed forms switch to
    their analytic limits.  tau_theta = gamma * L * |cos theta - sin theta| / 2.
    """

    xi: float
    tau_theta: float


@dataclass(frozen=True)
class CoincidenceTrace:
    kind: TraceKind
    method: TraceMethod
    taus: np.ndarray
    values: np.ndarray
    params: PhaseMatchParams
    pump: PumpSpectrum


@dataclass(frozen=True)
class VisibilityCurve:
    swept: str  # "pump_bandwidth" or "crystal_length"
    xs: np.ndarray
    vs: np.ndarray
    theta: float


def closed_form_params(params: PhaseMatchParams, pump: PumpSpectrum) -> ClosedFormParams:
    if pump.bandwidth <= 0:
        raise ValueError("closed forms need pump bandwidth > 0")
    c, s = math.cos(params.theta), math.sin(params.theta)
    gl = params.gamma * params.length
    plus = abs(c + s)
    minus = abs(c - s)
    xi = math.inf if plus < 1e-12 else 4.0 / (pump.bandwidth * gl * plus)
    # snap the degenerate ray to an exact zero width, mirroring the xi branch
    return ClosedFormParams(xi=xi, tau_theta=0.0 if minus < 1e-12 else 0.5 * gl * minus)


def hom_rate_closed(cfp: ClosedFormParams, tau: float) -> float:
    """Normalized two-detector rate of the dip arrangement at delay tau.

    1 outside |tau| < tau_theta; inside, 1 - (sqrt(pi)/2) xi erf((1 - |tau|
    / tau_theta) / xi), which degenerates to the triangle |tau| / tau_theta
    in the xi -> inf limit.

    Raises:
        DegenerateDip: tau_theta = 0 (rate identically 1).
    """
    if cfp.tau_theta <= 0:
        raise DegenerateDip("tau_theta = 0: dip has zero width")
    r = abs(tau) / cfp.tau_theta
    if r >= 1.0:
        return 1.0
    if math.isinf(cfp.xi):
        return r
    return 1.0 - 0.5 * _SQRT_PI * cfp.xi * erf((1.0 - r) / cfp.xi)


def fringe_envelope_terms(cfp: ClosedFormParams, pump: PumpSpectrum,
                          params: PhaseMatchParams, tau: float) -> tuple[float, float]:
    """Fringe envelope F1 and slow residue F2 of the fringe-trace closed form.

    F1(tau) = exp(-(bw tau/2)^2)/2
              + (sqrt(pi) xi / 8) [erf(1/xi - bw tau/2) + erf(1/xi + bw tau/2)]
    F2(tau) = (1 - |tau|/tau_theta) exp(-(bw tau/2)^2 q^2) / 2
              - (sqrt(pi) xi / 4) erf((1 - |tau|/tau_theta) / xi)
    for |tau| < tau_theta (F2 = 0 outside), with q the ratio of the sum and
    difference projections of the group-delay coefficients.  At xi = inf,
    F1 is exactly the Gaussian envelope and F2 vanishes identically.

    Pinned by two exact anchors, F1(0) + F2(0) = 1 and the xi -> inf
    Gaussian reduction, and cross-validated against brute-force quadrature
    of the raw double integral (see mz_trace_integral).
    """
    x = 0.5 * pump.bandwidth * tau
    if math.isinf(cfp.xi):
        return math.exp(-x * x), 0.0
    xi = cfp.xi
    f1 = 0.5 * math.exp(-x * x) + (_SQRT_PI * xi / 8.0) * (erf(1.0 / xi - x) + erf(1.0 / xi + x))
    if cfp.tau_theta <= 0:
        f2 = 0.5 - (_SQRT_PI * xi / 4.0) * erf(1.0 / xi) if tau == 0.0 else 0.0
        return f1, f2
    r = abs(tau) / cfp.tau_theta
    if r >= 1.0:
        return f1, 0.0
    plus = params.gamma_s + params.gamma_i
    minus = params.gamma_s - params.gamma_i
    q2 = (plus / minus) ** 2
    f2 = 0.5 * (1.0 - r) * math.exp(-x * x * q2) - (_SQRT_PI * xi / 4.0) * erf((1.0 - r) / xi)
    return f1, f2


def mz_rate_closed(cfp: ClosedFormParams, pump: PumpSpectrum,
                   params: PhaseMatchParams, tau: float) -> float:
    """Normalized fringe-arrangement rate 1 + cos(w_p tau) F1(tau) + F2(tau).

    At xi = inf this is exactly 1 + exp(-bw^2 tau^2 / 4) cos(w_p tau).
    """
    f1, f2 = fringe_envelope_terms(cfp, pump, params, tau)
    return 1.0 + math.cos(pump.omega_p * tau) * f1 + f2


def v_hom(cfp: ClosedFormParams) -> float:
    """Dip visibility (depth contrast); exactly 1 on the xi = inf ray.

    Raises:
        DegenerateDip: tau_theta = 0.
    """
    if cfp.tau_theta <= 0:
        raise DegenerateDip("tau_theta = 0: no dip to grade")
    if math.isinf(cfp.xi):
        return 1.0
    g = 0.5 * _SQRT_PI * cfp.xi * erf(1.0 / cfp.xi)
    return g / (2.0 - g)


def v_mz(cfp: ClosedFormParams, pump: PumpSpectrum, params: PhaseMatchParams) -> float:
    """Fringe visibility from the rates at zero delay and half a fringe
    period: (1 + [F1 - F2]) / (3 - [F1 - F2]) evaluated at pi / w_p."""
    f1, f2 = fringe_envelope_terms(cfp, pump, params, math.pi / pump.omega_p)
    d = f1 - f2
    return (1.0 + d) / (3.0 - d)


# ---------------------------------------------------------------------------
# Quadrature route: brute-force evaluation of the raw rate integrals
# ---------------------------------------------------------------------------
#
# Both raw integrals run over the signal/idler detunings.  In rotated
# coordinates u = d1 + d2 (sum) and v = d1 - d2 (difference) the pump weight
# W(u) = exp(-u^2 / bw^2) bounds u, the phase-matching factors become
# phi(a u + b v) and phi(a u - b v) with a, b the half sum/difference of the
# group-delay coefficients, and every delay-dependent factor reduces to
# cos(v tau), cos((u + w_p) tau) or cos((u + w_p) tau / 2) cos(v tau / 2).
# The last family is odd in v and integrates to zero; the rest separate, so
# the double integral collapses onto four tau-independent node profiles and
# each delay costs two dot products.  The constant Jacobian cancels in the
# normalization.

def _gl_panels(lo: float, hi: float, panel: float, budget: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(10)
    n = max(1, int(math.ceil((hi - lo) / panel)))
    if n > budget:
        raise NonConvergence(f"panel quadrature needs {n} panels, budget {budget}")
    edges = np.linspace(lo, hi, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    return (mid[:, None] + half[:, None] * x[None, :]).ravel(), (half[:, None] * w[None, :]).ravel()


class _RateEngine:
    """Tau-independent node profiles for one (crystal, pump) setting."""

    def __init__(self, params: PhaseMatchParams, pump: PumpSpectrum,
                 tau_max: float, density: float, budget: int):
        if pump.bandwidth <= 0:
            raise ValueError("quadrature rates need pump bandwidth > 0")
        gs, gi = params.gamma_s, params.gamma_i
        a = 0.5 * (gs + gi)
        b = 0.5 * (gs - gi)
        L = params.length
        tau_theta = abs(b) * L
        if abs(gs - gi) < 1e-12 * params.gamma:
            raise DegenerateDip("gamma_s = gamma_i: dip integrand degenerates")
        bw = pump.bandwidth
        u_half = 8.0 * bw
        # difference-axis reach: the squared sinc tails thin out as 1/v^2,
        # leaving a relative baseline deficit ~2/(pi tau_theta v_half), so
        # 3000/tau_theta keeps truncation near 2e-4; the a*u/b term tracks
        # the phase-matching ridge across the pump-limited u range.
        v_half = 3000.0 / tau_theta + 5.0 * bw * abs(a) / abs(b)
        u_rate = abs(a) * L / 2.0 + tau_max
        v_rate = abs(b) * L / 2.0 + tau_max
        panel_u = min(2.0 * math.pi / u_rate if u_rate > 0 else u_half, 0.7 * bw) / density
        panel_v = (2.0 * math.pi / v_rate) / density
        un, uw = _gl_panels(-u_half, u_half, panel_u, budget)
        vn, vw = _gl_panels(-v_half, v_half, panel_v, budget)
        wu = np.exp(-((un / bw) ** 2)) * uw
        q_u = np.zeros_like(un)   # sum over v of (phi1^2 + phi2^2)
        r_u = np.zeros_like(un)   # sum over v of phi1 * phi2
        g2_v = np.zeros_like(vn)  # pump-weighted sum over u of (phi1^2 + phi2^2)
        g3_v = np.zeros_like(vn)  # pump-weighted sum over u of phi1 * phi2
        chunk = max(1, int(4e6 // max(1, len(un))))
        for lo in range(0, len(vn), chunk):
            v = vn[lo:lo + chunk]
            p1 = phi_L(a * un[:, None] + b * v[None, :], L)
            p2 = phi_L(a * un[:, None] - b * v[None, :], L)
            ssq = p1 * p1 + p2 * p2
            cross = p1 * p2
            q_u += ssq @ vw[lo:lo + chunk]
            r_u += cross @ vw[lo:lo + chunk]
            g2_v[lo:lo + chunk] = wu @ ssq
            g3_v[lo:lo + chunk] = wu @ cross
        self.un, self.wu, self.vn, self.vw = un, wu, vn, vw
        self.q_u, self.r_u, self.g2_v, self.g3_v = q_u, r_u, g2_v, g3_v
        self.mass = float(wu @ q_u)
        self.omega_p = pump.omega_p

    # each delay is reduced with plain 1-d dot products so the numbers do
    # not depend on how a grid is batched or chunked across workers

    def hom(self, taus: np.ndarray) -> np.ndarray:
        w3 = self.vw * self.g3_v
        out = np.empty(len(taus))
        for j, tau in enumerate(taus):
            cross = float(w3 @ np.cos(self.vn * tau))
            out[j] = 1.0 - 2.0 * cross / self.mass
        return out

    def mz(self, taus: np.ndarray) -> np.ndarray:
        wq, wr = self.wu * self.q_u, self.wu * self.r_u
        w2, w3 = self.vw * self.g2_v, self.vw * self.g3_v
        out = np.empty(len(taus))
        for j, tau in enumerate(taus):
            cos_u = np.cos((self.un + self.omega_p) * tau)
            cos_v = np.cos(self.vn * tau)
            a1, b1 = float(wq @ cos_u), float(wr @ cos_u)
            a2, b2 = float(w2 @ cos_v), float(w3 @ cos_v)
            raw = 0.25 * self.mass + 0.125 * (a1 + a2) + 0.25 * (b1 - b2)
            out[j] = raw / (0.25 * self.mass)
        return out


_ENGINE_CACHE: dict[tuple, _RateEngine] = {}


def _engine(params: PhaseMatchParams, pump: PumpSpectrum, tau_max: float,
            density: float, budget: int) -> _RateEngine:
    key = (params.gamma_s, params.gamma_i, params.length, pump.omega_p,
           pump.bandwidth, round(tau_max, 12), density, budget)
    eng = _ENGINE_CACHE.get(key)
    if eng is None:
        if len(_ENGINE_CACHE) > 32:
            _ENGINE_CACHE.clear()
        eng = _RateEngine(params, pump, tau_max, density, budget)
        _ENGINE_CACHE[key] = eng
    return eng


def default_tau_grid(params: PhaseMatchParams, pump: PumpSpectrum, n: int = 201) -> np.ndarray:
    """Symmetric delay grid covering the dip plus the pump envelope."""
    cfp = closed_form_params(params, pump)
    span = 2.0 * cfp.tau_theta + 8.0 / pump.bandwidth
    return np.linspace(-span, span, n)


def _trace_quadrature(kind: TraceKind, params: PhaseMatchParams, pump: PumpSpectrum,
                      taus: np.ndarray, spec: QuadratureSpec | None,
                      tau_max: float | None = None) -> np.ndarray:
    spec = TRACE_SPEC if spec is None else spec
    taus = np.asarray(taus, dtype=float)
    if tau_max is None:
        cfp = closed_form_params(params, pump)
        tau_max = max(float(np.max(np.abs(taus))) if taus.size else 0.0,
                      2.0 * cfp.tau_theta + 8.0 / pump.bandwidth)
    fine = _engine(params, pump, tau_max, 1.5, spec.max_subdivisions)
    coarse = _engine(params, pump, tau_max, 1.0, spec.max_subdivisions)
    run = (lambda e: e.hom(taus)) if kind is TraceKind.HOM else (lambda e: e.mz(taus))
    values = run(fine)
    drift = float(np.max(np.abs(values - run(coarse)))) if taus.size else 0.0
    scale = float(np.max(np.abs(values))) if taus.size else 1.0
    if drift > max(spec.abs_tol, spec.rel_tol * scale):
        raise NonConvergence(
            f"panel refinement still moves the trace by {drift:.2e}"
        )
    return values


def hom_trace_integral(params: PhaseMatchParams, pump: PumpSpectrum,
                       taus: np.ndarray, spec: QuadratureSpec | None = None,
                       tau_max: float | None = None) -> np.ndarray:
    """Dip trace by quadrature of the raw rate integral, normalized to its
    large-delay baseline.  Self-checked by panel refinement.

    tau_max pins the oscillation-resolution scale of the panel grid; pass
    it explicitly when splitting one grid across workers so every chunk
    sees the same nodes.
    """
    return _trace_quadrature(TraceKind.HOM, params, pump, taus, spec, tau_max)


def mz_trace_integral(params: PhaseMatchParams, pump: PumpSpectrum,
                      taus: np.ndarray, spec: QuadratureSpec | None = None,
                      tau_max: float | None = None) -> np.ndarray:
    """Fringe trace by quadrature of the raw rate integral, normalized so
    the fringe-averaged large-delay value is 1."""
    return _trace_quadrature(TraceKind.MZ, params, pump, taus, spec, tau_max)


def hom_rate_integral(params: PhaseMatchParams, pump: PumpSpectrum, tau: float,
                      spec: QuadratureSpec | None = None,
                      tau_max: float | None = None) -> float:
    """Single-delay dip rate by quadrature (see hom_trace_integral)."""
    return float(_trace_quadrature(TraceKind.HOM, params, pump, np.array([tau]), spec, tau_max)[0])


def mz_rate_integral(params: PhaseMatchParams, pump: PumpSpectrum, tau: float,
                     spec: QuadratureSpec | None = None,
                     tau_max: float | None = None) -> float:
    """Single-delay fringe rate by quadrature (see mz_trace_integral)."""
    return float(_trace_quadrature(TraceKind.MZ, params, pump, np.array([tau]), spec, tau_max)[0])


def symmetric_rates(bp: BiphotonAmplitude, tau: float,
                    spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """Reduced one-dimensional rates for a sum x difference amplitude.

    The dip arrangement reads the difference-frequency weight, the fringe
    arrangement the sum-frequency weight:
        P- = int |D(v)|^2 (1 - cos v tau) / int |D|^2
        P+ = int |S(w)|^2 (1 + cos w tau) / int |S|^2

    Raises:
        NotFactorizable: the amplitude does not factorize (sampled defect
            above 1e-9 * length).
    """
    params, pump = bp.params, bp.pump
    if factorization_check(bp, 256) > 1e-9 * params.length:
        raise NotFactorizable("amplitude defect too large for the reduced rates")
    spec = TRACE_SPEC if spec is None else spec
    scale = params.gamma / math.sqrt(2.0)
    cfp = closed_form_params(params, pump)
    v_half = 3000.0 / cfp.tau_theta
    iv_v = Interval(-v_half, v_half)
    d_sq = lambda v: phi_L(scale * v, params.length) ** 2
    base_m = integrate_1d(d_sq, iv_v, spec)
    num_m = integrate_1d(lambda v: d_sq(v) * (1.0 - np.cos(v * tau)), iv_v, spec)
    bw = pump.bandwidth
    iv_u = Interval(pump.omega_p - 8.0 * bw, pump.omega_p + 8.0 * bw)
    s_sq = lambda w: np.exp(-(((w - pump.omega_p) / bw) ** 2))
    base_p = integrate_1d(s_sq, iv_u, spec)
    num_p = integrate_1d(lambda w: s_sq(w) * (1.0 + np.cos(w * tau)), iv_u, spec)
    return num_m / base_m, num_p / base_p


def sweep_visibility(kind: TraceKind, thetas, sweep: Interval, steps: int, *,
                     omega_p: float, gamma: float, length: float,
                     pump_bw: float) -> list[VisibilityCurve]:
    """Closed-form visibility curves over a swept parameter, one per theta.

    HOM sweeps the pump bandwidth at fixed crystal length; MZ sweeps the
    crystal length at fixed pump bandwidth.
    """
    if steps < 2:
        raise ValueError("sweep needs at least 2 steps")
    xs = np.linspace(sweep.lo, sweep.hi, steps)
    curves = []
    for theta in thetas:
        vs = np.empty_like(xs)
        for j, x in enumerate(xs):
            if kind is TraceKind.HOM:
                params = PhaseMatchParams(omega_p=omega_p, gamma=gamma, theta=theta, length=length)
                pump = PumpSpectrum(omega_p=omega_p, bandwidth=float(x))
                vs[j] = v_hom(closed_form_params(params, pump))
            else:
                params = PhaseMatchParams(omega_p=omega_p, gamma=gamma, theta=theta, length=float(x))
                pump = PumpSpectrum(omega_p=omega_p, bandwidth=pump_bw)
                vs[j] = v_mz(closed_form_params(params, pump), pump, params)
        curves.append(VisibilityCurve(
            swept="pump_bandwidth" if kind is TraceKind.HOM else "crystal_length",
            xs=xs.copy(), vs=vs, theta=float(theta)))
    return curves


def coincidence_trace(kind: TraceKind, method: TraceMethod, params: PhaseMatchParams,
                      pump: PumpSpectrum, taus: np.ndarray,
                      spec: QuadratureSpec | None = None) -> CoincidenceTrace:
    """Bundle one trace; closed form where asked, quadrature where asked."""
    taus = np.asarray(taus, dtype=float)
    if method is TraceMethod.CLOSED:
        cfp = closed_form_params(params, pump)
        if kind is TraceKind.HOM:
            values = np.array([hom_rate_closed(cfp, t) for t in taus])
        else:
            values = np.array([mz_rate_closed(cfp, pump, params, t) for t in taus])
    else:
        values = _trace_quadrature(kind, params, pump, taus, spec)
    return CoincidenceTrace(kind=kind, method=method, taus=taus, values=values,
                            params=params, pump=pump)
