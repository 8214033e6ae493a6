"""Self-contained numerical kernel: error function, adaptive quadrature,
bracketed root finding and finite-difference derivatives.

Everything above this module is pure math on these primitives.  All
functions are pure and reentrant; there is no shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Interval",
    "QuadratureSpec",
    "NonConvergence",
    "NoSignChange",
    "erf",
    "integrate_1d",
    "integrate_2d",
    "find_root",
    "derivative",
]

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)


class NonConvergence(RuntimeError):
    """Quadrature subdivision budget exhausted before the tolerance was met."""


class NoSignChange(ValueError):
    """Root bracket does not straddle a sign change."""


@dataclass(frozen=True)
class Interval:
    """Finite interval [lo, hi] with lo < hi.

    Infinite physical domains are truncated by callers before they reach
    the quadrature kernel.
    """

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("interval endpoints must be finite")
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerance and budget settings for the adaptive integrators."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2**15

    def __post_init__(self) -> None:
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be > 0")
        if self.abs_tol < 0:
            raise ValueError("abs_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


# ---------------------------------------------------------------------------
# Error function
# ---------------------------------------------------------------------------

def _erf_series(x: float) -> float:
    # Maclaurin series, summed until terms fall below 1e-18 relative.
    # For |x| <= 3 the largest term is ~170, so round-off stays < 2e-14.
    total = 0.0
    power = x  # x^(2n+1) / n!
    x2 = x * x
    n = 0
    while True:
        term = power / (2 * n + 1)
        total += term if n % 2 == 0 else -term
        n += 1
        power *= x2 / n
        if abs(power) / (2 * n + 1) < 1e-18 * abs(total):
            return _TWO_OVER_SQRT_PI * total


def _erfc_cf(x: float) -> float:
    # Laplace continued fraction for erfc, x >= 3: modified Lentz iteration on
    # K = x + (1/2)/(x + 1/(x + (3/2)/(x + ...))), erfc(x) = e^(-x^2)/(sqrt(pi) K).
    tiny = 1e-300
    b = x
    c = 1e300
    d = 1.0 / b
    k = d
    for n in range(1, 300):
        a = 0.5 * n
        d = x + a * d
        if d == 0.0:
            d = tiny
        c = x + a / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        k *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(-x * x) / math.sqrt(math.pi) * k


def erf(x: float) -> float:
    """Error function (2/sqrt(pi)) * integral of exp(-y^2) from 0 to x.

    Own series / continued-fraction implementation so that the numbers are
    bit-stable across platforms; absolute error is below 1e-13 everywhere
    (verified against a Maclaurin oracle in the tests).  Odd in x by
    construction and saturates to +-1 for |x| >= 6.
    """
    if x != x:  # NaN in, NaN out
        return x
    sign = -1.0 if x < 0 else 1.0
    ax = abs(x)
    if ax == 0.0:
        return 0.0
    if ax >= 6.0:
        return sign  # erfc(6) < 3e-17, far below the documented bound
    if ax < 3.0:
        return sign * _erf_series(ax)
    return sign * (1.0 - _erfc_cf(ax))


# ---------------------------------------------------------------------------
# Gauss-Kronrod 7/15 panel rule
# ---------------------------------------------------------------------------

# 15-point Kronrod abscissae on [-1, 1] (ascending) and weights; the embedded
# 7-point Gauss rule lives on the odd-indexed abscissae.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
])
_GAUSS_IDX = np.arange(1, 15, 2)


def _as_vectorized(f: Callable) -> Callable:
    """Return a callable that accepts ndarray input, wrapping scalar-only f."""

    def probe(*args):
        try:
            out = f(*args)
            out = np.asarray(out, dtype=float)
            if out.shape != np.broadcast(*[np.asarray(a) for a in args]).shape:
                raise TypeError
            return out
        except (TypeError, ValueError):
            return np.vectorize(f, otypes=[float])(*args)

    return probe


def integrate_1d(f: Callable[[float], float], iv: Interval, spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Adaptive Gauss-Kronrod integral of f over a finite interval.

    The estimate is within max(abs_tol, rel_tol*|result|) of the true
    integral for smooth or piecewise-smooth f.  The integrand may be
    vectorized over numpy arrays (preferred, much faster); scalar-only
    callables are wrapped transparently.

    Raises:
        NonConvergence: subdivision budget exhausted before the tolerance
            was met.
    """
    fv = _as_vectorized(f)
    lo = np.array([iv.lo])
    hi = np.array([iv.hi])
    n_created = 1
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        nodes = mid[:, None] + half[:, None] * _XK[None, :]
        vals = fv(nodes.ravel()).reshape(nodes.shape)
        k15 = half * (vals @ _WK)
        g7 = half * (vals[:, _GAUSS_IDX] @ _WG)
        err = np.abs(k15 - g7)
        total = float(k15.sum())
        err_total = float(err.sum())
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if err_total <= tol:
            return total
        # split every segment carrying more than its share of the error
        split = err > tol / (2.0 * len(lo))
        if not split.any():
            split = err >= err.max()
        n_created += int(split.sum())
        if n_created > spec.max_subdivisions:
            raise NonConvergence(
                f"1-d quadrature needed more than {spec.max_subdivisions} subdivisions"
            )
        keep_lo, keep_hi = lo[~split], hi[~split]
        s_lo, s_hi, s_mid = lo[split], hi[split], mid[split]
        lo = np.concatenate([keep_lo, s_lo, s_mid])
        hi = np.concatenate([keep_hi, s_mid, s_hi])
    raise NonConvergence("1-d quadrature failed to settle within the round limit")


def integrate_2d(
    f: Callable[[float, float], float],
    iv1: Interval,
    iv2: Interval,
    spec: QuadratureSpec = QuadratureSpec(),
) -> float:
    """Adaptive tensor Gauss-Kronrod integral of f(x, y) over a rectangle.

    Same tolerance contract and vectorization notes as integrate_1d; the
    first argument runs over iv1.
    """
    fv = _as_vectorized(f)
    xlo = np.array([iv1.lo])
    xhi = np.array([iv1.hi])
    ylo = np.array([iv2.lo])
    yhi = np.array([iv2.hi])
    n_created = 1
    for _ in range(200):
        xmid = 0.5 * (xlo + xhi)
        xhalf = 0.5 * (xhi - xlo)
        ymid = 0.5 * (ylo + yhi)
        yhalf = 0.5 * (yhi - ylo)
        xn = xmid[:, None] + xhalf[:, None] * _XK[None, :]
        yn = ymid[:, None] + yhalf[:, None] * _XK[None, :]
        vals = fv(
            np.repeat(xn[:, :, None], 15, axis=2).ravel(),
            np.repeat(yn[:, None, :], 15, axis=1).ravel(),
        ).reshape(len(xlo), 15, 15)
        area = xhalf * yhalf
        kk = area * np.einsum("i,j,nij->n", _WK, _WK, vals)
        gk = area * np.einsum("i,j,nij->n", _WG, _WK, vals[:, _GAUSS_IDX, :])
        kg = area * np.einsum("i,j,nij->n", _WK, _WG, vals[:, :, _GAUSS_IDX])
        err_x = np.abs(kk - gk)
        err_y = np.abs(kk - kg)
        err = err_x + err_y
        total = float(kk.sum())
        err_total = float(err.sum())
        tol = max(spec.abs_tol, spec.rel_tol * abs(total))
        if err_total <= tol:
            return total
        split = err > tol / (2.0 * len(xlo))
        if not split.any():
            split = err >= err.max()
        n_created += int(split.sum())
        if n_created > spec.max_subdivisions:
            raise NonConvergence(
                f"2-d quadrature needed more than {spec.max_subdivisions} subdivisions"
            )
        keep = ~split
        ax = err_x[split] >= err_y[split]  # halve the axis with the larger error
        sxl, sxh, sxm = xlo[split], xhi[split], xmid[split]
        syl, syh, sym = ylo[split], yhi[split], ymid[split]
        xlo = np.concatenate([xlo[keep], sxl, np.where(ax, sxm, sxl)])
        xhi = np.concatenate([xhi[keep], np.where(ax, sxm, sxh), sxh])
        ylo = np.concatenate([ylo[keep], syl, np.where(ax, syl, sym)])
        yhi = np.concatenate([yhi[keep], np.where(ax, syh, sym), syh])
    raise NonConvergence("2-d quadrature failed to settle within the round limit")


# ---------------------------------------------------------------------------
# Root finding and derivatives
# ---------------------------------------------------------------------------

def find_root(f: Callable[[float], float], bracket: Interval, tol: float) -> float:
    """Brent's method on a sign-changing bracket.

    Inverse-quadratic / secant steps with a bisection fallback, so
    convergence is guaranteed for any continuous f.  Returns x once the
    bracket width falls below tol (plus a machine-epsilon guard) or f(x)
    hits zero exactly.

    Raises:
        NoSignChange: f(lo) * f(hi) > 0.
    """
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise NoSignChange(f"f({a})={fa} and f({b})={fb} have the same sign")
    c, fc = a, fa
    d = e = b - a
    eps = np.finfo(float).eps
    while True:
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = 2.0 * eps * abs(b) + 0.5 * tol
        m = 0.5 * (c - b)
        if abs(m) <= tol1 or fb == 0.0:
            return b
        if abs(e) < tol1 or abs(fa) <= abs(fb):
            d = e = m
        else:
            s = fb / fa
            if a == c:
                p = 2.0 * m * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            s, e = e, d
            if 2.0 * p < 3.0 * m * q - abs(tol1 * q) and p < abs(0.5 * s * q):
                d = p / q
            else:
                d = e = m
        a, fa = b, fb
        b += d if abs(d) > tol1 else (tol1 if m > 0 else -tol1)
        fb = f(b)
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a


def derivative(f: Callable[[float], float], x: float, order: int, h: float) -> float:
    """Central finite-difference derivative of the requested order (1, 2 or 3)."""
    if h <= 0:
        raise ValueError("step h must be > 0")
    if order == 1:
        return (f(x + h) - f(x - h)) / (2.0 * h)
    if order == 2:
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    if order == 3:
        return (f(x + 2 * h) - 2.0 * f(x + h) + 2.0 * f(x - h) - f(x - 2 * h)) / (2.0 * h**3)
    raise ValueError("derivative order must be 1, 2 or 3")
