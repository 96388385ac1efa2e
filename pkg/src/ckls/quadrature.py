"""Adaptive quadrature shared by the density, moment and speed-measure code.

Two entry points:

``integrate_finite``
    Globally adaptive Gauss-Kronrod (7/15) on a bounded interval.

``integrate_halfline_log``
    Integral over (0, inf) of a function supplied through its logarithm.
    With ``r = split * exp(u)`` the integrand becomes ``exp(logf(r) + log r)``
    in ``u``, which tames both the algebraic singularity at 0 and polynomial
    or exponential tails. The log-integrand is shifted by its maximum before
    exponentiating, so values like ``exp(-1000)`` never underflow, and tails
    are grown in doubling segments until their contribution is negligible.

Node placement is deterministic; repeated calls give bit-identical results.
Integrands must accept numpy arrays.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergentTail, NonFiniteEvaluation

# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KRONROD_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss points are the odd-indexed Kronrod points (1, 3, 5, 7 from the outside in)
_GAUSS_W = np.zeros(15)
_GAUSS_W[[1, 3, 5]] = _WG[:3]
_GAUSS_W[7] = _WG[3]
_GAUSS_W[[13, 11, 9]] = _WG[:3]

MAX_DOUBLINGS = 60
# keep split * exp(u) inside the normal double range
_U_LIMIT = 700.0


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool
    # log of |value|; stays finite when value itself under/overflows
    log_value: float = float("nan")


def _gk15(f, a, b):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = center + half * _NODES
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.broadcast_to(fx, x.shape)
    if not np.all(np.isfinite(fx)):
        raise NonFiniteEvaluation(f"integrand not finite on [{a!r}, {b!r}]")
    k = half * float(np.dot(_KRONROD_W, fx))
    g = half * float(np.dot(_GAUSS_W, fx))
    return k, abs(k - g)


def _adaptive(f, a, b, tol, max_intervals, rel_tol=0.0):
    value, err = _gk15(f, a, b)
    heap = [(-err, a, b, value, err)]
    total_val, total_err = value, err
    evals = 15
    while total_err > max(tol, rel_tol * abs(total_val)) and len(heap) < max_intervals:
        _, lo, hi, v, e = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not (lo < mid < hi):
            heapq.heappush(heap, (-e, lo, hi, v, e))
            break
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        evals += 30
        heapq.heappush(heap, (-e1, lo, mid, v1, e1))
        heapq.heappush(heap, (-e2, mid, hi, v2, e2))
        total_val += v1 + v2 - v
        total_err += e1 + e2 - e
    total_val = math.fsum(item[3] for item in heap)
    total_err = math.fsum(item[4] for item in heap)
    return total_val, total_err, evals, total_err <= max(tol, rel_tol * abs(total_val))


def integrate_finite(f: Callable, a: float, b: float, tol: float = 1e-10,
                     max_intervals: int = 2000, rel_tol: float = 0.0) -> QuadResult:
    """Integrate ``f`` over [a, b] to absolute tolerance ``tol``.

    With ``rel_tol`` set, ``tol * |value|`` style relative accuracy is also
    accepted: the error target is ``max(tol, rel_tol * |value|)``.

    ``a > b`` returns the negated integral over [b, a].
    Raises NonFiniteEvaluation when ``f`` returns NaN or inf.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0, True, -math.inf)
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0
    value, err, evals, ok = _adaptive(f, float(a), float(b), tol, max_intervals, rel_tol)
    value *= sign
    log_value = math.log(abs(value)) if value != 0.0 else -math.inf
    return QuadResult(value, err, evals, ok, log_value)


def _find_peak(L, lo, hi):
    """Maximum of the log-integrand on a coarse grid, then refined locally."""
    a = max(lo, -40.0)
    b = min(hi, 40.0)
    if a >= b:
        a, b = (lo, lo + 1.0) if math.isfinite(lo) else (hi - 1.0, hi)
    grid = np.linspace(a, b, 801)
    vals = L(grid)
    if np.any(np.isnan(vals)) or np.any(vals == np.inf):
        raise NonFiniteEvaluation("log-integrand is NaN or +inf")
    i = int(np.argmax(vals))
    if vals[i] == -np.inf:
        return None, -np.inf, 0.0
    step = grid[1] - grid[0]
    fine = np.linspace(max(a, grid[i] - step), min(b, grid[i] + step), 201)
    fvals = L(fine)
    j = int(np.argmax(fvals))
    peak_u, peak = float(fine[j]), float(fvals[j])
    if fvals[j] < vals[i]:
        peak_u, peak = float(grid[i]), float(vals[i])
    # crude mass estimate in shifted units; only sets segment tolerances
    mass = float(np.trapezoid(np.exp(vals - peak), grid))
    return peak_u, peak, max(mass, step)


def _integrate_log_u(L, lo, hi, tol, max_intervals=2000):
    """Integrate exp(L(u)) over (lo, hi); lo may be -inf and hi may be +inf."""
    peak_u, shift, mass = _find_peak(L, lo, hi)
    if peak_u is None:
        return QuadResult(0.0, 0.0, 1602, True, -math.inf)

    def g(u):
        # overflow becomes inf, which _gk15 reports as NonFiniteEvaluation
        with np.errstate(over="ignore"):
            return np.exp(L(u) - shift)

    seg_tol = tol * mass / 64.0
    pieces = []
    errors = []
    evals = 1602
    ok = True
    negligible = shift + math.log(tol) - 5.0

    for direction, bound in ((1.0, hi), (-1.0, lo)):
        start = peak_u
        if math.isfinite(bound):
            if start != bound:
                v, e, n, good = _adaptive(g, min(start, bound), max(start, bound),
                                          seg_tol, max_intervals)
                pieces.append(v)
                errors.append(e)
                evals += n
                ok &= good
            continue
        done = False
        for j in range(MAX_DOUBLINGS + 1):
            end = peak_u + direction * 2.0 ** j
            if abs(end) > _U_LIMIT:
                break
            v, e, n, good = _adaptive(g, min(start, end), max(start, end), seg_tol, max_intervals)
            pieces.append(v)
            errors.append(e)
            evals += n
            ok &= good
            running = math.fsum(pieces)
            tail_small = float(L(np.array([end]))[0]) < negligible
            if abs(v) <= tol * abs(running) and tail_small:
                done = True
                break
            start = end
        if not done:
            raise DivergentTail("integrand does not decay in the tail")

    total = math.fsum(pieces)
    err = math.fsum(errors)
    ok = ok and err <= tol * abs(total)
    log_value = math.log(total) + shift if total > 0.0 else -math.inf
    with np.errstate(over="ignore", under="ignore"):
        value = float(np.exp(log_value))
        abs_err = float(err * np.exp(shift))
    return QuadResult(value, abs_err, evals, ok, log_value)


def integrate_halfline_log(logf: Callable, split: float = 1.0, tol: float = 1e-12) -> QuadResult:
    """Integrate ``exp(logf(r))`` over (0, inf).

    ``tol`` is relative: ``converged`` means the error estimate is below
    ``tol * |value|``. Raises DivergentTail if a tail keeps contributing.
    """
    if not split > 0.0:
        raise ValueError("split must be positive")
    log_split = math.log(split)

    def L(u):
        u = np.asarray(u, dtype=float)
        return logf(split * np.exp(u)) + log_split + u

    return _integrate_log_u(L, -math.inf, math.inf, tol)


def integrate_below_log(logf: Callable, upper: float, tol: float = 1e-12) -> QuadResult:
    """Integrate ``exp(logf(r))`` over (0, upper]."""
    if not upper > 0.0:
        raise ValueError("upper must be positive")
    log_upper = math.log(upper)

    def L(u):
        u = np.asarray(u, dtype=float)
        return logf(upper * np.exp(u)) + log_upper + u

    return _integrate_log_u(L, -math.inf, 0.0, tol)
