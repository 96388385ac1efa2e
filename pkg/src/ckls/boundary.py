"""Scale and speed densities of ``dr = a(r) dt + b(r)**alpha dW`` on (0, inf).

    s(z) = exp(-int_{z0}^{z} 2 a(u) / b(u)**(2 alpha) du)
    m(u) = 1 / (b(u)**(2 alpha) * s(u))

Both are handled through their logarithms. The inner integral is taken in
``v = log u``, where the drift-to-variance ratio stays bounded near the
origin for the CKLS family.

Boundary rules
--------------
Infinity is unattainable when ``2 a(u) / b(u)**(2 alpha)`` has a limit <= 0;
the limit is read off the leading terms. Zero is unattainable when
``b(0) = 0``, the lowest-degree drift coefficient ``c2`` is positive, the
lowest degrees satisfy ``s + 1 <= k`` (``k`` for ``b**(2 alpha)``) and, in the
equality case, ``2 c2 >= c1``. These are sufficient conditions only, hence
``NOT_GUARANTEED`` rather than "attainable".
"""
from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DivergentTail, NonFiniteEvaluation, QuadratureFailure, StationaryAbsent
from .model import PolyDynamics, highest_coeff, highest_degree
from .quadrature import integrate_finite, integrate_halfline_log

# equality tolerance for the s + 1 = k comparison
DEGREE_TOL = 1e-12
INNER_TOL = 1e-12
INNER_REL_TOL = 1e-13


class Boundary(enum.Enum):
    UNATTAINABLE = "Unattainable"
    NOT_GUARANTEED = "NotGuaranteed"


class Stationary(enum.Enum):
    YES = "Yes"
    NOT_GUARANTEED = "NotGuaranteed"


class LimitAtInfinity(enum.Enum):
    NEGATIVE_CONSTANT = "NegativeConstant"
    MINUS_INFINITY = "MinusInfinity"
    ZERO = "Zero"
    POSITIVE = "Positive"


@dataclass(frozen=True)
class Diagnostics:
    b0: float
    s: int
    k: float
    c1: float
    c2: float
    limit_ratio_at_infinity: LimitAtInfinity
    speed_integral: Optional[float]
    log_speed_integral: Optional[float] = None
    z0: float = 1.0
    # s + 1 = k with 2 c2 = c1 exactly: unattainable by the degree rule,
    # on the boundary of the strict CIR condition 2 beta1 > sigma^2
    equality_case: bool = False

    def as_dict(self) -> dict:
        return {
            "b0": self.b0,
            "s": self.s,
            "k": self.k,
            "c1": self.c1,
            "c2": self.c2,
            "limit_ratio_at_infinity": self.limit_ratio_at_infinity.value,
            "speed_integral": self.speed_integral,
            "log_speed_integral": self.log_speed_integral,
            "z0": self.z0,
            "equality_case": self.equality_case,
        }


@dataclass(frozen=True)
class BoundaryReport:
    at_zero: Boundary
    at_infinity: Boundary
    stationary_exists: Stationary
    diagnostics: Diagnostics

    def as_dict(self) -> dict:
        return {
            "at_zero": self.at_zero.value,
            "at_infinity": self.at_infinity.value,
            "stationary_exists": self.stationary_exists.value,
            "diagnostics": self.diagnostics.as_dict(),
        }


def reference_point(dyn: PolyDynamics) -> float:
    """Default base point z0: the smallest stable equilibrium of the drift.

    For CKLS drift this is beta1 / beta2. Falls back to 1.0 when the drift
    has no positive root where it crosses from positive to negative.
    """
    roots = np.polynomial.polynomial.polyroots(np.array(dyn.drift_coeffs)) \
        if len(dyn.drift_coeffs) > 1 else np.array([])
    deriv = np.polynomial.polynomial.polyder(np.array(dyn.drift_coeffs))
    for root in sorted(r.real for r in np.atleast_1d(roots) if abs(r.imag) < 1e-12 and r.real > 0):
        if np.polynomial.polynomial.polyval(root, deriv) < 0:
            return float(root)
    return 1.0


def _ratio_in_log(dyn: PolyDynamics):
    """v -> 2 a(e^v) e^v / b(e^v)**(2 alpha)."""
    def f(v):
        u = np.exp(v)
        with np.errstate(over="ignore", invalid="ignore"):
            return 2.0 * dyn.drift(u) * np.exp(v - dyn.log_variance(u))
    return f


def scale_density(dyn: PolyDynamics, z: float, z0: Optional[float] = None) -> float:
    """log s(z) for a single z > 0."""
    if z0 is None:
        z0 = reference_point(dyn)
    if not (z > 0 and z0 > 0):
        raise ValueError("z and z0 must be positive")
    res = integrate_finite(_ratio_in_log(dyn), math.log(z0), math.log(z), INNER_TOL,
                           rel_tol=INNER_REL_TOL)
    if not res.converged:
        raise QuadratureFailure(f"scale integral from {z0} to {z} did not converge")
    return -res.value


def speed_density(dyn: PolyDynamics, u: float, z0: Optional[float] = None) -> float:
    """log m(u) = -log b(u)**(2 alpha) - log s(u)."""
    return float(-dyn.log_variance(u) - scale_density(dyn, u, z0))


@dataclass
class ScaleFunction:
    """log s on arrays, reusing previously computed points as anchors.

    Each new point is integrated from the nearest known point in log space,
    so the cost of a quadrature sweep stays linear in the number of nodes.
    """

    dyn: PolyDynamics
    z0: float
    _v: list = field(default_factory=list, repr=False)
    _logs: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._ratio = _ratio_in_log(self.dyn)
        self._v = [math.log(self.z0)]
        self._logs = [0.0]

    def _one(self, v: float) -> float:
        i = bisect.bisect_left(self._v, v)
        if i < len(self._v) and self._v[i] == v:
            return self._logs[i]
        candidates = [j for j in (i - 1, i) if 0 <= j < len(self._v)]
        j = min(candidates, key=lambda c: abs(self._v[c] - v))
        res = integrate_finite(self._ratio, self._v[j], v, INNER_TOL, rel_tol=INNER_REL_TOL)
        if not res.converged:
            raise QuadratureFailure("scale integral did not converge")
        value = self._logs[j] - res.value
        self._v.insert(i, v)
        self._logs.insert(i, value)
        return value

    def log_s(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.log(u).ravel()
        out = np.empty_like(flat)
        # visit points nearest the base point first so anchors grow outward
        v0 = math.log(self.z0)
        for idx in np.argsort(np.abs(flat - v0), kind="stable"):
            out[idx] = self._one(float(flat[idx]))
        return out.reshape(u.shape)

    def log_m(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            return -self.dyn.log_variance(u) - self.log_s(u)


def speed_integral(dyn: PolyDynamics, z0: Optional[float] = None, tol: float = 1e-10):
    """Quadrature result for the integral of m over (0, inf).

    Raises DivergentTail when the integral does not stabilize.
    """
    if z0 is None:
        z0 = reference_point(dyn)
    scale = ScaleFunction(dyn, z0)

    def logm(u):
        out = scale.log_m(u)
        if np.any(np.isnan(out)) or np.any(out == np.inf):
            # m blows up in the tail: the integral cannot be finite
            raise DivergentTail("speed density is not finite")
        return out

    try:
        return integrate_halfline_log(logm, z0, tol)
    except NonFiniteEvaluation as exc:
        raise DivergentTail(str(exc)) from exc


def _limit_at_infinity(dyn: PolyDynamics) -> LimitAtInfinity:
    if not any(dyn.drift_coeffs):
        return LimitAtInfinity.ZERO
    p = highest_degree(dyn.drift_coeffs)
    lead_a = highest_coeff(dyn.drift_coeffs)
    q = highest_degree(dyn.diffusion_coeffs)
    exponent = p - 2.0 * q * dyn.alpha
    if exponent < -DEGREE_TOL:
        return LimitAtInfinity.ZERO
    if lead_a > 0:
        return LimitAtInfinity.POSITIVE
    if exponent > DEGREE_TOL:
        return LimitAtInfinity.MINUS_INFINITY
    return LimitAtInfinity.NEGATIVE_CONSTANT


def classify(dyn: PolyDynamics, z0: Optional[float] = None) -> BoundaryReport:
    """Classify the boundaries 0 and inf and decide whether a stationary law exists."""
    if z0 is None:
        z0 = reference_point(dyn)
    s, c2, k, c1, b0 = dyn.s, dyn.c2, dyn.k, dyn.c1, dyn.b0

    equality = abs((s + 1) - k) <= DEGREE_TOL
    zero_ok = (
        b0 == 0.0
        and c1 > 0.0
        and c2 > 0.0
        and (s + 1) <= k + DEGREE_TOL
        and (not equality or 2.0 * c2 >= c1)
    )
    at_zero = Boundary.UNATTAINABLE if zero_ok else Boundary.NOT_GUARANTEED

    limit = _limit_at_infinity(dyn)
    at_inf = Boundary.NOT_GUARANTEED if limit is LimitAtInfinity.POSITIVE else Boundary.UNATTAINABLE

    value = log_value = None
    try:
        res = speed_integral(dyn, z0)
        if res.converged and math.isfinite(res.log_value):
            value, log_value = res.value, res.log_value
    except (DivergentTail, QuadratureFailure):
        pass

    exists = (
        at_zero is Boundary.UNATTAINABLE
        and at_inf is Boundary.UNATTAINABLE
        and log_value is not None
    )
    diagnostics = Diagnostics(
        b0=b0,
        s=s,
        k=k,
        c1=c1,
        c2=c2,
        limit_ratio_at_infinity=limit,
        speed_integral=value,
        log_speed_integral=log_value,
        z0=z0,
        equality_case=bool(zero_ok and equality and 2.0 * c2 == c1),
    )
    return BoundaryReport(
        at_zero=at_zero,
        at_infinity=at_inf,
        stationary_exists=Stationary.YES if exists else Stationary.NOT_GUARANTEED,
        diagnostics=diagnostics,
    )


@dataclass
class SpeedDensity:
    """Stationary density m(x) / int m, evaluated in log space."""

    dyn: PolyDynamics
    z0: float
    log_norm: float
    _scale: ScaleFunction = field(repr=False, default=None)

    def __post_init__(self):
        if self._scale is None:
            self._scale = ScaleFunction(self.dyn, self.z0)

    def logpdf(self, x):
        return self._scale.log_m(x) - self.log_norm

    def pdf(self, x):
        with np.errstate(under="ignore"):
            return np.exp(self.logpdf(x))

    def __call__(self, x):
        return self.pdf(x)


def stationary_from_speed(dyn: PolyDynamics, tol: float = 1e-10,
                          z0: Optional[float] = None) -> SpeedDensity:
    """Normalized speed density; raises StationaryAbsent unless classify says Yes."""
    if z0 is None:
        z0 = reference_point(dyn)
    report = classify(dyn, z0)
    if report.stationary_exists is not Stationary.YES:
        raise StationaryAbsent(
            f"no stationary law guaranteed (zero: {report.at_zero.value}, "
            f"infinity: {report.at_infinity.value})"
        )
    res = speed_integral(dyn, z0, tol)
    if not res.converged:
        raise QuadratureFailure("speed integral did not reach tolerance")
    return SpeedDensity(dyn, z0, res.log_value)
