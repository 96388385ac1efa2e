"""Stationary law of the CKLS diffusion.

The density is ``f(r) = C * r**(-2 alpha) * exp(Q(r; alpha))`` with::

    1/2 < alpha < 1:  Q = (2 b2/s^2) (b1 r^(1-2a) / (b2 (1-2a)) - r^(2-2a) / (2-2a))
    alpha = 1/2:      Q = (2 b2/s^2) ((b1/b2) ln r - r)
    alpha = 1:        Q = (2 b2/s^2) (-b1 / (b2 r) - ln r)

Everything is evaluated in log space; ``Q`` reaches -1e3 for ordinary
parameters and the normalizing constant must absorb that.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DivergentTail, FellerViolated, MomentDiverges, QuadratureFailure
from .model import CklsParams
from .quadrature import integrate_below_log, integrate_finite, integrate_halfline_log

DEFAULT_TOL = 1e-11


class Branch(enum.Enum):
    ALPHA_HALF = "alpha_half"
    ALPHA_INTERIOR = "alpha_interior"
    ALPHA_ONE = "alpha_one"


def branch_for(alpha: float) -> Branch:
    if alpha == 0.5:
        return Branch.ALPHA_HALF
    if alpha == 1.0:
        return Branch.ALPHA_ONE
    return Branch.ALPHA_INTERIOR


def q_exponent(params: CklsParams, r):
    """Exponent Q(r; alpha) of the stationary density, for r > 0."""
    r = np.asarray(r, dtype=float)
    b1, b2, s2, a = params.beta1, params.beta2, params.sigma ** 2, params.alpha
    scale = 2.0 * b2 / s2
    branch = branch_for(a)
    with np.errstate(over="ignore", divide="ignore"):
        if branch is Branch.ALPHA_HALF:
            return scale * ((b1 / b2) * np.log(r) - r)
        if branch is Branch.ALPHA_ONE:
            return scale * (-b1 / (b2 * r) - np.log(r))
        return scale * (b1 * r ** (1.0 - 2.0 * a) / (b2 * (1.0 - 2.0 * a))
                        - r ** (2.0 - 2.0 * a) / (2.0 - 2.0 * a))


def _q_centered(params: CklsParams, r):
    """``q_exponent`` minus its additive constant, so that Q(1) = 0.

    The interior branch otherwise carries terms of order 1/(2 - 2 alpha)
    that swamp the shape of the density as alpha approaches 1.
    """
    r = np.asarray(r, dtype=float)
    a = params.alpha
    if branch_for(a) is not Branch.ALPHA_INTERIOR:
        return q_exponent(params, r) - q_exponent(params, 1.0)
    b1, b2, s2 = params.beta1, params.beta2, params.sigma ** 2
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        lr = np.log(r)
        # expm1(k ln r) / k, the (r**k - 1) / k that tends to ln r as k -> 0
        t1 = np.expm1((1.0 - 2.0 * a) * lr) / (1.0 - 2.0 * a)
        t2 = np.expm1((2.0 - 2.0 * a) * lr) / (2.0 - 2.0 * a)
        return (2.0 * b2 / s2) * ((b1 / b2) * t1 - t2)


def check_feller(params: CklsParams) -> None:
    if params.alpha == 0.5 and 2.0 * params.beta1 <= params.sigma ** 2:
        raise FellerViolated(
            f"alpha=0.5 requires 2*beta1 > sigma^2 (2*beta1={2 * params.beta1:.6g}, "
            f"sigma^2={params.sigma ** 2:.6g})"
        )


@dataclass(frozen=True)
class StationaryDensity:
    params: CklsParams
    log_norm_const: float
    branch: Branch
    quadrature_tol: float

    def log_unnormalized(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return -2.0 * self.params.alpha * np.log(r) + _q_centered(self.params, r)

    def logpdf(self, r):
        return self.log_unnormalized(r) + self.log_norm_const

    def pdf(self, r):
        with np.errstate(under="ignore"):
            return np.exp(self.logpdf(r))

    def cdf(self, x):
        """Distribution function at the points ``x`` (any order)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        order = np.argsort(x)
        xs = x[order]
        out = np.empty_like(xs)
        pos = xs > 0
        out[~pos] = 0.0
        prev = None
        acc = 0.0
        for i in np.flatnonzero(pos):
            xi = xs[i]
            if prev is None:
                acc = integrate_below_log(self.logpdf, xi, self.quadrature_tol).value
            elif xi > prev:
                acc += integrate_finite(self.pdf, prev, xi, self.quadrature_tol * 1e-2).value
            out[i] = min(acc, 1.0)
            prev = xi
        result = np.empty_like(out)
        result[order] = out
        return result

    def moment(self, power: float) -> float:
        return moment(self, power)


def build_density(params: CklsParams, tol: float = DEFAULT_TOL) -> StationaryDensity:
    """Normalize the stationary density by quadrature.

    Raises FellerViolated for alpha = 1/2 with 2 beta1 <= sigma^2, and
    QuadratureFailure when the relative error estimate exceeds ``tol``.
    """
    check_feller(params)
    density = StationaryDensity(params, 0.0, branch_for(params.alpha), tol)
    try:
        res = integrate_halfline_log(density.log_unnormalized, params.mu, tol)
    except DivergentTail as exc:
        raise QuadratureFailure(f"normalizing integral diverges: {exc}") from exc
    if not res.converged:
        raise QuadratureFailure(
            f"normalizing integral error {res.abs_error_estimate:.3g} above tolerance"
        )
    return StationaryDensity(params, -res.log_value, density.branch, tol)


def moment(density: StationaryDensity, power: float) -> float:
    """E[r**power] under the stationary law; power 0 gives exactly 1."""
    if power == 0:
        return 1.0

    def log_integrand(r):
        with np.errstate(divide="ignore"):
            return power * np.log(r) + density.logpdf(r)

    try:
        res = integrate_halfline_log(log_integrand, density.params.mu, density.quadrature_tol)
    except DivergentTail as exc:
        raise MomentDiverges(f"E[r^{power}] diverges") from exc
    if not res.converged or not math.isfinite(res.log_value):
        raise MomentDiverges(f"E[r^{power}] did not converge numerically")
    return math.exp(res.log_value)


def sigma_matrix(density: StationaryDensity) -> np.ndarray:
    """Limit of the scaled Gram matrix of the regression.

    [[E r^(-2a), -E r^(1-2a)], [-E r^(1-2a), E r^(2-2a)]]
    """
    a = density.params.alpha
    m11 = moment(density, -2.0 * a)
    m12 = moment(density, 1.0 - 2.0 * a)
    m22 = moment(density, 2.0 - 2.0 * a)
    return np.array([[m11, -m12], [-m12, m22]])


def sigma_matrix_cir(params: CklsParams) -> np.ndarray:
    """Closed form of the same matrix at alpha = 1/2."""
    check_feller(params)
    return np.array([
        [params.beta2 / (params.beta1 - params.sigma ** 2 / 2.0), -1.0],
        [-1.0, params.beta1 / params.beta2],
    ])


def ks_distance(samples, density: StationaryDensity, grid_points: int = 4001) -> float:
    """Kolmogorov-Smirnov distance between an empirical sample and ``density``.

    The model CDF is computed on a uniform grid spanning the sample and
    interpolated linearly.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    lo = max(x[0], np.finfo(float).tiny)
    grid = np.linspace(lo, x[-1], grid_points)
    F = np.interp(x, grid, density.cdf(grid))
    F[x <= 0] = 0.0
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))
