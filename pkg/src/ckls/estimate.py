"""Least-squares estimation of (beta1, beta2, sigma) from an Euler-discretized path.

Dividing the Euler step by ``r_t**alpha * sqrt(dt)`` turns it into a linear
regression without intercept::

    y_t  = (r_{t+dt} - r_t) / (r_t**alpha * sqrt(dt))
    z1_t = sqrt(dt) / r_t**alpha
    z2_t = -r_t**(1 - alpha) * sqrt(dt)
    y_t  = beta1 * z1_t + beta2 * z2_t + sigma * eps_t,   eps_t ~ N(0, 1)

The coefficients come from the 2x2 normal equations and sigma^2 is the mean
squared residual.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    CklsError,
    ExcessiveDropping,
    SingularDesign,
    TooFewUsableSteps,
)
from .model import CklsParams
from .simulate import SamplePath
from .stationary import build_density, sigma_matrix, sigma_matrix_cir

log = logging.getLogger(__name__)

# states at or below this level are excluded from the regression
STATE_FLOOR = 1e-10
MIN_USABLE_STEPS = 10
MAX_DROP_FRACTION = 0.05
MAX_CONDITION = 1e12
Z95 = 1.959963984540054


@dataclass(frozen=True, eq=False)
class RegressionDesign:
    y: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    dropped: int
    dt: float
    alpha: float

    @property
    def n_used(self) -> int:
        return self.y.size

    @property
    def n_total(self) -> int:
        return self.y.size + self.dropped

    @property
    def T(self) -> float:
        return self.n_total * self.dt


@dataclass(frozen=True, eq=False)
class FitResult:
    beta1_hat: float
    beta2_hat: float
    sigma_hat: float
    sigma2_hat: float
    n_used: int
    n_dropped: int
    T: float
    dt: float
    alpha: float
    cov: np.ndarray
    ci95_beta1: tuple
    ci95_beta2: tuple

    def __eq__(self, other):
        if not isinstance(other, FitResult):
            return NotImplemented
        return self.to_json() == other.to_json()

    def as_dict(self) -> dict:
        return {
            "beta1_hat": self.beta1_hat,
            "beta2_hat": self.beta2_hat,
            "sigma_hat": self.sigma_hat,
            "sigma2_hat": self.sigma2_hat,
            "n_used": self.n_used,
            "n_dropped": self.n_dropped,
            "T": self.T,
            "dt": self.dt,
            "alpha": self.alpha,
            "cov": [float(v) for v in np.asarray(self.cov).ravel()],
            "ci95_beta1": [float(v) for v in self.ci95_beta1],
            "ci95_beta2": [float(v) for v in self.ci95_beta2],
        }

    def to_json(self, indent=2) -> str:
        # NaN is emitted as null so the document stays valid JSON
        d = self.as_dict()
        for key in ("cov", "ci95_beta1", "ci95_beta2"):
            d[key] = [v if math.isfinite(v) else None for v in d[key]]
        return json.dumps(d, indent=indent)

    @classmethod
    def from_dict(cls, d: dict) -> "FitResult":
        def num(v):
            return float("nan") if v is None else float(v)

        return cls(
            beta1_hat=float(d["beta1_hat"]),
            beta2_hat=float(d["beta2_hat"]),
            sigma_hat=float(d["sigma_hat"]),
            sigma2_hat=float(d["sigma2_hat"]),
            n_used=int(d["n_used"]),
            n_dropped=int(d["n_dropped"]),
            T=float(d["T"]),
            dt=float(d["dt"]),
            alpha=float(d["alpha"]),
            cov=np.array([num(v) for v in d["cov"]]).reshape(2, 2),
            ci95_beta1=tuple(num(v) for v in d["ci95_beta1"]),
            ci95_beta2=tuple(num(v) for v in d["ci95_beta2"]),
        )


def transform(values, dt: float, alpha: float):
    """Regression variables for every step, without filtering or checks."""
    values = np.asarray(values, dtype=float)
    r, r_next = values[:-1], values[1:]
    sq = math.sqrt(dt)
    r_alpha = r ** alpha
    y = (r_next - r) / (r_alpha * sq)
    z1 = sq / r_alpha
    z2 = -(r ** (1.0 - alpha)) * sq
    return y, z1, z2


def build_design(path: SamplePath, alpha: float, floor: float = STATE_FLOOR) -> RegressionDesign:
    """Regression design from a path, skipping steps that start at r <= floor.

    Raises TooFewUsableSteps below 10 usable steps and ExcessiveDropping when
    more than 5% of steps are skipped.
    """
    values = path.values
    if values.size < 3:
        raise TooFewUsableSteps(f"path has {values.size} values; need at least 3")
    r, r_next = values[:-1], values[1:]
    keep = (r > floor) & np.isfinite(r) & np.isfinite(r_next)
    total = r.size
    used = int(np.count_nonzero(keep))
    dropped = total - used
    if used < MIN_USABLE_STEPS:
        raise TooFewUsableSteps(f"only {used} usable steps (need {MIN_USABLE_STEPS})")
    if dropped / total > MAX_DROP_FRACTION:
        raise ExcessiveDropping(
            f"{dropped} of {total} steps start at r <= {floor:g} (limit {MAX_DROP_FRACTION:.0%})"
        )
    sq = math.sqrt(path.dt)
    rk = r[keep]
    r_alpha = rk ** alpha
    y = (r_next[keep] - rk) / (r_alpha * sq)
    z1 = sq / r_alpha
    z2 = -(rk ** (1.0 - alpha)) * sq
    return RegressionDesign(y, z1, z2, dropped, path.dt, float(alpha))


def solve_normal_equations(y, z1, z2):
    """Closed-form least squares for two regressors; returns (b1, b2, gram)."""
    g11 = float(np.dot(z1, z1))
    g12 = float(np.dot(z1, z2))
    g22 = float(np.dot(z2, z2))
    h1 = float(np.dot(z1, y))
    h2 = float(np.dot(z2, y))
    gram = np.array([[g11, g12], [g12, g22]])
    eig = np.linalg.eigvalsh(gram)
    if not eig[0] > 0 or eig[1] / eig[0] > MAX_CONDITION:
        raise SingularDesign("Gram matrix is singular or badly conditioned (path nearly constant?)")
    det = g11 * g22 - g12 * g12
    b1 = (g22 * h1 - g12 * h2) / det
    b2 = (g11 * h2 - g12 * h1) / det
    return b1, b2, gram


def asymptotic_covariance(params: CklsParams, sigma2: float, T: float = 1.0) -> np.ndarray:
    """Covariance of (beta1_hat, beta2_hat) at horizon T: sigma2 * inv(Sigma) / T.

    Sigma is the closed form at alpha = 1/2 and the stationary-moment
    quadrature otherwise. Raises FellerViolated or MomentDiverges.
    """
    if params.alpha == 0.5:
        sig = sigma_matrix_cir(params)
    else:
        sig = sigma_matrix(build_density(params))
    return sigma2 * np.linalg.inv(sig) / T


def _plug_in_covariance(b1, b2, sigma2, alpha, T):
    try:
        params = CklsParams(b1, b2, math.sqrt(sigma2), alpha, 1.0)
        return asymptotic_covariance(params, sigma2, T)
    except CklsError as exc:
        log.warning("no plug-in covariance at beta1=%.6g beta2=%.6g: %s", b1, b2, exc)
        return np.full((2, 2), np.nan)


def fit(design: RegressionDesign, cov_method: str = "observed") -> FitResult:
    """Least-squares estimates with asymptotic covariance and 95% intervals.

    ``cov_method``:

    ``"observed"`` (default)
        ``sigma2_hat * inv(Z'Z)``. ``Z'Z / T`` is the sample version of the
        limiting matrix Sigma, so this is the same asymptotic covariance with
        Sigma estimated along the observed path. It keeps nominal coverage
        when the path starts far from equilibrium.
    ``"plugin"``
        ``sigma2_hat * inv(Sigma(beta_hat, sigma_hat)) / T`` from the
        stationary law. NaN when the estimates leave the parameter space.
    ``"none"``
        Skip the covariance (NaN entries).
    """
    b1, b2, gram = solve_normal_equations(design.y, design.z1, design.z2)
    resid = design.y - b1 * design.z1 - b2 * design.z2
    sigma2 = float(np.dot(resid, resid)) / design.n_used
    T = design.T
    if cov_method == "observed":
        cov = sigma2 * np.linalg.inv(gram)
    elif cov_method == "plugin":
        cov = _plug_in_covariance(b1, b2, sigma2, design.alpha, T)
    elif cov_method == "none":
        cov = np.full((2, 2), np.nan)
    else:
        raise ValueError(f"unknown cov_method {cov_method!r}")
    h1 = Z95 * math.sqrt(cov[0, 0]) if cov[0, 0] >= 0 else float("nan")
    h2 = Z95 * math.sqrt(cov[1, 1]) if cov[1, 1] >= 0 else float("nan")
    return FitResult(
        beta1_hat=b1,
        beta2_hat=b2,
        sigma_hat=math.sqrt(sigma2),
        sigma2_hat=sigma2,
        n_used=design.n_used,
        n_dropped=design.dropped,
        T=T,
        dt=design.dt,
        alpha=design.alpha,
        cov=cov,
        ci95_beta1=(b1 - h1, b1 + h1),
        ci95_beta2=(b2 - h2, b2 + h2),
    )


def fit_path(path: SamplePath, alpha: float, cov_method: str = "observed") -> FitResult:
    return fit(build_design(path, alpha), cov_method=cov_method)
