"""Parameter containers for the CKLS family and its polynomial generalization.

CKLS short-rate dynamics::

    dr_t = (beta1 - beta2 * r_t) dt + sigma * r_t**alpha dW_t

Generalized dynamics with polynomial drift ``a`` and polynomial diffusion
base ``b``::

    dr_t = a(r_t) dt + b(r_t)**alpha dW_t
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AlphaOutOfRange, InvalidDynamics, NonPositiveParameter

ALPHA_MIN = 0.5
ALPHA_MAX = 1.0

# grid used to check b(x) > 0 on the state space
_POSITIVITY_GRID = np.logspace(-8.0, 8.0, 10_000)


@dataclass(frozen=True)
class CklsParams:
    beta1: float
    beta2: float
    sigma: float
    alpha: float
    r0: float

    def __post_init__(self):
        for name in ("beta1", "beta2", "sigma", "r0"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise NonPositiveParameter(f"{name} must be strictly positive, got {value!r}")
        if not (ALPHA_MIN <= self.alpha <= ALPHA_MAX):
            raise AlphaOutOfRange(
                f"alpha must lie in [{ALPHA_MIN}, {ALPHA_MAX}], got {self.alpha!r}"
            )

    @property
    def mu(self) -> float:
        """Asymptotic mean beta1 / beta2."""
        return self.beta1 / self.beta2

    def replace(self, **changes) -> "CklsParams":
        values = {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "sigma": self.sigma,
            "alpha": self.alpha,
            "r0": self.r0,
        }
        values.update(changes)
        return CklsParams(**values)

    def as_dict(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "sigma": self.sigma,
            "alpha": self.alpha,
            "r0": self.r0,
        }


def make_ckls(beta1: float, beta2: float, sigma: float, alpha: float, r0: float) -> CklsParams:
    """Validated constructor; raises NonPositiveParameter or AlphaOutOfRange."""
    return CklsParams(float(beta1), float(beta2), float(sigma), float(alpha), float(r0))


def lowest_degree(coeffs: Sequence[float]) -> int:
    """Index of the first coefficient that is exactly nonzero."""
    for i, c in enumerate(coeffs):
        if c != 0.0:
            return i
    raise InvalidDynamics("polynomial has no nonzero coefficient")


def lowest_coeff(coeffs: Sequence[float]) -> float:
    return float(coeffs[lowest_degree(coeffs)])


def highest_degree(coeffs: Sequence[float]) -> int:
    for i in range(len(coeffs) - 1, -1, -1):
        if coeffs[i] != 0.0:
            return i
    raise InvalidDynamics("polynomial has no nonzero coefficient")


def highest_coeff(coeffs: Sequence[float]) -> float:
    return float(coeffs[highest_degree(coeffs)])


def polyval(coeffs, x):
    """Horner evaluation with ``coeffs[i]`` multiplying ``x**i``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c in reversed(coeffs):
        out = out * x + c
    return out


@dataclass(frozen=True)
class PolyDynamics:
    """Polynomial drift ``a`` and diffusion base ``b`` raised to ``alpha``.

    Coefficients are stored in ascending order. A coefficient counts as zero
    only when it is exactly 0.0; there is no snapping, because the lowest
    degree terms decide the boundary classification.
    """

    drift_coeffs: tuple
    diffusion_coeffs: tuple
    alpha: float

    def __post_init__(self):
        drift = tuple(float(c) for c in self.drift_coeffs)
        diff = tuple(float(c) for c in self.diffusion_coeffs)
        object.__setattr__(self, "drift_coeffs", drift)
        object.__setattr__(self, "diffusion_coeffs", diff)
        if not all(math.isfinite(c) for c in drift + diff):
            raise InvalidDynamics("coefficients must be finite")
        if not (math.isfinite(self.alpha) and self.alpha > 0.0):
            raise InvalidDynamics(f"alpha must be positive, got {self.alpha!r}")
        # a zero drift is allowed (pure diffusion); the base b must not vanish
        lowest_degree(diff)
        if highest_coeff(diff) <= 0.0:
            raise InvalidDynamics("b(x) must be positive on (0, inf): leading coefficient <= 0")
        if np.any(polyval(diff, _POSITIVITY_GRID) <= 0.0):
            raise InvalidDynamics("b(x) must be positive on (0, inf)")

    # drift a(x): lowest term c2 * x**s
    @property
    def s(self) -> int:
        """Lowest drift degree; 0 for the zero drift."""
        if not any(self.drift_coeffs):
            return 0
        return lowest_degree(self.drift_coeffs)

    @property
    def c2(self) -> float:
        """Lowest drift coefficient; 0.0 for the zero drift."""
        if not any(self.drift_coeffs):
            return 0.0
        return lowest_coeff(self.drift_coeffs)

    # diffusion base b(x): lowest term coefficient * x**k1
    @property
    def k1(self) -> int:
        return lowest_degree(self.diffusion_coeffs)

    @property
    def k(self) -> float:
        """Lowest degree of b(x)**(2 alpha)."""
        return 2.0 * self.k1 * self.alpha

    @property
    def c1(self) -> float:
        """Coefficient of the lowest-degree term of b(x)**(2 alpha)."""
        return lowest_coeff(self.diffusion_coeffs) ** (2.0 * self.alpha)

    @property
    def b0(self) -> float:
        return self.diffusion_coeffs[0]

    def drift(self, x):
        return polyval(self.drift_coeffs, x)

    def base(self, x):
        return polyval(self.diffusion_coeffs, x)

    def diffusion(self, x):
        """b(x)**alpha."""
        return self.base(x) ** self.alpha

    def log_variance(self, x):
        """log of b(x)**(2 alpha)."""
        return 2.0 * self.alpha * np.log(self.base(x))

    def linear_rate(self) -> float:
        """Magnitude of the linear drift coefficient (0 when absent)."""
        return abs(self.drift_coeffs[1]) if len(self.drift_coeffs) > 1 else 0.0


def ckls_as_poly(params: CklsParams) -> PolyDynamics:
    """Express CKLS dynamics in polynomial form.

    sigma is absorbed into the diffusion base, b(x) = sigma**(1/alpha) * x, so
    that b(x)**alpha = sigma * x**alpha and b(x)**(2 alpha) = sigma**2 * x**(2 alpha).
    """
    scale = params.sigma ** (1.0 / params.alpha)
    return PolyDynamics(
        drift_coeffs=(params.beta1, -params.beta2),
        diffusion_coeffs=(0.0, scale),
        alpha=params.alpha,
    )
