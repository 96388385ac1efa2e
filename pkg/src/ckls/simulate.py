"""Euler-Maruyama paths and first-passage times.

Random numbers
--------------
Path ``i`` of a run seeded with ``seed`` draws from
``numpy.random.Generator(Philox(SeedSequence([seed, i])))``. Philox is
counter based, so every (seed, stream) pair is an independent stream no
matter how paths are scheduled. Increments are ``sqrt(dt) * Z`` with ``Z``
from ``Generator.standard_normal`` (numpy's ziggurat), drawn in order one
per step. This pairing is part of the reproducibility contract.

Positivity
----------
``FULL_TRUNCATION`` (default) evaluates drift and diffusion at ``max(r, 0)``
and stores the raw state, which may dip below zero. ``REFLECTION`` replaces
the new state by its absolute value after every step.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from numba import njit

from .errors import (
    DiffusionUndefined,
    InvalidConfig,
    NonUniformGrid,
    StepTooLarge,
    TargetEqualsStart,
)
from .model import CklsParams, PolyDynamics, ckls_as_poly

# steps generated per RNG draw when the path length is not known in advance
_CHUNK = 8192


class Scheme(enum.IntEnum):
    FULL_TRUNCATION = 0
    REFLECTION = 1

    @classmethod
    def parse(cls, name) -> "Scheme":
        if isinstance(name, cls):
            return name
        aliases = {
            "truncate": cls.FULL_TRUNCATION,
            "full_truncation": cls.FULL_TRUNCATION,
            "fulltruncation": cls.FULL_TRUNCATION,
            "reflect": cls.REFLECTION,
            "reflection": cls.REFLECTION,
        }
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise InvalidConfig(f"unknown positivity scheme {name!r}") from None


@dataclass(frozen=True)
class SimConfig:
    """Horizon, step and seed for one simulation.

    ``noiseless`` zeroes every Brownian increment (a test hook for the
    deterministic limit). ``allow_large_step`` disables the step-size guard.
    """

    T: float
    dt: float
    seed: int = 0
    scheme: Scheme = Scheme.FULL_TRUNCATION
    noiseless: bool = False
    allow_large_step: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if not (math.isfinite(self.T) and self.T > 0):
            raise InvalidConfig(f"T must be positive, got {self.T!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise InvalidConfig(f"dt must be positive, got {self.dt!r}")
        if self.dt > self.T:
            raise InvalidConfig("dt must not exceed T")
        if not (0 <= int(self.seed) < 2**64):
            raise InvalidConfig("seed must be a 64-bit unsigned integer")
        if self.n_steps < 2:
            raise InvalidConfig("T/dt must allow at least two steps")

    @property
    def n_steps(self) -> int:
        # guard against T/dt landing a hair below an integer
        return int(math.floor(self.T / self.dt * (1.0 + 1e-12)))


@dataclass(frozen=True, eq=False)
class SamplePath:
    """Values observed at ``t0 + i * dt``."""

    t0: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise InvalidConfig("a path needs at least one value")
        if not self.dt > 0:
            raise InvalidConfig("dt must be positive")
        if self.t0 < 0:
            raise InvalidConfig("t0 must be non-negative")

    def __len__(self):
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, SamplePath):
            return NotImplemented
        return (self.t0 == other.t0 and self.dt == other.dt
                and np.array_equal(self.values, other.values))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.size) * self.dt

    @property
    def T(self) -> float:
        """Observed horizon (number of steps times dt)."""
        return (self.values.size - 1) * self.dt

    @property
    def t_end(self) -> float:
        return self.t0 + (self.values.size - 1) * self.dt

    def prefix(self, horizon: float) -> "SamplePath":
        """Leading part of the path covering ``horizon`` time units."""
        n = int(math.floor(horizon / self.dt * (1.0 + 1e-12)))
        return SamplePath(self.t0, self.dt, self.values[: n + 1])


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


@njit(cache=True, nogil=True)
def _horner(coeffs, x):
    acc = 0.0
    for j in range(coeffs.size - 1, -1, -1):
        acc = acc * x + coeffs[j]
    return acc


@njit(cache=True, nogil=True)
def _euler(x0, dt, drift, base, alpha, dw, reflect, out):
    """Fill ``out`` with the Euler path; return -1 or the failing step."""
    x = x0
    out[0] = x
    for i in range(dw.size):
        xe = x if x > 0.0 else 0.0
        b = _horner(base, xe)
        if b < 0.0:
            return i
        x = x + _horner(drift, xe) * dt + b ** alpha * dw[i]
        if reflect:
            x = abs(x)
        out[i + 1] = x
    return -1


@njit(cache=True, nogil=True)
def _euler_until_cross(x0, dt, drift, base, alpha, dw, reflect, target, side):
    """Advance until ``side * (x - target) <= 0``.

    Returns (steps_taken, x_before, x_after, crossed, failed).
    """
    x = x0
    for i in range(dw.size):
        xe = x if x > 0.0 else 0.0
        b = _horner(base, xe)
        if b < 0.0:
            return i, x, x, False, True
        nxt = x + _horner(drift, xe) * dt + b ** alpha * dw[i]
        if reflect:
            nxt = abs(nxt)
        if side * (nxt - target) <= 0.0:
            return i + 1, x, nxt, True, False
        x = nxt
    return dw.size, x, x, False, False


def _check_step(rate: float, cfg: SimConfig):
    if cfg.allow_large_step or rate <= 0.0:
        return
    if cfg.dt > 0.1 / rate:
        raise StepTooLarge(
            f"dt={cfg.dt} exceeds 0.1/beta2={0.1 / rate:.6g}; pass allow_large_step to override"
        )


def _increments(cfg: SimConfig, n: int, rng: np.random.Generator) -> np.ndarray:
    if cfg.noiseless:
        return np.zeros(n)
    return rng.standard_normal(n) * math.sqrt(cfg.dt)


def simulate_generalized(dyn: PolyDynamics, r0: float, cfg: SimConfig, stream: int = 0) -> SamplePath:
    """Euler-Maruyama path of ``dr = a(r) dt + b(r)**alpha dW`` with ``n_steps + 1`` values."""
    if not r0 > 0:
        raise InvalidConfig("r0 must be positive")
    _check_step(dyn.linear_rate(), cfg)
    n = cfg.n_steps
    dw = _increments(cfg, n, rng_for(cfg.seed, stream))
    out = np.empty(n + 1)
    failed = _euler(float(r0), cfg.dt, np.array(dyn.drift_coeffs), np.array(dyn.diffusion_coeffs),
                    float(dyn.alpha), dw, cfg.scheme == Scheme.REFLECTION, out)
    if failed >= 0:
        raise DiffusionUndefined(f"b(x) < 0 at step {failed}; b(x)**alpha is not real")
    return SamplePath(0.0, cfg.dt, out)


def simulate_ckls(params: CklsParams, cfg: SimConfig, stream: int = 0) -> SamplePath:
    """CKLS path starting at ``params.r0``.

    Runs through the polynomial form so both entry points share one kernel
    and produce identical paths.
    """
    return simulate_generalized(ckls_as_poly(params), params.r0, cfg, stream)


def first_passage_time(params: CklsParams, target: float, cfg: SimConfig, t_max: float,
                       stream: int = 0) -> Optional[float]:
    """First time the Euler path crosses ``target``, or None if censored at ``t_max``.

    A crossing is a sign change of ``r - target`` relative to ``r0 - target``;
    the time is linearly interpolated inside the crossing step. The path is
    the same one ``simulate_ckls`` would produce with this seed and stream.
    """
    if not target > 0:
        raise InvalidConfig("target must be positive")
    if not t_max > 0:
        raise InvalidConfig("t_max must be positive")
    if abs(params.r0 - target) < 1e-12:
        raise TargetEqualsStart(f"r0={params.r0} coincides with target={target}")
    dyn = ckls_as_poly(params)
    _check_step(dyn.linear_rate(), cfg)
    drift = np.array(dyn.drift_coeffs)
    base = np.array(dyn.diffusion_coeffs)
    reflect = cfg.scheme == Scheme.REFLECTION
    side = 1.0 if params.r0 > target else -1.0
    rng = rng_for(cfg.seed, stream)
    n_max = int(math.floor(t_max / cfg.dt * (1.0 + 1e-12)))
    x = params.r0
    done = 0
    while done < n_max:
        m = min(_CHUNK, n_max - done)
        dw = _increments(cfg, m, rng)
        steps, before, after, crossed, failed = _euler_until_cross(
            x, cfg.dt, drift, base, float(dyn.alpha), dw, reflect, float(target), side)
        if failed:
            raise DiffusionUndefined("diffusion base went negative")
        if crossed:
            frac = (before - target) / (before - after) if before != after else 1.0
            return (done + steps - 1 + frac) * cfg.dt
        x = after
        done += steps
    return None


# -- CSV -------------------------------------------------------------------

def write_path_csv(path: SamplePath, dest) -> None:
    """Write ``t,r`` rows with 17 significant digits (exact round trip)."""
    t = path.times
    lines = ["t,r\n"]
    lines.extend(f"{ti:.17g},{ri:.17g}\n" for ti, ri in zip(t.tolist(), path.values.tolist()))
    Path(dest).write_text("".join(lines))


def _recover_dt(t: np.ndarray) -> float:
    """Shortest decimal step that regenerates the time column bit for bit."""
    n = t.size
    raw = (t[-1] - t[0]) / (n - 1)
    idx = np.arange(n)
    for digits in range(1, 18):
        cand = float(f"{raw:.{digits}g}")
        if cand > 0 and np.array_equal(t[0] + idx * cand, t):
            return cand
    # an offset t0 costs the mean gap a few bits; search neighbouring doubles
    for k in range(1, 257):
        for cand in (raw + k * math.ulp(raw), raw - k * math.ulp(raw)):
            if np.array_equal(t[0] + idx * cand, t):
                return cand
    return raw


def read_path_csv(src) -> SamplePath:
    """Parse a ``t,r`` CSV into a SamplePath.

    Raises NonUniformGrid when successive gaps differ by more than 1e-6
    relative or times are not increasing.
    """
    text = Path(src).read_text()
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header != ["t", "r"]:
        raise InvalidConfig(f"expected header 't,r', got {','.join(header)!r}")
    rows = [row for row in reader if row]
    if len(rows) < 2:
        raise InvalidConfig("need at least two rows")
    try:
        data = np.array(rows, dtype=float)
    except ValueError as exc:
        raise InvalidConfig(f"non-numeric or ragged rows: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 2:
        raise InvalidConfig("each row needs exactly two columns")
    t, r = data[:, 0], data[:, 1]
    gaps = np.diff(t)
    if np.any(gaps <= 0):
        raise NonUniformGrid("time column must be strictly increasing")
    mean_gap = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(gaps - mean_gap)) / mean_gap > 1e-6:
        raise NonUniformGrid("time grid is not uniform")
    return SamplePath(float(t[0]), _recover_dt(t), r)
