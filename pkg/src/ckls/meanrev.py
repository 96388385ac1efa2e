"""Mean-reversion rate, deterministic half-life and Monte Carlo passage times.

The mean of a CKLS state relaxes to ``mu = beta1 / beta2`` as
``(r0 - mu) * exp(-beta2 t)``, so the deterministic half-life is
``ln 2 / beta2`` for every alpha. ``half_life_mc`` compares it with the
expected first time a simulated path reaches the midpoint ``(r0 + mu) / 2``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

import numpy as np

from ._pool import pmap
from .errors import AtAsymptoticMean, CklsError, ExcessiveCensoring, InvalidConfig
from .model import CklsParams
from .simulate import SimConfig, first_passage_time

LN2 = math.log(2.0)
MIN_PATHS = 100
MAX_CENSORED_FRACTION = 0.01
SWEEP_HEADER = ["alpha", "r0", "t_half", "expected_tau", "tau_se", "ratio", "n", "censored"]


@dataclass(frozen=True)
class HalfLifeResult:
    alpha: float
    r0: float
    t_half_deterministic: float
    expected_tau: float
    tau_std_error: float
    n_paths: int
    censored: int
    ratio: float
    # set on sweep rows whose cell raised instead of producing numbers
    error: Optional[str] = None

    def csv_row(self) -> list:
        return [
            repr(float(self.alpha)),
            repr(float(self.r0)),
            repr(float(self.t_half_deterministic)),
            repr(float(self.expected_tau)),
            repr(float(self.tau_std_error)),
            repr(float(self.ratio)),
            str(self.n_paths),
            str(self.censored),
        ]


def deterministic_half_life(params: CklsParams) -> float:
    return LN2 / params.beta2


def mean_reversion_rate(params: CklsParams, r: float) -> float:
    """``a(r) / (mu - r)`` with ``a(r) = beta1 - beta2 r``.

    Evaluated in exact rational arithmetic on the float inputs, so the
    identity with beta2 holds bit for bit rather than to rounding.
    """
    if abs(r - params.mu) <= 1e-12:
        raise AtAsymptoticMean(f"r={r!r} is at the asymptotic mean {params.mu!r}")
    b1, b2, x = Fraction(params.beta1), Fraction(params.beta2), Fraction(r)
    return float((b1 - b2 * x) / (b1 / b2 - x))


def expected_deviation(params: CklsParams, t: float) -> float:
    """E[r_t] - mu = (r0 - mu) exp(-beta2 t)."""
    if t < 0:
        raise InvalidConfig("t must be non-negative")
    return (params.r0 - params.mu) * math.exp(-params.beta2 * t)


def half_life_mc(params: CklsParams, n_paths: int, cfg: SimConfig,
                 t_max: Optional[float] = None) -> HalfLifeResult:
    """Monte Carlo estimate of E[tau] for the midpoint target.

    Path ``i`` uses random stream ``i`` of ``cfg.seed``. Censored paths
    (no crossing before ``t_max``, default ``50 / beta2``) are left out of
    the mean; more than 1% censored raises ExcessiveCensoring.
    """
    if n_paths < MIN_PATHS:
        raise InvalidConfig(f"n_paths must be at least {MIN_PATHS}")
    if t_max is None:
        t_max = 50.0 / params.beta2
    target = 0.5 * (params.r0 + params.mu)

    def one(i):
        return first_passage_time(params, target, cfg, t_max, stream=i)

    taus = pmap(one, range(n_paths))
    hits = np.array([t for t in taus if t is not None])
    censored = n_paths - hits.size
    if censored > MAX_CENSORED_FRACTION * n_paths:
        raise ExcessiveCensoring(
            f"{censored} of {n_paths} paths did not reach {target:.6g} by t_max={t_max:g}; "
            "raise t_max"
        )
    n = hits.size
    mean = math.fsum(hits) / n
    var = math.fsum((hits - mean) ** 2) / (n - 1) if n > 1 else 0.0
    t_half = deterministic_half_life(params)
    return HalfLifeResult(
        alpha=params.alpha,
        r0=params.r0,
        t_half_deterministic=t_half,
        expected_tau=mean,
        tau_std_error=math.sqrt(var / n),
        n_paths=n_paths,
        censored=censored,
        ratio=t_half / mean,
    )


def _failed_row(params: CklsParams, exc: Exception, n_paths: int) -> HalfLifeResult:
    nan = float("nan")
    return HalfLifeResult(params.alpha, params.r0, deterministic_half_life(params),
                          nan, nan, n_paths, 0, nan, error=f"{type(exc).__name__}: {exc}")


def ratio_sweep(template: CklsParams, r0_grid, alphas, n_paths: int, cfg: SimConfig,
                t_max: Optional[float] = None) -> list:
    """One HalfLifeResult per (alpha, r0) cell, alpha-major.

    Only ``alpha`` and ``r0`` of ``template`` vary. A cell that raises
    becomes a row with NaN numbers and ``error`` set.
    """
    r0_grid = list(r0_grid)
    alphas = list(alphas)
    if not r0_grid or not alphas:
        raise InvalidConfig("r0_grid and alphas must be non-empty")
    rows = []
    for a in alphas:
        for r0 in r0_grid:
            try:
                params = template.replace(alpha=float(a), r0=float(r0))
            except CklsError as exc:
                nan = float("nan")
                rows.append(HalfLifeResult(float(a), float(r0), deterministic_half_life(template),
                                           nan, nan, n_paths, 0, nan,
                                           error=f"{type(exc).__name__}: {exc}"))
                continue
            try:
                rows.append(half_life_mc(params, n_paths, cfg, t_max))
            except CklsError as exc:
                rows.append(_failed_row(params, exc, n_paths))
    return rows


def sweep_to_csv(rows, dest=None) -> str:
    """Render sweep rows with the fixed header; write to ``dest`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for row in rows:
        writer.writerow(row.csv_row())
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text
