"""Drivers that regenerate the estimation table and the two figures.

Every driver returns plain rows and writes CSV (plus SVG for the figures).
Numbers are written with ``repr``, the shortest exact round-trip form, so
reruns with the same seeds give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._pool import pmap
from .errors import CklsError
from .estimate import fit_path
from .meanrev import ratio_sweep, sweep_to_csv
from .model import make_ckls
from .plotting import Panel, Series, write_svg
from .simulate import SimConfig, simulate_ckls

# (beta1, beta2, sigma, alpha, r0) for the five blocks of the estimation table
TABLE1_BLOCKS = (
    (0.1, 0.5, 0.03, 0.5, 1.0),
    (0.2, 0.7, 0.05, 1.0, 0.5),
    (0.15, 0.3, 0.04, 0.6, 1.5),
    (0.25, 0.6, 0.06, 0.8, 1.0),
    (0.3, 0.9, 0.07, 0.55, 0.7),
)
TABLE1_HORIZONS = (10.0, 20.0, 50.0, 100.0)
TABLE1_DT = 1e-4
DEFAULT_SEEDS = 10

FIG1_DT = 1e-3
FIG1_KAPPA = 0.5
FIG1_SIGMA = 0.1
FIG1_ALPHA = 0.5
FIG1_THETAS = (0.5, 1.0, 2.0)
FIG1_HORIZONS = tuple(float(t) for t in range(10, 501, 10))

FIG2_TEMPLATE = (0.5, 0.5, 0.2, 0.5, 1.0)
FIG2_R0 = (1.5, 3.0, 8.0, 20.0)
FIG2_ALPHAS = (0.5, 0.75, 1.0)
FIG2_PATHS = 2000
FIG2_DT = 1e-3


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else repr(x)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class ExperimentOutput:
    files: list
    cells: int
    failed: int

    @property
    def complete_fraction(self) -> float:
        return 1.0 - self.failed / self.cells if self.cells else 1.0


# -- estimation table --------------------------------------------------------

def _table1_cell(job):
    block, seed, base_seed = job
    params = make_ckls(*TABLE1_BLOCKS[block])
    try:
        path = simulate_ckls(params, SimConfig(T=max(TABLE1_HORIZONS), dt=TABLE1_DT, seed=base_seed + seed))
    except CklsError as exc:
        return [(block, seed, T, None, f"{type(exc).__name__}: {exc}") for T in TABLE1_HORIZONS]
    out = []
    for T in TABLE1_HORIZONS:
        # a prefix of the long path is exactly the shorter simulation with this seed
        try:
            out.append((block, seed, T, fit_path(path.prefix(T), params.alpha, cov_method="none"), ""))
        except CklsError as exc:
            out.append((block, seed, T, None, f"{type(exc).__name__}: {exc}"))
    return out


def table1(out_dir, n_seeds: int = DEFAULT_SEEDS, base_seed: int = 0) -> ExperimentOutput:
    """Estimates for each block and horizon: per-seed detail and seed means."""
    out_dir = Path(out_dir)
    jobs = [(b, s, base_seed) for b in range(len(TABLE1_BLOCKS)) for s in range(n_seeds)]
    results = [r for cell in pmap(_table1_cell, jobs) for r in cell]

    detail = []
    for block, seed, T, fr, err in results:
        if fr is None:
            detail.append([block + 1, base_seed + seed, T, math.nan, math.nan, math.nan, err])
        else:
            detail.append([block + 1, base_seed + seed, T, fr.beta2_hat, fr.beta1_hat, fr.sigma_hat, ""])

    summary = []
    failed = 0
    for b, (b1, b2, sig, alpha, r0) in enumerate(TABLE1_BLOCKS):
        for T in TABLE1_HORIZONS:
            fits = [fr for blk, _, t, fr, _ in results if blk == b and t == T and fr is not None]
            n_fail = n_seeds - len(fits)
            failed += n_fail
            if fits:
                m2 = math.fsum(f.beta2_hat for f in fits) / len(fits)
                m1 = math.fsum(f.beta1_hat for f in fits) / len(fits)
                ms = math.fsum(f.sigma_hat for f in fits) / len(fits)
            else:
                m2 = m1 = ms = math.nan
            summary.append([b + 1, b2, b1, sig, m2, m1, ms, r0, alpha, T, len(fits),
                            "" if n_fail == 0 else f"{n_fail} seeds failed"])

    main = out_dir / "table1.csv"
    main.write_text(_csv_text(
        ["block", "beta2", "beta1", "sigma", "beta2_hat", "beta1_hat", "sigma_hat",
         "r0", "alpha", "T", "n_seeds", "flag"], summary))
    per_seed = out_dir / "table1_seeds.csv"
    per_seed.write_text(_csv_text(
        ["block", "seed", "T", "beta2_hat", "beta1_hat", "sigma_hat", "flag"], detail))
    return ExperimentOutput([main, per_seed], len(results), failed)


# -- convergence figure ------------------------------------------------------

def _fig1_scenario(job):
    theta, seed = job
    params = make_ckls(theta * FIG1_KAPPA, FIG1_KAPPA, FIG1_SIGMA, FIG1_ALPHA, 1.0)
    path = simulate_ckls(params, SimConfig(T=max(FIG1_HORIZONS), dt=FIG1_DT, seed=seed))
    rows = []
    for T in FIG1_HORIZONS:
        try:
            fr = fit_path(path.prefix(T), params.alpha, cov_method="none")
            rows.append([theta, FIG1_KAPPA, FIG1_SIGMA ** 2, T,
                         fr.beta1_hat / fr.beta2_hat, fr.beta2_hat, fr.sigma2_hat, ""])
        except CklsError as exc:
            rows.append([theta, FIG1_KAPPA, FIG1_SIGMA ** 2, T, math.nan, math.nan, math.nan,
                         f"{type(exc).__name__}: {exc}"])
    return rows


def fig1(out_dir, seed: int = 0) -> ExperimentOutput:
    """Estimate trajectories of theta, kappa and sigma^2 against the horizon T."""
    out_dir = Path(out_dir)
    per = pmap(_fig1_scenario, [(theta, seed) for theta in FIG1_THETAS])
    rows = [r for block in per for r in block]
    csv_path = out_dir / "fig1.csv"
    csv_path.write_text(_csv_text(
        ["theta", "kappa", "sigma2", "T", "theta_hat", "kappa_hat", "sigma2_hat", "flag"], rows))

    panels = []
    for col, name, truths in ((4, "theta", FIG1_THETAS), (5, "kappa", (FIG1_KAPPA,)),
                              (6, "sigma^2", (FIG1_SIGMA ** 2,))):
        series = [Series(f"theta={theta:g}", [r[3] for r in block], [r[col] for r in block])
                  for theta, block in zip(FIG1_THETAS, per)]
        panels.append(Panel(f"{name} estimate vs T", series,
                            [(v, f"true {v:g}") for v in truths], "T", name))
    svg_path = out_dir / "fig1.svg"
    write_svg(panels, svg_path)
    failed = sum(1 for r in rows if r[-1])
    return ExperimentOutput([csv_path, svg_path], len(rows), failed)


# -- half-life ratio figure --------------------------------------------------

def fig2(out_dir, seed: int = 0, n_paths: int = FIG2_PATHS, r0_grid=FIG2_R0,
         alphas=FIG2_ALPHAS) -> ExperimentOutput:
    """Ratio of deterministic half-life to mean passage time over (alpha, r0)."""
    out_dir = Path(out_dir)
    template = make_ckls(*FIG2_TEMPLATE)
    r0_grid = [template.mu * m for m in r0_grid]
    cfg = SimConfig(T=1.0, dt=FIG2_DT, seed=seed)
    rows = ratio_sweep(template, r0_grid, alphas, n_paths, cfg)
    csv_path = out_dir / "fig2.csv"
    sweep_to_csv(rows, csv_path)
    series = []
    for a in alphas:
        cells = [r for r in rows if r.alpha == a]
        series.append(Series(f"alpha={a:g}", [r.r0 for r in cells], [r.ratio for r in cells]))
    svg_path = out_dir / "fig2.svg"
    write_svg([Panel("half-life ratio vs initial value", series, [(1.0, "1")], "r0",
                     "t_half / E[tau]")], svg_path)
    failed = sum(1 for r in rows if r.error)
    return ExperimentOutput([csv_path, svg_path], len(rows), failed)
