"""``ckls`` command line.

Exit codes: 0 ok, 2 validation, 3 estimation, 4 numerical, 64 usage.
Commands that write files also write ``<output>.manifest.json`` (or
``manifest.json`` inside a ``repro`` directory) recording the parameters,
seed, version and output hashes. ``ckls rerun MANIFEST --out DIR`` replays
the command into DIR and checks the hashes.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import classify
from .errors import CklsError, InvalidConfig, NonPositiveRates, NumericalError
from .estimate import MAX_DROP_FRACTION, fit_path
from .experiments import DEFAULT_SEEDS, fig1, fig2, table1
from .meanrev import ratio_sweep, sweep_to_csv
from .model import PolyDynamics, make_ckls
from .simulate import SimConfig, read_path_csv, simulate_ckls, write_path_csv
from .stationary import build_density

EXIT_OK = 0
EXIT_USAGE = 64
REPRO_MIN_COMPLETE = 0.9


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _floats(text: str) -> list:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# output arguments of each command: file-valued (name -> True) or directory-valued
_OUTPUT_ARGS = {
    "simulate": ("out", "file"),
    "estimate": ("json_out", "file"),
    "fit-data": ("json_out", "file"),
    "density": ("out", "file"),
    "classify": ("json_out", "file"),
    "halflife": ("out", "file"),
    "repro": ("out", "dir"),
}


def _manifest_path(command: str, args) -> Path | None:
    key, kind = _OUTPUT_ARGS[command]
    target = getattr(args, key, None)
    if target is None:
        return None
    target = Path(target)
    return target / "manifest.json" if kind == "dir" else target.with_name(target.name + ".manifest.json")


def _write_manifest(command: str, args, started: str, outputs) -> None:
    dest = _manifest_path(command, args)
    if dest is None:
        return
    key, kind = _OUTPUT_ARGS[command]
    params = {k: v for k, v in vars(args).items() if k not in ("command", key) and not k.startswith("_")}
    if "input" in params and params["input"] is not None:
        params["input"] = str(Path(params["input"]).resolve())
        params["input_sha256"] = _sha256(Path(params["input"]))
    base = Path(getattr(args, key))
    root = base if kind == "dir" else base.parent
    manifest = {
        "command": command,
        "parameters": params,
        "output_arg": {"name": key, "kind": kind, "value": base.name},
        "seed": params.get("seed"),
        "tool_version": __version__,
        "started": started,
        "finished": _now(),
        "output_files": [
            {"path": str(Path(p).relative_to(root)), "sha256": _sha256(Path(p))} for p in outputs
        ],
    }
    if command == "repro" and args.what == "table1":
        manifest["notes"] = "seed policy: seeds base..base+n-1, one T=100 path per seed, prefixes fitted"
    dest.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit_json(obj, dest) -> list:
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    if dest is None:
        sys.stdout.write(text)
        return []
    Path(dest).write_text(text)
    return [Path(dest)]


def _params(args, r0=None):
    return make_ckls(args.beta1, args.beta2, args.sigma, args.alpha,
                     args.r0 if r0 is None else r0)


def _finite(x):
    return x if isinstance(x, float) and math.isfinite(x) else (None if isinstance(x, float) else x)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_clean(v) for v in obj]
    return _finite(obj)


# -- commands ----------------------------------------------------------------

def cmd_simulate(args) -> list:
    params = _params(args)
    cfg = SimConfig(T=args.T, dt=args.dt, seed=args.seed, scheme=args.scheme,
                    allow_large_step=args.allow_large_step)
    path = simulate_ckls(params, cfg)
    write_path_csv(path, args.out)
    return [Path(args.out)]


def cmd_estimate(args) -> list:
    path = read_path_csv(args.input)
    fr = fit_path(path, args.alpha, cov_method=args.cov)
    return _emit_json(_clean(fr.as_dict()), args.json_out)


def cmd_fit_data(args) -> list:
    path = read_path_csv(args.input)
    steps = path.values[:-1]
    bad = int(np.count_nonzero(~(steps > 0)))
    if bad > MAX_DROP_FRACTION * steps.size:
        raise NonPositiveRates(
            f"{bad} of {steps.size} rates are <= 0 (limit {MAX_DROP_FRACTION:.0%})")
    fr = fit_path(path, args.alpha, cov_method=args.cov)
    report = {"fit": _clean(fr.as_dict())}
    if fr.sigma_hat > 0:
        dyn = PolyDynamics((fr.beta1_hat, -fr.beta2_hat),
                           (0.0, fr.sigma_hat ** (1.0 / args.alpha)), args.alpha)
        report["classification"] = _clean(classify(dyn).as_dict())
    return _emit_json(report, args.json_out)


def cmd_density(args) -> list:
    params = _params(args)
    density = build_density(params)
    lo = args.grid_min if args.grid_min is not None else params.mu / 100.0
    hi = args.grid_max if args.grid_max is not None else params.mu * 5.0
    if not (0 < lo < hi):
        raise InvalidConfig("need 0 < grid-min < grid-max")
    if args.points < 2:
        raise InvalidConfig("need at least 2 grid points")
    r = np.linspace(lo, hi, args.points)
    f = density.pdf(r)
    lines = ["r,pdf\n"] + [f"{a!r},{b!r}\n" for a, b in zip(r.tolist(), f.tolist())]
    Path(args.out).write_text("".join(lines))
    return [Path(args.out)]


def cmd_classify(args) -> list:
    dyn = PolyDynamics(tuple(args.drift), tuple(args.diffusion), args.alpha)
    return _emit_json(_clean(classify(dyn).as_dict()), args.json_out)


def cmd_halflife(args) -> list:
    template = make_ckls(args.beta1, args.beta2, args.sigma, args.alphas[0], args.r0_grid[0])
    t_max = args.t_max if args.t_max is not None else 50.0 / args.beta2
    cfg = SimConfig(T=t_max, dt=args.dt, seed=args.seed, scheme=args.scheme)
    rows = ratio_sweep(template, args.r0_grid, args.alphas, args.n_paths, cfg, t_max)
    sweep_to_csv(rows, args.out)
    for row in rows:
        if row.error:
            sys.stderr.write(f"cell alpha={row.alpha:g} r0={row.r0:g}: {row.error}\n")
    return [Path(args.out)]


def cmd_repro(args) -> list:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.what == "table1":
        res = table1(out, n_seeds=args.seeds, base_seed=args.seed)
    elif args.what == "fig1":
        res = fig1(out, seed=args.seed)
    else:
        res = fig2(out, seed=args.seed, n_paths=args.paths)
    if res.failed:
        sys.stderr.write(f"{res.failed} of {res.cells} cells failed\n")
    if res.complete_fraction < REPRO_MIN_COMPLETE:
        # outputs are still written and recorded before failing
        args._deferred_error = NumericalError(
            f"only {res.complete_fraction:.0%} of cells completed")
    return res.files


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    command = manifest["command"]
    if command not in _COMMANDS:
        raise InvalidConfig(f"unknown command {command!r} in manifest")
    params = dict(manifest["parameters"])
    params.pop("input_sha256", None)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    arg = manifest["output_arg"]
    if arg["kind"] == "dir":
        params[arg["name"]] = str(out_dir)
        root = out_dir
    else:
        params[arg["name"]] = str(out_dir / arg["value"])
        root = out_dir
    ns = argparse.Namespace(command=command, **params)
    code = _run(command, ns)
    if code != EXIT_OK:
        return code
    mismatched = []
    for entry in manifest["output_files"]:
        produced = root / entry["path"]
        if not produced.exists() or _sha256(produced) != entry["sha256"]:
            mismatched.append(entry["path"])
    report = {"command": command, "identical": not mismatched, "mismatched": mismatched}
    sys.stdout.write(json.dumps(report) + "\n")
    return EXIT_OK if not mismatched else NumericalError.exit_code


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "fit-data": cmd_fit_data,
    "density": cmd_density,
    "classify": cmd_classify,
    "halflife": cmd_halflife,
    "repro": cmd_repro,
}


def _run(command: str, args) -> int:
    started = _now()
    try:
        outputs = _COMMANDS[command](args)
        _write_manifest(command, args, started, outputs)
        deferred = getattr(args, "_deferred_error", None)
        if deferred is not None:
            raise deferred
    except CklsError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_params(p, with_alpha=True, r0_required=True):
    p.add_argument("--beta1", type=float, required=True)
    p.add_argument("--beta2", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    if with_alpha:
        p.add_argument("--alpha", type=float, required=True)
    if r0_required:
        p.add_argument("--r0", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ckls", description="CKLS short-rate simulation, estimation and diagnostics")
    parser.add_argument("--version", action="version", version=f"ckls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one Euler path to CSV")
    _add_params(p)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=["truncate", "reflect"], default="truncate")
    p.add_argument("--allow-large-step", action="store_true")
    p.add_argument("--out", required=True)

    for name, helptext in (("estimate", "fit a simulated path"),
                           ("fit-data", "fit an external rate series and classify the fit")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--in", dest="input", required=True)
        p.add_argument("--alpha", type=float, required=True)
        p.add_argument("--cov", choices=["observed", "plugin", "none"], default="observed")
        p.add_argument("--json-out")

    p = sub.add_parser("density", help="stationary density on a grid")
    _add_params(p, r0_required=False)
    p.add_argument("--r0", type=float, default=1.0)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="boundary classification of polynomial dynamics")
    p.add_argument("--drift", type=_floats, required=True, help="c0,c1,... of a(x)")
    p.add_argument("--diffusion", type=_floats, required=True, help="c0,c1,... of b(x)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--json-out")

    p = sub.add_parser("halflife", help="half-life ratio over an (alpha, r0) grid")
    _add_params(p, with_alpha=False, r0_required=False)
    p.add_argument("--r0-grid", type=_floats, required=True)
    p.add_argument("--alphas", type=_floats, required=True)
    p.add_argument("--n-paths", type=int, default=2000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--t-max", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=["truncate", "reflect"], default="truncate")
    p.add_argument("--out", required=True)

    p = sub.add_parser("repro", help="regenerate the estimation table or a figure")
    p.add_argument("what", choices=["table1", "fig1", "fig2"])
    p.add_argument("--out", required=True)
    p.add_argument("--seeds", type=int, default=DEFAULT_SEEDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paths", type=int, default=2000)

    p = sub.add_parser("rerun", help="replay a manifest and compare output hashes")
    p.add_argument("manifest")
    p.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "rerun":
        try:
            return cmd_rerun(args)
        except CklsError as exc:
            sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
            return exc.exit_code
        except (OSError, KeyError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"error: bad manifest: {exc}\n")
            return InvalidConfig.exit_code
    return _run(args.command, args)


if __name__ == "__main__":
    sys.exit(main())
