"""Command-line entry point: ``fatiguefit <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import DataError, file_sha256, load_dataset
from .curves import probability_plot, survival_curve, write_quantile_csv, PLOT_FAMILIES, PLOT_TRANSFORMS
from .inference import bootstrap_ci, profile_fatigue_limit, rank_models
from .likelihood import ModelSpec
from .mle import FitConfig, FitError, FittedModel, fit
from .stress import KINDS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4
EXIT_MISMATCH = 5

MODELS = ("Ia", "Ib", "IIa", "IIb", "IIIa", "IIIb")

log = logging.getLogger("fatiguefit")


class UsageError(Exception):
    pass


def _range(text: str, what: str) -> tuple[float, float, int]:
    try:
        lo, hi, n = text.split(":")
        return float(lo), float(hi), int(n)
    except ValueError:
        raise UsageError(f"{what} must look like lo:hi:count, got {text!r}") from None


def _schema(pairs: list[str] | None) -> dict[str, str]:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise UsageError(f"--column expects name=header, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _spec(args) -> ModelSpec:
    return ModelSpec.from_name(args.model, args.stress, args.log_base)


def _cfg(args) -> FitConfig:
    return FitConfig(n_starts=args.n_starts, max_iters=args.max_iters, rel_tol=args.rel_tol, seed=args.seed)


def _load(args):
    return load_dataset(args.data, _schema(args.column), unit=args.unit)


class Manifest:
    """Records inputs, settings and written files of one command."""

    def __init__(self, command: str, argv: list[str]):
        self.doc = {"command": command, "argv": argv, "tool_version": __version__, "outputs": []}

    def dataset(self, path):
        self.doc["dataset"] = {"path": str(path), "sha256": file_sha256(path)}

    def model(self, spec: ModelSpec, cfg: FitConfig):
        self.doc["spec"] = spec.to_dict()
        self.doc["config"] = cfg.to_dict()
        self.doc["seed"] = cfg.seed

    def output(self, path):
        self.doc["outputs"].append({"path": str(path), "sha256": file_sha256(path)})

    def write(self, out: Path):
        path = out.with_name(out.name + ".manifest.json")
        path.write_text(json.dumps(self.doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


# -- commands ------------------------------------------------------------------

def cmd_fit(args, argv) -> int:
    data = _load(args)
    spec, cfg = _spec(args), _cfg(args)
    res = fit(data, spec, cfg)
    res = replace(res, data_hash=file_sha256(args.data))
    out = Path(args.out)
    out.write_text(res.to_json(), encoding="utf-8")
    man = Manifest("fit", argv)
    man.dataset(args.data)
    man.model(spec, cfg)
    man.output(out)
    man.write(out)
    print(f"{spec.name} ({spec.transform}, log base {spec.log_base}): loglik = {res.loglik:.4f}")
    for name, value in res.params.as_dict(spec).items():
        print(f"  {name:>12s} = {value:.6g}")
    if not res.converged:
        print("warning: optimizer did not converge", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_compare(args, argv) -> int:
    if len(args.fits) < 2:
        raise UsageError("compare needs at least two fit files")
    fits = [FittedModel.from_json(Path(p).read_text(encoding="utf-8")) for p in args.fits]
    hashes = {f.data_hash for f in fits}
    if len(hashes) != 1:
        raise DataError("fits were computed on different datasets")
    out = Path(args.out)
    with out.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rank", "model", "transform", "log_base", "k", "m", "loglik", "aic", "bic", "aicc"])
        for i, (f, ic) in enumerate(rank_models(fits), start=1):
            w.writerow([i, f.spec.name, f.spec.transform, f.spec.log_base, ic.k, ic.m,
                        f"{ic.loglik:.4f}", f"{ic.aic:.4f}", f"{ic.bic:.4f}",
                        "" if ic.aicc is None else f"{ic.aicc:.4f}"])
    print(out.read_text(encoding="utf-8"), end="")
    man = Manifest("compare", argv)
    man.doc["inputs"] = [{"path": p, "sha256": file_sha256(p)} for p in args.fits]
    man.output(out)
    man.write(out)
    return EXIT_OK


def cmd_profile(args, argv) -> int:
    if args.param != "A3":
        raise UsageError("only the fatigue limit A3 can be profiled")
    data = _load(args)
    spec, cfg = _spec(args), _cfg(args)
    grid = _range(args.grid, "--grid") if args.grid else None
    curve = profile_fatigue_limit(data, spec, cfg, grid)
    out = Path(args.out)
    curve.to_csv(out)
    js = out.with_suffix(".json")
    js.write_text(json.dumps(curve.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    lo, hi = curve.interval()
    print(f"A3 MLE {curve.mle_a3:.4f}; relative likelihood >= {curve.threshold:.4f} on [{lo:.4f}, {hi:.4f}]")
    man = Manifest("profile", argv)
    man.dataset(args.data)
    man.model(spec, cfg)
    man.output(out)
    man.output(js)
    man.write(out)
    return EXIT_OK


def cmd_bootstrap(args, argv) -> int:
    data = _load(args)
    spec, cfg = _spec(args), _cfg(args)
    strata = None if args.stratify_by == "none" else args.stratify_by
    summary = bootstrap_ci(data, spec, cfg, reps=args.reps, level=args.level, strata=strata, seed=args.seed)
    out = Path(args.out)
    summary.to_csv(out)
    js = out.with_suffix(".json")
    js.write_text(summary.to_json(), encoding="utf-8")
    print(out.read_text(encoding="utf-8"), end="")
    if summary.n_failed:
        print(f"{summary.n_failed} of {summary.reps} refits failed and were excluded", file=sys.stderr)
    man = Manifest("bootstrap", argv)
    man.dataset(args.data)
    man.model(spec, cfg)
    man.output(out)
    man.output(js)
    man.write(out)
    return EXIT_OK


def _read_fit(path) -> FittedModel:
    return FittedModel.from_json(Path(path).read_text(encoding="utf-8"))


def cmd_curves(args, argv) -> int:
    f = _read_fit(args.fit)
    lo, hi, n = _range(args.grid, "--grid")
    out = Path(args.out)
    write_quantile_csv(f, np.linspace(lo, hi, n), out)
    man = Manifest("curves", argv)
    man.doc["inputs"] = [{"path": args.fit, "sha256": file_sha256(args.fit)}]
    man.output(out)
    man.write(out)
    return EXIT_OK


def cmd_survival(args, argv) -> int:
    f = _read_fit(args.fit)
    lo, hi, n = _range(args.cycles, "--cycles")
    if not 0 < lo < hi:
        raise UsageError("--cycles needs 0 < lo < hi")
    curve = survival_curve(f, args.smax, args.ratio, np.geomspace(lo, hi, n), s_eq=args.seq)
    out = Path(args.out)
    curve.to_csv(out)
    print(f"equivalent stress {curve.s_eq:.6g}")
    man = Manifest("survival", argv)
    man.doc["inputs"] = [{"path": args.fit, "sha256": file_sha256(args.fit)}]
    man.output(out)
    man.write(out)
    return EXIT_OK


def cmd_pplot(args, argv) -> int:
    data = _load(args)
    pp = probability_plot(data, args.family, args.transform)
    out = Path(args.out)
    pp.to_csv(out)
    print(f"{args.family} on {args.transform}(N): plot correlation {pp.correlation:.6f}")
    man = Manifest("pplot", argv)
    man.dataset(args.data)
    man.output(out)
    man.write(out)
    return EXIT_OK


def cmd_rerun(args, argv) -> int:
    doc = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
    ds = doc.get("dataset")
    if ds and file_sha256(ds["path"]) != ds["sha256"]:
        raise DataError(f"dataset {ds['path']} changed since the manifest was written")
    code = main(doc["argv"])
    if code not in (EXIT_OK, EXIT_CONVERGENCE):
        return code
    changed = [o["path"] for o in doc["outputs"] if file_sha256(o["path"]) != o["sha256"]]
    for p in changed:
        print(f"output differs: {p}", file=sys.stderr)
    return EXIT_MISMATCH if changed else code


# -- parser --------------------------------------------------------------------

def _data_flags(p):
    p.add_argument("--data", required=True, help="CSV dataset")
    p.add_argument("--column", action="append", metavar="NAME=HEADER",
                   help="map a canonical column to a file header (repeatable)")
    p.add_argument("--unit", default="", help="stress unit label")


def _model_flags(p):
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--stress", default="walker", choices=KINDS)
    p.add_argument("--log-base", default="10", choices=("10", "e"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-starts", type=int, default=24)
    p.add_argument("--max-iters", type=int, default=5000)
    p.add_argument("--rel-tol", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fatiguefit", description="Calibrate probabilistic S-N fatigue-limit models.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="maximum-likelihood fit")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--out", required=True, help="fit JSON path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compare", help="rank fits by information criteria")
    p.add_argument("fits", nargs="+")
    p.add_argument("--out", required=True, help="ranking CSV path")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("profile", help="profile likelihood of the fatigue limit")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--param", default="A3")
    p.add_argument("--grid", help="lo:hi:count")
    p.add_argument("--out", required=True, help="profile CSV path")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("bootstrap", help="stratified bootstrap confidence intervals")
    _data_flags(p)
    _model_flags(p)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--level", type=float, default=0.90)
    p.add_argument("--stratify-by", default="group", choices=("group", "none"))
    p.add_argument("--out", required=True, help="interval CSV path")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("curves", help="quantile curves (5%%, 50%%, 95%%)")
    p.add_argument("--fit", required=True, help="fit JSON")
    p.add_argument("--grid", required=True, help="equivalent stress lo:hi:count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("survival", help="survival curve at a fixed loading")
    p.add_argument("--fit", required=True, help="fit JSON")
    p.add_argument("--smax", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--seq", type=float, help="equivalent stress, for identity-transform fits")
    p.add_argument("--cycles", default="1e3:1e8:200", help="log-spaced lo:hi:count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_survival)

    p = sub.add_parser("pplot", help="probability-plot data")
    _data_flags(p)
    p.add_argument("--family", required=True, choices=PLOT_FAMILIES)
    p.add_argument("--transform", default="log", choices=PLOT_TRANSFORMS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pplot)

    p = sub.add_parser("rerun", help="re-execute a manifest and check outputs are unchanged")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_rerun)
    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FitError as exc:
        print(f"fit error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
