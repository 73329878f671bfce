"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 numerical or model error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ExperimentFailure, FitError, InvalidArgument, SelectionFailure
from .estimator import TobitFit, fit, predict
from .likelihood import CensoredDataset
from .model_selection import DEFAULT_GRID, cv_select
from .simulation import DEFAULT_SEED, METHODS, Scenario, run_experiment
from .splines import SplineSpec

SCHEMA_VERSION = 1
PROG = "tobit-additive"

EXIT_OK, EXIT_INPUT, EXIT_MODEL = 0, 2, 3


class InputError(Exception):
    """Bad user input: missing files or columns, malformed CSV."""


# ---------------------------------------------------------------- CSV helpers


def _fmt(x: float) -> str:
    return repr(float(x))


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Header and rows of a comma-separated file; ``#`` lines are skipped."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8") from None
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        return [], []
    rows = list(csv.reader(lines))
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        raise InputError(f"{path}: duplicate column names")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
    return header, rows[1:]


def _column(header, rows, name, path) -> np.ndarray:
    if name not in header:
        raise InputError(f"{path}: missing column '{name}'")
    k = header.index(name)
    out = np.empty(len(rows))
    for i, row in enumerate(rows):
        try:
            out[i] = float(row[k])
        except ValueError:
            raise InputError(f"{path}: non-numeric value {row[k]!r} in column '{name}' (row {i + 2})") from None
    if not np.all(np.isfinite(out)):
        raise InputError(f"{path}: non-finite value in column '{name}'")
    return out


def load_dataset(path, response: str, covariates, limit: float):
    header, rows = read_table(path)
    if not header:
        raise InputError(f"{path}: empty file")
    if not rows:
        raise InputError(f"{path}: no data rows")
    names = covariates or [h for h in header if h != response]
    if not names:
        raise InputError(f"{path}: no covariate columns")
    y = _column(header, rows, response, path)
    x = np.column_stack([_column(header, rows, c, path) for c in names])
    try:
        return CensoredDataset.from_observed(x, y, limit), names
    except InvalidArgument as exc:
        raise InputError(f"{path}: {exc}") from None


def _write_csv(path, header, rows, provenance: str):
    buf = io.StringIO()
    buf.write(f"# {provenance}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# ----------------------------------------------------------- model file I/O


def model_to_dict(model: TobitFit, covariates, response: str, provenance: str = "") -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "method": model.method,
        "response": response,
        "detection_limit": model.detection_limit,
        "covariates": [
            {
                "name": name,
                "domain_lo": s.domain_lo,
                "domain_hi": s.domain_hi,
                "degree": s.degree,
                "interior_knots": s.interior_knots,
                "kappa": s.kappa,
            }
            for name, s in zip(covariates, model.specs)
        ],
        "intercept": model.intercept,
        "coefficient_blocks": [[float(v) for v in b] for b in model.theta_blocks],
        "sigma": model.sigma,
        "column_means": [float(v) for v in model.column_means],
        "diagnostics": {
            "loglik": model.loglik,
            "iterations": model.iterations,
            "converged": model.converged,
            "grad_norm": model.grad_norm,
            "termination": model.termination,
            "restarts": model.restarts,
            "n_used": model.n_used,
            "censored_count": model.censored_count,
        },
        "provenance": provenance,
    }


def model_from_dict(doc: dict) -> tuple[TobitFit, list[str]]:
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise InputError(f"unsupported model schema_version {doc.get('schema_version')!r}")
    try:
        specs = tuple(
            SplineSpec(degree=c["degree"], interior_knots=c["interior_knots"],
                       domain_lo=c["domain_lo"], domain_hi=c["domain_hi"])
            for c in doc["covariates"]
        )
        diag = doc["diagnostics"]
        model = TobitFit(
            specs=specs,
            intercept=float(doc["intercept"]),
            theta_blocks=[np.array(b, dtype=float) for b in doc["coefficient_blocks"]],
            sigma=float(doc["sigma"]),
            loglik=float(diag["loglik"]),
            converged=bool(diag["converged"]),
            n_used=int(diag["n_used"]),
            censored_count=int(diag["censored_count"]),
            column_means=np.array(doc["column_means"], dtype=float),
            detection_limit=float(doc["detection_limit"]),
            iterations=int(diag["iterations"]),
            grad_norm=float(diag["grad_norm"]),
            termination=diag["termination"],
            method=doc["method"],
            restarts=int(diag.get("restarts", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed model file: {exc}") from None
    return model, [c["name"] for c in doc["covariates"]]


def save_model(path, model, covariates, response, provenance=""):
    doc = model_to_dict(model, covariates, response, provenance)
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def load_model(path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)


# ----------------------------------------------------------------- commands


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text):
    return [v.strip() for v in text.split(",") if v.strip()] if text else None


def cmd_fit(args, provenance) -> int:
    data, names = load_dataset(args.data, args.response, _names(args.covariates), args.limit)
    if args.kappa == "cv":
        cv = cv_select(data, args.grid, folds=args.folds, seed=args.seed, degree=args.degree)
        kappa = cv.chosen_kappa
        scores = ", ".join(f"{k}: {s:.4f}" for k, s in zip(cv.kappa_grid, cv.scores))
        print(f"cross-validation scores ({scores}); chosen kappa = {kappa}")
    else:
        try:
            kappa = int(args.kappa)
        except ValueError:
            raise InputError(f"--kappa must be an integer or 'cv', got {args.kappa!r}") from None
    try:
        spec = SplineSpec.from_kappa(kappa, degree=args.degree)
    except InvalidArgument as exc:
        raise InputError(str(exc)) from None
    model = fit(data, spec)
    save_model(args.out, model, names, args.response, provenance)
    print(f"n = {data.n}, censored = {data.censored_count}, kappa = {kappa}, degree = {args.degree}")
    print(f"sigma = {model.sigma:.6g}, log-likelihood = {model.loglik:.6f}, iterations = {model.iterations}")
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_cv(args, provenance) -> int:
    data, _ = load_dataset(args.data, args.response, _names(args.covariates), args.limit)
    cv = cv_select(data, args.grid, folds=args.folds, seed=args.seed, degree=args.degree)
    print("kappa,score")
    for k, s in zip(cv.kappa_grid, cv.scores):
        print(f"{k},{_fmt(s)}")
    for k, msg in cv.diagnostics.items():
        print(f"# kappa {k}: {msg}", file=sys.stderr)
    print(f"chosen kappa = {cv.chosen_kappa}")
    return EXIT_OK


def cmd_predict(args, provenance) -> int:
    model, names = load_model(args.model)
    header, rows = read_table(args.data)
    if not header:
        _write_csv(args.out, names + ["yhat_latent"], [], provenance)
        return EXIT_OK
    missing = [c for c in names if c not in header]
    if missing:
        raise InputError(f"{args.data}: missing covariate column(s) {', '.join(missing)}")
    if rows:
        x = np.column_stack([_column(header, rows, c, args.data) for c in names])
        yhat = predict(model, x)
    else:
        yhat = []
    out_rows = [row + [_fmt(v)] for row, v in zip(rows, yhat)]
    _write_csv(args.out, header + ["yhat_latent"], out_rows, provenance)
    return EXIT_OK


def cmd_simulate(args, provenance) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if unknown or not methods:
        raise InputError(f"--methods must list some of {', '.join(METHODS)}")
    try:
        scenario = Scenario(n=args.n, cen=args.cen, replicates=args.reps, seed=args.seed,
                            noise_sd=args.noise_sd, grid_points=args.grid_points)
    except InvalidArgument as exc:
        raise InputError(str(exc)) from None
    reports = run_experiment(scenario, methods, select_kappa=args.select_kappa, workers=args.workers)

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    imse_rows = []
    for label, rep in reports.items():
        for j, v in enumerate(rep.imse_per_component):
            imse_rows.append([label, f"m{j + 1}", _fmt(v), _fmt(1e4 * v)])
    _write_csv(outdir / "imse.csv", ["method", "component", "imse", "imse_x1e4"], imse_rows, provenance)

    for i, (label, rep) in enumerate(reports.items()):
        rows = []
        for j, band in rep.bands.items():
            for k in range(len(band["grid"])):
                rows.append([f"m{j + 1}"] + [_fmt(band[key][k]) for key in ("grid", "truth", "median", "q025", "q975")])
        name = "bands.csv" if i == 0 else f"bands_{label}.csv"
        _write_csv(outdir / name, ["component", "grid_x", "truth", "median", "q025", "q975"], rows, provenance)

    print(f"n = {scenario.n}, Cen = {scenario.cen:.0%}, replicates = {scenario.replicates}, "
          f"seed = {scenario.seed}, c = {next(iter(reports.values())).threshold:.6g}")
    print(f"{'method':<20} {'1e4*IMSE(m1)':>13} {'1e4*IMSE(m2)':>13} {'failed':>7}")
    for label, rep in reports.items():
        a, b = 1e4 * rep.imse_per_component
        print(f"{label:<20} {a:>13.1f} {b:>13.1f} {rep.failures:>7d}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Semi-parametric Tobit additive regression.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--data", required=True, help="CSV file with a header row")
        p.add_argument("--limit", type=float, required=True, help="known lower detection limit c")
        p.add_argument("--response", default="y", help="response column (default: y)")
        p.add_argument("--covariates", help="comma-separated covariate columns (default: all others)")
        p.add_argument("--degree", type=int, default=3, help="spline degree (default: 3)")

    kappa_help = ("basis functions per covariate counted before the first is dropped, "
                  "i.e. degree + 1 + interior knots (cubic with 1 interior knot = 5); "
                  "'cv' selects it by cross-validation")
    p = sub.add_parser("fit", help="fit a model and write it as JSON")
    data_args(p)
    p.add_argument("--kappa", default="5", help=kappa_help)
    p.add_argument("--grid", type=_int_list, default=list(DEFAULT_GRID), help="kappa grid for --kappa cv")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model file to write")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("cv", help="cross-validated log-likelihood over a kappa grid")
    data_args(p)
    p.add_argument("--grid", type=_int_list, default=list(DEFAULT_GRID))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("predict", help="latent-mean predictions from a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="Monte Carlo IMSE study for one (n, Cen) cell")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cen", type=float, required=True, help="target censoring proportion")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--methods", default="tobit,naive", help="comma-separated: tobit, naive")
    p.add_argument("--noise-sd", type=float, default=0.2)
    p.add_argument("--grid-points", type=int, default=50)
    p.add_argument("--select-kappa", action="store_true", help="choose kappa per replicate by 5-fold CV")
    p.add_argument("--workers", type=int, default=1, help="worker processes (results do not depend on it)")
    p.add_argument("--outdir", default=".", help="directory for imse.csv and bands.csv")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    seed = getattr(args, "seed", None)
    provenance = f"{PROG} {' '.join(argv)}" + (f" (seed {seed})" if seed is not None else "")
    try:
        return args.func(args, provenance)
    except (InputError, InvalidArgument) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FitError, SelectionFailure, ExperimentFailure) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
