"""Command-line interface: ``lowdefault <command> [options]``.

Input CSV files need a header with columns ``score`` and ``default`` (0/1).
Exit codes: 0 success, 2 malformed input or usage, 3 a class is missing,
4 the computation failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .calibrate import CalibrationInput, calibrate_to_target
from .curves import (
    cap_fn,
    cap_star_fn,
    gcap_points,
    groc_points,
    interpolated_curve,
    roc_fn,
    roc_star_fn,
)
from .distributions import (
    ConditionalSamples,
    DiscreteJoint,
    DistFn,
    empirical_cdf,
    kernel_dist,
    kernel_estimate,
    mixture_cdf,
)
from .inference import (
    basic_bootstrap_interval,
    bootstrap_indices,
    bootstrap_auc_multi,
    kernel_auc_rows,
    normal_auc_interval,
)
from .pdfit import (
    LogitModel,
    QmmTargets,
    RobustLogitModel,
    VanDerBurgtModel,
    logit_fit,
    nls_fit,
    qmm_solve,
    robust_logit_fit,
    survivor_transform,
    vdb_fit_continuous,
    vdb_fit_discrete,
)
from .power import auc_star_empirical, power_estimate
from .rng import RngStream
from .simulate import (
    SCHEMA,
    ExperimentConfig,
    combinatorics_report,
    coverage_study,
    get_scenario,
    pd_curve_study,
    rows_csv,
    to_builtin,
)


class InputError(Exception):
    """Malformed input file (exit 2)."""


class MissingClassError(Exception):
    """No defaulters or no survivors in the input (exit 3)."""


# --------------------------------------------------------------------------
# input


def _read_rows(path: str) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        fh = sys.stdin if path == "-" else open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: line 1: empty file, header required") from None
        except csv.Error as exc:
            raise InputError(f"{path}: line 1: {exc}") from None
        rows = []
        try:
            for row in reader:
                if row and any(c.strip() for c in row):
                    rows.append((reader.line_num, row))
        except csv.Error as exc:
            raise InputError(f"{path}: line {reader.line_num}: {exc}") from None
    return [h.strip() for h in header], rows


def _column(header: list[str], name: str, path: str) -> int:
    if name not in header:
        raise InputError(f"{path}: line 1: header must contain a '{name}' column")
    return header.index(name)


def _float(cell: str, line: int, path: str, what: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise InputError(f"{path}: line {line}: {what} {cell!r} is not a number") from None
    if not np.isfinite(v):
        raise InputError(f"{path}: line {line}: {what} must be finite")
    return v


def read_labelled(path: str) -> ConditionalSamples:
    """Scores and default flags from a CSV with columns score, default."""
    header, rows = _read_rows(path)
    i_s, i_d = _column(header, "score", path), _column(header, "default", path)
    scores, flags = [], []
    for line, row in rows:
        if len(row) != len(header):
            raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        scores.append(_float(row[i_s], line, path, "score"))
        flag = row[i_d].strip()
        if flag not in ("0", "1"):
            raise InputError(f"{path}: line {line}: default must be 0 or 1, got {flag!r}")
        flags.append(int(flag))
    d = np.array(flags, dtype=int)
    if d.sum() < 1:
        raise MissingClassError(f"{path}: no defaulters (default = 1)")
    if (d == 0).sum() < 1:
        raise MissingClassError(f"{path}: no survivors (default = 0)")
    return ConditionalSamples.from_labelled(scores, d)


def read_column(path: str, name: str, extra: Sequence[str] = ()) -> dict[str, np.ndarray]:
    header, rows = _read_rows(path)
    names = [name, *extra]
    idx = {n: _column(header, n, path) for n in names}
    out = {n: [] for n in names}
    for line, row in rows:
        if len(row) != len(header):
            raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
        for n in names:
            out[n].append(_float(row[idx[n]], line, path, n))
    if not out[name]:
        raise InputError(f"{path}: no data rows")
    return {n: np.array(v) for n, v in out.items()}


# --------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _text_table(rows: list[list]) -> str:
    cells = [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells if i < len(r)) for i in range(max(map(len, cells)))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells) + "\n"


def emit(doc: dict, rows: list[list] | None, fmt: str, out) -> None:
    """Write a report as JSON, CSV (the table) or aligned text."""
    if fmt == "json":
        out.write(json.dumps(to_builtin(doc), indent=2) + "\n")
    elif fmt == "csv":
        out.write(rows_csv(rows if rows is not None else [list(doc.keys()), list(doc.values())]))
    else:
        scalars = [[k, v] for k, v in doc.items() if not isinstance(v, (dict, list))]
        if scalars:
            out.write(_text_table(scalars))
        if rows:
            if scalars:
                out.write("\n")
            out.write(_text_table(rows))


# --------------------------------------------------------------------------
# model documents


def _dist_spec(kind: str, s: ConditionalSamples) -> dict:
    return {"kind": kind, "bias_correct": kind == "kernel",
            "defaulters": s.defaulters.tolist(), "survivors": s.survivors.tolist()}


def model_document(model, s: ConditionalSamples, kind: str | None, method: str) -> dict:
    body = model.to_dict()
    doc = {
        "schema": SCHEMA,
        "type": body.pop("type"),
        "parameters": body.pop("parameters"),
        "p": getattr(model, "p", s.default_rate),
        "provenance": {
            "n_d": s.n_d,
            "n_n": s.n_n,
            "method": method,
            "tolerances": {"logit_step": 1e-10, "kappa": 1e-10, "qmm_residual": 1e-9},
            **body,
        },
    }
    if kind is not None:
        doc["distribution"] = _dist_spec(kind, s)
    return doc


def model_from_document(doc: dict):
    """Rebuild a PD-curve model from :func:`model_document` output."""
    typ = doc.get("type")
    par = doc.get("parameters", {})
    if typ == "logit":
        return LogitModel(float(par["alpha"]), float(par["beta"]))
    dist = doc.get("distribution")
    if dist is None:
        raise InputError(f"model of type {typ!r} needs a distribution section")
    s = ConditionalSamples(dist["defaulters"], dist["survivors"])
    kernel = dist["kind"] == "kernel"
    if typ == "vdb":
        p = float(doc["p"])
        if kernel:
            F = mixture_cdf(p, kernel_dist(kernel_estimate(s.defaulters)),
                            kernel_dist(kernel_estimate(s.survivors)))
        else:
            F = DiscreteJoint.from_samples(s, p).unconditional_dist()
        return VanDerBurgtModel(float(par["kappa"]), p, F, discrete=not kernel)
    if typ == "robust_logit":
        F_N = kernel_dist(kernel_estimate(s.survivors)) if kernel else empirical_cdf(s.survivors)
        scores, _ = s.labelled()
        return RobustLogitModel(float(par["alpha"]), float(par["beta"]),
                                transform=survivor_transform(F_N, points=scores))
    raise InputError(f"unknown model type {typ!r}")


def _survivor_law(s: ConditionalSamples, discrete: bool) -> DistFn:
    return empirical_cdf(s.survivors) if discrete else kernel_dist(kernel_estimate(s.survivors))


def fit_model(s: ConditionalSamples, model: str, discrete: bool):
    scores, y = s.labelled()
    kind = "empirical" if discrete else "kernel"
    if model == "vdb":
        if discrete:
            return vdb_fit_discrete(DiscreteJoint.from_samples(s)), kind
        p = s.default_rate
        F_D = kernel_dist(kernel_estimate(s.defaulters))
        F_N = kernel_dist(kernel_estimate(s.survivors))
        return vdb_fit_continuous(scores, F_D, mixture_cdf(p, F_D, F_N), p), kind
    if model == "robustlogit":
        return robust_logit_fit(s, _survivor_law(s, discrete)), kind
    if model == "logit":
        return logit_fit(scores, y), None
    if model == "nls":
        return nls_fit(scores, y), None
    raise InputError(f"unknown model {model!r}")


# --------------------------------------------------------------------------
# commands


def cmd_power(args) -> tuple[dict, list]:
    s = read_labelled(args.input)
    methods = args.method or ["empirical"]
    ests = []
    for m in methods:
        est = power_estimate(s, m, p=args.p, bias_correct=not args.no_bias_correction)
        ests.append(est.as_dict())
    rows = [["method", "auc", "auc_star", "ar", "ar_star", "tie_inflated"]]
    rows += [[e["method"], e["auc"], e["auc_star"], e["ar"], e["ar_star"], e["tie_inflated"]] for e in ests]
    doc = {"schema": SCHEMA, "command": "power", "n_d": s.n_d, "n_n": s.n_n,
           "p": s.default_rate if args.p is None else args.p, "estimates": ests}
    return doc, rows


def cmd_ci(args) -> tuple[dict, list]:
    s = read_labelled(args.input)
    methods = args.method or ["normal"]
    out = []
    boot_needed = [m.split("-", 1)[1] for m in methods if m.startswith("bootstrap")]
    boots = (bootstrap_auc_multi(s, args.resamples, boot_needed, RngStream(args.seed))
             if boot_needed else {})
    for m in methods:
        if m == "normal":
            ci = normal_auc_interval(s, args.level)
            est = auc_star_empirical(s)
        else:
            which = m.split("-", 1)[1]
            if which == "kernel":
                est = float(kernel_auc_rows(s.defaulters[None, :], s.survivors[None, :])[0][0])
            else:
                est = auc_star_empirical(s)
            raw = basic_bootstrap_interval(est, boots[which].estimates, args.level,
                                           f"bootstrap_{which}")
            ci = raw.cap()
            ci.meta["unclipped"] = [raw.lower, raw.upper]
            ci.meta["fallbacks"] = boots[which].fallbacks
        out.append({"method": ci.method, "estimate": est, "lower": ci.lower, "upper": ci.upper,
                    "level": ci.level, "covers_half": ci.covers(0.5), "capped": ci.capped,
                    **{k: v for k, v in ci.meta.items() if k != "estimate"}})
    rows = [["method", "estimate", "lower", "upper", "level", "covers_half", "capped"]]
    rows += [[c["method"], c["estimate"], c["lower"], c["upper"], c["level"], c["covers_half"],
              c["capped"]] for c in out]
    doc = {"schema": SCHEMA, "command": "ci", "n_d": s.n_d, "n_n": s.n_n, "seed": args.seed,
           "intervals": out}
    return doc, rows


def _pd_rows(model, scores: np.ndarray) -> list[list]:
    grid = np.unique(scores)
    return [["score", "pd"]] + [[float(a), float(b)] for a, b in zip(grid, model.pd(grid))]


def cmd_fit(args) -> tuple[dict, list]:
    s = read_labelled(args.input)
    model, kind = fit_model(s, args.model, args.discrete)
    doc = model_document(model, s, kind, args.model)
    if args.model_out:
        Path(args.model_out).write_text(json.dumps(to_builtin(doc), indent=2) + "\n", encoding="utf-8")
    score_grid = read_column(args.scores, "score")["score"] if args.scores else s.labelled()[0]
    rows = _pd_rows(model, score_grid)
    return {"schema": SCHEMA, "command": "fit", "model": doc, "pd_table": rows[1:]}, rows


def cmd_calibrate(args) -> tuple[dict, list]:
    if (args.model is None) == (args.raw is None):
        raise InputError("give exactly one of --model and --raw")
    if args.model is not None:
        if args.scores is None:
            raise InputError("--model requires --scores")
        try:
            doc = json.loads(Path(args.model).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"{args.model}: {exc}") from None
        model = model_from_document(doc)
        scores = read_column(args.scores, "score")["score"]
        raw = np.asarray(model.pd(scores), dtype=float)
    else:
        cols = read_column(args.raw, "score", ["raw_pd"])
        scores, raw = cols["score"], cols["raw_pd"]
    res = calibrate_to_target(CalibrationInput(raw, args.target_pd))
    rows = [["score", "raw_pd", "calibrated_pd"]]
    rows += [[float(a), float(b), float(c)] for a, b, c in zip(scores, raw, res.calibrated_pds)]
    print(f"solved q = {res.q!r}", file=sys.stderr)
    return {"schema": SCHEMA, "command": "calibrate", "target_pd": args.target_pd, "q": res.q,
            "rows": rows[1:]}, rows


def cmd_qmm(args) -> tuple[dict, list]:
    scores = np.sort(read_column(args.scores, "score")["score"])
    aucs = [args.target_auc] + list(args.what_if_auc or [])
    models = []
    for a in aucs:
        m = qmm_solve(scores, QmmTargets(args.target_pd, a))
        models.append({"schema": SCHEMA, "type": "logit",
                       "parameters": {"alpha": m.alpha, "beta": m.beta},
                       "targets": {"q": args.target_pd, "A": a},
                       "provenance": {"n": int(scores.size), "method": "qmm",
                                      "residuals": {"q": m.meta["residual_q"],
                                                    "A": m.meta["residual_auc"]},
                                      "tolerances": {"residual": 1e-9}}})
    grid = np.unique(scores)
    rows = [["score"] + [f"pd_auc_{a!r}" for a in aucs]]
    pds = [LogitModel(m["parameters"]["alpha"], m["parameters"]["beta"]).pd(grid) for m in models]
    rows += [[float(g)] + [float(p[i]) for p in pds] for i, g in enumerate(grid)]
    if args.model_out:
        Path(args.model_out).write_text(json.dumps(to_builtin(models[0]), indent=2) + "\n",
                                        encoding="utf-8")
    return {"schema": SCHEMA, "command": "qmm", "models": models, "pd_table": rows[1:]}, rows


def cmd_simulate(args) -> tuple[dict, list]:
    if args.study == "bootstrap-combinatorics":
        runs = args.runs if args.runs is not None else 100
        doc = combinatorics_report(range(1, args.max_n + 1), runs, args.iters, args.seed)
        rows = [["n", "max", "mean_distinct", "mean_distinct_one_tie"]]
        rows += [[r["n"], r["max"], r["mean_distinct"], r["mean_distinct_one_tie"]] for r in doc["rows"]]
        _write_files(args, "bootstrap_combinatorics", doc, rows)
        return doc, rows
    if args.scenario is None:
        raise InputError("--scenario is required for this study")
    get_scenario(args.scenario)
    coverage = args.study == "coverage"
    if coverage:
        try:
            bootstrap_indices(args.resamples, args.level)
        except ValueError as exc:
            raise InputError(f"--resamples {args.resamples} with --level {args.level}: {exc}") from None
    default_n = 100 if coverage else (1000 if args.paper_scale else 200)
    n_exp = args.experiments if args.experiments is not None else default_n
    draws = args.fisher_draws or (100_000 if args.paper_scale else 10_000)
    reports, rows = [], None
    for nd in args.nd:
        cfg = ExperimentConfig(args.scenario, nd, n_n=args.nn, n_experiments=n_exp,
                               n_boot=args.resamples, gamma=args.level, seed=args.seed,
                               fisher_draws=draws)
        rep = (coverage_study if coverage else pd_curve_study)(cfg, threads=args.threads)
        d = rep.to_dict()
        if not coverage:
            d["config"]["n_d"] = nd
        reports.append(d)
        r = rep.csv_rows()
        if coverage:
            rows = r if rows is None else rows + r[1:]
        else:
            r = [["n_d"] + r[0]] + [[nd] + row for row in r[1:]]
            rows = r if rows is None else rows + r[1:]
    doc = {"schema": SCHEMA, "study": args.study, "scenario": args.scenario, "reports": reports}
    _write_files(args, f"{args.study}_scenario{args.scenario}", doc, rows)
    return doc, rows


def _write_files(args, stem: str, doc: dict, rows: list) -> None:
    if not args.output_dir:
        return
    d = Path(args.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{stem}.json").write_text(json.dumps(to_builtin(doc), indent=2) + "\n", encoding="utf-8")
    (d / f"{stem}.csv").write_text(rows_csv(rows), encoding="utf-8")


def cmd_curves(args) -> tuple[dict, list]:
    if (args.input is None) == (args.scenario is None):
        raise InputError("give exactly one of an input CSV and --scenario")
    grid = np.linspace(0.0, 1.0, args.grid)
    if args.input is not None:
        s = read_labelled(args.input)
        d = DiscreteJoint.from_samples(s, args.p)
        discrete = True
    else:
        sc = get_scenario(args.scenario)
        p = 0.5 if args.p is None else args.p
        discrete = sc.discrete
        F_D, F_N = sc.defaulter_law.dist(), sc.survivor_law.dist()
        if discrete:
            d = DiscreteJoint.from_distributions(F_D, F_N, p)
    if discrete:
        if args.modified:
            pts = groc_points(d) if args.kind == "roc" else gcap_points(d)
            uv = interpolated_curve(pts, args.grid)
        else:
            F_D, F_N = d.defaulter_dist(), d.survivor_dist()
            fn = roc_fn(F_D, F_N) if args.kind == "roc" else cap_fn(F_D, d.unconditional_dist())
            uv = np.column_stack((grid, fn(grid)))
    else:
        F = mixture_cdf(p, F_D, F_N)
        if args.kind == "roc":
            fn = roc_star_fn(F_D, F_N) if args.modified else roc_fn(F_D, F_N)
        else:
            fn = cap_star_fn(F_D, F) if args.modified else cap_fn(F_D, F)
        uv = np.column_stack((grid, fn(grid)))
    return {"points": uv}, [[float(u), float(v)] for u, v in uv]


# --------------------------------------------------------------------------
# parser


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    stripped = text.strip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InputError(f"{path}: line {n}: expected key=value")
            k, v = line.split("=", 1)
            raw[k.strip()] = _parse_value(v.strip())
    return {k.replace("-", "_"): v for k, v in raw.items()}


def _parse_value(v: str):
    low = v.lower()
    if low in ("true", "false"):
        return low == "true"
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if "," in v:
        return [_parse_value(x.strip()) for x in v.split(",")]
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value or JSON file supplying defaults for any flag")
    common.add_argument("--format", choices=("json", "csv", "text"),
                        help="report format (default: csv for calibrate, json otherwise)")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    ap = argparse.ArgumentParser(prog="lowdefault", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("power", parents=[common], help="AUC, AUC*, AR, AR* of a labelled sample")
    p.add_argument("input")
    p.add_argument("--method", action="append", choices=("empirical", "kernel", "discrete"))
    p.add_argument("--p", type=float, help="unconditional PD for the standard AR")
    p.add_argument("--no-bias-correction", action="store_true")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("ci", parents=[common], help="confidence intervals for AUC*")
    p.add_argument("input")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--method", action="append",
                   choices=("normal", "bootstrap-kernel", "bootstrap-empirical"))
    p.add_argument("--resamples", type=int, default=999)
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("fit", parents=[common], help="fit a PD curve")
    p.add_argument("input")
    p.add_argument("--model", choices=("vdb", "logit", "robustlogit", "nls"), default="logit")
    p.add_argument("--discrete", action="store_true", help="scores are rating grades")
    p.add_argument("--scores", help="CSV with a score column for the PD table")
    p.add_argument("--model-out", help="write the model JSON document here")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate PDs to a target PD")
    p.add_argument("--model", help="model JSON written by 'fit --model-out'")
    p.add_argument("--raw", help="CSV with columns score, raw_pd")
    p.add_argument("--scores", help="CSV with a score column (with --model)")
    p.add_argument("--target-pd", type=float, required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("qmm", parents=[common], help="quasi moment matching logit curve")
    p.add_argument("scores", help="CSV with a score column")
    p.add_argument("--target-pd", type=float, required=True)
    p.add_argument("--target-auc", type=float, required=True)
    p.add_argument("--what-if-auc", type=float, nargs="*", help="additional AUC* targets")
    p.add_argument("--model-out")
    p.set_defaults(func=cmd_qmm)

    p = sub.add_parser("simulate", parents=[common], help="simulation studies")
    p.add_argument("--study", choices=("coverage", "pdcurves", "bootstrap-combinatorics"),
                   required=True)
    p.add_argument("--scenario", type=int, choices=range(1, 6))
    p.add_argument("--nd", type=int, nargs="+", default=[25])
    p.add_argument("--nn", type=int, default=250)
    p.add_argument("--experiments", type=int)
    p.add_argument("--resamples", type=int, default=999)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--fisher-draws", type=int)
    p.add_argument("--paper-scale", action="store_true")
    p.add_argument("--runs", type=int, help="runs for bootstrap-combinatorics")
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--max-n", type=int, default=11)
    p.add_argument("--output-dir", help="write <study>.json and <study>.csv here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("curves", parents=[common], help="ROC/CAP plot data as TSV")
    p.add_argument("input", nargs="?")
    p.add_argument("--scenario", type=int, choices=range(1, 6))
    p.add_argument("--kind", choices=("roc", "cap"), default="roc")
    p.add_argument("--modified", action="store_true")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--p", type=float, help="unconditional PD for CAP curves")
    p.set_defaults(func=cmd_curves)
    return ap


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = ap.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        sub = ap._subparsers._group_actions[0].choices[args.command]
        actions = {a.dest: a for a in sub._actions}
        unknown = set(cfg) - set(actions)
        if unknown:
            raise InputError(f"{args.config}: unknown keys {sorted(unknown)}")
        # append-type flags given on the command line replace the configured list
        appended = {k: v if isinstance(v, list) else [v] for k, v in cfg.items()
                    if isinstance(actions[k], argparse._AppendAction)}
        sub.set_defaults(**{k: v for k, v in cfg.items() if k not in appended})
        args = ap.parse_args(argv)
        for k, v in appended.items():
            if getattr(args, k) is None:
                setattr(args, k, v)
    if args.format is None:
        args.format = "csv" if args.command == "calibrate" else "json"
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        if args.command == "curves" and args.grid < 2:
            raise InputError("--grid must be at least 2")
        doc, rows = args.func(args)
        out = open(args.output, "w", encoding="utf-8", newline="") if args.output else sys.stdout
        try:
            if args.command == "curves":
                out.write("".join(f"{u!r}\t{v!r}\n" for u, v in rows))
            else:
                emit(doc, rows, args.format, out)
        finally:
            if out is not sys.stdout:
                out.close()
        return 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MissingClassError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
