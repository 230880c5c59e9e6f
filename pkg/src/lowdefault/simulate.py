"""Simulation studies: bootstrap combinatorics, CI coverage, PD-curve errors.

Every experiment draws from ``RngStream(seed).child(experiment, ...)`` so
reports depend only on the configuration, not on the number of workers.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from math import comb
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import stats

from .calibrate import CalibrationInput, calibrate_to_target
from .distributions import (
    ConditionalSamples,
    DiscreteJoint,
    DistFn,
    binomial_grade_dist,
    empirical_cdf,
    kernel_dist,
    kernel_estimate,
    mixture_cdf,
    normal_dist,
)
from .inference import (
    basic_bootstrap_interval,
    bootstrap_auc_multi,
    contingency_table,
    fisher_exact_mc,
    kernel_auc_rows,
    ks_two_sample_test,
    mann_whitney_test,
    normal_auc_interval,
)
from .pdfit import (
    QmmTargets,
    logit_fit,
    qmm_solve,
    robust_logit_fit,
    vdb_fit_continuous,
    vdb_fit_discrete,
)
from .power import auc_normal, auc_star_discrete, auc_star_empirical
from .rng import RngStream

SCHEMA = 1
SE_LEVELS = (5, 25, 50, 75, 95)
PD_METHODS = ("vdb", "robust_logit", "logit", "qmm")
CI_METHODS = ("normal", "bootstrap_kernel", "bootstrap_empirical")


# --------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class LawSpec:
    """A score law: ``normal`` (mu, sigma) or ``binomial`` (trials, prob, offset)."""

    kind: Literal["normal", "binomial"]
    params: tuple

    def dist(self) -> DistFn:
        if self.kind == "normal":
            return normal_dist(*self.params)
        return binomial_grade_dist(*self.params)

    def sample(self, g: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "normal":
            mu, sigma = self.params
            return g.normal(mu, sigma, n)
        trials, prob, offset = self.params
        return (g.binomial(trials, prob, n) + offset).astype(float)


@dataclass(frozen=True)
class Scenario:
    id: int
    defaulter_law: LawSpec
    survivor_law: LawSpec
    discrete: bool

    def true_auc(self) -> float:
        """AUC* of the score laws (equal to AUC in the continuous cases)."""
        if self.discrete:
            return auc_star_discrete(DiscreteJoint.from_distributions(
                self.defaulter_law.dist(), self.survivor_law.dist(), 0.5))
        (mu_d, s_d), (mu_n, s_n) = self.defaulter_law.params, self.survivor_law.params
        return auc_normal(mu_d, s_d, mu_n, s_n)


# Rating scales with k grades are labelled 1..k, i.e. Binomial(k - 1, .) + 1.
SCENARIOS: dict[int, Scenario] = {
    1: Scenario(1, LawSpec("binomial", (16, 0.4, 1)), LawSpec("binomial", (16, 0.5, 1)), True),
    2: Scenario(2, LawSpec("binomial", (6, 0.3, 1)), LawSpec("binomial", (6, 0.5, 1)), True),
    3: Scenario(3, LawSpec("normal", (6.8, 1.96)), LawSpec("normal", (8.5, 2.0)), False),
    4: Scenario(4, LawSpec("normal", (2.1, 1.12)), LawSpec("normal", (3.5, 1.22)), False),
    5: Scenario(5, LawSpec("normal", (0.0, 1.25)), LawSpec("normal", (1.0, 1.0)), False),
}


def get_scenario(scenario: int | Scenario) -> Scenario:
    if isinstance(scenario, Scenario):
        return scenario
    try:
        return SCENARIOS[int(scenario)]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; choose 1..5") from None


def true_conditional_pd(scenario: int | Scenario, p: float, s):
    """P[D | S = s] = p f_D(s) / (p f_D(s) + (1 - p) f_N(s)) under the scenario laws.

    Masses replace densities for rating scenarios.
    """
    sc = get_scenario(scenario)
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    F_D, F_N = sc.defaulter_law.dist(), sc.survivor_law.dist()
    s = np.asarray(s, dtype=float)
    if sc.discrete:
        f_d, f_n = F_D.pmf(s), F_N.pmf(s)
    else:
        f_d, f_n = F_D.density(s), F_N.density(s)
    den = p * f_d + (1.0 - p) * f_n
    if np.any(den <= 0):
        raise ValueError("zero unconditional density at score")
    return p * f_d / den


# --------------------------------------------------------------------------
# bootstrap combinatorics


def max_bootstrap_samples(n: int) -> int:
    """Number of distinct unordered resamples of n distinct values: C(2n-1, n)."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return comb(2 * int(n) - 1, int(n))


def distinct_bootstrap_experiment(n: int, distinct_elements: int, runs: int, iters: int,
                                  rng: RngStream | int = 0) -> float:
    """Mean number of distinct resamples among ``iters`` draws, over ``runs`` runs.

    The base sample has ``n`` elements of which ``distinct_elements`` (n or
    n - 1) are different; with n - 1 one value appears twice.
    """
    if distinct_elements not in (n, n - 1) or distinct_elements < 1:
        raise ValueError("distinct_elements must be n or n - 1 (and positive)")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    base = np.arange(n)
    if distinct_elements == n - 1:
        base[-1] = base[0]
    counts = np.empty(runs)
    for r in range(runs):
        g = stream.child(r).generator()
        draws = np.sort(base[g.integers(0, n, size=(iters, n))], axis=1)
        counts[r] = np.unique(draws, axis=0).shape[0]
    return float(counts.mean())


# --------------------------------------------------------------------------
# configuration and pool


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: int
    n_d: int
    n_n: int = 250
    n_experiments: int = 100
    n_boot: int = 999
    gamma: float = 0.95
    seed: int = 0
    calib_size: int = 300
    true_uncond_pd: float = 0.025
    fisher_draws: int = 10_000

    def __post_init__(self):
        get_scenario(self.scenario)
        if self.n_d < 1 or self.n_n < 1 or self.n_experiments < 1 or self.n_boot < 1:
            raise ValueError("sizes and counts must be positive")
        if not 0.0 < self.gamma < 1.0 or not 0.0 < self.true_uncond_pd < 1.0:
            raise ValueError("gamma and true_uncond_pd must lie in (0, 1)")


def desk_config(scenario: int, n_d: int, study: str = "coverage", **kw) -> ExperimentConfig:
    """Desk-scale defaults: 100 coverage experiments, 200 PD-curve iterations."""
    n = 100 if study == "coverage" else 200
    return ExperimentConfig(scenario, n_d, **{"n_experiments": n, **kw})


def full_scale_config(scenario: int, n_d: int, study: str = "coverage", **kw) -> ExperimentConfig:
    """Original scale: 100 coverage experiments, 1000 PD-curve iterations, 10^5 Fisher draws."""
    n = 100 if study == "coverage" else 1000
    return ExperimentConfig(scenario, n_d, **{"n_experiments": n, "fisher_draws": 100_000, **kw})


def _run_pool(fn: Callable, cfg: ExperimentConfig, threads: int | None) -> list:
    idx = range(cfg.n_experiments)
    workers = threads if threads is not None else (os.cpu_count() or 1)
    if workers <= 1 or cfg.n_experiments == 1:
        return [fn(cfg, i) for i in idx]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, [cfg] * cfg.n_experiments, idx,
                           chunksize=max(1, cfg.n_experiments // (4 * workers))))


def _draw(sc: Scenario, g: np.random.Generator, n_d: int, n_n: int) -> ConditionalSamples:
    return ConditionalSamples(sc.defaulter_law.sample(g, n_d), sc.survivor_law.sample(g, n_n))


# --------------------------------------------------------------------------
# coverage study


@dataclass
class CoverageReport:
    config: ExperimentConfig
    true_auc: float
    completed: int
    hits_true: dict
    hits_half: dict
    mw_nonrejections: int
    shape_test: str
    shape_nonrejections: int
    duality_agreements: int
    bootstrap_fallbacks: int
    mean_auc_kernel: float
    mean_auc_empirical: float
    errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "study": "coverage",
            "config": asdict(self.config),
            "true_auc": self.true_auc,
            "completed": self.completed,
            "hits_true_auc": dict(self.hits_true),
            "hits_half": dict(self.hits_half),
            "type_ii": {"mann_whitney": self.mw_nonrejections, self.shape_test: self.shape_nonrejections},
            "duality_agreements": self.duality_agreements,
            "bootstrap_fallbacks": self.bootstrap_fallbacks,
            "mean_auc": {"kernel": self.mean_auc_kernel, "empirical": self.mean_auc_empirical},
            "errors": list(self.errors),
        }

    def csv_rows(self) -> list[list]:
        head = (["n_d"] + [f"true_{m}" for m in CI_METHODS] + [f"half_{m}" for m in CI_METHODS]
                + ["type_ii_mw", f"type_ii_{self.shape_test}", "completed"])
        row = ([self.config.n_d] + [self.hits_true[m] for m in CI_METHODS]
               + [self.hits_half[m] for m in CI_METHODS]
               + [self.mw_nonrejections, self.shape_nonrejections, self.completed])
        return [head, row]


def _coverage_experiment(cfg: ExperimentConfig, i: int) -> dict:
    sc = get_scenario(cfg.scenario)
    stream = RngStream(cfg.seed).child(i)
    true_auc = sc.true_auc()
    try:
        s = _draw(sc, stream.child(0).generator(), cfg.n_d, cfg.n_n)
        k_est, k_fb = kernel_auc_rows(s.defaulters[None, :], s.survivors[None, :])
        t_kernel, t_emp = float(k_est[0]), auc_star_empirical(s)
        boots = bootstrap_auc_multi(s, cfg.n_boot, ("kernel", "empirical"), stream.child(1))
        cis = {
            "normal": normal_auc_interval(s, cfg.gamma),
            "bootstrap_kernel": basic_bootstrap_interval(t_kernel, boots["kernel"].estimates,
                                                         cfg.gamma, "bootstrap_kernel"),
            "bootstrap_empirical": basic_bootstrap_interval(t_emp, boots["empirical"].estimates,
                                                            cfg.gamma, "bootstrap_empirical"),
        }
        alpha = 1.0 - cfg.gamma
        mw = mann_whitney_test(s, "auto")
        wald = mann_whitney_test(s, "approx", variance="unbiased")
        if sc.discrete:
            shape = fisher_exact_mc(contingency_table(s), cfg.fisher_draws, stream.child(2))
        else:
            shape = ks_two_sample_test(s)
        return {
            "ok": True,
            "true": {m: ci.covers(true_auc) for m, ci in cis.items()},
            "half": {m: ci.covers(0.5) for m, ci in cis.items()},
            "mw_reject": mw.rejects(alpha),
            "shape_reject": shape.rejects(alpha),
            "duality": (not cis["normal"].covers(0.5)) == wald.rejects(alpha),
            "fallbacks": boots["kernel"].fallbacks + int(k_fb[0]),
            "auc_kernel": t_kernel,
            "auc_empirical": t_emp,
        }
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return {"ok": False, "error": f"experiment {i}: {exc}"}


def coverage_study(cfg: ExperimentConfig, threads: int | None = 1) -> CoverageReport:
    """Coverage of the true AUC and of 0.5 by normal and basic-bootstrap intervals.

    Also tallies non-rejections (type II errors) of the Mann-Whitney test
    and of the KS test (continuous) or Monte-Carlo Fisher test (ratings).
    """
    sc = get_scenario(cfg.scenario)
    results = _run_pool(_coverage_experiment, cfg, threads)
    ok = [r for r in results if r["ok"]]
    hits_true = {m: sum(r["true"][m] for r in ok) for m in CI_METHODS}
    hits_half = {m: sum(r["half"][m] for r in ok) for m in CI_METHODS}
    return CoverageReport(
        config=cfg,
        true_auc=sc.true_auc(),
        completed=len(ok),
        hits_true=hits_true,
        hits_half=hits_half,
        mw_nonrejections=sum(not r["mw_reject"] for r in ok),
        shape_test="fisher_mc" if sc.discrete else "ks",
        shape_nonrejections=sum(not r["shape_reject"] for r in ok),
        duality_agreements=sum(r["duality"] for r in ok),
        bootstrap_fallbacks=sum(r["fallbacks"] for r in ok),
        mean_auc_kernel=float(np.mean([r["auc_kernel"] for r in ok])) if ok else float("nan"),
        mean_auc_empirical=float(np.mean([r["auc_empirical"] for r in ok])) if ok else float("nan"),
        errors=[r["error"] for r in results if not r["ok"]],
    )


# --------------------------------------------------------------------------
# PD-curve study


@dataclass
class SeReport:
    config: ExperimentConfig
    completed: int
    quantiles: dict
    least_se_counts: dict
    spearman: dict
    true_auc: float
    errors: list = field(default_factory=list)
    se: dict = field(default_factory=dict, repr=False)

    def least_se_frequency(self) -> dict:
        n = max(self.completed, 1)
        return {m: c / n for m, c in self.least_se_counts.items()}

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "study": "pdcurves",
            "config": asdict(self.config),
            "true_auc": self.true_auc,
            "completed": self.completed,
            "se_quantiles": {m: {str(k): v for k, v in q.items()} for m, q in self.quantiles.items()},
            "least_se_counts": dict(self.least_se_counts),
            "least_se_frequency": self.least_se_frequency(),
            "spearman_auc_error_vs_se": dict(self.spearman),
            "errors": list(self.errors),
        }

    def csv_rows(self) -> list[list]:
        rows = [["level"] + list(PD_METHODS)]
        for lvl in SE_LEVELS:
            rows.append([lvl] + [self.quantiles[m][lvl] for m in PD_METHODS])
        return rows


def _pd_experiment(cfg: ExperimentConfig, i: int) -> dict:
    sc = get_scenario(cfg.scenario)
    stream = RngStream(cfg.seed).child(i)
    g = stream.child(0).generator()
    try:
        s = _draw(sc, g, cfg.n_d, cfg.n_n)
        p = s.default_rate
        auc_hat = auc_star_empirical(s)
        scores, y = s.labelled()
        # calibration sample: defaults at the true unconditional PD
        gc = stream.child(1).generator()
        is_def = gc.random(cfg.calib_size) < cfg.true_uncond_pd
        calib = np.empty(cfg.calib_size)
        calib[is_def] = sc.defaulter_law.sample(gc, int(is_def.sum()))
        calib[~is_def] = sc.survivor_law.sample(gc, int((~is_def).sum()))

        if sc.discrete:
            vdb = vdb_fit_discrete(DiscreteJoint.from_samples(s))
            F_N_hat = empirical_cdf(s.survivors)
        else:
            F_D_hat = kernel_dist(kernel_estimate(s.defaulters))
            F_N_hat = kernel_dist(kernel_estimate(s.survivors))
            vdb = vdb_fit_continuous(scores, F_D_hat, mixture_cdf(p, F_D_hat, F_N_hat), p)
        raw = {
            "vdb": vdb.pd(calib),
            "robust_logit": robust_logit_fit(s, F_N_hat).pd(calib),
            "logit": logit_fit(scores, y).pd(calib),
        }
        est = {m: calibrate_to_target(CalibrationInput(r, cfg.true_uncond_pd)).calibrated_pds
               for m, r in raw.items()}
        est["qmm"] = qmm_solve(calib, QmmTargets(cfg.true_uncond_pd, auc_hat)).pd(calib)
        truth = true_conditional_pd(sc, cfg.true_uncond_pd, calib)
        se = {m: float(np.sqrt(np.mean((truth - est[m]) ** 2))) for m in PD_METHODS}
        return {"ok": True, "se": se, "auc_hat": auc_hat}
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return {"ok": False, "error": f"iteration {i}: {exc}"}


def pd_curve_study(cfg: ExperimentConfig, threads: int | None = 1) -> SeReport:
    """Standard errors of calibrated PD curves against the true conditional PDs."""
    sc = get_scenario(cfg.scenario)
    results = _run_pool(_pd_experiment, cfg, threads)
    ok = [r for r in results if r["ok"]]
    true_auc = sc.true_auc()
    se = {m: np.array([r["se"][m] for r in ok]) for m in PD_METHODS}
    quant = {m: {lvl: (float(np.percentile(se[m], lvl)) if ok else float("nan"))
                 for lvl in SE_LEVELS} for m in PD_METHODS}
    least = {m: 0 for m in PD_METHODS}
    for r in ok:
        least[min(PD_METHODS, key=lambda m: r["se"][m])] += 1
    auc_err = np.abs(np.array([r["auc_hat"] for r in ok]) - true_auc)
    spear = {}
    for m in PD_METHODS:
        if len(ok) > 2 and np.ptp(auc_err) > 0 and np.ptp(se[m]) > 0:
            spear[m] = float(stats.spearmanr(auc_err, se[m]).statistic)
        else:
            spear[m] = float("nan")
    return SeReport(cfg, len(ok), quant, least, spear, true_auc,
                    [r["error"] for r in results if not r["ok"]],
                    {m: v.tolist() for m, v in se.items()})


# --------------------------------------------------------------------------
# report serialisation


def report_json(report) -> str:
    """JSON with stable key order; floats are written with repr (round-trip exact)."""
    d = report if isinstance(report, dict) else report.to_dict()
    return json.dumps(to_builtin(d), indent=2, allow_nan=True)


def to_builtin(obj):
    """Recursively convert numpy scalars and arrays to Python types."""
    if isinstance(obj, dict):
        return {str(k): to_builtin(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_builtin(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_builtin(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def rows_csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def combinatorics_report(ns: Sequence[int] = tuple(range(1, 12)), runs: int = 100,
                         iters: int = 1000, seed: int = 0) -> dict:
    """Maximum and simulated mean numbers of distinct resamples per sample size."""
    stream = RngStream(seed)
    rows = []
    for n in ns:
        mu = distinct_bootstrap_experiment(n, n, runs, iters, stream.child(n, 0))
        nu = (distinct_bootstrap_experiment(n, n - 1, runs, iters, stream.child(n, 1))
              if n >= 2 else None)
        rows.append({"n": n, "max": max_bootstrap_samples(n), "mean_distinct": mu,
                     "mean_distinct_one_tie": nu})
    return {"schema": SCHEMA, "study": "bootstrap-combinatorics",
            "config": {"runs": runs, "iters": iters, "seed": seed}, "rows": rows}


def with_seed(cfg: ExperimentConfig, seed: int) -> ExperimentConfig:
    return replace(cfg, seed=seed)
