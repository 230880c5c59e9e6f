"""Confidence intervals for AUC* and two-sample tests of equal score laws."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb
from typing import Iterable, Literal, NamedTuple

import numpy as np
from scipy import special, stats

from .distributions import ConditionalSamples, norm_cdf, norm_ppf
from .power import auc_star_empirical
from .rng import RngStream

Estimator = Literal["kernel", "empirical"]

EXACT_MW_LIMIT = 10 ** 6


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float
    method: str
    capped: bool = False
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError("lower bound exceeds upper bound")

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def cap(self, lo: float = 0.0, hi: float = 1.0) -> "ConfidenceInterval":
        """Clip to [lo, hi], flagging whether clipping changed a bound."""
        low = min(max(self.lower, lo), hi)
        up = min(max(self.upper, lo), hi)
        changed = (low != self.lower) or (up != self.upper)
        return replace(self, lower=low, upper=up, capped=self.capped or changed)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str
    exact: bool
    meta: dict = field(default_factory=dict, compare=False)

    def rejects(self, alpha: float) -> bool:
        return self.p_value < alpha


# --------------------------------------------------------------------------
# bootstrap


def bootstrap_indices(r: int, gamma: float) -> tuple[int, int]:
    """1-based order statistics (upper, lower) used by the basic interval."""
    hi = (r + 1) * (1.0 + gamma) / 2.0
    lo = (r + 1) * (1.0 - gamma) / 2.0
    k_hi, k_lo = int(round(hi)), int(round(lo))
    tol = 1e-9 * (r + 1)
    if abs(hi - k_hi) > tol or abs(lo - k_lo) > tol or not (1 <= k_lo <= k_hi <= r):
        raise ValueError("incompatible r and gamma")
    return k_hi, k_lo


def basic_bootstrap_interval(t: float, boot: Iterable[float], gamma: float,
                             method: str = "bootstrap") -> ConfidenceInterval:
    """[2t - t*_(k_hi), 2t - t*_(k_lo)] with k = (r + 1)(1 -+ gamma) / 2.

    The interval is not clipped; use :meth:`ConfidenceInterval.cap` for
    reporting on [0, 1].
    """
    b = np.sort(np.asarray(list(boot) if not isinstance(boot, np.ndarray) else boot,
                           dtype=float))
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    k_hi, k_lo = bootstrap_indices(b.size, gamma)
    return ConfidenceInterval(2.0 * t - b[k_hi - 1], 2.0 * t - b[k_lo - 1], gamma, method,
                              meta={"order_statistics": [k_hi, k_lo], "resamples": int(b.size)})


class BootstrapReplicates(NamedTuple):
    estimates: np.ndarray
    fallbacks: int


def draw_resamples(s: ConditionalSamples, r: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """Index arrays (r, n_D) and (r, n_N) of with-replacement resamples.

    Resample ``i`` is drawn from the child stream ``rng.child(i)``.
    """
    if r < 1:
        raise ValueError("r must be positive")
    idx_d = np.empty((r, s.n_d), dtype=np.intp)
    idx_n = np.empty((r, s.n_n), dtype=np.intp)
    for i in range(r):
        g = rng.child(i).generator()
        idx_d[i] = g.integers(0, s.n_d, s.n_d)
        idx_n[i] = g.integers(0, s.n_n, s.n_n)
    return idx_d, idx_n


def empirical_auc_rows(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Mid-rank Mann-Whitney AUC* for each row pair of X and Y."""
    n_d, n_n = X.shape[1], Y.shape[1]
    ranks = stats.rankdata(np.hstack((X, Y)), axis=1)
    u = ranks[:, n_d:].sum(axis=1) - n_n * (n_n + 1) / 2.0
    return u / (n_d * n_n)


def _row_bandwidth(Z: np.ndarray) -> np.ndarray:
    n = Z.shape[1]
    if n < 2:
        return np.zeros(Z.shape[0])
    return 1.06 * np.std(Z, axis=1, ddof=1) * n ** (-0.2)


def kernel_auc_rows(X: np.ndarray, Y: np.ndarray, bias_correct: bool = True,
                    chunk: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed AUC for each row pair; returns (estimates, fallback mask).

    Rows where a sample has zero variance cannot be bias corrected and use the
    uncorrected estimate (bandwidth 0 for a constant sample).
    """
    h_d, h_n = _row_bandwidth(X), _row_bandwidth(Y)
    v_d, v_n = np.var(X, axis=1), np.var(Y, axis=1)
    fallback = (v_d <= 0) | (v_n <= 0)
    if bias_correct:
        ok = ~fallback
        b_d = np.ones_like(h_d)
        b_n = np.ones_like(h_n)
        b_d[ok] = np.sqrt(v_d[ok] / (h_d[ok] ** 2 + v_d[ok]))
        b_n[ok] = np.sqrt(v_n[ok] / (h_n[ok] ** 2 + v_n[ok]))
        Xc = (1.0 - b_d)[:, None] * X.mean(axis=1, keepdims=True) + b_d[:, None] * X
        Yc = (1.0 - b_n)[:, None] * Y.mean(axis=1, keepdims=True) + b_n[:, None] * Y
        scale = np.hypot(b_d * h_d, b_n * h_n)
    else:
        Xc, Yc, scale = X, Y, np.hypot(h_d, h_n)
        fallback = np.zeros_like(fallback)
    out = np.empty(X.shape[0])
    for lo in range(0, X.shape[0], chunk):
        sl = slice(lo, lo + chunk)
        diff = Yc[sl, None, :] - Xc[sl, :, None]
        sc = scale[sl, None, None]
        pos = sc > 0
        z = np.divide(diff, np.where(pos, sc, 1.0))
        vals = np.where(pos, norm_cdf(z),
                        np.where(diff > 0, 1.0, np.where(diff == 0, 0.5, 0.0)))
        out[sl] = vals.mean(axis=(1, 2))
    return out, fallback


def bootstrap_auc_multi(s: ConditionalSamples, r: int, estimators: Iterable[Estimator],
                        rng: RngStream, bias_correct: bool = True) -> dict[str, BootstrapReplicates]:
    """Evaluate several AUC estimators on one shared set of resamples."""
    idx_d, idx_n = draw_resamples(s, r, rng)
    X, Y = s.defaulters[idx_d], s.survivors[idx_n]
    out = {}
    for est in estimators:
        if est == "empirical":
            out[est] = BootstrapReplicates(empirical_auc_rows(X, Y), 0)
        elif est == "kernel":
            vals, fb = kernel_auc_rows(X, Y, bias_correct)
            out[est] = BootstrapReplicates(vals, int(fb.sum()))
        else:
            raise ValueError(f"unknown estimator {est!r}")
    return out


def bootstrap_auc(s: ConditionalSamples, r: int, estimator: Estimator,
                  rng: RngStream, bias_correct: bool = True) -> BootstrapReplicates:
    """AUC estimates on ``r`` resamples; defaulters and survivors resampled separately."""
    return bootstrap_auc_multi(s, r, [estimator], rng, bias_correct)[estimator]


# --------------------------------------------------------------------------
# normal approximation


def _psi(s: ConditionalSamples) -> np.ndarray:
    diff = s.survivors[None, :] - s.defaulters[:, None]
    return np.where(diff > 0, 1.0, np.where(diff == 0, 0.5, 0.0))


def auc_variance(s: ConditionalSamples) -> float:
    """Unbiased-type variance estimate of the mid-rank AUC.

    [A(1-A) + (n_D-1)(P_xxy - A^2) + (n_N-1)(P_xyy - A^2)] / (n_D n_N), where
    P_xxy and P_xyy are U-statistic estimates of P[X, X' below Y] and
    P[X below Y, Y'] with ties at half weight. Clipped at zero.
    """
    n_d, n_n = s.n_d, s.n_n
    if n_d < 2 or n_n < 2:
        raise ValueError("need at least two scores in each sample")
    psi = _psi(s)
    a = psi.mean()
    col, row = psi.sum(axis=0), psi.sum(axis=1)
    sq = psi * psi
    p_xxy = np.sum(col * col - sq.sum(axis=0)) / (n_n * n_d * (n_d - 1))
    p_xyy = np.sum(row * row - sq.sum(axis=1)) / (n_d * n_n * (n_n - 1))
    var = (a * (1 - a) + (n_d - 1) * (p_xxy - a * a) + (n_n - 1) * (p_xyy - a * a)) / (n_d * n_n)
    return float(max(var, 0.0))


def normal_auc_interval(s: ConditionalSamples, gamma: float = 0.95) -> ConfidenceInterval:
    """AUC* -+ z_{(1+gamma)/2} sigma, clipped to [0, 1]."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    a = auc_star_empirical(s)
    sd = np.sqrt(auc_variance(s))
    z = float(norm_ppf((1.0 + gamma) / 2.0))
    lo, hi = a - z * sd, a + z * sd
    ci = ConfidenceInterval(max(lo, 0.0), min(hi, 1.0), gamma, "normal",
                            capped=bool(lo < 0.0 or hi > 1.0),
                            meta={"estimate": a, "sd": float(sd)})
    return ci


# --------------------------------------------------------------------------
# tests


def _two_sided_normal(z: float) -> float:
    return float(min(1.0, 2.0 * special.ndtr(-abs(z))))


def mann_whitney_test(s: ConditionalSamples, mode: Literal["exact", "approx", "auto"] = "auto",
                      variance: Literal["null", "unbiased"] = "null") -> TestResult:
    """Two-sided Mann-Whitney test with mid-ranks.

    The statistic is U = n_D n_N AUC*, the number of (defaulter, survivor)
    pairs with the survivor scoring higher, ties counting one half.

    Parameters
    ----------
    mode : {'exact', 'approx', 'auto'}
        'exact' uses the permutation distribution of the mid-rank sum;
        'approx' the normal approximation; 'auto' is exact when
        C(n_D + n_N, n_D) <= 10**6.
    variance : {'null', 'unbiased'}
        Variance for the approximation: tie-corrected permutation variance
        (classical test) or the unbiased AUC variance estimate, which makes
        the decision dual to :func:`normal_auc_interval`.
    """
    n_d, n_n = s.n_d, s.n_n
    auc = auc_star_empirical(s)
    u = auc * n_d * n_n
    if mode == "auto":
        mode = "exact" if comb(n_d + n_n, n_d) <= EXACT_MW_LIMIT else "approx"
    if mode == "exact":
        return TestResult(u, _exact_mw_pvalue(s), "mann_whitney", True, {"auc_star": auc})
    if mode != "approx":
        raise ValueError(f"unknown mode {mode!r}")
    if variance == "unbiased":
        sd = np.sqrt(auc_variance(s))
        if sd > 0:
            p = _two_sided_normal((auc - 0.5) / sd)
        else:
            p = 1.0 if auc == 0.5 else 0.0
        return TestResult(u, p, "mann_whitney", False, {"auc_star": auc, "variance": "unbiased"})
    if variance != "null":
        raise ValueError(f"unknown variance {variance!r}")
    n = n_d + n_n
    _, counts = np.unique(np.concatenate((s.defaulters, s.survivors)), return_counts=True)
    tie = float(np.sum(counts.astype(float) ** 3 - counts)) / (n * (n - 1)) if n > 1 else 0.0
    var = n_d * n_n / 12.0 * ((n + 1) - tie)
    if var <= 0:
        p = 1.0
    else:
        p = _two_sided_normal((u - n_d * n_n / 2.0) / np.sqrt(var))
    return TestResult(u, p, "mann_whitney", False, {"auc_star": auc, "variance": "null"})


def _exact_mw_pvalue(s: ConditionalSamples) -> float:
    """Permutation p-value of the mid-rank sum by subset-sum counting."""
    n_d, n_n = s.n_d, s.n_n
    n = n_d + n_n
    pooled = np.concatenate((s.defaulters, s.survivors))
    r2 = np.rint(2.0 * stats.rankdata(pooled)).astype(np.int64)
    k = min(n_d, n_n)
    chosen = r2[:n_d] if k == n_d else r2[n_d:]
    t_obs = int(chosen.sum())
    centre = k * (n + 1)  # doubled expected rank sum
    top = int(np.sort(r2)[::-1][:k].sum())
    # dp[j, t] = number of j-subsets with doubled rank sum t
    dp = np.zeros((k + 1, top + 1))
    dp[0, 0] = 1.0
    for v in r2:
        v = int(v)
        dp[1:, v:] += dp[:-1, : top + 1 - v].copy()
    dist = dp[k]
    t = np.arange(top + 1)
    extreme = np.abs(t - centre) >= abs(t_obs - centre)
    return float(min(1.0, dist[extreme].sum() / dist.sum()))


def ks_two_sample_test(s: ConditionalSamples) -> TestResult:
    """Kolmogorov-Smirnov sup distance with the asymptotic Kolmogorov p-value."""
    x, y = np.sort(s.defaulters), np.sort(s.survivors)
    grid = np.concatenate((x, y))
    fx = np.searchsorted(x, grid, side="right") / x.size
    fy = np.searchsorted(y, grid, side="right") / y.size
    d = float(np.max(np.abs(fx - fy)))
    m, n = x.size, y.size
    p = float(np.clip(special.kolmogorov(np.sqrt(m * n / (m + n)) * d), 0.0, 1.0))
    return TestResult(d, p, "ks", False)


def contingency_table(s: ConditionalSamples) -> np.ndarray:
    """2 x k counts (defaulters, survivors) over the observed score values."""
    z = np.union1d(s.defaulters, s.survivors)
    top = np.bincount(np.searchsorted(z, s.defaulters), minlength=z.size)
    bottom = np.bincount(np.searchsorted(z, s.survivors), minlength=z.size)
    return np.vstack((top, bottom))


def _table_logprob(first_row: np.ndarray, cols: np.ndarray) -> np.ndarray:
    a = np.asarray(first_row, dtype=float)
    c = cols.astype(float)
    return np.sum(special.gammaln(c + 1) - special.gammaln(a + 1) - special.gammaln(c - a + 1), axis=-1)


def fisher_exact_mc(table, draws: int, rng: RngStream) -> TestResult:
    """Monte-Carlo Fisher test for a 2 x k table with fixed margins.

    Tables are sampled from the multivariate hypergeometric null; the
    p-value is (m + 1) / (draws + 1), m the number of sampled tables at most
    as probable as the observed one (relative tolerance 1e-7).
    """
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != 2:
        raise ValueError("table must have two rows")
    if np.any(t < 0) or np.any(t != np.round(t)):
        raise ValueError("counts must be nonnegative integers")
    t = t.astype(np.int64)
    cols = t.sum(axis=0)
    rows = t.sum(axis=1)
    if np.any(cols == 0) or np.any(rows == 0):
        raise ValueError("zero margin")
    if draws < 1:
        raise ValueError("draws must be positive")
    g = rng.generator()
    sim = g.multivariate_hypergeometric(cols, int(rows[0]), size=int(draws))
    lp_obs = _table_logprob(t[0], cols)
    lp = _table_logprob(sim, cols)
    m = int(np.sum(lp <= lp_obs + np.log1p(1e-7)))
    log_norm = special.gammaln(t.sum() + 1) - special.gammaln(rows[0] + 1) - special.gammaln(rows[1] + 1)
    return TestResult(float(np.exp(lp_obs - log_norm)), (m + 1) / (draws + 1), "fisher_mc", False,
                      {"draws": int(draws), "extreme": m})
