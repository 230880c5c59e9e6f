"""Parametric PD curves.

Conditional PD curves s -> P[D | S = s] are estimated by

* the van der Burgt CAP family C_kappa, with PD p * C_kappa'(F(s));
* the normal ROC family R_{a,b}(u) = Phi(a + b Phi^{-1}(u));
* logit, PD = 1 / (1 + exp(alpha + beta s)), by maximum likelihood or
  non-linear least squares;
* robust logit, the logit form in the transformed score Phi^{-1}(F_N(s));
* quasi moment matching, which fixes (alpha, beta) from a target
  unconditional PD and a target AUC*.

All PD curves are decreasing in the score for positive slope parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .distributions import (
    ConditionalSamples,
    DiscreteJoint,
    DistFn,
    norm_cdf,
    norm_pdf,
    norm_ppf,
)

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
KAPPA_EPS = 1e-8
KAPPA_CEILING = 700.0


def _logistic_pd(eta):
    """1 / (1 + exp(eta)) without overflow."""
    eta = np.asarray(eta, dtype=float)
    return np.exp(-np.logaddexp(0.0, eta))


# --------------------------------------------------------------------------
# van der Burgt family


def vdb_cap(kappa: float, u):
    """C_kappa(u) = (1 - exp(-kappa u)) / (1 - exp(-kappa))."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    u = np.asarray(u, dtype=float)
    return np.expm1(-kappa * u) / np.expm1(-kappa)


def vdb_cap_deriv(kappa: float, u):
    """C_kappa'(u) = kappa exp(-kappa u) / (1 - exp(-kappa))."""
    if kappa == 0:
        raise ValueError("kappa must be nonzero")
    u = np.asarray(u, dtype=float)
    return -kappa * np.exp(-kappa * u) / np.expm1(-kappa)


def _vdb_area_term(kappa: float) -> float:
    """1 / (1 - exp(-kappa)) - 1 / kappa - 1/2, stable near 0."""
    if kappa < 1e-3:
        k2 = kappa * kappa
        return kappa / 12.0 - kappa * k2 / 720.0 + kappa * k2 * k2 / 30240.0
    return -1.0 / np.expm1(-kappa) - 1.0 / kappa - 0.5


def vdb_ar(kappa: float, p: float) -> float:
    """Accuracy ratio of C_kappa: 2 / (1 - p) * (1/(1 - e^-kappa) - 1/kappa - 1/2)."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    return 2.0 / (1.0 - p) * _vdb_area_term(float(kappa))


def vdb_kappa_from_ar(ar: float, p: float) -> float:
    """Invert :func:`vdb_ar`; ``ar`` must lie in (0, 1 / (1 - p))."""
    if not 0.0 <= p < 1.0:
        raise ValueError("p must lie in [0, 1)")
    sup = 1.0 / (1.0 - p)
    if not 0.0 < ar < sup:
        raise ValueError(f"accuracy ratio {ar} outside the attainable range (0, {sup})")
    g = lambda k: vdb_ar(k, p) - ar  # noqa: E731
    lo, hi = 1e-12, 1.0
    while g(hi) < 0:
        hi *= 2.0
        if hi > 1e16:
            raise ValueError("accuracy ratio too close to its supremum")
    return float(optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))


def vdb_kappa_max(p: float | None) -> float:
    """Largest kappa with kappa / (1 - e^-kappa) <= 1/p, capped at 700."""
    if p is None or p <= 0:
        return KAPPA_CEILING
    if p >= 1:
        return KAPPA_EPS
    target = 1.0 / p
    h = lambda k: k / -np.expm1(-k) - target  # noqa: E731
    if h(KAPPA_CEILING) <= 0:
        return KAPPA_CEILING
    return float(optimize.brentq(h, KAPPA_EPS, KAPPA_CEILING, xtol=1e-13))


@dataclass(frozen=True)
class VanDerBurgtModel:
    """CAP model C_kappa with estimation-sample PD ``p`` and score law ``F``."""

    kappa: float
    p: float
    F: DistFn
    discrete: bool = False
    boundary_hit: bool = False
    objective: float = float("nan")
    method: str = "least_squares"

    def pd(self, s):
        return vdb_pd(self, s, self.discrete)

    def to_dict(self) -> dict:
        return {"type": "vdb", "parameters": {"kappa": self.kappa}, "p": self.p,
                "boundary_hit": self.boundary_hit, "objective": self.objective,
                "discrete": self.discrete, "method": self.method}


def _golden_min(f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-10,
                grid: int = 64) -> float:
    """Minimise f on [lo, hi]: log-grid scan, then golden-section refinement."""
    ks = np.unique(np.concatenate((np.geomspace(lo, hi, grid), [lo, hi])))
    vals = np.array([f(k) for k in ks])
    i = int(np.argmin(vals))
    a = ks[max(i - 1, 0)]
    b = ks[min(i + 1, ks.size - 1)]
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol * max(1.0, abs(a)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    cands = [(vals[i], ks[i]), (fc, c), (fd, d)]
    return float(min(cands)[1])


def _fit_kappa(fd: np.ndarray, fu: np.ndarray, p: float | None, weights=None):
    kmax = vdb_kappa_max(p)
    w = np.ones_like(fd) if weights is None else np.asarray(weights, dtype=float)

    def obj(k):
        return float(np.sum(w * (fd - vdb_cap(k, fu)) ** 2) / np.sum(w))

    if kmax <= KAPPA_EPS:
        raise ValueError("no admissible kappa for p = 1")
    k = _golden_min(obj, KAPPA_EPS, kmax)
    if not np.isfinite(obj(k)):
        raise RuntimeError(f"kappa search failed: objective {obj(k)} at kappa={k}")
    boundary = k <= KAPPA_EPS * (1 + 1e-3) + 1e-9 or k >= kmax * (1 - 1e-7)
    return k, obj(k), boundary


def vdb_fit_continuous(sample: Sequence[float], F_D_hat: DistFn, F_hat: DistFn,
                       p: float | None = None) -> VanDerBurgtModel:
    """Least-squares kappa: mean over ``sample`` of (F_D(s) - C_kappa(F(s)))^2.

    ``p`` is the estimation-sample PD; it bounds kappa through
    kappa / (1 - e^-kappa) <= 1/p and is stored in the model.
    """
    s = np.asarray(sample, dtype=float).ravel()
    if s.size == 0:
        raise ValueError("empty sample")
    fd, fu = np.asarray(F_D_hat.cdf(s)), np.asarray(F_hat.cdf(s))
    k, obj, boundary = _fit_kappa(fd, fu, p)
    return VanDerBurgtModel(k, float(p) if p is not None else float("nan"), F_hat,
                            False, boundary, obj)


def vdb_fit_discrete(d: DiscreteJoint) -> VanDerBurgtModel:
    """Least-squares kappa over grades: sum_j (P[R_D <= j] - C_kappa(P[R <= j]))^2."""
    if d.size < 2:
        raise ValueError("need at least two grades")
    fd = np.cumsum(d.pi)
    fu = np.cumsum(d.p * d.pi + (1.0 - d.p) * d.omega)
    fd[-1] = fu[-1] = 1.0
    k, obj, boundary = _fit_kappa(fd, fu, d.p)
    return VanDerBurgtModel(k, d.p, d.unconditional_dist(), True, boundary, obj * d.size)


def vdb_fit_from_ar(ar: float, p: float, F: DistFn, discrete: bool = False) -> VanDerBurgtModel:
    """kappa inferred from an accuracy ratio instead of least squares."""
    return VanDerBurgtModel(vdb_kappa_from_ar(ar, p), p, F, discrete, method="ar_inversion")


def vdb_pd(m: VanDerBurgtModel, s, discrete: bool = False):
    """p * C_kappa'(F(s)); discrete uses (F(s) + F(s - 0)) / 2."""
    u = np.asarray(m.F.cdf(s), dtype=float)
    if discrete:
        u = 0.5 * (u + np.asarray(m.F.cdf_left(s), dtype=float))
    return m.p * vdb_cap_deriv(m.kappa, u)


# --------------------------------------------------------------------------
# normal ROC family


def normal_roc(a: float, b: float, u):
    """R_{a,b}(u) = Phi(a + b Phi^{-1}(u))."""
    if not b > 0:
        raise ValueError("b must be positive")
    return norm_cdf(a + b * norm_ppf(np.asarray(u, dtype=float)))


def normal_roc_deriv(a: float, b: float, u):
    """b phi(a + b Phi^{-1}(u)) / phi(Phi^{-1}(u))."""
    if not b > 0:
        raise ValueError("b must be positive")
    z = norm_ppf(np.asarray(u, dtype=float))
    # ratio of normal densities in log space for stability in the tails
    return b * np.exp(-0.5 * (a + b * z) ** 2 + 0.5 * z * z)


def normal_roc_ar(a: float, b: float) -> float:
    """2 Phi(a / sqrt(b^2 + 1)) - 1."""
    if not b > 0:
        raise ValueError("b must be positive")
    return float(2.0 * norm_cdf(a / np.sqrt(b * b + 1.0)) - 1.0)


def normal_roc_a_from_auc(auc: float) -> float:
    """Location a of R_{a,1} with the given AUC: sqrt(2) Phi^{-1}(AUC)."""
    return float(np.sqrt(2.0) * norm_ppf(auc))


@dataclass(frozen=True)
class NormalRocModel:
    a: float
    b: float
    p: float
    F_N: DistFn

    def pd(self, s):
        u = np.asarray(self.F_N.cdf(s), dtype=float)
        if np.any((u <= 0) | (u >= 1)):
            raise ValueError("transform undefined at boundary")
        r = normal_roc_deriv(self.a, self.b, u)
        return self.p * r / (self.p * r + 1.0 - self.p)

    def to_dict(self) -> dict:
        return {"type": "normal_roc", "parameters": {"a": self.a, "b": self.b}, "p": self.p}


def pd_from_roc(a: float, p: float, F_N: DistFn, s):
    """1 / (1 + (1-p)/p * exp(a Phi^{-1}(F_N(s)) + a^2 / 2))."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    u = np.asarray(F_N.cdf(s), dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError("transform undefined at boundary")
    return _logistic_pd(np.log((1.0 - p) / p) + a * norm_ppf(u) + 0.5 * a * a)


# --------------------------------------------------------------------------
# logit family


@dataclass(frozen=True)
class LogitModel:
    """PD(s) = 1 / (1 + exp(alpha + beta s))."""

    alpha: float
    beta: float
    se_alpha: float = float("nan")
    se_beta: float = float("nan")
    iterations: int = 0
    converged: bool = True
    ridge: bool = False
    method: str = "mle"
    meta: dict = field(default_factory=dict, compare=False, repr=False)

    def linear(self, s):
        return self.alpha + self.beta * np.asarray(s, dtype=float)

    def pd(self, s):
        return _logistic_pd(self.linear(s))

    def to_dict(self) -> dict:
        return {"type": "logit", "parameters": {"alpha": self.alpha, "beta": self.beta},
                "standard_errors": {"alpha": self.se_alpha, "beta": self.se_beta},
                "method": self.method, "iterations": self.iterations,
                "converged": self.converged, "ridge": self.ridge}


@dataclass(frozen=True)
class ScoreTransform:
    """s -> Phi^{-1}(G(s)) with G floored away from 0 and 1.

    Where G(s) = 0 the value ``floor`` is used, where G(s) = 1 the value
    ``ceiling``.
    """

    G: Callable[[np.ndarray], np.ndarray]
    floor: float
    ceiling: float

    def probabilities(self, s) -> np.ndarray:
        g = np.asarray(self.G(np.asarray(s, dtype=float)), dtype=float)
        g = np.where(g <= 0.0, self.floor, g)
        return np.where(g >= 1.0, self.ceiling, g)

    def __call__(self, s):
        return norm_ppf(self.probabilities(s))


def survivor_transform(F_N: DistFn, points: Sequence[float] | None = None) -> ScoreTransform:
    """Robust-logit score transform built from a survivor distribution.

    Discrete laws use the mean of the right- and left-continuous versions.
    The floor is half the smallest positive value of that function (over the
    atoms, or over ``points`` for continuous laws); the ceiling is
    1 - half of (1 - the largest value below 1).
    """
    if F_N.is_discrete:
        def G(s):
            return 0.5 * (np.asarray(F_N.cdf(s)) + np.asarray(F_N.cdf_left(s)))
        vals = G(F_N.support)
    else:
        G = F_N.cdf
        if points is None:
            raise ValueError("continuous survivor law needs evaluation points for the floor")
        vals = np.asarray(G(np.asarray(points, dtype=float)))
    vals = np.asarray(vals, dtype=float)
    pos = vals[vals > 0]
    below = vals[vals < 1]
    if pos.size == 0 or below.size == 0:
        raise ValueError("survivor distribution too degenerate for the transform")
    floor = 0.5 * float(pos.min())
    ceiling = 1.0 - 0.5 * (1.0 - float(below.max()))
    return ScoreTransform(G, floor, ceiling)


@dataclass(frozen=True)
class RobustLogitModel(LogitModel):
    """PD(s) = 1 / (1 + exp(alpha + beta Phi^{-1}(F_N(s))))."""

    transform: ScoreTransform | None = None

    def linear(self, s):
        return self.alpha + self.beta * self.transform(s)

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["type"] = "robust_logit"
        out["transform"] = {"floor": self.transform.floor, "ceiling": self.transform.ceiling}
        return out


def _check_labels(scores, defaults) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(defaults, dtype=float).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and default indicators differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("default indicators must be 0 or 1")
    if y.sum() == 0 or y.sum() == y.size:
        raise ValueError("both defaulters and survivors are required")
    return s, y


def _separated(s: np.ndarray, y: np.ndarray) -> bool:
    d, n = s[y == 1], s[y == 0]
    if s.min() == s.max():
        return False
    return d.max() <= n.min() or d.min() >= n.max()


def logit_fit(scores, defaults, max_iter: int = 100, tol: float = 1e-10) -> LogitModel:
    """Maximum-likelihood logit fit by iteratively reweighted least squares.

    Parameters
    ----------
    scores, defaults : array_like
        Scores and 0/1 default indicators.

    Returns
    -------
    LogitModel
        PD(s) = 1 / (1 + exp(alpha + beta s)) with standard errors from the
        inverse Fisher information.

    Raises
    ------
    ValueError
        "coefficients diverge" when a threshold separates the classes.
    """
    s, y = _check_labels(scores, defaults)
    if _separated(s, y):
        raise ValueError("coefficients diverge: classes are separated by a score threshold")
    X = np.column_stack((np.ones_like(s), s))
    ybar = y.mean()
    theta = np.array([np.log(ybar / (1.0 - ybar)), 0.0])  # P[D] = sigmoid(X theta)

    def loglik(th):
        eta = X @ th
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)))

    ll = loglik(theta)
    ridge = False
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        mu = 1.0 / (1.0 + np.exp(-(X @ theta)))
        w = mu * (1.0 - mu)
        H = X.T @ (w[:, None] * X)
        g = X.T @ (y - mu)
        try:
            if np.linalg.cond(H) > 1e14:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            ridge = True
            step = np.linalg.solve(H + 1e-8 * np.eye(2), g)
        t = 1.0
        while True:
            cand = theta + t * step
            ll_c = loglik(cand)
            if ll_c >= ll - 1e-12 * abs(ll) or t < 1e-10:
                break
            t *= 0.5
        theta, ll = cand, ll_c
        if np.max(np.abs(t * step)) < tol:
            converged = True
            break
    mu = 1.0 / (1.0 + np.exp(-(X @ theta)))
    H = X.T @ ((mu * (1.0 - mu))[:, None] * X)
    try:
        cov = np.linalg.inv(H + (1e-8 * np.eye(2) if ridge else 0.0))
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.array([np.nan, np.nan])
    if not np.all(np.isfinite(theta)) or np.max(np.abs(theta)) > 1e8:
        raise ValueError("coefficients diverge")
    return LogitModel(float(-theta[0]), float(-theta[1]), float(se[0]), float(se[1]),
                      it, converged, ridge, "mle", {"loglik": ll})


def robust_logit_fit(s: ConditionalSamples, F_N_hat: DistFn) -> RobustLogitModel:
    """Logit fit on the transformed scores Phi^{-1}(F_N_hat(s))."""
    scores, y = s.labelled()
    tr = survivor_transform(F_N_hat, points=scores)
    base = logit_fit(tr(scores), y)
    return RobustLogitModel(base.alpha, base.beta, base.se_alpha, base.se_beta, base.iterations,
                            base.converged, base.ridge, "mle", base.meta, transform=tr)


def nls_fit(scores, defaults, transform: ScoreTransform | None = None,
            max_iter: int = 200, tol: float = 1e-12) -> LogitModel:
    """Least-squares fit of the logistic PD curve to default indicators.

    Minimises sum (1_D - 1 / (1 + exp(alpha + beta t)))^2, t the (optionally
    transformed) score, with a Levenberg-Marquardt iteration that accepts
    only objective-decreasing steps. The objective history is kept in
    ``meta['history']``.
    """
    s, y = _check_labels(scores, defaults)
    t = transform(s) if transform is not None else s
    J0 = np.column_stack((np.ones_like(t), t))
    try:
        start = logit_fit(t, y)
        theta = np.array([start.alpha, start.beta])
    except ValueError:
        ybar = y.mean()
        theta = np.array([np.log((1.0 - ybar) / ybar), 0.0])

    def resid(th):
        return y - _logistic_pd(J0 @ th)

    r = resid(theta)
    obj = float(r @ r)
    history = [obj]
    lam = 1e-3
    converged = False
    small = False
    it = 0
    for it in range(1, max_iter + 1):
        f = y - r
        # d(residual)/d(theta) = f (1 - f) * [1, t]
        J = (f * (1.0 - f))[:, None] * J0
        JtJ = J.T @ J
        g = J.T @ r
        accepted = False
        while lam < 1e12:
            try:
                step = -np.linalg.solve(JtJ + lam * np.diag(np.diag(JtJ) + 1e-12), g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            cand = theta + step
            r_c = resid(cand)
            obj_c = float(r_c @ r_c)
            if obj_c <= obj:
                theta, r = cand, r_c
                small = np.max(np.abs(step)) < tol * (1.0 + np.max(np.abs(theta)))
                obj = obj_c
                history.append(obj)
                lam = max(lam / 10.0, 1e-12)
                accepted = True
                break
            lam *= 10.0
        if not accepted or small:
            converged = True
            break
    if not np.all(np.isfinite(theta)):
        raise RuntimeError("least-squares fit failed")
    kwargs = dict(iterations=it, converged=converged, method="nls", meta={"history": history})
    if transform is not None:
        return RobustLogitModel(float(theta[0]), float(theta[1]), transform=transform, **kwargs)
    return LogitModel(float(theta[0]), float(theta[1]), **kwargs)


# --------------------------------------------------------------------------
# quasi moment matching


@dataclass(frozen=True)
class QmmTargets:
    q: float
    A: float

    def __post_init__(self):
        if not (0.0 < self.q < 1.0 and 0.0 < self.A < 1.0):
            raise ValueError("targets must lie strictly inside (0, 1)")


def auc_star_of_pd_curve(scores, pds) -> float:
    """AUC* implied by PDs on a portfolio of scores.

    Defaulter weights are proportional to pd_i, survivor weights to 1 - pd_i.
    Weights are pooled per distinct score z_k, giving
    sum_k W_k (D_k / 2 + sum_{j<k} D_j) / (sum D * sum W)
    with D_k, W_k the pooled defaulter and survivor weights.
    """
    s = np.asarray(scores, dtype=float).ravel()
    pd = np.asarray(pds, dtype=float).ravel()
    if s.shape != pd.shape:
        raise ValueError("scores and PDs differ in length")
    _, inv = np.unique(s, return_inverse=True)
    dk = np.bincount(inv, weights=pd)
    wk = np.bincount(inv, weights=1.0 - pd)
    tot_d, tot_n = dk.sum(), wk.sum()
    if not (tot_d > 0 and tot_n > 0):
        raise ValueError("degenerate mean PD")
    below = np.cumsum(dk) - dk
    return float(np.sum(wk * (0.5 * dk + below)) / (tot_d * tot_n))


def _alpha_for_mean(s: np.ndarray, beta: float, q: float) -> float:
    f = lambda a: float(np.mean(_logistic_pd(a + beta * s))) - q  # noqa: E731
    lo, hi = -1.0, 1.0
    while f(lo) < 0:
        lo = 2.0 * lo - 1.0
    while f(hi) > 0:
        hi = 2.0 * hi + 1.0
    return float(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500))


def qmm_solve(scores, targets: QmmTargets) -> LogitModel:
    """Logit curve whose portfolio mean PD is q and whose AUC* is A.

    For fixed beta the mean-PD equation is monotone in alpha (inner root);
    the AUC* equation is then solved in beta (outer root on a bracket found
    by doubling).
    """
    s = np.sort(np.asarray(scores, dtype=float).ravel())
    if s.size < 2 or s[0] == s[-1]:
        raise ValueError("scores must not all be equal")
    q, A = targets.q, targets.A

    def auc_at(beta):
        a = _alpha_for_mean(s, beta, q)
        return auc_star_of_pd_curve(s, _logistic_pd(a + beta * s)) - A

    if A == 0.5:
        beta = 0.0
    else:
        sign = 1.0 if A > 0.5 else -1.0
        step = sign / float(np.std(s))
        lo, hi = 0.0, step
        r_hi = auc_at(hi)
        while sign * r_hi < 0 and abs(hi) < 1e12:
            lo, hi = hi, 2.0 * hi
            r_hi = auc_at(hi)
        if sign * r_hi < 0 or not np.isfinite(r_hi):
            raise ValueError(f"no solution in search region: AUC* residual {r_hi:.3e} at beta={hi:.3e}")
        beta = float(optimize.brentq(auc_at, min(lo, hi), max(lo, hi), xtol=1e-15,
                                     rtol=4 * np.finfo(float).eps, maxiter=500))
    alpha = _alpha_for_mean(s, beta, q)
    pd = _logistic_pd(alpha + beta * s)
    res_q = float(np.mean(pd) - q)
    res_a = float(auc_star_of_pd_curve(s, pd) - A) if A != 0.5 else 0.0
    if abs(res_q) >= 1e-9 or abs(res_a) >= 1e-9:
        raise ValueError(f"no solution in search region: residuals q={res_q:.3e}, A={res_a:.3e}")
    return LogitModel(alpha, beta, method="qmm",
                      meta={"residual_q": res_q, "residual_auc": res_a, "q": q, "A": A})


# --------------------------------------------------------------------------
# implied survivor density


def implied_survivor_density(C: Callable, C_deriv: Callable, F_D: DistFn, p: float, s):
    """Survivor density making (F_D, f_N, p) have CAP curve C.

    F(s) = C^{-1}(F_D(s)) is found by bisection to 1e-12 and
    f_N(s) = f_D(s) (1 / C'(F(s)) - p) / (1 - p).
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if F_D.density is None:
        raise ValueError("defaulter law needs a density")
    s = np.asarray(s, dtype=float)
    target = np.asarray(F_D.cdf(s), dtype=float)
    lo = np.zeros_like(target)
    hi = np.ones_like(target)
    while np.max(hi - lo, initial=0.0) > 1e-12:
        mid = 0.5 * (lo + hi)
        up = np.asarray(C(mid)) >= target
        hi = np.where(up, mid, hi)
        lo = np.where(up, lo, mid)
    u = 0.5 * (lo + hi)
    cd = np.asarray(C_deriv(u), dtype=float)
    if np.any(cd > 1.0 / p * (1.0 + 1e-12)):
        raise ValueError("not a valid CAP for this p: derivative exceeds 1/p")
    return np.asarray(F_D.density(s)) * (1.0 / cd - p) / (1.0 - p)
