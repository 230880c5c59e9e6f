import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lowdefault.distributions import (
    ConditionalSamples,
    DiscreteJoint,
    DistFn,
    binomial_grade_dist,
    empirical_cdf,
    normal_dist,
    norm_cdf,
    norm_ppf,
)
from lowdefault.pdfit import (
    LogitModel,
    NormalRocModel,
    QmmTargets,
    auc_star_of_pd_curve,
    implied_survivor_density,
    logit_fit,
    nls_fit,
    normal_roc,
    normal_roc_a_from_auc,
    normal_roc_ar,
    normal_roc_deriv,
    pd_from_roc,
    qmm_solve,
    robust_logit_fit,
    survivor_transform,
    vdb_ar,
    vdb_cap,
    vdb_cap_deriv,
    vdb_fit_continuous,
    vdb_fit_discrete,
    vdb_fit_from_ar,
    vdb_kappa_from_ar,
    vdb_kappa_max,
    vdb_pd,
)
from lowdefault.power import auc_normal, auc_star_discrete


def uniform01():
    cdf = lambda x: np.clip(np.asarray(x, float), 0.0, 1.0)  # noqa: E731
    return DistFn(cdf, cdf, lambda u: np.asarray(u, float), lambda x: ((np.asarray(x) >= 0) & (np.asarray(x) <= 1)) * 1.0)


def vdb_law(kappa):
    """Law on [0, 1] whose distribution function is C_kappa."""
    cdf = lambda x: vdb_cap(kappa, np.clip(np.asarray(x, float), 0.0, 1.0))  # noqa: E731
    dens = lambda x: np.where((np.asarray(x) >= 0) & (np.asarray(x) <= 1), vdb_cap_deriv(kappa, np.clip(x, 0, 1)), 0.0)  # noqa: E731
    return DistFn(cdf, cdf, None, dens)


def simulate_logit(alpha, beta, n, seed):
    g = np.random.default_rng(seed)
    s = g.normal(0, 1, n)
    y = (g.random(n) < 1 / (1 + np.exp(alpha + beta * s))).astype(float)
    return s, y


# ---- van der Burgt --------------------------------------------------------

def test_vdb_examples():
    assert vdb_cap(5, 0.5) == pytest.approx(0.9241418, abs=1e-7)
    assert vdb_cap(1e-9, 0.3) == pytest.approx(0.3, abs=1e-8)
    assert vdb_ar(5, 0) == pytest.approx(0.6135673, abs=1e-7)
    assert vdb_kappa_max(25 / 275) == pytest.approx(10.99982, abs=1e-5)
    assert vdb_kappa_max(None) == 700.0
    with pytest.raises(ValueError):
        vdb_cap(0, 0.5)
    with pytest.raises(ValueError):
        vdb_kappa_from_ar(1.2, 0.0)


def test_vdb_small_kappa_series_is_continuous():
    below, above = vdb_ar(0.999e-3, 0.0), vdb_ar(1.001e-3, 0.0)
    assert abs(below - above) < 1e-6
    assert vdb_ar(1e-10, 0.0) == pytest.approx(1e-10 / 6, rel=1e-6)


@settings(max_examples=80, deadline=None)
@given(st.floats(1e-3, 50), st.floats(0, 0.5))
def test_vdb_ar_round_trip(kappa, p):
    assert vdb_kappa_from_ar(vdb_ar(kappa, p), p) == pytest.approx(kappa, rel=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 30), st.floats(0.01, 0.99))
def test_vdb_derivative_and_ar_integral(kappa, u):
    h = 1e-6
    fd = (vdb_cap(kappa, u + h) - vdb_cap(kappa, u - h)) / (2 * h)
    assert fd == pytest.approx(float(vdb_cap_deriv(kappa, u)), rel=1e-5, abs=1e-9)
    area, _ = integrate.quad(lambda t: float(vdb_cap(kappa, t)), 0, 1, epsabs=1e-13)
    assert vdb_ar(kappa, 0.2) == pytest.approx((2 * area - 1) / 0.8, abs=1e-9)


@pytest.mark.parametrize("kappa0", [0.5, 3.0, 8.0])
def test_vdb_continuous_fit_recovers_kappa(kappa0):
    grid = np.linspace(0.001, 0.999, 500)
    m = vdb_fit_continuous(grid, vdb_law(kappa0), uniform01(), p=0.05)
    assert m.kappa == pytest.approx(kappa0, abs=1e-4)
    assert not m.boundary_hit and m.objective < 1e-18


def test_vdb_powerless_and_ceiling():
    grid = np.linspace(0.01, 0.99, 99)
    m = vdb_fit_continuous(grid, uniform01(), uniform01(), p=0.1)
    assert m.boundary_hit and m.kappa < 1e-6
    m = vdb_fit_continuous(grid, vdb_law(40.0), uniform01(), p=0.1)
    assert m.boundary_hit and m.kappa == pytest.approx(vdb_kappa_max(0.1), rel=1e-6)


def test_vdb_fit_is_locally_optimal():
    g = np.random.default_rng(0)
    s = ConditionalSamples(g.normal(6.8, 1.96, 25), g.normal(8.5, 2, 250))
    FD, F = empirical_cdf(s.defaulters), empirical_cdf(np.concatenate((s.defaulters, s.survivors)))
    pooled = np.concatenate((s.defaulters, s.survivors))
    m = vdb_fit_continuous(pooled, FD, F, p=s.default_rate)
    obj = lambda k: np.mean((FD.cdf(pooled) - vdb_cap(k, F.cdf(pooled))) ** 2)  # noqa: E731
    for k in (m.kappa * 0.99, m.kappa * 1.01):
        assert obj(k) >= obj(m.kappa) - 1e-15


def test_vdb_discrete_fit_matches_grid_search():
    d = DiscreteJoint.from_distributions(binomial_grade_dist(6, 0.3, 1), binomial_grade_dist(6, 0.5, 1), 0.1)
    m = vdb_fit_discrete(d)
    fd = np.cumsum(d.pi)
    fu = np.cumsum(d.p * d.pi + (1 - d.p) * d.omega)
    ks = np.linspace(1e-3, vdb_kappa_max(d.p), 200_001)
    objs = [np.sum((fd - vdb_cap(k, fu)) ** 2) for k in ks[::100]]
    k0 = ks[::100][int(np.argmin(objs))]
    fine = ks[(ks > k0 - 0.02) & (ks < k0 + 0.02)]
    best = fine[np.argmin([np.sum((fd - vdb_cap(k, fu)) ** 2) for k in fine])]
    assert m.kappa == pytest.approx(best, abs=1e-5)
    assert m.objective == pytest.approx(np.sum((fd - vdb_cap(m.kappa, fu)) ** 2), rel=1e-9)


@pytest.mark.parametrize("kappa", [0.7, 4.0, 10.0])
def test_vdb_pd_averages_to_p(kappa):
    p = 0.05
    m = vdb_fit_from_ar(vdb_ar(kappa, p), p, uniform01())
    mean, _ = integrate.quad(lambda u: float(vdb_pd(m, u)), 0, 1, epsabs=1e-13)
    assert mean == pytest.approx(p, abs=1e-10)
    assert m.method == "ar_inversion" and m.kappa == pytest.approx(kappa, rel=1e-9)
    pds = m.pd(np.linspace(0, 1, 11))
    assert np.all(np.diff(pds) < 0) and np.all(pds <= 1 + 1e-12)


def test_vdb_discrete_pd_uses_midpoint():
    d = DiscreteJoint([1, 2, 3], [0.5, 0.3, 0.2], [0.2, 0.3, 0.5], 0.1)
    m = vdb_fit_discrete(d)
    F = d.unconditional_dist()
    u = 0.5 * (F.cdf(2.0) + F.cdf_left(2.0))
    assert m.pd(2.0) == pytest.approx(0.1 * vdb_cap_deriv(m.kappa, u), rel=1e-12)


# ---- normal ROC -----------------------------------------------------------

def test_normal_roc_examples():
    u = np.linspace(0.01, 0.99, 9)
    np.testing.assert_allclose(normal_roc(0.0, 1.0, u), u, atol=1e-15)
    assert normal_roc_ar(0.0, 1.0) == 0.0
    a = normal_roc_a_from_auc(0.75)
    assert (normal_roc_ar(a, 1.0) + 1) / 2 == pytest.approx(0.75, abs=1e-12)
    with pytest.raises(ValueError):
        normal_roc(0.0, 0.0, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(0.3, 3), st.floats(0.02, 0.98))
def test_normal_roc_derivative(a, b, u):
    h = 1e-6
    fd = (normal_roc(a, b, u + h) - normal_roc(a, b, u - h)) / (2 * h)
    assert fd == pytest.approx(float(normal_roc_deriv(a, b, u)), rel=1e-5, abs=1e-8)


def test_normal_roc_ar_matches_binormal_auc():
    # survivors N(0, 1), defaulters N(-a/b, 1/b): ROC(u) = Phi(a + b Phi^-1(u))
    a, b = 1.1, 0.7
    auc = auc_normal(-a / b, 1 / b, 0.0, 1.0)
    assert normal_roc_ar(a, b) == pytest.approx(2 * auc - 1, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 2.5), st.floats(0.01, 0.3), st.floats(-2.5, 2.5))
def test_pd_from_roc_matches_model_and_logit_form(a, p, s):
    F_N = normal_dist()
    got = float(pd_from_roc(a, p, F_N, s))
    ratio = float(normal_roc_deriv(a, 1.0, norm_cdf(s)))
    assert got == pytest.approx(p * ratio / (p * ratio + 1 - p), rel=1e-9)
    assert got == pytest.approx(float(NormalRocModel(a, 1.0, p, F_N).pd(s)), rel=1e-9)
    # logit in s with beta = a and alpha = log((1-p)/p) + a^2/2
    assert got == pytest.approx(float(LogitModel(np.log((1 - p) / p) + a * a / 2, a).pd(s)), rel=1e-9)


def test_pd_from_roc_boundary():
    with pytest.raises(ValueError, match="boundary"):
        pd_from_roc(1.0, 0.1, empirical_cdf([1.0, 2.0]), 2.0)


# ---- logit ----------------------------------------------------------------

def test_logit_recovers_coefficients():
    s, y = simulate_logit(3.0, 1.2, 100_000, 1)
    m = logit_fit(s, y)
    assert m.converged
    assert abs(m.alpha - 3.0) < 3 * m.se_alpha and abs(m.beta - 1.2) < 3 * m.se_beta
    # score equations vanish at the optimum
    pd = m.pd(s)
    grad = np.array([np.sum(y - pd), np.sum((y - pd) * s)])
    assert np.max(np.abs(grad)) < 1e-8 * s.size


def test_logit_sign_symmetry():
    s, y = simulate_logit(2.0, 0.8, 3000, 2)
    m, r = logit_fit(s, y), logit_fit(-s, y)
    assert r.beta == pytest.approx(-m.beta, rel=1e-8)
    assert r.alpha == pytest.approx(m.alpha, rel=1e-8)
    flipped = logit_fit(s, 1 - y)
    assert flipped.alpha == pytest.approx(-m.alpha, rel=1e-8)
    assert flipped.beta == pytest.approx(-m.beta, rel=1e-8)


def test_logit_errors():
    with pytest.raises(ValueError, match="diverge"):
        logit_fit([1, 2, 3, 4], [1, 1, 0, 0])
    with pytest.raises(ValueError):
        logit_fit([1, 2], [0, 0])
    with pytest.raises(ValueError):
        logit_fit([1, 2], [0, 2])


def test_logit_constant_scores():
    m = logit_fit([1.0, 1.0, 1.0, 1.0], [1, 0, 0, 0])
    assert m.pd(1.0) == pytest.approx(0.25, abs=1e-8)


def test_robust_logit_is_affine_invariant():
    g = np.random.default_rng(3)
    s = ConditionalSamples(g.normal(2.1, 1.12, 40), g.normal(3.5, 1.22, 400))
    t = ConditionalSamples(3.0 * s.defaulters - 7.0, 3.0 * s.survivors - 7.0)
    m = robust_logit_fit(s, empirical_cdf(s.survivors))
    n = robust_logit_fit(t, empirical_cdf(t.survivors))
    assert n.alpha == pytest.approx(m.alpha, abs=1e-10)
    assert n.beta == pytest.approx(m.beta, abs=1e-10)
    np.testing.assert_allclose(n.pd(3.0 * s.defaulters - 7.0), m.pd(s.defaulters), atol=1e-10)


def test_survivor_transform_flooring():
    F = empirical_cdf([1.0, 2.0, 3.0, 4.0])
    tr = survivor_transform(F)
    # midpoint values 1/8, 3/8, 5/8, 7/8; floor 1/16, ceiling 15/16
    assert tr.floor == pytest.approx(1 / 16) and tr.ceiling == pytest.approx(15 / 16)
    np.testing.assert_allclose(tr.probabilities([0.0, 1.0, 2.5, 9.0]), [1 / 16, 1 / 8, 0.5, 15 / 16])
    assert np.all(np.isfinite(tr([-100.0, 100.0])))
    single = survivor_transform(empirical_cdf([1.0]))
    assert single.probabilities(1.0) == 0.5 and single.floor == 0.25


def test_nls_history_and_agreement():
    s, y = simulate_logit(3.0, 1.0, 20_000, 4)
    m = nls_fit(s, y)
    h = np.array(m.meta["history"])
    assert np.all(np.diff(h) <= 0)
    ml = logit_fit(s, y)
    assert m.beta == pytest.approx(ml.beta, rel=0.1)
    assert m.alpha == pytest.approx(ml.alpha, rel=0.1)
    F = empirical_cdf(s[y == 0])
    r = nls_fit(s, y, transform=survivor_transform(F))
    assert np.all(np.diff(r.meta["history"]) <= 0)
    assert 0 < r.pd(0.0) < 1


# ---- quasi moment matching ------------------------------------------------

def test_auc_star_of_pd_curve_matches_discrete_formula():
    g = np.random.default_rng(5)
    scores = np.array([1.0, 2.0, 2.0, 3.0, 5.0])
    pds = g.uniform(0.01, 0.5, 5)
    support = np.unique(scores)
    pi = np.array([pds[scores == z].sum() for z in support]) / pds.sum()
    om = np.array([(1 - pds[scores == z]).sum() for z in support]) / (1 - pds).sum()
    d = DiscreteJoint(support, pi, om, pds.mean())
    assert auc_star_of_pd_curve(scores, pds) == pytest.approx(auc_star_discrete(d), abs=1e-14)


def test_qmm_powerless_target():
    s = np.random.default_rng(6).normal(size=300)
    m = qmm_solve(s, QmmTargets(0.02, 0.5))
    assert m.beta == 0.0 and m.alpha == pytest.approx(np.log(1 / 0.02 - 1), rel=1e-12)


@pytest.mark.parametrize("q,A", [(0.01, 0.7), (0.05, 0.85), (0.2, 0.3)])
def test_qmm_round_trip(q, A):
    s = np.random.default_rng(7).normal(5, 2, 300)
    m = qmm_solve(s, QmmTargets(q, A))
    pd = m.pd(s)
    assert np.mean(pd) == pytest.approx(q, abs=1e-9)
    assert auc_star_of_pd_curve(s, pd) == pytest.approx(A, abs=1e-9)
    assert (m.beta > 0) == (A > 0.5)
    # scaling the scores rescales beta only
    m2 = qmm_solve(2.0 * s, QmmTargets(q, A))
    assert m2.beta == pytest.approx(m.beta / 2, rel=1e-7)
    assert m2.alpha == pytest.approx(m.alpha, rel=1e-7)


def test_qmm_unreachable_target():
    with pytest.raises(ValueError, match="no solution"):
        # with two obligors and q = 0.1 the attainable AUC* stays below 0.78
        qmm_solve([0.0, 1.0], QmmTargets(0.1, 0.99))
    with pytest.raises(ValueError):
        QmmTargets(0.0, 0.7)


# ---- implied density ------------------------------------------------------

def test_implied_density_powerless_cap_returns_defaulter_density():
    F_D = normal_dist(1.0, 2.0)
    s = np.linspace(-4, 6, 21)
    f = implied_survivor_density(lambda u: u, lambda u: np.ones_like(u), F_D, 0.1, s)
    np.testing.assert_allclose(f, F_D.density(s), atol=1e-10)


def test_implied_density_integrates_to_one():
    kappa, p = 5.0, 0.05
    F_D = normal_dist()
    f = lambda t: float(implied_survivor_density(lambda u: vdb_cap(kappa, u),  # noqa: E731
                                                 lambda u: vdb_cap_deriv(kappa, u), F_D, p, t))
    total, _ = integrate.quad(f, -12, 12, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError, match="derivative exceeds"):
        implied_survivor_density(lambda u: vdb_cap(40.0, u), lambda u: vdb_cap_deriv(40.0, u),
                                 F_D, 0.1, 0.0)
