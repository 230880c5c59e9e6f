"""Distribution functions, quantiles, empirical and kernel estimates.

Scores follow the convention that low values indicate bad credit quality.
All callables on :class:`DistFn` accept scalars or arrays and return arrays
of the same shape (0-d arrays for scalar input).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

ArrayFn = Callable[[np.ndarray], np.ndarray]


def norm_cdf(x):
    """Standard normal distribution function."""
    return special.ndtr(x)


def norm_ppf(u):
    """Standard normal quantile; returns -inf at 0 and +inf at 1."""
    return special.ndtri(u)


def norm_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class DistFn:
    """A univariate distribution described by its functions.

    Attributes
    ----------
    cdf : callable
        Right-continuous distribution function G.
    cdf_left : callable
        Left limit G(x - 0).
    quantile : callable
        Generalized inverse inf{x : G(x) >= u}; -inf at u = 0.
    density : callable or None
        Lebesgue density when the law is absolutely continuous.
    continuous : bool
        True when G has no jumps.
    support, masses : ndarray or None
        Atoms and their probabilities for purely discrete laws.
    """

    cdf: ArrayFn
    cdf_left: ArrayFn
    quantile: ArrayFn
    density: ArrayFn | None = None
    continuous: bool = True
    support: np.ndarray | None = field(default=None, repr=False)
    masses: np.ndarray | None = field(default=None, repr=False)

    @property
    def is_discrete(self) -> bool:
        return self.support is not None

    def pmf(self, x):
        """Point mass P[S = x]."""
        return np.asarray(self.cdf(x)) - np.asarray(self.cdf_left(x))


def _as_float_array(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def normal_dist(mu: float = 0.0, sigma: float = 1.0) -> DistFn:
    if not sigma > 0:
        raise ValueError("sigma must be positive")

    def cdf(x):
        return norm_cdf((_as_float_array(x) - mu) / sigma)

    def quantile(u):
        return mu + sigma * norm_ppf(_as_float_array(u))

    def density(x):
        return norm_pdf((_as_float_array(x) - mu) / sigma) / sigma

    return DistFn(cdf, cdf, quantile, density, True)


def discrete_dist(support: Sequence[float], masses: Sequence[float]) -> DistFn:
    """Purely discrete law with atoms ``support`` and probabilities ``masses``.

    Zero masses are allowed. The quantile is exact (no root finding).
    """
    z = _as_float_array(support)
    m = _as_float_array(masses)
    if z.ndim != 1 or z.shape != m.shape or z.size == 0:
        raise ValueError("support and masses must be nonempty 1-d arrays of equal length")
    if np.any(np.diff(z) <= 0):
        raise ValueError("support must be strictly increasing")
    if np.any(m < 0) or not np.isclose(m.sum(), 1.0, atol=1e-12, rtol=0):
        raise ValueError("masses must be nonnegative and sum to 1")
    cum = np.cumsum(m)
    cum[-1] = 1.0
    cum = np.minimum(cum, 1.0)
    cum_ext = np.concatenate(([0.0], cum))

    def cdf(x):
        return cum_ext[np.searchsorted(z, _as_float_array(x), side="right")]

    def cdf_left(x):
        return cum_ext[np.searchsorted(z, _as_float_array(x), side="left")]

    def quantile(u):
        u = _as_float_array(u)
        idx = np.searchsorted(cum, u, side="left")
        out = z[np.minimum(idx, z.size - 1)]
        return np.where(u <= 0, -np.inf, out)

    return DistFn(cdf, cdf_left, quantile, None, False, z, m)


def empirical_cdf(sample: Sequence[float]) -> DistFn:
    """Empirical distribution: counts observations <= w."""
    x = _as_float_array(sample).ravel()
    if x.size == 0:
        raise ValueError("empty sample")
    vals, counts = np.unique(x, return_counts=True)
    return discrete_dist(vals, counts / x.size)


def modified_empirical_cdf(sample: Sequence[float]) -> ArrayFn:
    """Modified empirical distribution function.

    Counts observations strictly below ``w`` plus half of those equal to it,
    i.e. the mean of the empirical CDF and its left limit. Returned as a plain
    vectorised function because it is neither right- nor left-continuous.
    """
    x = np.sort(_as_float_array(sample).ravel())
    if x.size == 0:
        raise ValueError("empty sample")
    n = x.size

    def fn(w):
        w = _as_float_array(w)
        lo = np.searchsorted(x, w, side="left")
        hi = np.searchsorted(x, w, side="right")
        return (lo + hi) / (2.0 * n)

    return fn


def generalized_inverse(cdf: ArrayFn | DistFn, u, lo: float | None = None,
                        hi: float | None = None, xtol: float = 1e-13):
    """inf{x : cdf(x) >= u} by bracketing and bisection.

    Works for any non-decreasing right-continuous ``cdf``. Returns -inf at
    u = 0 and +inf when ``u`` is never reached. When ``cdf`` is a DistFn its
    own quantile is used.
    """
    if isinstance(cdf, DistFn):
        return cdf.quantile(u)
    u_arr = _as_float_array(u)
    scalar = u_arr.ndim == 0
    u_arr = np.atleast_1d(u_arr)
    out = np.empty_like(u_arr)
    for k, uk in enumerate(u_arr):
        out[k] = _invert_scalar(cdf, float(uk), lo, hi, xtol)
    return out[0] if scalar else out


def _invert_scalar(cdf, u, lo, hi, xtol):
    if u <= 0.0:
        return -np.inf
    f = lambda t: float(cdf(t))  # noqa: E731
    a = -1.0 if lo is None else float(lo)
    b = 1.0 if hi is None else float(hi)
    step = 1.0
    while f(a) >= u:
        a -= step
        step *= 2.0
        if a < -1e300:
            return -np.inf
    step = 1.0
    while f(b) < u:
        b += step
        step *= 2.0
        if b > 1e300:
            return np.inf
    # invariant: f(a) < u <= f(b)
    for _ in range(400):
        if b - a <= xtol * max(1.0, abs(a), abs(b)):
            break
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if f(m) >= u:
            b = m
        else:
            a = m
    return b


def _bisect_quantile(cdf: ArrayFn, u: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                     iters: int = 200) -> np.ndarray:
    """Vectorised bisection for inf{x: cdf(x) >= u} inside [lo, hi]."""
    a = lo.astype(float).copy()
    b = hi.astype(float).copy()
    # widen brackets that do not straddle u
    for _ in range(200):
        bad = cdf(a) >= u
        if not np.any(bad):
            break
        a = np.where(bad, a - np.maximum(1.0, np.abs(a)), a)
    for _ in range(200):
        bad = cdf(b) < u
        if not np.any(bad):
            break
        b = np.where(bad, b + np.maximum(1.0, np.abs(b)), b)
    for _ in range(iters):
        m = 0.5 * (a + b)
        go_left = cdf(m) >= u
        b = np.where(go_left, m, b)
        a = np.where(go_left, a, m)
        if np.all(b - a <= 1e-15 * np.maximum(1.0, np.abs(b))):
            break
    return b


def mixture_cdf(p: float, F_D: DistFn, F_N: DistFn) -> DistFn:
    """Unconditional law F = p F_D + (1 - p) F_N."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    if p == 0.0:
        return F_N
    if p == 1.0:
        return F_D
    if F_D.is_discrete and F_N.is_discrete:
        z = np.union1d(F_D.support, F_N.support)
        m = p * F_D.pmf(z) + (1.0 - p) * F_N.pmf(z)
        return discrete_dist(z, m / m.sum())

    def cdf(x):
        return p * F_D.cdf(x) + (1.0 - p) * F_N.cdf(x)

    def cdf_left(x):
        return p * F_D.cdf_left(x) + (1.0 - p) * F_N.cdf_left(x)

    def quantile(u):
        u = _as_float_array(u)
        shape = u.shape
        u1 = np.atleast_1d(u).ravel()
        qd = np.atleast_1d(F_D.quantile(u1)).astype(float)
        qn = np.atleast_1d(F_N.quantile(u1)).astype(float)
        lo, hi = np.minimum(qd, qn), np.maximum(qd, qn)
        out = np.full(u1.shape, np.nan)
        out[u1 <= 0] = -np.inf
        inf_hi = (u1 > 0) & ~np.isfinite(hi)
        out[inf_hi] = np.inf
        # mixture quantile lies between the component quantiles
        fin = (u1 > 0) & np.isfinite(hi) & np.isfinite(lo)
        if np.any(fin):
            out[fin] = _bisect_quantile(cdf, u1[fin], lo[fin], hi[fin])
        return out.reshape(shape)

    density = None
    if F_D.density is not None and F_N.density is not None:
        def density(x):
            return p * F_D.density(x) + (1.0 - p) * F_N.density(x)

    return DistFn(cdf, cdf_left, quantile, density, F_D.continuous and F_N.continuous)


def binomial_grade_dist(trials: int, prob: float, offset: int = 0) -> DistFn:
    """Binomial(trials, prob) on the grades offset + {0, ..., trials}.

    A rating scale with k grades labelled 1..k corresponds to
    ``binomial_grade_dist(k - 1, prob, offset=1)``.
    """
    if int(trials) != trials or trials < 1:
        raise ValueError("trials must be a positive integer")
    if not 0.0 <= prob <= 1.0:
        raise ValueError("prob must lie in [0, 1]")
    k = np.arange(int(trials) + 1)
    pmf = stats.binom.pmf(k, int(trials), prob)
    return discrete_dist(k + offset, pmf / pmf.sum())


# --------------------------------------------------------------------------
# samples


@dataclass(frozen=True)
class ConditionalSamples:
    """Defaulter scores x_1..x_nD and survivor scores y_1..y_nN."""

    defaulters: np.ndarray
    survivors: np.ndarray

    def __post_init__(self):
        x = _as_float_array(self.defaulters).ravel()
        y = _as_float_array(self.survivors).ravel()
        if x.size < 1 or y.size < 1:
            raise ValueError("both samples must be nonempty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("scores must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "defaulters", x)
        object.__setattr__(self, "survivors", y)

    @property
    def n_d(self) -> int:
        return self.defaulters.size

    @property
    def n_n(self) -> int:
        return self.survivors.size

    @property
    def default_rate(self) -> float:
        return self.n_d / (self.n_d + self.n_n)

    @classmethod
    def from_labelled(cls, scores: Sequence[float], defaults: Sequence[int]) -> "ConditionalSamples":
        s = _as_float_array(scores).ravel()
        d = np.asarray(defaults).ravel().astype(bool)
        if s.shape != d.shape:
            raise ValueError("scores and default indicators differ in length")
        return cls(s[d], s[~d])

    def labelled(self) -> tuple[np.ndarray, np.ndarray]:
        """Combined scores and 0/1 default indicators (defaulters first)."""
        s = np.concatenate((self.defaulters, self.survivors))
        d = np.concatenate((np.ones(self.n_d), np.zeros(self.n_n)))
        return s, d


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite-state score law: grades z_1 < ... < z_l with class masses.

    ``pi`` are defaulter masses, ``omega`` survivor masses, ``p`` the
    unconditional PD. Every state carries positive mass in at least one class.
    """

    support: np.ndarray
    pi: np.ndarray
    omega: np.ndarray
    p: float

    def __post_init__(self):
        z = _as_float_array(self.support).ravel()
        pi = _as_float_array(self.pi).ravel()
        om = _as_float_array(self.omega).ravel()
        if not (z.shape == pi.shape == om.shape) or z.size == 0:
            raise ValueError("support, pi and omega must have equal nonzero length")
        if np.any(np.diff(z) <= 0):
            raise ValueError("support must be strictly increasing")
        if np.any(pi < 0) or np.any(om < 0):
            raise ValueError("masses must be nonnegative")
        if abs(pi.sum() - 1.0) > 1e-9 or abs(om.sum() - 1.0) > 1e-9:
            raise ValueError("pi and omega must each sum to 1")
        if np.any(pi + om <= 0):
            raise ValueError("every state needs positive mass in some class")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        object.__setattr__(self, "support", z)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "p", float(self.p))

    @property
    def size(self) -> int:
        return self.support.size

    @classmethod
    def from_samples(cls, s: ConditionalSamples, p: float | None = None) -> "DiscreteJoint":
        """Empirical joint on the observed values of the combined sample."""
        z = np.union1d(s.defaulters, s.survivors)
        pi = np.bincount(np.searchsorted(z, s.defaulters), minlength=z.size) / s.n_d
        om = np.bincount(np.searchsorted(z, s.survivors), minlength=z.size) / s.n_n
        return cls(z, pi, om, s.default_rate if p is None else p)

    @classmethod
    def from_distributions(cls, F_D: DistFn, F_N: DistFn, p: float) -> "DiscreteJoint":
        if not (F_D.is_discrete and F_N.is_discrete):
            raise ValueError("both laws must be discrete")
        z = np.union1d(F_D.support, F_N.support)
        pi, om = F_D.pmf(z), F_N.pmf(z)
        keep = pi + om > 0
        return cls(z[keep], pi[keep], om[keep], p)

    def defaulter_dist(self) -> DistFn:
        return discrete_dist(self.support, self.pi)

    def survivor_dist(self) -> DistFn:
        return discrete_dist(self.support, self.omega)

    def unconditional_dist(self) -> DistFn:
        m = self.p * self.pi + (1.0 - self.p) * self.omega
        return discrete_dist(self.support, m / m.sum())


# --------------------------------------------------------------------------
# kernel estimates


def silverman_bandwidth(sample: Sequence[float]) -> float:
    """Rule-of-thumb bandwidth 1.06 * sd * T^(-1/5), sd with n - 1 divisor."""
    x = _as_float_array(sample).ravel()
    if x.size < 2:
        raise ValueError("degenerate sample: need at least two observations")
    sd = float(np.std(x, ddof=1))
    if not sd > 0:
        raise ValueError("degenerate sample: zero variance")
    return 1.06 * sd * x.size ** (-0.2)


def bias_correction(sample: Sequence[float], h: float) -> tuple[float, float]:
    """Shift a and scale b that restore the sample mean and variance.

    With v the 1/n sample variance, b = sqrt(v / (h^2 + v)) and
    a = (1 - b) * mean, so that the kernel estimate of the transformed
    sample a + b x with bandwidth b h has the raw sample moments.
    """
    x = _as_float_array(sample).ravel()
    v = float(np.var(x))
    if not v > 0:
        raise ValueError("degenerate sample: zero variance")
    b = float(np.sqrt(v / (h * h + v)))
    return (1.0 - b) * float(np.mean(x)), b


@dataclass(frozen=True)
class KernelEstimate:
    """Normal-kernel estimate built on ``shift + scale * sample``.

    The effective bandwidth is ``scale * bandwidth``.
    """

    sample: np.ndarray
    bandwidth: float
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        x = _as_float_array(self.sample).ravel()
        if x.size == 0:
            raise ValueError("empty sample")
        if not self.bandwidth > 0:
            raise ValueError("bandwidth must be positive")
        if not 0.0 < self.scale <= 1.0:
            raise ValueError("scale must lie in (0, 1]")
        object.__setattr__(self, "sample", x)

    @property
    def centers(self) -> np.ndarray:
        return self.shift + self.scale * self.sample

    @property
    def effective_bandwidth(self) -> float:
        return self.scale * self.bandwidth

    def mean(self) -> float:
        return float(self.centers.mean())

    def variance(self) -> float:
        return float(np.var(self.centers) + self.effective_bandwidth ** 2)


def kernel_estimate(sample: Sequence[float], bias_correct: bool = True,
                    bandwidth: float | None = None) -> KernelEstimate:
    """Kernel estimate with Silverman bandwidth and optional bias correction."""
    x = _as_float_array(sample).ravel()
    h = silverman_bandwidth(x) if bandwidth is None else float(bandwidth)
    if bias_correct:
        a, b = bias_correction(x, h)
        return KernelEstimate(x, h, a, b)
    return KernelEstimate(x, h)


def _kernel_sum(fn, est: KernelEstimate, s, chunk: int = 4096):
    s = _as_float_array(s)
    flat = np.atleast_1d(s).ravel()
    c = est.centers
    h = est.effective_bandwidth
    out = np.empty(flat.size)
    for i in range(0, flat.size, chunk):
        blk = flat[i:i + chunk]
        out[i:i + chunk] = fn((blk[:, None] - c[None, :]) / h).mean(axis=1)
    return out.reshape(s.shape)


def kernel_cdf(est: KernelEstimate, s):
    """Average of Phi((s - x_i) / h) over the (transformed) sample."""
    return _kernel_sum(norm_cdf, est, s)


def kernel_density(est: KernelEstimate, s):
    """Average of phi((s - x_i) / h) / h over the (transformed) sample."""
    return _kernel_sum(norm_pdf, est, s) / est.effective_bandwidth


def kernel_dist(est: KernelEstimate) -> DistFn:
    """Expose a kernel estimate as a continuous DistFn."""
    c = est.centers
    h = est.effective_bandwidth
    lo0, hi0 = c.min() - 40.0 * h, c.max() + 40.0 * h

    def cdf(x):
        return kernel_cdf(est, x)

    def quantile(u):
        u = _as_float_array(u)
        u1 = np.atleast_1d(u).ravel()
        out = np.full(u1.size, np.nan)
        out[u1 <= 0] = -np.inf
        out[u1 >= 1] = np.inf
        mid = (u1 > 0) & (u1 < 1)
        if np.any(mid):
            out[mid] = _bisect_quantile(cdf, u1[mid], np.full(mid.sum(), lo0),
                                        np.full(mid.sum(), hi0))
        return out.reshape(u.shape)

    return DistFn(cdf, cdf, quantile, lambda x: kernel_density(est, x), True)
