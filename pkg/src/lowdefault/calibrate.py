"""Calibration of raw conditional PDs to a target unconditional PD.

The raw PDs r_i were estimated on a sample with default rate p. The
calibrated PDs keep the likelihood ratio of the scores fixed and replace the
prior odds, i.e. pi_i = 1 / (1 + (1-q)/q * p/(1-p) * (1-r_i)/r_i), with q
chosen so that the portfolio mean of pi_i equals the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CalibrationInput:
    sample_pds: np.ndarray
    pi: float

    def __post_init__(self):
        r = np.asarray(self.sample_pds, dtype=float).ravel()
        if r.size == 0:
            raise ValueError("no raw PDs")
        if np.any((r < 0) | (r > 1)) or not np.all(np.isfinite(r)):
            raise ValueError("raw PDs must lie in [0, 1]")
        if not 0.0 < self.pi < 1.0:
            raise ValueError("target PD must lie in (0, 1)")
        object.__setattr__(self, "sample_pds", r)


@dataclass(frozen=True)
class CalibrationResult:
    q: float
    calibrated_pds: np.ndarray
    iterations: int = 0


def transform_pds(raw, p: float, q: float) -> np.ndarray:
    """Replace the prior odds p/(1-p) of raw PDs by q/(1-q).

    PDs equal to 0 or 1 are left unchanged.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise ValueError("p and q must lie in (0, 1)")
    return _transform_log_odds(raw, np.log(p) - np.log1p(-p), np.log(q) - np.log1p(-q))


def _transform_log_odds(raw, lp: float, lq: float) -> np.ndarray:
    """transform_pds with p and q given as log-odds (accurate near 0 and 1)."""
    r = np.asarray(raw, dtype=float)
    inner = (r > 0) & (r < 1)
    rr = np.where(inner, r, 0.5)
    log_odds = np.log(rr) - np.log1p(-rr) + lq - lp
    out = np.exp(-np.logaddexp(0.0, -log_odds))
    return np.where(inner, out, r)


def calibrate_to_target(inp: CalibrationInput, p: float = 0.5, max_iter: int = 100) -> CalibrationResult:
    """Solve mean(transform_pds(raw, p, q)) = pi for q.

    The mean is continuous and strictly increasing in q, so bisection on
    (0, 1) (in log-odds of q, ``max_iter`` halvings) brackets the root; a
    secant step then polishes it. The choice of ``p`` changes q but not the
    calibrated PDs.
    """
    r, target = inp.sample_pds, inp.pi
    inner = (r > 0) & (r < 1)
    if not np.any(inner):
        raise ValueError("degenerate raw curve: all raw PDs are 0 or 1")
    fixed_mean = float(np.sum(r[~inner])) / r.size
    share = inner.sum() / r.size
    if not fixed_mean < target < fixed_mean + share:
        raise ValueError("target PD unattainable: PDs fixed at 0 or 1 dominate")

    lp = np.log(p) - np.log1p(-p)

    def f(t):  # t = log-odds of q
        return float(np.mean(_transform_log_odds(r, lp, t))) - target

    lo, hi = -1.0, 1.0
    while f(lo) > 0:
        lo *= 2.0
    while f(hi) < 0:
        hi *= 2.0
    it = 0
    for it in range(1, max_iter + 1):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    f_lo, f_hi = f(lo), f(hi)
    t = lo if abs(f_lo) <= abs(f_hi) else hi
    if f_hi != f_lo:
        sec = lo - f_lo * (hi - lo) / (f_hi - f_lo)
        if lo <= sec <= hi and abs(f(sec)) < abs(f(t)):
            t = sec
    q = float(np.exp(-np.logaddexp(0.0, -t)))
    return CalibrationResult(q, _transform_log_odds(r, lp, t), it)
