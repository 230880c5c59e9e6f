"""Shared hypothesis strategies."""

import numpy as np
from hypothesis import strategies as st

from lowdefault.distributions import ConditionalSamples, DiscreteJoint


@st.composite
def discrete_joints(draw, max_states: int = 6):
    """Random valid joint laws with up to ``max_states`` grades."""
    ell = draw(st.integers(1, max_states))
    w = st.floats(0.0, 1.0)
    pi = np.array(draw(st.lists(w, min_size=ell, max_size=ell)))
    om = np.array(draw(st.lists(w, min_size=ell, max_size=ell)))
    if pi.sum() == 0:
        pi[draw(st.integers(0, ell - 1))] = 1.0
    if om.sum() == 0:
        om[draw(st.integers(0, ell - 1))] = 1.0
    pi, om = pi / pi.sum(), om / om.sum()
    keep = pi + om > 0
    p = draw(st.floats(0.0, 0.95))
    z = np.cumsum(draw(st.lists(st.floats(0.1, 3.0), min_size=ell, max_size=ell)))
    return DiscreteJoint(z[keep], pi[keep], om[keep], p)


@st.composite
def tied_samples(draw, max_d: int = 8, max_n: int = 12, levels: int = 5):
    """Conditional samples on a small integer grid, so ties are frequent."""
    v = st.integers(0, levels).map(float)
    x = draw(st.lists(v, min_size=1, max_size=max_d))
    y = draw(st.lists(v, min_size=1, max_size=max_n))
    return ConditionalSamples(x, y)
