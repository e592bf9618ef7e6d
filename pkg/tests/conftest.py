import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def distributions(size=st.integers(2, 8), full_support=False):
    """Strategy for probability vectors, optionally strictly positive."""
    lo = 1e-3 if full_support else 0.0

    @st.composite
    def build(draw):
        n = draw(size)
        w = draw(arrays(np.float64, n, elements=st.floats(lo, 1.0)))
        if w.sum() == 0:
            w[0] = 1.0
        return w / w.sum()

    return build()


def distribution_pairs(full_support=False):
    """Strategy for two probability vectors of the same length."""
    lo = 1e-3 if full_support else 0.0

    @st.composite
    def build(draw):
        n = draw(st.integers(2, 8))
        out = []
        for _ in range(2):
            w = draw(arrays(np.float64, n, elements=st.floats(lo, 1.0)))
            if w.sum() == 0:
                w[draw(st.integers(0, n - 1))] = 1.0
            out.append(w / w.sum())
        return tuple(out)

    return build()
