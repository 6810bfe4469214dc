import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)


def grid_dev(fam_a, fam_b, pts=None):
    """Max deviation between two arity-2 families on a probe grid."""
    if pts is None:
        pts = np.linspace(-2.5, 2.5, 5)
    return float(np.max(np.abs(fam_a.sample_grid(pts, pts) - fam_b.sample_grid(pts, pts))))
