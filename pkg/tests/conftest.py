import numpy as np
import pytest

from nbmf import ObservationMask


def full_mask(n_rows, n_cols):
    cells = frozenset((m, n) for m in range(n_rows) for n in range(n_cols))
    return ObservationMask(n_rows, n_cols, cells)


def subsample_mask(n_rows, n_cols, fraction, seed):
    rng = np.random.default_rng(seed)
    keep = rng.random((n_rows, n_cols)) < fraction
    cells = frozenset(zip(*(idx.tolist() for idx in np.nonzero(keep))))
    return ObservationMask(n_rows, n_cols, cells)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
