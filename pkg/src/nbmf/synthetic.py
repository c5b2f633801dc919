"""Seeded synthetic binary datasets for demos and tests."""

from __future__ import annotations

import numpy as np

from .binmat import BinaryMatrix
from .errors import ConfigError

__all__ = ["planted_dataset", "random_binary_matrix"]


def planted_dataset(n_rows, n_cols, rank, h_alpha=3.0, h_beta=3.0, seed=0,
                    w_concentration=1.0):
    """Sample data from the generative model itself.

    Draws W with symmetric-Dirichlet rows (``w_concentration`` < 1 gives
    near-pure rows, > 1 well-mixed ones) and H entrywise from
    Beta(h_alpha, h_beta), then samples each cell as Bernoulli((W @ H)[m, n]).
    Returns ``(matrix, W, H)`` so recovery can be checked against the truth.
    """
    if n_rows < 1 or n_cols < 1 or rank < 1:
        raise ConfigError("n_rows, n_cols, and rank must all be >= 1")
    if not w_concentration > 0:
        raise ConfigError("w_concentration must be positive")
    rng = np.random.default_rng(seed)
    W = rng.dirichlet(np.full(rank, float(w_concentration)), size=n_rows)
    H = rng.beta(h_alpha, h_beta, size=(rank, n_cols))
    means = W @ H
    values = (rng.random((n_rows, n_cols)) < means).astype(float)
    return BinaryMatrix.from_dense(values), W, H


def random_binary_matrix(n_rows, n_cols, density=0.5, seed=0):
    """An i.i.d. Bernoulli(density) matrix, deterministic in ``seed``."""
    if not (0.0 <= density <= 1.0):
        raise ConfigError(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    values = (rng.random((n_rows, n_cols)) < density).astype(float)
    return BinaryMatrix.from_dense(values)
