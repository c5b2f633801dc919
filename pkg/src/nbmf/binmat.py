"""Binary matrix storage, coordinate-file I/O, and seeded observation splits.

A dataset is an M-by-N grid of {0,1} values stored sparsely as the set of
coordinates holding a 1; every cell not listed is an observed 0, not a
missing value.  Missingness is expressed separately through
:class:`ObservationMask` objects, so the same matrix can be trained and
scored on disjoint subsets of its cells (matrix completion).

All types here are immutable after construction and safe to share across
threads; the operations are pure functions of their arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BoundsError,
    ConfigError,
    DimensionError,
    DuplicateError,
    ParseError,
)

__all__ = [
    "BinaryMatrix",
    "ObservationMask",
    "SplitSpec",
    "load_coordinate_file",
    "save_coordinate_file",
    "load_mask",
    "save_mask",
    "split_observations",
    "density",
]


def _check_coords(cells, n_rows, n_cols, what):
    for (r, c) in cells:
        if not (0 <= r < n_rows and 0 <= c < n_cols):
            raise BoundsError(
                f"{what} ({r}, {c}) outside a {n_rows}x{n_cols} grid"
            )


@dataclass(frozen=True)
class BinaryMatrix:
    """An M-by-N matrix over {0,1}, stored as the coordinate set of its ones."""

    n_rows: int
    n_cols: int
    ones: frozenset

    def __post_init__(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise DimensionError("matrix shape must be nonnegative")
        object.__setattr__(self, "ones", frozenset(self.ones))
        _check_coords(self.ones, self.n_rows, self.n_cols, "coordinate")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    def to_dense(self):
        """Return a fresh float64 array of 0.0/1.0 values."""
        dense = np.zeros((self.n_rows, self.n_cols))
        if self.ones:
            rows, cols = zip(*sorted(self.ones))
            dense[np.array(rows), np.array(cols)] = 1.0
        return dense

    @classmethod
    def from_dense(cls, array):
        array = np.asarray(array)
        if array.ndim != 2:
            raise DimensionError("expected a 2-d array")
        values = array.astype(float)
        if not np.isin(values, (0.0, 1.0)).all():
            raise ValueError("entries must be 0 or 1")
        rows, cols = np.nonzero(values)
        coords = frozenset(zip(rows.tolist(), cols.tolist()))
        return cls(array.shape[0], array.shape[1], coords)


@dataclass(frozen=True)
class ObservationMask:
    """The set of (row, col) cells visible to one phase (train/val/test)."""

    n_rows: int
    n_cols: int
    cells: frozenset

    def __post_init__(self):
        if self.n_rows < 0 or self.n_cols < 0:
            raise DimensionError("mask shape must be nonnegative")
        object.__setattr__(self, "cells", frozenset(self.cells))
        _check_coords(self.cells, self.n_rows, self.n_cols, "mask cell")

    @property
    def shape(self):
        return (self.n_rows, self.n_cols)

    @property
    def n_cells(self):
        return len(self.cells)

    def indices(self):
        """Row and column index arrays in sorted cell order.

        The fixed order makes every reduction over the mask deterministic.
        """
        if not self.cells:
            empty = np.array([], dtype=int)
            return empty, empty.copy()
        rows, cols = zip(*sorted(self.cells))
        return np.array(rows), np.array(cols)

    def to_dense(self):
        """Return a fresh boolean membership array."""
        dense = np.zeros((self.n_rows, self.n_cols), dtype=bool)
        rows, cols = self.indices()
        dense[rows, cols] = True
        return dense


@dataclass(frozen=True)
class SplitSpec:
    """Fractions and seed for a train/validation/test split over cells."""

    train_frac: float = 0.7
    val_frac: float = 0.15
    test_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        for name in ("train_frac", "val_frac", "test_frac"):
            frac = getattr(self, name)
            if not (0.0 < frac < 1.0):
                raise ConfigError(f"{name} must lie in (0, 1), got {frac}")
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-12:
            raise ConfigError(f"fractions must sum to 1, got {total}")


# SplitMix64 output function.  A fixed, documented 64-bit generator is used
# for the shuffle (rather than a library RNG) so a split is reproducible from
# its seed by any implementation of the same arithmetic.
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _splitmix64_keys(seed, count):
    """The first ``count`` outputs of SplitMix64 seeded with ``seed``."""
    state = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    steps = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = state + steps * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def split_observations(matrix, spec):
    """Partition all M*N cells into train/validation/test masks.

    Cells are shuffled by sorting on per-cell SplitMix64 keys derived from
    ``spec.seed``, then cut by the fractions: train takes
    floor(train_frac * M * N) cells, validation floor(val_frac * M * N),
    and test the remainder.  The same spec always yields identical masks.
    """
    if not isinstance(spec, SplitSpec):
        raise ConfigError("spec must be a SplitSpec")
    n_rows, n_cols = matrix.n_rows, matrix.n_cols
    total = n_rows * n_cols
    keys = _splitmix64_keys(spec.seed, total)
    order = np.argsort(keys, kind="stable")

    n_train = math.floor(spec.train_frac * total)
    n_val = math.floor(spec.val_frac * total)

    def mask_from(flat):
        cells = frozenset(
            (int(i) // n_cols, int(i) % n_cols) for i in flat
        )
        return ObservationMask(n_rows, n_cols, cells)

    train = mask_from(order[:n_train])
    val = mask_from(order[n_train:n_train + n_val])
    test = mask_from(order[n_train + n_val:])
    return train, val, test


def density(matrix):
    """Fraction of cells equal to 1."""
    total = matrix.n_rows * matrix.n_cols
    if total == 0:
        raise DimensionError("density of an empty matrix is undefined")
    return len(matrix.ones) / total


# ---------------------------------------------------------------------------
# Coordinate text format
#
# UTF-8 text, LF or CRLF.  Lines whose first non-blank character is '#' and
# blank lines are ignored.  The first data line is "M N"; each further data
# line is "row col" (0-based) naming a cell that holds a 1 (for a matrix) or
# belongs to the mask (for a mask).
# ---------------------------------------------------------------------------


def _read_coords(path):
    shape = None
    coords = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected two integers, got {line!r}", line=line_no)
            try:
                first, second = int(parts[0]), int(parts[1])
            except ValueError:
                raise ParseError(f"expected two integers, got {line!r}", line=line_no)
            if shape is None:
                if first < 0 or second < 0:
                    raise ParseError(f"negative shape {line!r}", line=line_no)
                shape = (first, second)
                continue
            if not (0 <= first < shape[0] and 0 <= second < shape[1]):
                raise BoundsError(
                    f"line {line_no}: coordinate ({first}, {second}) outside a "
                    f"{shape[0]}x{shape[1]} grid"
                )
            if (first, second) in seen:
                raise DuplicateError(
                    f"line {line_no}: coordinate ({first}, {second}) listed twice"
                )
            seen.add((first, second))
            coords.append((first, second))
    if shape is None:
        raise ParseError("missing 'M N' header line")
    return shape, coords


def _write_coords(path, shape, coords):
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{shape[0]} {shape[1]}\n")
        for (r, c) in sorted(coords):
            handle.write(f"{r} {c}\n")


def load_coordinate_file(path):
    """Read a :class:`BinaryMatrix` from the coordinate text format."""
    shape, coords = _read_coords(path)
    return BinaryMatrix(shape[0], shape[1], frozenset(coords))


def save_coordinate_file(matrix, path):
    """Write a :class:`BinaryMatrix` in the coordinate text format."""
    _write_coords(path, matrix.shape, matrix.ones)


def load_mask(path):
    """Read an :class:`ObservationMask` from the coordinate text format."""
    shape, coords = _read_coords(path)
    return ObservationMask(shape[0], shape[1], frozenset(coords))


def save_mask(mask, path):
    """Write an :class:`ObservationMask` in the coordinate text format."""
    _write_coords(path, mask.shape, mask.cells)
