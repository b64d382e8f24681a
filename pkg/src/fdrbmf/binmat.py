"""Dense binary matrices: Boolean products, overlaps, densities and eta.

Binary matrices are plain ``numpy`` arrays of dtype ``uint8`` holding 0/1.
The data matrix ``D`` is ``m x n``; a factorization stores the pattern
matrix ``X`` (``n x r``) and the usage matrix ``Y`` (``m x r``), so the
``s``-th tile covers ``Y[:, s] X[:, s]^T``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._backend import kernels


class EmptyTileError(ValueError):
    """Raised when a density is requested for a tile with no cells."""


class InapplicableError(ValueError):
    """Raised when a coherence statistic needs a column pair that does not exist."""


def as_binary(M, name: str = "matrix") -> np.ndarray:
    """Validate ``M`` as a 2-d 0/1 array and return a C-contiguous uint8 copy-or-view."""
    A = np.asarray(M)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {A.shape}")
    if A.dtype != np.uint8:
        if A.size and not np.isin(A, (0, 1)).all():
            raise ValueError(f"{name} has entries outside {{0, 1}}")
        A = A.astype(np.uint8)
    elif A.size and A.max() > 1:
        raise ValueError(f"{name} has entries outside {{0, 1}}")
    return np.ascontiguousarray(A)


def _as_vector(v, name: str) -> np.ndarray:
    a = np.asarray(v)
    if a.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {a.shape}")
    if a.size and not np.isin(a, (0, 1)).all():
        raise ValueError(f"{name} has entries outside {{0, 1}}")
    return a.astype(np.uint8)


@dataclass(frozen=True)
class Tile:
    """A rank-1 binary component: ``pattern`` over columns, ``usage`` over rows."""

    pattern: np.ndarray
    usage: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pattern", _as_vector(self.pattern, "pattern"))
        object.__setattr__(self, "usage", _as_vector(self.usage, "usage"))

    @property
    def size(self) -> tuple[int, int]:
        """``(|x|, |y|)``."""
        return int(self.pattern.sum()), int(self.usage.sum())

    @property
    def empty(self) -> bool:
        a, b = self.size
        return a == 0 or b == 0

    def outer(self) -> np.ndarray:
        return np.outer(self.usage, self.pattern).astype(np.uint8)


@dataclass(frozen=True)
class FactorPairBinary:
    """Binary factors ``X`` (n x r, patterns) and ``Y`` (m x r, usages)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = as_binary(self.X, "X")
        Y = as_binary(self.Y, "Y")
        if X.shape[1] != Y.shape[1]:
            raise ValueError(
                f"X and Y need equal column counts, got {X.shape[1]} and {Y.shape[1]}"
            )
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def empty(cls, n: int, m: int) -> "FactorPairBinary":
        return cls(np.zeros((n, 0), np.uint8), np.zeros((m, 0), np.uint8))

    @classmethod
    def from_tiles(cls, tiles, n: int, m: int) -> "FactorPairBinary":
        tiles = list(tiles)
        if not tiles:
            return cls.empty(n, m)
        X = np.stack([t.pattern for t in tiles], axis=1)
        Y = np.stack([t.usage for t in tiles], axis=1)
        return cls(X, Y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[0]

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def active(self) -> np.ndarray:
        """Boolean mask of columns with a non-empty pattern and usage."""
        return (self.X.sum(axis=0) > 0) & (self.Y.sum(axis=0) > 0)

    @property
    def rank(self) -> int:
        return int(self.active().sum())

    def tile(self, s: int) -> Tile:
        return Tile(self.X[:, s], self.Y[:, s])

    def tiles(self):
        for s in range(self.n_columns):
            yield self.tile(s)

    def compact(self) -> "FactorPairBinary":
        """Drop columns that contribute nothing to the Boolean product."""
        keep = self.active()
        return FactorPairBinary(self.X[:, keep], self.Y[:, keep])

    def permuted(self, order) -> "FactorPairBinary":
        order = np.asarray(order, dtype=np.intp)
        return FactorPairBinary(self.X[:, order], self.Y[:, order])


def boolean_product(F: FactorPairBinary) -> np.ndarray:
    """``Y ⊙ X^T``: entry ``(j, i)`` is the OR over tiles of ``Y[j,s] X[i,s]``."""
    return kernels.boolean_product(F.X, F.Y)


def residual_l1(D, F: FactorPairBinary) -> int:
    """Number of cells where ``D`` and the Boolean product of ``F`` disagree."""
    D = as_binary(D, "D")
    if D.shape != (F.m, F.n):
        raise ValueError(f"D has shape {D.shape}, factorization is {(F.m, F.n)}")
    return kernels.residual(D, F.X, F.Y)


def _check_tile(t: Tile, M: np.ndarray) -> None:
    if t.usage.shape[0] != M.shape[0] or t.pattern.shape[0] != M.shape[1]:
        raise ValueError(
            f"tile of size ({t.usage.shape[0]}, {t.pattern.shape[0]}) "
            f"does not fit matrix of shape {M.shape}"
        )


def tile_submatrix(t: Tile, M) -> np.ndarray:
    """The block of ``M`` on the usage rows and pattern columns of ``t``."""
    M = np.asarray(M)
    _check_tile(t, M)
    return M[np.ix_(t.usage.astype(bool), t.pattern.astype(bool))]


def tile_overlap(t: Tile, M) -> int:
    """``y^T M x``, the number of ones of ``M`` covered by the tile."""
    return int(tile_submatrix(t, as_binary(M)).sum(dtype=np.int64))


def tile_density(t: Tile, M) -> float:
    """Fraction of ones of ``M`` inside the tile; the tile is δ-dense iff this is ≥ δ."""
    a, b = t.size
    if a == 0 or b == 0:
        raise EmptyTileError("density of an empty tile is undefined")
    return tile_overlap(t, M) / (a * b)


def eta(B) -> float:
    """Maximum inner product over pairs of distinct columns of ``B``.

    Integer-valued binary inputs use the exact kernel; real inputs use a
    floating-point Gram matrix.
    """
    A = np.asarray(B)
    if A.ndim != 2:
        raise ValueError("eta needs a 2-d matrix")
    if A.shape[1] < 2:
        raise InapplicableError("eta needs at least two columns")
    if A.dtype == bool or np.issubdtype(A.dtype, np.integer):
        if A.size == 0 or (A.min() >= 0 and A.max() <= 1):
            return kernels.eta(np.ascontiguousarray(A, dtype=np.uint8))
    A = A.astype(np.float64)
    G = A.T @ A
    np.fill_diagonal(G, -np.inf)
    return float(G.max())


def tile_eta(t: Tile, D, transposed: bool = False) -> int:
    """η of ``y x^T ∘ D``, computed on the tile's block.

    Columns of the Hadamard product outside the pattern are zero and rows
    outside the usage are zero, so only pairs inside the pattern support
    (usage support when ``transposed``) can attain the maximum.
    """
    sub = tile_submatrix(t, as_binary(D, "D"))
    if transposed:
        sub = sub.T
    if sub.shape[1] < 2:
        side = "usage" if transposed else "pattern"
        raise InapplicableError(f"coherence test needs at least two {side} ones")
    return kernels.eta(np.ascontiguousarray(sub))


def read_matrix(path) -> np.ndarray:
    """Read the text format: ``"m n"`` header, then ``m`` lines of ``n`` 0/1 characters."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        m, n = (int(v) for v in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"{path}: bad header {lines[0]!r}") from exc
    body = lines[1 : 1 + m]
    if len(body) != m:
        raise ValueError(f"{path}: expected {m} rows, found {len(body)}")
    M = np.zeros((m, n), dtype=np.uint8)
    for j, row in enumerate(body):
        if len(row) != n or set(row) - {"0", "1"}:
            raise ValueError(f"{path}: row {j + 1} is not {n} characters of 0/1")
        if n:
            M[j] = np.frombuffer(row.encode("ascii"), dtype=np.uint8) - ord("0")
    return M


def format_matrix(M) -> str:
    M = as_binary(M)
    m, n = M.shape
    rows = [(row + ord("0")).tobytes().decode("ascii") for row in M]
    return "\n".join([f"{m} {n}", *rows]) + "\n"


def write_matrix(path, M) -> None:
    Path(path).write_text(format_matrix(M))
