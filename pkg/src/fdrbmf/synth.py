"""Planted factorizations with Bernoulli noise."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .binmat import FactorPairBinary, boolean_product


@dataclass(frozen=True)
class PlantedParams:
    n: int
    m: int
    r_star: int
    d: float = 0.1
    p_plus: float = 0.1
    p_minus: float = 0.1
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PlantedInstance:
    X_star: np.ndarray
    Y_star: np.ndarray
    D: np.ndarray
    params: PlantedParams

    @property
    def planted(self) -> FactorPairBinary:
        return FactorPairBinary(self.X_star, self.Y_star)


def size_range(dim: int, d: float) -> tuple[int, int]:
    """Integer tile sizes allowed along a dimension: ``[ceil(0.01 dim), floor(d dim)]``."""
    lo = -(-dim // 100)
    hi = math.floor(d * dim + 1e-9)
    return lo, hi


def _random_supports(dim, count, d, rng):
    lo, hi = size_range(dim, d)
    if lo < 1 or hi < lo:
        raise ValueError(f"empty tile size range [{lo}, {hi}] for dimension {dim} and d={d}")
    M = np.zeros((dim, count), dtype=np.uint8)
    for s in range(count):
        size = int(rng.integers(lo, hi + 1))
        M[rng.choice(dim, size=size, replace=False), s] = 1
    return M


def generate_planted(n: int, m: int, r_star: int, d: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``r_star`` tiles: a uniform size in the allowed range, then a uniform support."""
    if not 0.01 <= d <= 1.0:
        raise ValueError(f"d must lie in [0.01, 1], got {d}")
    if r_star < 0:
        raise ValueError("r_star must be non-negative")
    X = np.zeros((n, r_star), dtype=np.uint8)
    Y = np.zeros((m, r_star), dtype=np.uint8)
    for s in range(r_star):
        X[:, s] = _random_supports(n, 1, d, rng)[:, 0]
        Y[:, s] = _random_supports(m, 1, d, rng)[:, 0]
    if r_star == 0:
        # validate the ranges even when nothing is drawn
        for dim in (n, m):
            lo, hi = size_range(dim, d)
            if lo < 1 or hi < lo:
                raise ValueError(f"empty tile size range [{lo}, {hi}] for dimension {dim}")
    return X, Y


def apply_noise(M, p_plus: float, p_minus: float, rng) -> np.ndarray:
    """Flip zeros to one with ``p_plus`` and ones to zero with ``p_minus``, independently per cell."""
    for p in (p_plus, p_minus):
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"noise probability {p} outside [0, 1]")
    M = np.asarray(M, dtype=np.uint8)
    u = rng.random(M.shape)
    flip = np.where(M == 1, u < p_minus, u < p_plus)
    return (M ^ flip).astype(np.uint8)


def make_instance(params: PlantedParams) -> PlantedInstance:
    rng = np.random.default_rng(params.seed)
    X, Y = generate_planted(params.n, params.m, params.r_star, params.d, rng)
    clean = boolean_product(FactorPairBinary(X, Y))
    D = apply_noise(clean, params.p_plus, params.p_minus, rng)
    return PlantedInstance(X, Y, D, params)
