"""Rounding relaxed factors under false-discovery control, and rank-loop helpers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._backend import kernels
from .binmat import FactorPairBinary, Tile, as_binary
from .bounds import (
    BoundCertificate,
    Method,
    NoiseModel,
    certify_tile_coherence,
    certify_tile_density,
)
from .palm import FactorPairRelaxed


class FilterMethod(str, Enum):
    DENSITY = "density"
    COHERENCE = "coherence"
    BOTH = "both"


@dataclass
class RoundingReport:
    tau_x: float
    tau_y: float
    rank: int
    certificates: list = field(default_factory=list)
    residual: int = 0
    kept: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tau_x": self.tau_x,
            "tau_y": self.tau_y,
            "rank": self.rank,
            "residual": self.residual,
            "kept": list(self.kept),
            "certificates": [c.to_dict() for c in self.certificates],
        }


def round_threshold(M, tau: float) -> np.ndarray:
    """``ceil(M - tau)`` on ``[0, 1]`` entries: 1 exactly where ``M > tau``."""
    return (np.asarray(M) > tau).astype(np.uint8)


def certify_tile(
    D: np.ndarray, t: Tile, nm: NoiseModel, q: float, method, tile_index: int = 0
) -> BoundCertificate:
    """Best certificate for one tile under ``method``.

    Coherence tests both orientations and keeps the smaller bound; ``both``
    additionally compares against the density bound.
    """
    method = FilterMethod(method)
    a, b = t.size
    if a == 0 or b == 0:
        tag = Method.DENSITY if method is FilterMethod.DENSITY else Method.COHERENCE
        return BoundCertificate(tile_index, tag, 0.0, False, a, b)
    candidates = []
    if method in (FilterMethod.DENSITY, FilterMethod.BOTH):
        candidates.append(certify_tile_density(D, t, nm, q, tile_index))
    if method in (FilterMethod.COHERENCE, FilterMethod.BOTH):
        for transposed in (False, True):
            candidates.append(certify_tile_coherence(D, t, nm, q, transposed, tile_index))
    applicable = [c for c in candidates if not c.inapplicable]
    if not applicable:
        return candidates[0]
    return min(applicable, key=lambda c: c.log_prob_bound)


def filter_tiles(
    D, F: FactorPairBinary, nm: NoiseModel, q: float, method="density"
) -> tuple[FactorPairBinary, list]:
    """Zero every tile whose false-discovery bound exceeds ``q``."""
    D = as_binary(D, "D")
    if D.shape != (F.m, F.n):
        raise ValueError(f"D has shape {D.shape}, factorization is {(F.m, F.n)}")
    X, Y = F.X.copy(), F.Y.copy()
    certs = []
    for s in range(F.n_columns):
        cert = certify_tile(D, F.tile(s), nm, q, method, s)
        certs.append(cert)
        if not cert.accepted:
            X[:, s] = 0
            Y[:, s] = 0
    return FactorPairBinary(X, Y), certs


def threshold_grid(step: float) -> np.ndarray:
    k = round(1.0 / step)
    if k < 1 or abs(k * step - 1.0) > 1e-9:
        raise ValueError(f"grid step {step} does not divide 1")
    return np.arange(k + 1) / k


def round_fdr(
    D,
    P: FactorPairRelaxed,
    nm: NoiseModel,
    q: float,
    method="density",
    grid_step: float = 0.05,
) -> tuple[FactorPairBinary, RoundingReport]:
    """Filtered rounding minimizing the residual over all threshold pairs.

    Ties go to the smaller rank, then to the lexicographically smaller
    ``(tau_x, tau_y)``.
    """
    D = as_binary(D, "D")
    method = FilterMethod(method)
    m, n = D.shape
    if P.X.shape[0] != n or P.Y.shape[0] != m:
        raise ValueError("relaxed factors do not match the data shape")
    taus = threshold_grid(grid_step)
    r = P.n_columns
    Xr = [round_threshold(P.X, tau) for tau in taus]
    Yr = [round_threshold(P.Y, tau) for tau in taus]
    # supports shrink as tau grows, so a column's support is identified by its size
    cx = np.array([x.sum(axis=0) for x in Xr])
    cy = np.array([y.sum(axis=0) for y in Yr])

    cert_cache: dict = {}

    def cert_for(s, ix, iy):
        key = (s, int(cx[ix, s]), int(cy[iy, s]))
        cert = cert_cache.get(key)
        if cert is None:
            cert = certify_tile(D, Tile(Xr[ix][:, s], Yr[iy][:, s]), nm, q, method, s)
            cert_cache[key] = cert
        return cert

    residual_cache: dict = {}
    best = None
    for ix in range(len(taus)):
        for iy in range(len(taus)):
            certs = [cert_for(s, ix, iy) for s in range(r)]
            keep = [s for s in range(r) if certs[s].accepted]
            key = tuple((s, int(cx[ix, s]), int(cy[iy, s])) for s in keep)
            res = residual_cache.get(key)
            if res is None:
                Xf = np.ascontiguousarray(Xr[ix][:, keep])
                Yf = np.ascontiguousarray(Yr[iy][:, keep])
                res = kernels.residual(D, Xf, Yf)
                residual_cache[key] = res
            score = (res, len(keep))
            if best is None or score < best[0]:
                best = (score, ix, iy, keep, certs)

    (res, rank), ix, iy, keep, certs = best
    X = np.zeros((n, r), dtype=np.uint8)
    Y = np.zeros((m, r), dtype=np.uint8)
    X[:, keep] = Xr[ix][:, keep]
    Y[:, keep] = Yr[iy][:, keep]
    report = RoundingReport(
        float(taus[ix]), float(taus[iy]), rank, certs, int(res), list(keep)
    )
    return FactorPairBinary(X, Y), report


def rank_gap(F: FactorPairBinary, r_budget: int, gap: int) -> bool:
    """True when at least ``gap`` of the offered ``r_budget`` tiles were discarded."""
    return r_budget - F.rank >= gap


def increase_rank(
    P: FactorPairRelaxed, delta_r: int, rng: np.random.Generator
) -> FactorPairRelaxed:
    """Append ``delta_r`` columns drawn uniformly from ``[0, 1)`` to both factors."""
    if delta_r < 1:
        raise ValueError("delta_r must be at least 1")
    n, m = P.X.shape[0], P.Y.shape[0]
    X_new = rng.random((n, delta_r))
    Y_new = rng.random((m, delta_r))
    return FactorPairRelaxed(np.hstack([P.X, X_new]), np.hstack([P.Y, Y_new]))


def fdr_estimate(certificates) -> float:
    """Mean certified false-discovery probability over accepted tiles."""
    accepted = [c for c in certificates if c.accepted]
    if not accepted:
        return math.nan
    return sum(c.prob_bound for c in accepted) / len(accepted)
