"""Tail bounds on the probability that a tile is made of Bernoulli noise.

All probabilities are handled as natural logarithms. A tile is accepted at
level ``q`` when its log-probability bound is at most ``log(q)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .binmat import (
    EmptyTileError,
    FactorPairBinary,
    InapplicableError,
    Tile,
    as_binary,
    boolean_product,
    tile_density,
    tile_eta,
)


class Method(str, Enum):
    DENSITY = "density"
    COHERENCE = "coherence"
    COHERENCE_TRANSPOSED = "coherence_transposed"


@dataclass(frozen=True)
class NoiseModel:
    """Estimated Bernoulli rate of positive noise and null-hypothesis overlap tolerance."""

    p_hat: float
    t: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.p_hat < 1.0:
            raise ValueError(f"p_hat must lie in [0, 1), got {self.p_hat}")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {self.t}")


@dataclass
class BoundCertificate:
    tile_index: int
    method: Method
    log_prob_bound: float
    accepted: bool
    pattern_size: int
    usage_size: int
    statistic: float = math.nan
    inapplicable: bool = False

    @property
    def prob_bound(self) -> float:
        return math.exp(self.log_prob_bound)

    def to_dict(self) -> dict:
        return {
            "tile_index": self.tile_index,
            "method": self.method.value,
            "log_prob_bound": self.log_prob_bound,
            "accepted": self.accepted,
            "pattern_size": self.pattern_size,
            "usage_size": self.usage_size,
            "statistic": None if math.isnan(self.statistic) else self.statistic,
            "inapplicable": self.inapplicable,
        }


def _check_level(q: float) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError(f"control level q must lie in (0, 1), got {q}")
    return math.log(q)


def log_binom(n: int, k: int) -> float:
    """``log C(n, k)``.

    Small ``min(k, n-k)`` uses an exact sum of log-ratios, which keeps the
    relative error near machine precision where the log-gamma difference
    would cancel catastrophically.
    """
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"log_binom needs 0 <= k <= n, got n={n}, k={k}")
    k = min(k, n - k)
    if k == 0:
        return 0.0
    if k <= 1000:
        i = np.arange(1, k + 1, dtype=np.float64)
        return float(np.sum(np.log1p((n - k) / i)))
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def density_tail_log(n: int, m: int, a: int, b: int, delta: float, p: float) -> float:
    """Log of ``C(n,a) C(m,b) exp(-2ab(delta-p)^2)``, clamped at 0.

    Bounds the probability that an ``m x n`` Bernoulli(``p``) matrix holds a
    ``delta``-dense tile with at least ``a`` columns and ``b`` rows.
    """
    if not (1 <= a <= n and 1 <= b <= m):
        raise ValueError(f"need 1 <= a <= n and 1 <= b <= m, got a={a}, b={b}, n={n}, m={m}")
    if delta < p:
        raise ValueError(f"delta={delta} below p={p}: bound is vacuous")
    return _density_log(n, m, a, b, delta - p)


def _density_log(n, m, a, b, rho):
    return min(0.0, log_binom(n, a) + log_binom(m, b) - 2.0 * a * b * rho * rho)


def coherence_tail_log(
    n: int,
    m: int,
    mu: float,
    p: float,
    include_pair_factor: bool = True,
    ordered_pairs: bool = False,
) -> float:
    """Log of the Bernstein bound on ``P(max_{i≠k} <B_i, B_k> >= m mu)``, clamped at 0.

    The union over column pairs contributes ``log(n(n-1)/2)``, or
    ``log(n(n-1))`` with ``ordered_pairs``.
    """
    if n < 2:
        raise ValueError("coherence bound needs n >= 2")
    p2 = p * p
    if mu <= p2:
        raise ValueError(f"mu={mu} must exceed p^2={p2}")
    value = -1.5 * m * (mu - p2) ** 2 / (2.0 * p2 + mu)
    if include_pair_factor:
        pairs = n * (n - 1) if ordered_pairs else n * (n - 1) / 2
        value += math.log(pairs)
    return min(0.0, value)


def certify_tile_density(
    D, t: Tile, nm: NoiseModel, q: float, tile_index: int = 0
) -> BoundCertificate:
    log_q = _check_level(q)
    D = as_binary(D, "D")
    m, n = D.shape
    a, b = t.size
    delta_s = tile_density(t, D)
    rho = max(delta_s - nm.t - nm.p_hat, 0.0)
    if rho == 0.0:
        log_bound = 0.0
    else:
        log_bound = _density_log(n, m, a, b, rho)
    return BoundCertificate(
        tile_index, Method.DENSITY, log_bound, log_bound <= log_q, a, b, delta_s
    )


def certify_tile_coherence(
    D,
    t: Tile,
    nm: NoiseModel,
    q: float,
    transposed: bool = False,
    tile_index: int = 0,
    include_pair_factor: bool = True,
) -> BoundCertificate:
    """Coherence certificate; in ``transposed`` mode rows play the role of columns."""
    log_q = _check_level(q)
    D = as_binary(D, "D")
    m, n = D.shape
    a, b = t.size
    method = Method.COHERENCE_TRANSPOSED if transposed else Method.COHERENCE
    # dimension over which pairs are formed, and dimension being summed over
    n_pairs, m_sum = (m, n) if transposed else (n, m)
    try:
        eta_s = tile_eta(t, D, transposed)
    except InapplicableError:
        return BoundCertificate(
            tile_index, method, 0.0, False, a, b, inapplicable=True
        )
    mu_s = eta_s / m_sum
    p2 = nm.p_hat**2
    mu_tilde = max(mu_s - nm.t / m_sum, p2)
    if mu_tilde == p2:
        log_bound = 0.0
    else:
        log_bound = coherence_tail_log(
            n_pairs, m_sum, mu_tilde, nm.p_hat, include_pair_factor
        )
    return BoundCertificate(tile_index, method, log_bound, log_bound <= log_q, a, b, mu_s)


def exclusive_density(D, F: FactorPairBinary, s: int) -> float:
    """Density of tile ``s`` on the cells no other tile covers."""
    D = as_binary(D, "D")
    t = F.tile(s)
    if t.empty:
        raise EmptyTileError(f"tile {s} is empty")
    others = np.ones(F.n_columns, dtype=bool)
    others[s] = False
    M = boolean_product(FactorPairBinary(F.X[:, others], F.Y[:, others]))
    free = (1 - M).astype(np.int64)
    y, x = t.usage.astype(np.int64), t.pattern.astype(np.int64)
    area = y @ free @ x
    if area == 0:
        raise ValueError(f"tile {s} has no area outside the other tiles")
    hits = y @ (D * free) @ x
    return float(hits) / float(area)


def overlap_floor(delta: float, x_size: int, y_size: int) -> float:
    """Lower bound on ``eta(D)`` implied by a ``delta``-dense tile of a minimizer."""
    if x_size < 2:
        raise ValueError("the coherence floor needs at least two pattern ones")
    return delta * y_size * (delta * x_size - 1.0) / (x_size - 1.0)


@dataclass(frozen=True)
class CurvePoint:
    a: int
    a_rel: float
    b: int
    b_rel: float
    infeasible: bool = False


def _density_logs(n, m, a, rho):
    b = np.arange(1, m + 1, dtype=np.float64)
    log_cm = gammaln(m + 1) - gammaln(b + 1) - gammaln(m - b + 1)
    return log_binom(n, a) + log_cm - 2.0 * a * b * rho * rho


def _coherence_logs(n, m, a, delta, p, ordered_pairs, integer_eta):
    b = np.arange(1, m + 1, dtype=np.float64)
    floor = delta * b * (delta * a - 1.0) / (a - 1.0)
    if integer_eta:
        floor = np.floor(floor)
    mu = floor / m
    p2 = p * p
    pairs = n * (n - 1) if ordered_pairs else n * (n - 1) / 2
    with np.errstate(invalid="ignore", divide="ignore"):
        logs = math.log(pairs) - 1.5 * m * (mu - p2) ** 2 / (2.0 * p2 + mu)
    return np.where(mu > p2, logs, np.inf)


def min_usage_curve(
    n: int,
    m: int,
    p: float,
    q: float,
    delta: float,
    method: str,
    a_grid,
    ordered_pairs: bool = True,
    integer_eta: bool = True,
) -> list[CurvePoint]:
    """Smallest usage count ``b`` per pattern size ``a`` that certifies at level ``q``.

    The density curve assumes the tile is ``delta``-dense in the noise. The
    coherence curve feeds the minimizer floor on ``eta`` into the Bernstein
    bound; ``integer_eta`` rounds that floor down to a whole overlap count
    and ``ordered_pairs`` counts each column pair twice in the union bound.
    Both default to the convention matching the reference curve coordinates.

    Every ``b`` in ``1..m`` is evaluated, so the result is the true minimum
    even where the density bound is not monotone in ``b``.
    """
    method = Method(method)
    log_q = _check_level(q)
    if method is Method.DENSITY and delta <= p:
        raise ValueError("density curve needs delta > p")
    points = []
    for a in a_grid:
        a = int(a)
        if method is Method.DENSITY:
            if not 1 <= a <= n:
                raise ValueError(f"pattern size {a} outside [1, {n}]")
            logs = _density_logs(n, m, a, delta - p)
        else:
            if not 2 <= a <= n:
                raise ValueError(f"coherence curve needs pattern size in [2, {n}], got {a}")
            logs = _coherence_logs(n, m, a, delta, p, ordered_pairs, integer_eta)
        ok = np.flatnonzero(np.minimum(logs, 0.0) <= log_q)
        if ok.size == 0:
            points.append(CurvePoint(a, a / n, m, 1.0, True))
        else:
            b = int(ok[0]) + 1
            points.append(CurvePoint(a, a / n, b, b / m))
    return points
