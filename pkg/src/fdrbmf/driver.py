"""Rank escalation loop: grow, optimize, round under FDR control, stop on a rank gap."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .binmat import FactorPairBinary, as_binary
from .bounds import NoiseModel
from .palm import FactorPairRelaxed, OptimizeTrace, optimize
from .rounding import increase_rank, rank_gap, round_fdr

logger = logging.getLogger(__name__)


@dataclass
class TrustConfig:
    p_hat: float
    q: float = 0.01
    delta_r: int = 10
    method: str = "density"
    max_iter: int = 2000
    min_decrease: float = 1e-4
    grid_step: float = 0.05
    rank_gap: int | None = None
    max_rank_budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")
        if not 0.0 <= self.p_hat < 1.0:
            raise ValueError(f"p_hat must lie in [0, 1), got {self.p_hat}")
        if self.delta_r < 1:
            raise ValueError("delta_r must be at least 1")
        if self.method not in ("density", "coherence", "both"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_rank_budget is not None and self.max_rank_budget < self.delta_r:
            raise ValueError("max_rank_budget must be at least delta_r")

    def resolved(self, shape) -> "TrustConfig":
        """Copy with data-dependent defaults filled in."""
        m, n = shape
        budget = self.max_rank_budget
        if budget is None:
            budget = max(min(n, m) // 2, self.delta_r)
        gap = self.delta_r if self.rank_gap is None else self.rank_gap
        return TrustConfig(**{**asdict(self), "max_rank_budget": budget, "rank_gap": gap})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RoundRecord:
    budget: int
    trace: OptimizeTrace
    report: object

    def to_dict(self) -> dict:
        return {
            "budget": self.budget,
            "iterations": self.trace.iterations,
            "stop_reason": self.trace.stop_reason,
            "final_objective": self.trace.objective_values[-1],
            "rounding": self.report.to_dict(),
        }


@dataclass
class RunReport:
    factors: FactorPairBinary
    config: TrustConfig
    rounds: list = field(default_factory=list)
    stop_reason: str = "rank_gap"

    @property
    def rank(self) -> int:
        return self.factors.rank

    @property
    def total_rounds(self) -> int:
        return len(self.rounds)

    @property
    def certificates(self) -> list:
        if not self.rounds:
            return []
        return self.rounds[-1].report.certificates

    def fdr_estimate(self) -> float:
        """Mean certified bound over surviving tiles; nan at rank 0."""
        accepted = [c for c in self.certificates if c.accepted]
        if not accepted:
            return math.nan
        return sum(c.prob_bound for c in accepted) / len(accepted)

    def to_dict(self) -> dict:
        est = self.fdr_estimate()
        return {
            "config": self.config.to_dict(),
            "rank": self.rank,
            "total_rounds": self.total_rounds,
            "stop_reason": self.stop_reason,
            "fdr_estimate": None if math.isnan(est) else est,
            "rounds": [r.to_dict() for r in self.rounds],
        }


def trust_pal(D, cfg: TrustConfig) -> RunReport:
    """Factorize ``D`` choosing the rank by false-discovery control of each tile."""
    D = as_binary(D, "D")
    m, n = D.shape
    if m < 1 or n < 1:
        raise ValueError("data matrix must have at least one row and one column")
    cfg = cfg.resolved(D.shape)
    nm = NoiseModel(cfg.p_hat)
    rng = np.random.default_rng(cfg.seed)
    Df = D.astype(np.float64)

    relaxed = FactorPairRelaxed.empty(n, m)
    result = FactorPairBinary.empty(n, m)
    report = RunReport(result, cfg, stop_reason="budget_exhausted")
    while relaxed.n_columns + cfg.delta_r <= cfg.max_rank_budget:
        relaxed = increase_rank(relaxed, cfg.delta_r, rng)
        budget = relaxed.n_columns
        relaxed, trace = optimize(Df, relaxed, cfg.max_iter, cfg.min_decrease)
        result, rounding = round_fdr(D, relaxed, nm, cfg.q, cfg.method, cfg.grid_step)
        report.rounds.append(RoundRecord(budget, trace, rounding))
        report.factors = result
        logger.info(
            "budget %d: %d iterations, rank %d, residual %d",
            budget, trace.iterations, result.rank, rounding.residual,
        )
        if rank_gap(result, budget, cfg.rank_gap):
            report.stop_reason = "rank_gap"
            break
        relaxed = relaxed.select(rounding.kept)
    return report
