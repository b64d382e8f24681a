"""Proximal alternating linearized minimization of ``F(X, Y) = 1/2 ||D - Y X^T||^2``.

Factors live in the box ``[0, 1]``; the proximal map of its indicator is
the entrywise clamp. Step sizes are inverse Lipschitz moduli of the
partial gradients, i.e. spectral norms of the factor Gram matrices.
"""
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class FactorPairRelaxed:
    """Real factors ``X`` (n x r) and ``Y`` (m x r) with entries in ``[0, 1]``."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=np.float64)
        self.Y = np.ascontiguousarray(self.Y, dtype=np.float64)
        if self.X.ndim != 2 or self.Y.ndim != 2 or self.X.shape[1] != self.Y.shape[1]:
            raise ValueError(
                f"incompatible factor shapes {self.X.shape} and {self.Y.shape}"
            )

    @classmethod
    def empty(cls, n: int, m: int) -> "FactorPairRelaxed":
        return cls(np.zeros((n, 0)), np.zeros((m, 0)))

    @property
    def n_columns(self) -> int:
        return self.X.shape[1]

    def copy(self) -> "FactorPairRelaxed":
        return FactorPairRelaxed(self.X.copy(), self.Y.copy())

    def select(self, columns) -> "FactorPairRelaxed":
        return FactorPairRelaxed(self.X[:, columns], self.Y[:, columns])


@dataclass
class OptimizeTrace:
    objective_values: list = field(default_factory=list)
    iterations: int = 0
    stop_reason: str = "max_iter"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective"])
        for k, v in enumerate(self.objective_values):
            w.writerow([k, repr(float(v))])
        return buf.getvalue()


def _check_shapes(D, P):
    m, n = D.shape
    if P.X.shape[0] != n or P.Y.shape[0] != m:
        raise ValueError(
            f"factors {P.X.shape}, {P.Y.shape} do not match data of shape {D.shape}"
        )


def relaxed_objective(D, P: FactorPairRelaxed) -> float:
    D = np.asarray(D, dtype=np.float64)
    _check_shapes(D, P)
    R = D - P.Y @ P.X.T
    return 0.5 * float(np.sum(R * R))


def grad_X(D, P: FactorPairRelaxed) -> np.ndarray:
    """``(Y X^T - D)^T Y``."""
    D = np.asarray(D, dtype=np.float64)
    return P.X @ (P.Y.T @ P.Y) - D.T @ P.Y


def grad_Y(D, P: FactorPairRelaxed) -> np.ndarray:
    """``(Y X^T - D) X``."""
    D = np.asarray(D, dtype=np.float64)
    return P.Y @ (P.X.T @ P.X) - D @ P.X


def spectral_norm(G: np.ndarray, tol: float = 1e-6, max_iter: int = 100) -> float:
    """Largest eigenvalue of the symmetric PSD matrix ``G`` by power iteration.

    Falls back to the Frobenius norm, an upper bound, when the iteration
    does not settle within ``max_iter`` steps.
    """
    r = G.shape[0]
    if r == 0:
        return 0.0
    v = np.full(r, 1.0 / np.sqrt(r))
    lam = 0.0
    for _ in range(max_iter):
        w = G @ v
        lam_new = float(np.linalg.norm(w))
        if lam_new == 0.0:
            return 0.0
        v = w / lam_new
        if abs(lam_new - lam) <= tol * lam_new:
            return lam_new
        lam = lam_new
    logger.debug("power iteration did not converge; using Frobenius norm")
    return float(np.linalg.norm(G))


def prox_box(M: np.ndarray, step: float = 1.0) -> np.ndarray:
    """Proximal map of the indicator of ``[0, 1]``; independent of ``step``."""
    return np.clip(M, 0.0, 1.0)


def grad_step_X(D, P: FactorPairRelaxed):
    """One proximal gradient step in ``X``; returns the new ``X`` and the step size."""
    D = np.asarray(D, dtype=np.float64)
    G = P.Y.T @ P.Y
    L = max(spectral_norm(G), 1e-12)
    alpha = 1.0 / L
    grad = P.X @ G - D.T @ P.Y
    return prox_box(P.X - alpha * grad, alpha), alpha


def grad_step_Y(D, P: FactorPairRelaxed):
    """One proximal gradient step in ``Y`` at the current ``X``."""
    D = np.asarray(D, dtype=np.float64)
    G = P.X.T @ P.X
    L = max(spectral_norm(G), 1e-12)
    beta = 1.0 / L
    grad = P.Y @ G - D @ P.X
    return prox_box(P.Y - beta * grad, beta), beta


def optimize(
    D,
    P0: FactorPairRelaxed,
    max_iter: int = 2000,
    min_decrease: float = 1e-4,
) -> tuple[FactorPairRelaxed, OptimizeTrace]:
    """Alternate ``X`` then ``Y`` steps until the cap or a small objective decrease."""
    D = np.asarray(D, dtype=np.float64)
    _check_shapes(D, P0)
    X, Y = P0.X.copy(), P0.Y.copy()
    half_norm_d = 0.5 * float(np.sum(D * D))
    trace = OptimizeTrace([relaxed_objective(D, P0)])
    if max_iter <= 0:
        return FactorPairRelaxed(X, Y), trace
    prev = trace.objective_values[0]
    for k in range(max_iter):
        G = Y.T @ Y
        L = spectral_norm(G)
        alpha = 1.0 / max(L, 1e-12)
        X = prox_box(X - alpha * (X @ G - D.T @ Y))

        H = X.T @ X
        L = spectral_norm(H)
        beta = 1.0 / max(L, 1e-12)
        DX = D @ X
        Y = prox_box(Y - beta * (Y @ H - DX))

        # F = 1/2|D|^2 - <D X, Y> + 1/2 <X^T X, Y^T Y>
        obj = half_norm_d - float(np.sum(DX * Y)) + 0.5 * float(np.sum(H * (Y.T @ Y)))
        if not np.isfinite(obj):
            raise FloatingPointError(f"non-finite objective at iteration {k + 1}")
        trace.objective_values.append(obj)
        trace.iterations = k + 1
        if prev - obj < min_decrease:
            trace.stop_reason = "min_decrease"
            break
        prev = obj
    return FactorPairRelaxed(X, Y), trace
