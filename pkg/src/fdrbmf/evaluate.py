"""Comparing computed and planted factorizations, and exhaustive minimizers for tiny data."""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np

from .binmat import FactorPairBinary, as_binary, boolean_product, residual_l1


def _f_from_counts(tp: int, n_pred: int, n_true: int) -> float:
    if n_pred == 0 and n_true == 0:
        return 1.0
    if n_pred == 0 or n_true == 0 or tp == 0:
        return 0.0
    precision = tp / n_pred
    recall = tp / n_true
    return 2 * precision * recall / (precision + recall)


def _check_dims(a: FactorPairBinary, b: FactorPairBinary):
    if (a.m, a.n) != (b.m, b.n):
        raise ValueError(f"factorizations cover {(a.m, a.n)} and {(b.m, b.n)}")


def f_measure(computed: FactorPairBinary, planted: FactorPairBinary, mode: str = "cell") -> float:
    """Agreement of two factorizations in ``[0, 1]``.

    ``cell`` compares the two Boolean products as sets of ones. ``tile_matched``
    pairs computed with planted tiles greedily by their cell F-measure and
    micro-averages precision and recall over the matched tiles' ones.
    """
    _check_dims(computed, planted)
    if mode == "cell":
        A = boolean_product(computed).astype(bool)
        B = boolean_product(planted).astype(bool)
        return _f_from_counts(int((A & B).sum()), int(A.sum()), int(B.sum()))
    if mode != "tile_matched":
        raise ValueError(f"unknown mode {mode!r}")

    comp = computed.compact()
    plan = planted.compact()
    cx, cy = comp.X.astype(np.int64), comp.Y.astype(np.int64)
    px, py = plan.X.astype(np.int64), plan.Y.astype(np.int64)
    size_c = cx.sum(axis=0) * cy.sum(axis=0)
    size_p = px.sum(axis=0) * py.sum(axis=0)
    total_c, total_p = int(size_c.sum()), int(size_p.sum())
    if total_c == 0 or total_p == 0:
        return _f_from_counts(0, total_c, total_p)
    # overlap of rank-1 blocks factorizes over rows and columns
    inter = (cx.T @ px) * (cy.T @ py)
    denom = size_c[:, None] + size_p[None, :]
    pair_f = 2.0 * inter / denom
    order = sorted(
        ((-pair_f[i, j], i, j) for i in range(inter.shape[0]) for j in range(inter.shape[1])),
    )
    used_c, used_p = set(), set()
    tp = 0
    for neg_f, i, j in order:
        if neg_f == 0.0:
            break
        if i in used_c or j in used_p:
            continue
        used_c.add(i)
        used_p.add(j)
        tp += int(inter[i, j])
    return _f_from_counts(tp, total_c, total_p)


def empirical_fdr(computed: FactorPairBinary, planted: FactorPairBinary, t: float = 0.0):
    """Share of computed tiles whose overlap with the planted model is at most ``t``.

    Returns ``None`` for a rank-0 factorization, where the rate is undefined.
    """
    _check_dims(computed, planted)
    comp = computed.compact()
    if comp.n_columns == 0:
        return None
    model = boolean_product(planted).astype(np.int64)
    false = 0
    for tile in comp.tiles():
        y, x = tile.usage.astype(np.int64), tile.pattern.astype(np.int64)
        overlap = y @ model @ x
        if overlap / (y.sum() * x.sum()) <= t:
            false += 1
    return false / comp.n_columns


def wrong_rec_rate(pred: FactorPairBinary, ratings, bad_threshold: float = 2.5):
    """Percentage of rated cells covered by the Boolean product whose score is below ``bad_threshold``.

    ``ratings`` holds ``(row, col, score)`` triples in matrix coordinates.
    Returns ``None`` when no covered cell carries a rating.
    """
    P = boolean_product(pred)
    traced = bad = 0
    for row, col, score in ratings:
        row, col = int(row), int(col)
        if not (0 <= row < P.shape[0] and 0 <= col < P.shape[1]):
            raise IndexError(f"rating ({row}, {col}) outside {P.shape}")
        if P[row, col]:
            traced += 1
            bad += score < bad_threshold
    if traced == 0:
        return None
    return 100.0 * bad / traced


def _bit_rows(n: int, r: int) -> np.ndarray:
    """All ``2**(n*r)`` binary ``n x r`` matrices, enumerated in counting order."""
    codes = np.arange(2 ** (n * r), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n * r)) & 1
    return bits.reshape(-1, n, r).astype(np.uint8)


def minimum_residual(D, r: int) -> tuple[int, list]:
    """Minimum of the Boolean residual over rank-``r`` factorizations, and the optimal patterns.

    For a fixed pattern matrix the usage rows decouple, so each row picks its
    best subset of tiles independently. Returns the minimum and a list of
    ``(X, choices)`` where ``choices[j]`` lists every optimal usage row ``j``.
    """
    D = as_binary(D, "D")
    m, n = D.shape
    if n * r > 12 or m * r > 12:
        raise ValueError(f"exhaustive search capped at n*r, m*r <= 12; got {n * r}, {m * r}")
    usages = _bit_rows(1, r).reshape(-1, r)  # all 2**r usage rows
    best = None
    optimal = []
    for X in _bit_rows(n, r):
        rows = (usages.astype(np.int64) @ X.T.astype(np.int64) > 0).astype(np.uint8)
        cost = (rows[None, :, :] != D[:, None, :]).sum(axis=2)  # m x 2**r
        low = cost.min(axis=1)
        total = int(low.sum())
        if best is None or total < best:
            best, optimal = total, []
        if total == best:
            choices = [usages[cost[j] == low[j]] for j in range(m)]
            optimal.append((X.copy(), choices))
    return best, optimal


def brute_force_minimizer(D, r: int):
    """Yield every ``FactorPairBinary`` of rank budget ``r`` with minimum residual."""
    _, optimal = minimum_residual(D, r)
    for X, choices in optimal:
        for rows in itertools.product(*choices):
            yield FactorPairBinary(X, np.array(rows, dtype=np.uint8))


@dataclass
class EvalReport:
    f_measure: float
    f_measure_tiles: float
    rank_computed: int
    rank_planted: int
    residual: int
    empirical_fdr: float | None

    FIELDS = (
        "f_measure", "f_measure_tiles", "rank_computed",
        "rank_planted", "residual", "empirical_fdr",
    )

    def to_dict(self) -> dict:
        return asdict(self)

    def csv_row(self) -> list:
        return [_fmt(getattr(self, k)) for k in self.FIELDS]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        w.writerow(self.csv_row())
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def evaluate(D, computed: FactorPairBinary, planted: FactorPairBinary, t: float = 0.0) -> EvalReport:
    return EvalReport(
        f_measure=f_measure(computed, planted, "cell"),
        f_measure_tiles=f_measure(computed, planted, "tile_matched"),
        rank_computed=computed.rank,
        rank_planted=planted.rank,
        residual=residual_l1(D, computed),
        empirical_fdr=empirical_fdr(computed, planted, t),
    )
