"""Ratings triples to binary matrices: thresholding and degree pruning."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class RatingsTable:
    rows: np.ndarray
    cols: np.ndarray
    scores: np.ndarray
    row_ids: list
    col_ids: list
    duplicates: int = 0

    @classmethod
    def from_triples(cls, triples) -> "RatingsTable":
        """Build from ``(row_id, col_id, score)``; a repeated pair keeps its last score."""
        cells: dict = {}
        duplicates = 0
        for row_id, col_id, score in triples:
            key = (row_id, col_id)
            if key in cells:
                duplicates += 1
            cells[key] = float(score)
        row_index: dict = {}
        col_index: dict = {}
        rows, cols, scores = [], [], []
        for (row_id, col_id), score in cells.items():
            rows.append(row_index.setdefault(row_id, len(row_index)))
            cols.append(col_index.setdefault(col_id, len(col_index)))
            scores.append(score)
        if duplicates:
            logger.warning("%d duplicate ratings replaced by their last occurrence", duplicates)
        return cls(
            np.array(rows, dtype=np.int64),
            np.array(cols, dtype=np.int64),
            np.array(scores, dtype=np.float64),
            list(row_index),
            list(col_index),
            duplicates,
        )

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_ids), len(self.col_ids)


def read_ratings(path) -> RatingsTable:
    """Read ``row_id,col_id,score`` lines (comma or tab separated, optional header)."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: no ratings")
    delimiter = "\t" if "\t" in lines[0] else ","
    triples = []
    for k, fields in enumerate(csv.reader(lines, delimiter=delimiter)):
        if len(fields) < 3:
            raise ValueError(f"{path}: line {k + 1} has fewer than three fields")
        try:
            score = float(fields[2])
        except ValueError:
            if k == 0:
                continue  # header
            raise ValueError(f"{path}: line {k + 1} has a non-numeric score") from None
        triples.append((fields[0].strip(), fields[1].strip(), score))
    return RatingsTable.from_triples(triples)


@dataclass
class BinarizedRatings:
    matrix: np.ndarray
    row_ids: list
    col_ids: list
    row_map: np.ndarray  # table row index -> matrix row, -1 when pruned
    col_map: np.ndarray
    passes: int  # pruning rounds that removed something

    @property
    def density(self) -> float:
        return float(self.matrix.mean())

    def triples(self, table: RatingsTable):
        """Ratings of surviving rows and columns in matrix coordinates."""
        r = self.row_map[table.rows]
        c = self.col_map[table.cols]
        keep = (r >= 0) & (c >= 0)
        return list(zip(r[keep].tolist(), c[keep].tolist(), table.scores[keep].tolist()))


def binarize_ratings(
    rt: RatingsTable,
    positive_threshold: float = 3.0,
    min_row_degree: int = 0,
    min_col_degree: int = 0,
) -> BinarizedRatings:
    """A cell is 1 iff its score exceeds ``positive_threshold``.

    Rows and then columns with fewer ones than the minimum degrees are
    dropped alternately until neither step removes anything.
    """
    if not np.isfinite(positive_threshold):
        raise ValueError("positive_threshold must be finite")
    if min_row_degree < 0 or min_col_degree < 0:
        raise ValueError("minimum degrees must be non-negative")
    M = np.zeros(rt.shape, dtype=np.uint8)
    pos = rt.scores > positive_threshold
    M[rt.rows[pos], rt.cols[pos]] = 1
    row_keep = np.ones(M.shape[0], dtype=bool)
    col_keep = np.ones(M.shape[1], dtype=bool)
    passes = 0
    while True:
        sub = M[np.ix_(row_keep, col_keep)]
        drop_rows = sub.sum(axis=1) < min_row_degree
        row_keep[np.flatnonzero(row_keep)[drop_rows]] = False
        sub = M[np.ix_(row_keep, col_keep)]
        drop_cols = sub.sum(axis=0) < min_col_degree
        col_keep[np.flatnonzero(col_keep)[drop_cols]] = False
        if not drop_rows.any() and not drop_cols.any():
            break
        passes += 1
    matrix = np.ascontiguousarray(M[np.ix_(row_keep, col_keep)])
    if matrix.size == 0 or not matrix.any():
        raise ValueError("binarization and pruning left no ones in the matrix")
    row_map = np.full(M.shape[0], -1, dtype=np.int64)
    row_map[row_keep] = np.arange(row_keep.sum())
    col_map = np.full(M.shape[1], -1, dtype=np.int64)
    col_map[col_keep] = np.arange(col_keep.sum())
    return BinarizedRatings(
        matrix,
        [rt.row_ids[i] for i in np.flatnonzero(row_keep)],
        [rt.col_ids[i] for i in np.flatnonzero(col_keep)],
        row_map,
        col_map,
        passes,
    )
