"""Synthetic experiment grids: generate, factorize, evaluate, write CSV tables."""
from __future__ import annotations

import csv
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .driver import TrustConfig, trust_pal
from .evaluate import evaluate
from .synth import PlantedParams, make_instance

logger = logging.getLogger(__name__)

GRID_KEYS = ("n", "m", "r_star", "d", "p_plus", "p_minus")

RUN_COLUMNS = (
    "cell", "rep", "seed", "n", "m", "r_star", "d", "p_plus", "p_minus", "method",
    "p_hat", "q", "f_measure", "f_measure_tiles", "rank", "rank_planted",
    "rank_error", "residual", "empirical_fdr", "rounds", "stop_reason", "error",
)

AGG_METRICS = ("f_measure", "f_measure_tiles", "rank", "rank_error", "residual", "empirical_fdr")


@dataclass
class ExperimentSpec:
    """A parameter grid of planted instances and the factorization settings.

    ``grid`` maps each of ``n, m, r_star, d, p_plus, p_minus`` to a list of
    values; the key ``p_pm`` varies both noise rates together.
    """

    grid: dict
    seed: int
    repetitions: int = 1
    methods: list = field(default_factory=lambda: ["density"])
    trust: dict = field(default_factory=lambda: {"p_hat": 0.1})
    t: float = 0.0

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be at least 1")
        if self.seed is None:
            raise ValueError("experiments need an explicit seed")
        for meth in self.methods:
            if meth not in ("density", "coherence", "both"):
                raise ValueError(f"unknown method {meth!r}")
        cells = self.cells()
        if not cells:
            raise ValueError("the grid has no cells")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def cells(self) -> list[dict]:
        grid = dict(self.grid)
        if "p_pm" in grid:
            pm = grid.pop("p_pm")
            if "p_plus" in grid or "p_minus" in grid:
                raise ValueError("p_pm cannot be combined with p_plus/p_minus")
        else:
            pm = None
        defaults = {"d": [0.1], "p_plus": [0.1], "p_minus": [0.1]}
        for key in ("n", "m", "r_star"):
            if key not in grid:
                raise ValueError(f"grid needs values for {key!r}")
        unknown = set(grid) - set(GRID_KEYS)
        if unknown:
            raise ValueError(f"unknown grid keys: {sorted(unknown)}")
        cells = []
        if pm is not None:
            keys = ("n", "m", "r_star", "d")
            for values in itertools.product(*(grid.get(k, defaults.get(k)) for k in keys)):
                for p in pm:
                    cells.append({**dict(zip(keys, values)), "p_plus": p, "p_minus": p})
        else:
            for values in itertools.product(*(grid.get(k, defaults.get(k)) for k in GRID_KEYS)):
                cells.append(dict(zip(GRID_KEYS, values)))
        return cells


def run_seed(base: int, cell: int, rep: int) -> int:
    """Per-run seed derived from the experiment seed and the run's grid position."""
    return int(np.random.SeedSequence([base, cell, rep]).generate_state(1)[0])


def _run_one(task):
    cell_index, rep, seed, cell, methods, trust, t = task
    rows, timings = [], []
    base = {"cell": cell_index, "rep": rep, "seed": seed, **cell}
    try:
        inst = make_instance(PlantedParams(seed=seed, **cell))
    except Exception as exc:  # recorded per row, the grid keeps going
        for meth in methods:
            rows.append({**base, "method": meth, "error": f"{type(exc).__name__}: {exc}"})
            timings.append({"cell": cell_index, "rep": rep, "method": meth, "seconds": 0.0})
        return rows, timings
    for meth in methods:
        cfg = TrustConfig(**{**trust, "method": meth, "seed": seed})
        row = {**base, "method": meth, "p_hat": cfg.p_hat, "q": cfg.q}
        start = time.perf_counter()
        try:
            run = trust_pal(inst.D, cfg)
            rep_ = evaluate(inst.D, run.factors, inst.planted, t)
            row.update(
                f_measure=rep_.f_measure,
                f_measure_tiles=rep_.f_measure_tiles,
                rank=rep_.rank_computed,
                rank_planted=rep_.rank_planted,
                rank_error=rep_.rank_computed - cell["r_star"],
                residual=rep_.residual,
                empirical_fdr=rep_.empirical_fdr,
                rounds=run.total_rounds,
                stop_reason=run.stop_reason,
            )
        except Exception as exc:
            logger.exception("run failed: cell %d rep %d %s", cell_index, rep, meth)
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
        timings.append(
            {"cell": cell_index, "rep": rep, "method": meth,
             "seconds": time.perf_counter() - start}
        )
    return rows, timings


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])


def aggregate(rows) -> list[dict]:
    """Mean and standard deviation of each metric per grid cell and method."""
    groups: dict = {}
    for row in rows:
        if row.get("error"):
            continue
        groups.setdefault((row["cell"], row["method"]), []).append(row)
    out = []
    for (cell, meth), members in sorted(groups.items()):
        first = members[0]
        agg = {"cell": cell, "method": meth, "runs": len(members)}
        agg.update({k: first[k] for k in GRID_KEYS})
        for metric in AGG_METRICS:
            vals = [r[metric] for r in members if r.get(metric) is not None]
            vals = np.array(vals, dtype=np.float64)
            agg[f"{metric}_mean"] = float(vals.mean()) if vals.size else None
            agg[f"{metric}_std"] = float(vals.std()) if vals.size else None
        out.append(agg)
    return out


def aggregate_columns() -> list[str]:
    cols = ["cell", "method", "runs", *GRID_KEYS]
    for metric in AGG_METRICS:
        cols += [f"{metric}_mean", f"{metric}_std"]
    return cols


def run_experiment(spec: ExperimentSpec, out_dir, workers: int = 1) -> dict:
    """Run every grid cell and repetition; write ``runs.csv``, ``aggregate.csv``, ``timings.csv``.

    Result tables hold no wall-clock values, so reruns with the same spec
    produce identical bytes; times go to ``timings.csv``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    for ci, cell in enumerate(spec.cells()):
        for rep in range(spec.repetitions):
            tasks.append((ci, rep, run_seed(spec.seed, ci, rep), cell,
                          list(spec.methods), dict(spec.trust), spec.t))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one, tasks))
    else:
        results = [_run_one(task) for task in tasks]
    rows = [row for r, _ in results for row in r]
    timings = [tm for _, t in results for tm in t]
    _write_csv(out / "runs.csv", RUN_COLUMNS, rows)
    agg = aggregate(rows)
    _write_csv(out / "aggregate.csv", aggregate_columns(), agg)
    _write_csv(out / "timings.csv", ("cell", "rep", "method", "seconds"), timings)
    (out / "spec.json").write_text(json.dumps(asdict(spec), indent=2, sort_keys=True) + "\n")
    return {"runs": rows, "aggregate": agg}
