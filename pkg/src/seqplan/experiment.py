"""Repeated seeded planning runs and their aggregate statistics."""

from __future__ import annotations

import csv
import json
import math
import time
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .config import PRUNE_REASONS, PlannerConfig, planner_to_dict
from .costs import Weights
from .planner import PlanResult, plan_sequence
from .scene import Scene
from .sceneio import scene_hash

SEQ_SEP = ">"


def sequence_label(seq) -> str:
    return SEQ_SEP.join(seq)


def _num(v: float):
    if v is None or v != v:
        return None
    return float(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf")


@dataclass
class RunRecord:
    seed: int
    scene_hash: str
    plan: PlanResult
    wall_time: float = 0.0

    def node_rows(self) -> list[dict]:
        rows = []
        for n in self.plan.nodes:
            r = n.report
            rows.append({
                "id": n.id, "parent": n.parent, "depth": n.depth, "prefix": list(n.prefix),
                "active": n.active, "grasp": n.grasp, "failure": n.failure.value,
                "status": n.status.value, "prune_reason": n.prune_reason.value if n.prune_reason else None,
                "episode_cost": _num(n.episode_cost), "accumulated_cost": _num(n.accumulated_cost),
                "c_p": _num(r.c_p) if r else None, "c_l": _num(r.c_l) if r else None,
                "c_v": _num(r.c_v) if r else None, "c_w": _num(r.c_w) if r else None,
            })
        return rows

    def to_dict(self, include_time: bool = True) -> dict:
        out = {
            "seed": self.seed,
            "scene_hash": self.scene_hash,
            "ranked": [{"sequence": list(r.sequence), "total_cost": _num(r.total_cost)} for r in self.plan.ranked],
            "stats": self.plan.stats.to_dict(),
            "nodes": self.node_rows(),
        }
        if include_time:
            out["wall_time"] = self.wall_time
        return out


def _mean_sigma(values) -> tuple[float, float]:
    vals = [v for v in values if v is not None and math.isfinite(v)]
    if not vals:
        return math.nan, math.nan
    a = np.asarray(vals, dtype=float)
    return float(a.mean()), float(a.std())


@dataclass
class AggregateStats:
    runs: int
    histogram: dict[str, int]
    first_per_node: tuple[float, float]
    second_per_node: tuple[float, float]
    pruned_pct: dict[str, tuple[float, float]]
    pruned_pct_visited: dict[str, tuple[float, float]]
    total_pruned_pct: tuple[float, float]
    significant_pct: tuple[float, float]
    no_valid_runs: int = 0
    extras: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float, float]]:
        """``metric, mean, sigma`` rows in a fixed order."""
        out = [
            ("first_ranked_cost_per_node", *self.first_per_node),
            ("second_ranked_cost_per_node", *self.second_per_node),
        ]
        for r in PRUNE_REASONS:
            out.append((f"pruned_pct_{r.value}", *self.pruned_pct[r.value]))
        out.append(("pruned_pct_total", *self.total_pruned_pct))
        for r in PRUNE_REASONS:
            out.append((f"pruned_pct_visited_{r.value}", *self.pruned_pct_visited[r.value]))
        out.append(("significant_movement_pct", *self.significant_pct))
        for key, val in self.extras.items():
            out.append((key, *val))
        return out

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "no_valid_runs": self.no_valid_runs,
            "histogram": dict(self.histogram),
            "metrics": {name: {"mean": _num(m), "sigma": _num(s)} for name, m, s in self.rows()},
        }


def aggregate(records: list[RunRecord]) -> AggregateStats:
    hist: Counter = Counter()
    first, second, signif, total = [], [], [], []
    pct = {r.value: [] for r in PRUNE_REASONS}
    pct_v = {r.value: [] for r in PRUNE_REASONS}
    visited, simulated = [], []
    no_valid = 0
    for rec in records:
        plan = rec.plan
        if plan.best is None:
            hist["(none)"] += 1
            no_valid += 1
        else:
            hist[sequence_label(plan.best.sequence)] += 1
            first.append(plan.best.per_node)
        if len(plan.ranked) > 1:
            second.append(plan.ranked[1].per_node)
        st = plan.stats
        for k, v in st.pruned_pct("worst_case").items():
            pct[k].append(v)
        for k, v in st.pruned_pct("visited").items():
            pct_v[k].append(v)
        total.append(st.total_pruned_pct("worst_case"))
        signif.append(st.significant_pct)
        visited.append(st.visited)
        simulated.append(st.simulated)
    ordered = dict(sorted(hist.items(), key=lambda kv: (-kv[1], kv[0])))
    return AggregateStats(
        runs=len(records),
        histogram=ordered,
        first_per_node=_mean_sigma(first),
        second_per_node=_mean_sigma(second),
        pruned_pct={k: _mean_sigma(v) for k, v in pct.items()},
        pruned_pct_visited={k: _mean_sigma(v) for k, v in pct_v.items()},
        total_pruned_pct=_mean_sigma(total),
        significant_pct=_mean_sigma(signif),
        no_valid_runs=no_valid,
        extras={"visited_nodes": _mean_sigma(visited), "simulated_nodes": _mean_sigma(simulated)},
    )


@dataclass
class ExperimentResult:
    records: list[RunRecord]
    stats: AggregateStats
    config: PlannerConfig


def run_experiment(scene: Scene, weights: Weights | None = None, config: PlannerConfig | None = None,
                   runs: int = 25, seed0: int = 0, progress=None) -> ExperimentResult:
    """Plan ``runs`` times with seeds ``seed0 .. seed0 + runs - 1``."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    config = config or PlannerConfig()
    weights = weights or Weights()
    digest = scene_hash(scene)
    records = []
    for k in range(runs):
        seed = seed0 + k
        t = time.perf_counter()
        plan = plan_sequence(scene, weights, config, seed=seed)
        records.append(RunRecord(seed, digest, plan, time.perf_counter() - t))
        if progress is not None:
            progress(k + 1, runs, records[-1])
    return ExperimentResult(records, aggregate(records), config)


def rerun(record: RunRecord, scene: Scene, weights: Weights, config: PlannerConfig) -> PlanResult:
    """Reproduce a recorded run from its seed."""
    if scene_hash(scene) != record.scene_hash:
        raise ValueError("scene does not match the recorded hash")
    return plan_sequence(scene, weights, config, seed=record.seed)


def write_histogram_csv(stats: AggregateStats, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sequence", "frequency"])
        for seq, freq in stats.histogram.items():
            w.writerow([seq, freq])
    return path


def write_stats_csv(stats: AggregateStats, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "mean", "sigma"])
        for name, mean, sigma in stats.rows():
            w.writerow([name, repr(mean), repr(sigma)])
    return path


def write_records(records: list[RunRecord], path) -> Path:
    path = Path(path)
    with path.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    return path


def experiment_config(config: PlannerConfig, jitter: float | None = None, workers: int | None = None
                      ) -> PlannerConfig:
    kw = {}
    if jitter is not None:
        kw["jitter"] = jitter
    if workers is not None:
        kw["workers"] = workers
    return replace(config, **kw) if kw else config


def config_summary(config: PlannerConfig) -> dict:
    return planner_to_dict(config)
