"""Search over removal orders with branch-and-bound and subtree reuse.

Each tree node is a configuration: the objects still present after removing
a prefix of the sequence.  The root holds every object; a child removes one
more object (its ``active`` id) from its parent's configuration, and the
episode that performs this removal is scored when the child is visited.  A
node with a single object left is a leaf: that object is taken out last and
costs nothing, provided a grasp for it exists.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterator, Sequence

import numpy as np

from .config import PRUNE_REASONS, PlannerConfig, PruneReason
from .costs import CostReport, Weights
from .dynamics.episode import settle
from .geometry import quat_angle
from .prediction import Failure, NoFeasibleGrasp, generate_grasps, predict_outcome
from .scene import Scene

MAX_TREE_OBJECTS = 12

_FAILURE_REASON = {
    Failure.ACTIVE_MOVED: PruneReason.ACTIVE_OBJECT_MOVED,
    Failure.OUT_OF_WORKSPACE: PruneReason.OUT_OF_WORKSPACE,
    Failure.PLANNING_FAILURE: PruneReason.PLANNING_FAILURE,
}


class RefusesLargeScene(ValueError):
    """The scene has more objects than the planner is configured to handle."""


def worst_case_tree_size(n: int) -> int:
    """Node count of the fully expanded removal tree: sum of n!/i! for i = 1..n."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    if n > MAX_TREE_OBJECTS:
        raise OverflowError(f"tree size for n > {MAX_TREE_OBJECTS} objects is out of range")
    total, term = 0, 1
    # n!/i! for i = n, n-1, ..., 1
    for i in range(n, 0, -1):
        total += term
        term *= i
    return total


# ---------------------------------------------------------------------------
# tree skeleton
# ---------------------------------------------------------------------------


class NodeStatus(str, Enum):
    PENDING = "pending"
    EVALUATED = "evaluated"
    PRUNED = "pruned"


@dataclass
class SearchNode:
    id: int
    parent: int | None
    depth: int
    remaining: frozenset
    active: str | None
    entry_scene: Scene | None = None
    episode_cost: float = 0.0
    accumulated_cost: float = 0.0
    status: NodeStatus = NodeStatus.PENDING
    prune_reason: PruneReason | None = None
    report: CostReport | None = None
    failure: Failure = Failure.NONE
    grasp: str = ""
    prefix: tuple = ()
    parent_scene: Scene | None = field(default=None, repr=False)

    @property
    def is_leaf(self) -> bool:
        return len(self.remaining) <= 1


class SearchTree:
    """Lazily enumerable tree of all removal orders of ``ids``."""

    def __init__(self, ids: Sequence[str]):
        self.ids = tuple(sorted(ids))

    def walk(self) -> Iterator[tuple[tuple[str, ...], frozenset]]:
        """Depth-first ``(removed prefix, remaining set)`` pairs, children by ascending id."""
        stack = [((), frozenset(self.ids))]
        while stack:
            prefix, remaining = stack.pop()
            yield prefix, remaining
            if len(remaining) <= 1:
                continue
            for oid in sorted(remaining, reverse=True):
                stack.append((prefix + (oid,), remaining - {oid}))

    def node_count(self) -> int:
        return sum(1 for _ in self.walk())

    def level_counts(self) -> list[int]:
        """Node count per depth, root first."""
        counts = [0] * len(self.ids)
        for prefix, _ in self.walk():
            counts[len(prefix)] += 1
        return counts

    def sequences(self) -> Iterator[tuple[str, ...]]:
        for prefix, remaining in self.walk():
            if len(remaining) == 1:
                yield prefix + tuple(remaining)


def build_tree(scene: Scene, config: PlannerConfig | None = None) -> SearchTree:
    config = config or PlannerConfig()
    n = len(scene.objects)
    if n < 1:
        raise ValueError("scene has no objects")
    if n > config.max_objects:
        raise RefusesLargeScene(f"{n} objects exceed the configured maximum of {config.max_objects}")
    return SearchTree(scene.ids)


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedSequence:
    sequence: tuple[str, ...]
    total_cost: float

    @property
    def per_node(self) -> float:
        """Mean episode cost; the free last removal is not counted."""
        return self.total_cost / max(1, len(self.sequence) - 1)


@dataclass
class PlanStats:
    n_objects: int
    worst_case: int
    visited: int = 0
    evaluated: int = 0
    simulated: int = 0
    pruned: dict = field(default_factory=lambda: {r.value: 0 for r in PRUNE_REASONS})
    unexpanded: dict = field(default_factory=lambda: {r.value: 0 for r in PRUNE_REASONS})
    significant: int = 0

    def pruned_pct(self, basis: str = "worst_case") -> dict:
        """Share of tree nodes cut off per reason, in percent.

        ``worst_case`` counts pruned nodes plus their unexpanded descendants
        against the full tree; ``visited`` counts pruned nodes against the
        nodes actually visited.
        """
        out = {}
        for r in PRUNE_REASONS:
            k = r.value
            if basis == "worst_case":
                out[k] = 100.0 * (self.pruned[k] + self.unexpanded[k]) / self.worst_case
            else:
                out[k] = 100.0 * self.pruned[k] / self.visited if self.visited else 0.0
        return out

    def total_pruned_pct(self, basis: str = "worst_case") -> float:
        return sum(self.pruned_pct(basis).values())

    @property
    def significant_pct(self) -> float:
        return 100.0 * self.significant / self.simulated if self.simulated else 0.0

    def to_dict(self) -> dict:
        return {
            "n_objects": self.n_objects,
            "worst_case_nodes": self.worst_case,
            "visited": self.visited,
            "evaluated": self.evaluated,
            "simulated": self.simulated,
            "pruned": dict(self.pruned),
            "unexpanded_descendants": dict(self.unexpanded),
            "pruned_pct_worst_case": {k: round(v, 6) for k, v in self.pruned_pct("worst_case").items()},
            "pruned_pct_visited": {k: round(v, 6) for k, v in self.pruned_pct("visited").items()},
            "significant_nodes": self.significant,
            "significant_pct": round(self.significant_pct, 6),
        }


@dataclass
class PlanResult:
    ranked: list[RankedSequence]
    stats: PlanStats
    nodes: list[SearchNode] = field(default_factory=list)
    executed: tuple[str, ...] = ()

    @property
    def best(self) -> RankedSequence | None:
        return self.ranked[0] if self.ranked else None

    @property
    def valid(self) -> bool:
        return bool(self.ranked)

    def reports(self) -> dict[int, CostReport]:
        return {n.id: n.report for n in self.nodes if n.report is not None}


def rank_sequences(found: dict, tolerance: float) -> list[RankedSequence]:
    """Ascending cost; costs within ``tolerance`` of a cluster's cheapest tie and sort by ids."""
    items = sorted(((c, s) for s, c in found.items() if math.isfinite(c)), key=lambda t: (t[0], t[1]))
    ranked: list[RankedSequence] = []
    i = 0
    while i < len(items):
        j = i
        while j + 1 < len(items) and items[j + 1][0] - items[i][0] <= tolerance:
            j += 1
        cluster = sorted(items[i:j + 1], key=lambda t: t[1])
        ranked.extend(RankedSequence(s, c) for c, s in cluster)
        i = j + 1
    return ranked


# ---------------------------------------------------------------------------
# node evaluation
# ---------------------------------------------------------------------------


@dataclass
class _Job:
    scene: Scene
    active: str
    weights: Weights
    threshold: float
    config: PlannerConfig
    seed: int | None


@dataclass
class _JobResult:
    report: CostReport
    failure: Failure
    final_scene: Scene
    grasp: str


def _run_job(job: _Job) -> _JobResult:
    out = predict_outcome(job.scene, job.active, job.weights, job.threshold, job.config.sim, seed=job.seed)
    if out.episode is not None:
        final = out.episode.final_scene
    else:
        # no grasp: the object is taken out without simulating anything
        final = job.scene.without(job.active)
    return _JobResult(out.report, out.failure, final, out.plan.label if out.plan else "")


def _fork_pool(workers: int) -> ProcessPoolExecutor:
    try:
        ctx = multiprocessing.get_context("fork")
    except ValueError:  # pragma: no cover - platforms without fork
        ctx = None
    return ProcessPoolExecutor(max_workers=workers, mp_context=ctx)


def evaluate_level_parallel(nodes: list[SearchNode], workers: int = 1, weights: Weights | None = None,
                            config: PlannerConfig | None = None, seed: int | None = None,
                            executor: Executor | None = None) -> list[SearchNode]:
    """Simulate each pending node's episode; results do not depend on ``workers``.

    Every node must carry ``parent_scene``.  Nodes are updated in place and
    returned in input order.
    """
    config = config or PlannerConfig()
    weights = weights or Weights()
    jobs = [_Job(n.parent_scene, n.active, weights, config.threshold, config, _node_seed(seed, config))
            for n in nodes]
    if executor is not None and len(jobs) > 1:
        results = list(executor.map(_run_job, jobs))
    elif workers > 1 and len(jobs) > 1:
        with _fork_pool(min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    for node, res in zip(nodes, results):
        node.report = res.report
        node.failure = res.failure
        node.grasp = res.grasp
        node.entry_scene = res.final_scene
        node.episode_cost = math.inf if res.failure is not Failure.NONE else res.report.c_w
        node.status = NodeStatus.EVALUATED
    return nodes


def _node_seed(seed: int | None, config: PlannerConfig) -> int | None:
    # without jitter every source of run-to-run variation is switched off
    return seed if (seed is not None and config.jitter > 0) else None


def jitter_scene(scene: Scene, seed: int, amount: float, config: PlannerConfig) -> Scene:
    """Shift every object horizontally by at most ``amount`` and let the scene settle."""
    rng = np.random.default_rng(seed)
    objs = []
    for o in sorted(scene.objects, key=lambda o: o.id):
        dx, dy = rng.uniform(-amount, amount, size=2)
        objs.append(replace(o, pose=o.pose.translated((dx, dy, 0.0))))
    order = {o.id: k for k, o in enumerate(scene.objects)}
    objs.sort(key=lambda o: order[o.id])
    moved, _ = settle(scene.with_objects(objs), config.sim.settle_time, config.sim.rest_speed, config.sim)
    return moved


# ---------------------------------------------------------------------------
# search
# ---------------------------------------------------------------------------


@dataclass
class _Memo:
    scene: Scene
    best: float  # cheapest completion found below the node
    suffix: tuple
    floor: float  # every cost-bound cut below the node had at least this partial cost

    @property
    def exact(self) -> bool:
        return self.best <= self.floor


def _similar(a: Scene, b: Scene, pos_tol: float, deg_tol: float) -> bool:
    for o in a.objects:
        p = b.get(o.id).pose
        if np.linalg.norm(np.subtract(o.pose.position, p.position)) > pos_tol:
            return False
        if math.degrees(quat_angle(o.pose.orientation, p.orientation)) > deg_tol:
            return False
    return True


class _Search:
    def __init__(self, scene: Scene, weights: Weights, config: PlannerConfig, seed: int | None,
                 executor: Executor | None):
        self.scene = scene
        self.weights = weights
        self.config = config
        self.seed = seed
        self.executor = executor
        n = len(scene.objects)
        self.stats = PlanStats(n, worst_case_tree_size(n))
        self.nodes: list[SearchNode] = []
        self.found: dict[tuple, float] = {}
        self.incumbent = math.inf
        self.memo: dict[frozenset, list[_Memo]] = {}
        self.tol = config.tie_tolerance

    def _new_node(self, **kw) -> SearchNode:
        node = SearchNode(id=len(self.nodes), **kw)
        self.nodes.append(node)
        self.stats.visited += 1
        return node

    def _prune(self, node: SearchNode, reason: PruneReason):
        node.status = NodeStatus.PRUNED
        node.prune_reason = reason
        self.stats.pruned[reason.value] += 1
        self.stats.unexpanded[reason.value] += worst_case_tree_size(len(node.remaining)) - 1 \
            if len(node.remaining) >= 1 else 0

    def _record(self, sequence: tuple, total: float):
        if not math.isfinite(total):
            return
        if sequence not in self.found or total < self.found[sequence]:
            self.found[sequence] = total
        self.incumbent = min(self.incumbent, total)

    def run(self) -> PlanResult:
        root = self._new_node(parent=None, depth=0, remaining=frozenset(self.scene.ids), active=None,
                              entry_scene=self.scene)
        root.status = NodeStatus.EVALUATED
        self._expand(root)
        ranked = rank_sequences(self.found, self.tol)
        for node in self.nodes:
            if node.status is NodeStatus.EVALUATED:
                self.stats.evaluated += 1
        return PlanResult(ranked, self.stats, self.nodes)

    def _leaf(self, node: SearchNode) -> tuple[float, tuple]:
        (last,) = tuple(node.remaining)
        try:
            generate_grasps(node.entry_scene, last, self.config.sim)
        except NoFeasibleGrasp:
            if self.config.prunes(PruneReason.PLANNING_FAILURE):
                self._prune(node, PruneReason.PLANNING_FAILURE)
            return math.inf, (last,)
        self._record(node.prefix + (last,), node.accumulated_cost)
        return 0.0, (last,)

    def _lookup(self, node: SearchNode) -> _Memo | None:
        for memo in self.memo.get(node.remaining, ()):
            if _similar(node.entry_scene, memo.scene, self.config.similarity_pos, self.config.similarity_deg):
                return memo
        return None

    def _expand(self, node: SearchNode) -> tuple[float, tuple, float]:
        """Explore below ``node``; returns (best completion, its suffix, cut floor)."""
        if node.is_leaf:
            best, suffix = self._leaf(node)
            return best, suffix, math.inf

        children = [
            self._new_node(parent=node.id, depth=node.depth + 1, remaining=node.remaining - {oid}, active=oid,
                           prefix=node.prefix + (oid,), parent_scene=node.entry_scene)
            for oid in sorted(node.remaining)
        ]
        evaluate_level_parallel(children, self.config.workers, self.weights, self.config, self.seed,
                                executor=self.executor)
        self.stats.simulated += len(children)

        best, best_suffix, floor = math.inf, (), math.inf
        for child in children:
            child.parent_scene = None
            child.accumulated_cost = node.accumulated_cost + child.episode_cost
            if child.failure is not Failure.PLANNING_FAILURE and child.report.c_w > self.config.significance:
                self.stats.significant += 1
            partial = child.episode_cost
            sub, suffix, sub_floor = self._visit(child)
            if math.isfinite(sub_floor):
                floor = min(floor, partial + sub_floor)
            total = partial + sub
            here = (child.active,) + suffix
            if total < best - self.tol or (abs(total - best) <= self.tol and here < best_suffix):
                best, best_suffix = total, here
        return best, best_suffix, floor

    def _visit(self, child: SearchNode) -> tuple[float, tuple, float]:
        cfg = self.config
        if child.failure is not Failure.NONE:
            reason = _FAILURE_REASON[child.failure]
            if cfg.prunes(reason):
                self._prune(child, reason)
                return math.inf, (), math.inf
        if cfg.prunes(PruneReason.COST_BOUND) and child.accumulated_cost > self.incumbent + self.tol:
            self._prune(child, PruneReason.COST_BOUND)
            return math.inf, (), 0.0
        if not child.is_leaf and cfg.prunes(PruneReason.KNOWN_SUBTREE):
            memo = self._lookup(child)
            if memo is not None:
                if memo.exact:
                    self._prune(child, PruneReason.KNOWN_SUBTREE)
                    self._record(child.prefix + memo.suffix, child.accumulated_cost + memo.best)
                    return memo.best, memo.suffix, math.inf
                if child.accumulated_cost + memo.floor > self.incumbent + self.tol:
                    self._prune(child, PruneReason.KNOWN_SUBTREE)
                    return math.inf, (), memo.floor
        best, suffix, floor = self._expand(child)
        if not child.is_leaf and cfg.prunes(PruneReason.KNOWN_SUBTREE):
            self.memo.setdefault(child.remaining, []).append(_Memo(child.entry_scene, best, suffix, floor))
        return best, suffix, floor


def plan_sequence(scene: Scene, w: Weights | None = None, config: PlannerConfig | None = None,
                  seed: int | None = None) -> PlanResult:
    """Cheapest removal order of all objects in ``scene``.

    ``seed`` (used only when ``config.jitter > 0``) shifts the start poses
    by up to ``jitter`` and shuffles grasp candidates, reproducibly.
    """
    config = config or PlannerConfig()
    w = w or Weights()
    build_tree(scene, config)
    if seed is not None and config.jitter > 0:
        scene = jitter_scene(scene, seed, config.jitter, config)
    if config.workers > 1:
        with _fork_pool(config.workers) as pool:
            return _Search(scene, w, config, seed, pool).run()
    return _Search(scene, w, config, seed, None).run()


def replan(scene_after_execution: Scene, executed: Sequence[str], w: Weights | None = None,
           config: PlannerConfig | None = None, seed: int | None = None) -> PlanResult:
    """Plan the remaining objects after ``executed`` have been taken out."""
    executed = tuple(executed)
    present = set(scene_after_execution.ids) & set(executed)
    if present:
        raise ValueError(f"executed objects still in scene: {', '.join(sorted(present))}")
    result = plan_sequence(scene_after_execution, w, config, seed)
    result.executed = executed
    return result
