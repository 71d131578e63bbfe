"""Grasp candidates and single-episode outcome prediction."""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial.transform import Rotation

from .config import SimConfig
from .costs import CostReport, Weights, evaluate_costs
from .dynamics import kernel
from .dynamics.episode import EpisodeResult, run_episode
from .dynamics.polytope import build_tables
from .geometry import Box, Pose
from .scene import ManipulationPlan, Scene

SWEEP_RESOLUTION = 0.005  # spacing of collision samples along a sweep


class NoFeasibleGrasp(RuntimeError):
    """Every grasp candidate collides with static geometry."""


class Failure(str, Enum):
    NONE = "none"
    ACTIVE_MOVED = "active_moved"
    OUT_OF_WORKSPACE = "out_of_workspace"
    PLANNING_FAILURE = "planning_failure"


@dataclass
class PredictionOutcome:
    report: CostReport
    valid: bool
    threshold: float
    failure: Failure
    plan: ManipulationPlan | None = None
    episode: EpisodeResult | None = None

    @property
    def cost(self) -> float:
        """Episode cost used by the planner (infinite on any failure)."""
        return math.inf if self.failure is not Failure.NONE else self.report.c_w


INFINITE_REPORT = CostReport(math.inf, math.inf, math.inf, math.inf, {}, {})


def _frame_from_z(z: np.ndarray) -> np.ndarray:
    """Deterministic right-handed frame whose third axis is ``z``."""
    z = z / np.linalg.norm(z)
    ref = np.array([0.0, 0.0, 1.0]) if abs(z[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    x = np.cross(ref, z)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    return np.column_stack([x, y, z])


def _matrix_to_quat(m: np.ndarray) -> np.ndarray:
    q = Rotation.from_matrix(m).as_quat()
    q = np.array([q[3], q[0], q[1], q[2]])
    return q if q[0] >= 0 else -q


def principal_axes(pose: Pose) -> tuple[int, float, list[int]]:
    """Local axis closest to world up, its sign, and the two remaining axes."""
    rot = pose.rotation
    up = int(np.argmax(np.abs(rot[2])))
    sign = 1.0 if rot[2, up] >= 0 else -1.0
    return up, sign, [k for k in range(3) if k != up]


def generate_grasps(scene: Scene, object_id: str, cfg: SimConfig | None = None) -> list[ManipulationPlan]:
    """Top grasp then side grasps (+a, -a, +b, -b), minus those blocked by static geometry."""
    cfg = cfg or SimConfig()
    obj = scene.get(object_id)
    rot = obj.pose.rotation
    center = np.asarray(obj.pose.position)
    gh = cfg.gripper_half_extents
    up, sign, sides = principal_axes(obj.pose)
    candidates = []

    def place(normal, extent):
        frame = _frame_from_z(normal)
        q = _matrix_to_quat(frame)
        pos = center + normal * (extent + gh[2] + cfg.grasp_standoff)
        return Pose.from_arrays(pos, q)

    n_up = sign * rot[:, up]
    g = place(n_up, obj.shape.support_extent(up))
    approach = (g.translated(n_up * cfg.approach_distance), g)
    extraction = (g, g.translated((0.0, 0.0, cfg.lift_height)))
    candidates.append(ManipulationPlan(object_id, g, approach, extraction, "top", gh))
    for name, k in zip("xy", sides):
        for s, tag in ((1.0, "+"), (-1.0, "-")):
            n = s * rot[:, k]
            ext = obj.shape.support_extent(k)
            g = place(n, ext)
            approach = (g.translated(n * cfg.approach_distance), g)
            extraction = (g, g.translated(n * (2.0 * ext + cfg.extract_clearance)))
            candidates.append(ManipulationPlan(object_id, g, approach, extraction, tag + name, gh))

    feasible = [c for c in candidates if _clear_of_static(scene, obj, c, cfg)]
    if not feasible:
        raise NoFeasibleGrasp(f"no collision-free grasp for {object_id!r}")
    return feasible


def _sample_sweep(waypoints, step: float) -> tuple[np.ndarray, np.ndarray]:
    pos, quat = [], []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        pa, pb = np.asarray(a.position), np.asarray(b.position)
        n = max(1, int(math.ceil(np.linalg.norm(pb - pa) / step)))
        for k in range(n + 1):
            pos.append(pa + (pb - pa) * k / n)
            quat.append(a.orientation)
    return np.array(pos), np.array(quat)


def _clear_of_static(scene: Scene, obj, plan: ManipulationPlan, cfg: SimConfig) -> bool:
    if not scene.static:
        return True
    statics = sorted(scene.static, key=lambda s: s.id)
    shapes = [s.shape for s in statics] + [Box(tuple(plan.gripper_half_extents)), obj.shape]
    tables = build_tables(shapes, cfg.cylinder_segments).as_tuple()
    others = np.arange(len(statics), dtype=np.int64)
    opos = np.array([s.pose.position for s in statics], dtype=float)
    oquat = np.array([s.pose.orientation for s in statics], dtype=float)
    gi, oi = len(statics), len(statics) + 1
    limit = -cfg.static_clearance

    gp, gq = _sample_sweep(list(plan.approach) + list(plan.extraction[1:]), SWEEP_RESOLUTION)
    if kernel.sweep_clearance(gi, gp, gq, others, opos, oquat, *tables) < limit:
        return False
    # the carried object follows the gripper rigidly during extraction
    ep, _ = _sample_sweep(plan.extraction, SWEEP_RESOLUTION)
    offset = np.asarray(obj.pose.position) - np.asarray(plan.grasp_pose.position)
    op = ep + offset
    oq = np.tile(np.asarray(obj.pose.orientation), (len(op), 1))
    return kernel.sweep_clearance(oi, op, oq, others, opos, oquat, *tables) >= limit


def grasp_order(n: int, seed: int | None, object_id: str) -> list[int]:
    """Candidate order; a seed shuffles it reproducibly per object."""
    if seed is None:
        return list(range(n))
    rng = np.random.default_rng([int(seed), zlib.crc32(object_id.encode())])
    return [int(i) for i in rng.permutation(n)]


def predict_outcome(scene: Scene, active_id: str, w: Weights | None = None, threshold: float = 2.0,
                    cfg: SimConfig | None = None, seed: int | None = None) -> PredictionOutcome:
    """Plan the first feasible grasp, simulate it and classify the damage."""
    cfg = cfg or SimConfig()
    w = w or Weights()
    scene.get(active_id)
    try:
        plans = generate_grasps(scene, active_id, cfg)
    except NoFeasibleGrasp:
        return PredictionOutcome(INFINITE_REPORT, False, threshold, Failure.PLANNING_FAILURE)
    plan = plans[grasp_order(len(plans), seed, active_id)[0]]
    episode = run_episode(scene, plan, cfg=cfg)
    report = evaluate_costs(episode, active_id, w, shapes={o.id: o.shape for o in scene.objects})
    if episode.flags.active_unreachable:
        failure = Failure.ACTIVE_MOVED
    elif episode.flags.out_of_workspace:
        failure = Failure.OUT_OF_WORKSPACE
    else:
        failure = Failure.NONE
    valid = failure is Failure.NONE and report.c_w <= threshold
    return PredictionOutcome(report, valid, threshold, failure, plan, episode)
