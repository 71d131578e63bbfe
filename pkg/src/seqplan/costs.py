"""Damage costs of one episode computed from the passive objects' trajectories.

Four metrics per passive object, each reduced by a maximum over objects:

* pose shift: straight distance between first and last centroid sample,
* path length: distance travelled by the centroid,
* swept convex volume (SCV): hull volume of the object's samples over all
  recorded poses divided by its initial hull volume,
* weighted SCV: the same after scaling each pose's deviation from the start
  pose per axis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.spatial.transform import Rotation

from .geometry import DegenerateInput, Pose, Shape, cloud_volume, convex_hull, hull_volume, sample_shape
from .dynamics.episode import EpisodeResult, Trajectory

GIMBAL_LIMIT_DEG = 80.0
METRICS = ("c_p", "c_l", "c_v", "c_w")


class GimbalWarning(UserWarning):
    """The pitch of a rotation delta is close to the Euler singularity."""


class DegenerateInitialHull(ValueError):
    """The object's initial sample cloud has zero volume."""


@dataclass(frozen=True)
class Weights:
    """Per-axis weights ``(x, y, z, roll, pitch, yaw)``."""

    w: tuple[float, float, float, float, float, float] = (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)

    def __post_init__(self):
        w = tuple(float(v) for v in self.w)
        if len(w) != 6:
            raise ValueError("weights need exactly 6 components")
        if not all(math.isfinite(v) and v >= 0 for v in w):
            raise ValueError("weights must be finite and >= 0")
        object.__setattr__(self, "w", w)

    @classmethod
    def ones(cls) -> "Weights":
        return cls()

    @property
    def translational(self) -> np.ndarray:
        return np.array(self.w[:3])

    @property
    def rotational(self) -> np.ndarray:
        return np.array(self.w[3:])

    @property
    def unit_translation(self) -> bool:
        return self.w[:3] == (1.0, 1.0, 1.0)

    @property
    def unit_rotation(self) -> bool:
        return self.w[3:] == (1.0, 1.0, 1.0)


@dataclass(frozen=True)
class ObjectCost:
    pose_shift: float
    path_length: float
    scv: float
    weighted_scv: float


@dataclass(frozen=True)
class CostReport:
    c_p: float
    c_l: float
    c_v: float
    c_w: float
    per_object: Mapping[str, ObjectCost] = field(default_factory=dict)
    argmax: Mapping[str, str | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def num(v):
            return float(v) if math.isfinite(v) else (".inf" if v > 0 else "-.inf")

        return {
            "c_p": num(self.c_p), "c_l": num(self.c_l), "c_v": num(self.c_v), "c_w": num(self.c_w),
            "argmax": dict(self.argmax),
            "per_object": {
                oid: {"pose_shift": num(c.pose_shift), "path_length": num(c.path_length),
                      "scv": num(c.scv), "weighted_scv": num(c.weighted_scv)}
                for oid, c in sorted(self.per_object.items())
            },
        }


def _to_scipy(q: np.ndarray) -> np.ndarray:
    return np.asarray(q)[..., [1, 2, 3, 0]]


def _from_scipy(q: np.ndarray) -> np.ndarray:
    return np.asarray(q)[..., [3, 0, 1, 2]]


def pose_shift(traj: Trajectory) -> float:
    return float(np.linalg.norm(traj.positions[-1] - traj.positions[0]))


def path_length(traj: Trajectory) -> float:
    if len(traj) < 2:
        return 0.0
    return float(np.linalg.norm(np.diff(traj.positions, axis=0), axis=1).sum())


def _weighted_arrays(p0_pos, p0_quat, positions, orientations, w: Weights):
    """Vectorized weighting of many poses against one start pose."""
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    orientations = np.asarray(orientations, dtype=float).reshape(-1, 4)
    p0_pos = np.asarray(p0_pos, dtype=float)
    if w.unit_translation:
        pos = positions.copy()
    else:
        pos = p0_pos + w.translational * (positions - p0_pos)
    if w.unit_rotation:
        return pos, orientations.copy()
    r0 = Rotation.from_quat(_to_scipy(p0_quat))
    delta = r0.inv() * Rotation.from_quat(_to_scipy(orientations))
    euler = delta.as_euler("XYZ")
    if np.any(np.abs(np.degrees(euler[:, 1])) > GIMBAL_LIMIT_DEG):
        warnings.warn("rotation delta pitch beyond 80 deg; Euler weighting is ill-conditioned",
                      GimbalWarning, stacklevel=3)
    scaled = Rotation.from_euler("XYZ", euler * w.rotational)
    quat = _from_scipy((r0 * scaled).as_quat())
    # keep the hemisphere of the unweighted sample for continuity
    flip = np.sum(quat * orientations, axis=1) < 0
    quat[flip] *= -1
    return pos, quat


def weighted_pose(p0: Pose, pi: Pose, w: Weights) -> Pose:
    """Scale the deviation of ``pi`` from ``p0`` per axis.

    Rotations are weighted as intrinsic XYZ Euler angles of ``p0^-1 * pi``.
    """
    pos, quat = _weighted_arrays(p0.position, p0.orientation, [pi.position], [pi.orientation], w)
    if w.unit_translation and w.unit_rotation:
        return pi
    return Pose.from_arrays(pos[0], quat[0])


def swept_convex_volume(shape: Shape, traj: Trajectory, w: Weights | None = None) -> float:
    """Hull volume of the object swept over ``traj`` relative to its start."""
    p0_pos = traj.positions[0]
    p0_quat = traj.orientations[0]
    p0 = Pose.from_arrays(p0_pos, p0_quat)
    base = sample_shape(shape, p0)
    v0 = cloud_volume(base)
    if v0 <= 0.0:
        raise DegenerateInitialHull("initial sample cloud has zero volume")
    if w is None:
        pos, quat = traj.positions, traj.orientations
    else:
        pos, quat = _weighted_arrays(p0_pos, p0_quat, traj.positions, traj.orientations, w)
    # unique poses only; identical samples add nothing to the union
    keys = np.hstack([pos, quat])
    _, first = np.unique(keys, axis=0, return_index=True)
    keys = keys[np.sort(first)]
    if len(keys) == 1 and np.array_equal(keys[0, :3], p0_pos) and np.array_equal(keys[0, 3:], p0_quat):
        return 1.0
    local = (base - p0_pos) @ p0.rotation  # back to the object frame
    clouds = []
    for row in keys:
        q = row[3:] / np.linalg.norm(row[3:])
        rot = Pose.from_arrays(row[:3], q).rotation
        clouds.append(local @ rot.T + row[:3])
    union = np.vstack([base] + clouds)
    try:
        vol = hull_volume(convex_hull(union))
    except DegenerateInput:
        vol = 0.0
    # the union contains the start cloud, so anything below 1 is rounding
    return max(1.0, vol / v0)


def evaluate_costs(result: EpisodeResult, active_id: str, w: Weights, shapes: Mapping[str, Shape] | None = None
                   ) -> CostReport:
    """All four metrics over the passive objects of one episode."""
    if shapes is None:
        shapes = {o.id: o.shape for o in result.final_scene.objects}
    per: dict[str, ObjectCost] = {}
    for oid in sorted(result.trajectories):
        if oid == active_id:
            continue
        traj = result.trajectories[oid]
        shape = shapes[oid]
        try:
            scv = swept_convex_volume(shape, traj)
            wscv = swept_convex_volume(shape, traj, w)
        except DegenerateInitialHull:
            scv = wscv = 0.0
        if oid in result.flags.out_of_workspace:
            wscv = math.inf
        per[oid] = ObjectCost(pose_shift(traj), path_length(traj), scv, wscv)
    if not per:
        return CostReport(0.0, 0.0, 1.0, 1.0, {}, {m: None for m in METRICS})
    columns = {
        "c_p": {k: v.pose_shift for k, v in per.items()},
        "c_l": {k: v.path_length for k, v in per.items()},
        "c_v": {k: v.scv for k, v in per.items()},
        "c_w": {k: v.weighted_scv for k, v in per.items()},
    }
    values, argmax = {}, {}
    for metric, col in columns.items():
        # first id wins ties; ids iterate in sorted order
        best_id = max(col, key=lambda k: col[k])
        values[metric] = col[best_id]
        argmax[metric] = best_id
    return CostReport(values["c_p"], values["c_l"], values["c_v"], values["c_w"], per, argmax)
