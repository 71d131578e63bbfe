"""Scene description types shared by simulation, prediction and planning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Pose, Shape

__all__ = ["SceneObject", "StaticBody", "Workspace", "Scene", "ManipulationPlan"]

ZERO3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class SceneObject:
    """A movable rigid object.

    ``velocity`` and ``angular_velocity`` are zero for settled scenes; they
    only carry state between calls to :func:`seqplan.dynamics.step`.
    """

    id: str
    shape: Shape
    pose: Pose
    mass: float = 1.0
    friction: float = 0.5
    restitution: float = 0.0
    velocity: tuple[float, float, float] = ZERO3
    angular_velocity: tuple[float, float, float] = ZERO3

    def __post_init__(self):
        if not self.id:
            raise ValueError("object id must be non-empty")
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValueError(f"object {self.id!r}: mass must be > 0")
        if not (0.0 <= self.friction <= 2.0):
            raise ValueError(f"object {self.id!r}: friction must lie in [0, 2]")
        if not (0.0 <= self.restitution <= 1.0):
            raise ValueError(f"object {self.id!r}: restitution must lie in [0, 1]")
        object.__setattr__(self, "velocity", tuple(float(v) for v in self.velocity))
        object.__setattr__(self, "angular_velocity", tuple(float(v) for v in self.angular_velocity))

    def at_rest(self) -> "SceneObject":
        return replace(self, velocity=ZERO3, angular_velocity=ZERO3)


@dataclass(frozen=True)
class StaticBody:
    """Immovable geometry such as a floor, a shelf board or a container wall."""

    id: str
    shape: Shape
    pose: Pose
    friction: float = 0.5
    restitution: float = 0.0


@dataclass(frozen=True)
class Workspace:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != 3 or len(hi) != 3 or any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("workspace needs positive extent on every axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, point) -> bool:
        return all(l <= p <= h for l, p, h in zip(self.lo, point, self.hi))

    def contains_all(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)


@dataclass(frozen=True)
class Scene:
    objects: tuple[SceneObject, ...]
    workspace: Workspace
    static: tuple[StaticBody, ...] = ()
    gravity: tuple[float, float, float] = (0.0, 0.0, -9.81)
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "static", tuple(self.static))
        object.__setattr__(self, "gravity", tuple(float(v) for v in self.gravity))
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate id: {', '.join(dup)}")
        static_ids = [s.id for s in self.static]
        if len(set(static_ids)) != len(static_ids) or set(static_ids) & set(ids):
            raise ValueError("duplicate id among static geometry")

    @property
    def ids(self) -> list[str]:
        return sorted(o.id for o in self.objects)

    def get(self, object_id: str) -> SceneObject:
        for o in self.objects:
            if o.id == object_id:
                return o
        raise KeyError(object_id)

    def __contains__(self, object_id: str) -> bool:
        return any(o.id == object_id for o in self.objects)

    def without(self, *object_ids: str) -> "Scene":
        drop = set(object_ids)
        return replace(self, objects=tuple(o for o in self.objects if o.id not in drop))

    def with_objects(self, objects) -> "Scene":
        return replace(self, objects=tuple(objects))

    def at_rest(self) -> "Scene":
        return self.with_objects(o.at_rest() for o in self.objects)


@dataclass(frozen=True)
class ManipulationPlan:
    """Straight-line gripper sweeps for one pick.

    Poses describe the gripper frame; its local -z axis points towards the
    grasped face.  ``approach`` ends and ``extraction`` starts at
    ``grasp_pose``.
    """

    object_id: str
    grasp_pose: Pose
    approach: tuple[Pose, ...]
    extraction: tuple[Pose, ...]
    label: str = ""
    gripper_half_extents: tuple[float, float, float] = field(default=(0.03, 0.03, 0.02))

    def __post_init__(self):
        object.__setattr__(self, "approach", tuple(self.approach))
        object.__setattr__(self, "extraction", tuple(self.extraction))
        if not self.approach or not self.extraction:
            raise ValueError("approach and extraction need at least one waypoint")
        if self.approach[-1] != self.grasp_pose or self.extraction[0] != self.grasp_pose:
            raise ValueError("approach must end and extraction must start at the grasp pose")
