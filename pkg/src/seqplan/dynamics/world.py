"""Mutable simulation world packed into the flat arrays the kernel expects."""

from __future__ import annotations

import math
from dataclasses import replace

import numpy as np

from ..config import SimConfig
from ..geometry import Box, Pose, quat_conjugate, quat_multiply
from ..scene import Scene, SceneObject
from . import kernel
from .kernel import DYNAMIC, KINEMATIC, STATIC
from .polytope import build_tables, inverse_inertia

GRIPPER_ID = "__gripper__"
GRIPPER_FRICTION = 1.0
GRIPPER_GROUP = 1


def sim_params(cfg: SimConfig) -> np.ndarray:
    p = np.zeros(kernel.N_PARAMS)
    p[kernel.P_MARGIN] = cfg.contact_margin
    p[kernel.P_BAUMGARTE] = cfg.baumgarte
    p[kernel.P_SLOP] = cfg.penetration_slop
    p[kernel.P_MAX_CORR] = cfg.max_correction_speed
    p[kernel.P_REST_THRESH] = cfg.restitution_threshold
    p[kernel.P_ANG_DAMP] = cfg.angular_damping
    p[kernel.P_MAX_ANG] = cfg.max_angular_speed
    return p


def _omega_between(q0, q1, dt: float) -> np.ndarray:
    """Angular velocity that rotates ``q0`` onto ``q1`` in one step."""
    dq = quat_multiply(q1, quat_conjugate(q0))
    if dq[0] < 0:
        dq = -dq
    s = math.sqrt(dq[1] ** 2 + dq[2] ** 2 + dq[3] ** 2)
    if s < 1e-15:
        return np.zeros(3)
    angle = 2.0 * math.atan2(s, dq[0])
    return dq[1:] / s * (angle / dt)


class World:
    """One independent simulation instance built from a :class:`Scene`.

    Bodies are ordered statics (by id), objects (by id), then the optional
    gripper, so contact pairs come out in a fixed id-derived order.
    """

    def __init__(self, scene: Scene, cfg: SimConfig | None = None, gripper: Pose | None = None,
                 gripper_half_extents=None):
        self.cfg = cfg or SimConfig()
        self.scene = scene
        statics = sorted(scene.static, key=lambda s: s.id)
        objects = sorted(scene.objects, key=lambda o: o.id)
        self.ids = [s.id for s in statics] + [o.id for o in objects]
        shapes = [s.shape for s in statics] + [o.shape for o in objects]
        self.n_static = len(statics)
        self.object_index = {o.id: self.n_static + k for k, o in enumerate(objects)}
        self.gripper = None
        if gripper is not None:
            he = gripper_half_extents or self.cfg.gripper_half_extents
            self.gripper = len(self.ids)
            self.ids.append(GRIPPER_ID)
            shapes.append(Box(tuple(he)))
        n = len(self.ids)
        self.tables = build_tables(shapes, self.cfg.cylinder_segments)
        self._table_args = self.tables.as_tuple()
        self.btype = np.full(n, DYNAMIC, np.int64)
        self.bactive = np.ones(n, np.bool_)
        self.bgroup = np.zeros(n, np.int64)
        self.bshape = np.arange(n, dtype=np.int64)
        self.pos = np.zeros((n, 3))
        self.quat = np.zeros((n, 4))
        self.vel = np.zeros((n, 3))
        self.angvel = np.zeros((n, 3))
        self.inv_mass = np.zeros(n)
        self.inv_inertia = np.zeros((n, 3))
        self.friction = np.zeros(n)
        self.restitution = np.zeros(n)
        for i, s in enumerate(statics):
            self.btype[i] = STATIC
            self.pos[i] = s.pose.position
            self.quat[i] = s.pose.orientation
            self.friction[i] = s.friction
            self.restitution[i] = s.restitution
        for o in objects:
            i = self.object_index[o.id]
            self.pos[i] = o.pose.position
            self.quat[i] = o.pose.orientation
            self.vel[i] = o.velocity
            self.angvel[i] = o.angular_velocity
            self.inv_mass[i] = 1.0 / o.mass
            self.inv_inertia[i] = inverse_inertia(o.shape, o.mass)
            self.friction[i] = o.friction
            self.restitution[i] = o.restitution
        if self.gripper is not None:
            g = self.gripper
            self.btype[g] = KINEMATIC
            self.bgroup[g] = GRIPPER_GROUP
            self.pos[g] = gripper.position
            self.quat[g] = gripper.orientation
            self.friction[g] = GRIPPER_FRICTION
        self.gravity = np.asarray(scene.gravity, dtype=float)
        self.params = sim_params(self.cfg)
        self._attached: tuple[int, np.ndarray, np.ndarray] | None = None
        self._clear_cache()
        self.time = 0.0

    def _clear_cache(self):
        self._cache = (0, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros((0, 3)),
                       np.zeros(0), np.zeros((0, 3)))

    # -- body control ------------------------------------------------------
    def index(self, object_id: str) -> int:
        return self.object_index[object_id]

    def set_group(self, object_id: str, group: int):
        self.bgroup[self.index(object_id)] = group

    def attach(self, object_id: str):
        """Rigidly attach an object to the gripper (it turns kinematic)."""
        i = self.index(object_id)
        g = self.gripper
        qg_inv = quat_conjugate(self.quat[g])
        rg_inv = kernel_rot(qg_inv)
        rel_pos = rg_inv @ (self.pos[i] - self.pos[g])
        rel_quat = quat_multiply(qg_inv, self.quat[i])
        self.btype[i] = KINEMATIC
        self.bgroup[i] = GRIPPER_GROUP
        self._attached = (i, rel_pos, rel_quat)

    def remove(self, index: int):
        self.bactive[index] = False
        self.vel[index] = 0.0
        self.angvel[index] = 0.0

    def _kinematic_targets(self, gripper_target: Pose | None):
        """Per-body (index, position, quaternion) the kinematic bodies must reach."""
        out = []
        if gripper_target is None or self.gripper is None or not self.bactive[self.gripper]:
            return out
        gp = np.asarray(gripper_target.position)
        gq = np.asarray(gripper_target.orientation)
        out.append((self.gripper, gp, gq))
        if self._attached is not None and self.bactive[self._attached[0]]:
            i, rel_pos, rel_quat = self._attached
            out.append((i, gp + kernel_rot(gq) @ rel_pos, quat_multiply(gq, rel_quat)))
        return out

    # -- stepping ----------------------------------------------------------
    def step(self, gripper_target: Pose | None = None):
        dt = self.cfg.dt
        targets = self._kinematic_targets(gripper_target)
        for i, p, q in targets:
            self.vel[i] = (p - self.pos[i]) / dt
            self.angvel[i] = _omega_between(self.quat[i], q, dt)
        if self.gripper is not None and not targets:
            self.vel[self.gripper] = 0.0
            self.angvel[self.gripper] = 0.0
        prev = self._cache
        self._cache = kernel.step_world(
            dt, self.gravity, self.cfg.solver_iterations, self.params,
            self.btype, self.bactive, self.bgroup, self.bshape, self.pos, self.quat, self.vel, self.angvel,
            self.inv_mass, self.inv_inertia, self.friction, self.restitution,
            *self._table_args, *prev,
        )
        # kinematic bodies land exactly on their targets
        for i, p, q in targets:
            self.pos[i] = p
            self.quat[i] = q
        self.time += dt

    def max_speed(self) -> tuple[float, float]:
        """Largest linear and angular speed over active dynamic bodies."""
        mask = self.bactive & (self.btype == DYNAMIC)
        if not mask.any():
            return 0.0, 0.0
        v = np.sqrt((self.vel[mask] ** 2).sum(axis=1)).max()
        w = np.sqrt((self.angvel[mask] ** 2).sum(axis=1)).max()
        return float(v), float(w)

    def pose_of(self, index: int) -> Pose:
        return Pose.from_arrays(self.pos[index], self.quat[index])

    def separation(self, i: int, j: int) -> float:
        return float(kernel.separation(
            self.bshape[i], self.pos[i], self.quat[i], self.bshape[j], self.pos[j], self.quat[j],
            *self._table_args[:10],
        ))

    def to_scene(self, keep_velocity: bool = True) -> Scene:
        """Objects still present (active flag set), in the scene's original order."""
        objs: list[SceneObject] = []
        for o in self.scene.objects:
            i = self.object_index[o.id]
            if not self.bactive[i]:
                continue
            kw = dict(pose=self.pose_of(i))
            if keep_velocity and self.btype[i] == DYNAMIC:
                kw.update(velocity=tuple(self.vel[i]), angular_velocity=tuple(self.angvel[i]))
            else:
                kw.update(velocity=(0.0, 0.0, 0.0), angular_velocity=(0.0, 0.0, 0.0))
            objs.append(replace(o, **kw))
        return self.scene.with_objects(objs)


def kernel_rot(q) -> np.ndarray:
    m = np.empty((3, 3))
    kernel.quat_to_mat(np.asarray(q, dtype=float), m)
    return m
