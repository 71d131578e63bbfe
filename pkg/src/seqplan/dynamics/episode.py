"""One manipulation episode: approach, grasp, extract, release, settle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..config import SimConfig
from ..geometry import Pose, quat_angle, quat_multiply
from ..scene import ManipulationPlan, Scene
from .world import World


class InvalidAction(ValueError):
    """The plan references an object that is not in the scene."""


@dataclass(frozen=True)
class Trajectory:
    """Time-ordered pose samples of one object."""

    object_id: str
    times: np.ndarray
    positions: np.ndarray
    orientations: np.ndarray
    period: float

    def __post_init__(self):
        if len(self.times) < 1:
            raise ValueError("trajectory needs at least one sample")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def poses(self) -> list[Pose]:
        return [Pose.from_arrays(p, q) for p, q in zip(self.positions, self.orientations)]

    @property
    def samples(self) -> list[tuple[float, Pose]]:
        return list(zip(self.times.tolist(), self.poses))

    @classmethod
    def from_poses(cls, object_id: str, poses, period: float = 1.0 / 60.0, times=None) -> "Trajectory":
        poses = list(poses)
        if times is None:
            times = np.arange(len(poses)) * period
        pos = np.array([p.position for p in poses], dtype=float).reshape(-1, 3)
        quat = np.array([p.orientation for p in poses], dtype=float).reshape(-1, 4)
        return cls(object_id, np.asarray(times, dtype=float), pos, quat, period)

    def transformed(self, pose: Pose) -> "Trajectory":
        """Apply one rigid transform to every sample."""
        rot = pose.rotation
        pos = self.positions @ rot.T + np.asarray(pose.position)
        quat = np.array([quat_multiply(pose.orientation, q) for q in self.orientations])
        quat /= np.linalg.norm(quat, axis=1, keepdims=True)
        return replace(self, positions=pos, orientations=quat)


@dataclass
class EpisodeFlags:
    active_unreachable: bool = False
    out_of_workspace: set = field(default_factory=set)
    settled: bool = False


@dataclass
class EpisodeResult:
    active_id: str
    trajectories: dict[str, Trajectory]
    final_scene: Scene
    flags: EpisodeFlags
    duration: float = 0.0


class _Recorder:
    def __init__(self, world: World, ids: list[str], hz: float):
        self.world = world
        self.ids = ids
        self.period = 1.0 / hz
        self.times: list[float] = []
        self.pos: dict[str, list] = {i: [] for i in ids}
        self.quat: dict[str, list] = {i: [] for i in ids}
        self.stop_at: dict[str, int] = {}
        self.next_t = 0.0

    def sample(self, force: bool = False):
        t = self.world.time
        if not force and t + 1e-9 < self.next_t:
            return
        if self.times and t <= self.times[-1]:
            return
        self.times.append(t)
        for oid in self.ids:
            if oid in self.stop_at:
                continue
            k = self.world.index(oid)
            self.pos[oid].append(self.world.pos[k].copy())
            self.quat[oid].append(self.world.quat[k].copy())
        while self.next_t <= t + 1e-9:
            self.next_t += self.period

    def freeze(self, oid: str):
        self.stop_at[oid] = len(self.pos[oid])

    def trajectories(self) -> dict[str, Trajectory]:
        out = {}
        times = np.array(self.times)
        for oid in self.ids:
            n = len(self.pos[oid])
            out[oid] = Trajectory(oid, times[:n].copy(), np.array(self.pos[oid]), np.array(self.quat[oid]),
                                  self.period)
        return out


def _slerp(q0, q1, s: float) -> np.ndarray:
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    d = float(q0 @ q1)
    if d < 0.0:
        q1, d = -q1, -d
    if d > 0.9995:
        q = q0 + s * (q1 - q0)
    else:
        th = math.acos(d)
        q = (math.sin((1 - s) * th) * q0 + math.sin(s * th) * q1) / math.sin(th)
    return q / np.linalg.norm(q)


def _sweep_targets(waypoints, speed: float, dt: float, ang_speed: float = math.pi / 2):
    """Per-step gripper poses moving through ``waypoints`` at constant speed."""
    out: list[Pose] = []
    for a, b in zip(waypoints[:-1], waypoints[1:]):
        dist = float(np.linalg.norm(np.subtract(b.position, a.position)))
        ang = quat_angle(a.orientation, b.orientation)
        duration = max(dist / speed, ang / ang_speed)
        steps = max(1, int(math.ceil(duration / dt - 1e-9)))
        pa, pb = np.asarray(a.position), np.asarray(b.position)
        for k in range(1, steps + 1):
            s = k / steps
            if k == steps:
                out.append(b)
            else:
                out.append(Pose.from_arrays(pa + s * (pb - pa), _slerp(a.orientation, b.orientation, s)))
    return out


def _snap_to_entry(scene: Scene, entry: Scene, pos_tol: float, deg_tol: float) -> Scene:
    """Restore objects that ended up negligibly displaced to their exact entry pose."""
    objs = []
    for o in scene.objects:
        p = entry.get(o.id).pose
        if (np.linalg.norm(np.subtract(o.pose.position, p.position)) <= pos_tol
                and math.degrees(quat_angle(o.pose.orientation, p.orientation)) <= deg_tol):
            o = replace(o, pose=p)
        objs.append(o.at_rest())
    return scene.with_objects(objs)


def _settle_loop(world: World, cfg: SimConfig, max_time: float, rest_vel: float, on_step=None) -> bool:
    window = max(1, int(round(cfg.rest_window / cfg.dt)))
    quiet = 0
    steps = int(math.ceil(max_time / cfg.dt - 1e-9))
    for _ in range(steps):
        world.step()
        if on_step is not None:
            on_step()
        v, w = world.max_speed()
        quiet = quiet + 1 if (v < rest_vel and w < rest_vel) else 0
        if quiet >= window:
            return True
    return False


def run_episode(scene: Scene, action: ManipulationPlan, sample_hz: float | None = None,
                cfg: SimConfig | None = None) -> EpisodeResult:
    """Simulate one pick of ``action.object_id`` and record every trajectory."""
    cfg = cfg or SimConfig()
    if action.object_id not in scene:
        raise InvalidAction(f"unknown object id {action.object_id!r}")
    hz = sample_hz or cfg.sample_hz
    active = action.object_id
    world = World(scene, cfg, gripper=action.approach[0], gripper_half_extents=action.gripper_half_extents)
    # the gripper never collides with the object it is about to grasp
    world.set_group(active, world.bgroup[world.gripper])
    ids = sorted(scene.ids)
    rec = _Recorder(world, ids, hz)
    rec.sample(force=True)
    flags = EpisodeFlags()
    a_idx = world.index(active)

    for target in _sweep_targets(action.approach, cfg.approach_speed, cfg.dt):
        world.step(target)
        rec.sample()

    # grasp check: the plan assumes the active object still sits at its entry pose
    entry = scene.get(active).pose
    now = world.pose_of(a_idx)
    moved = float(np.linalg.norm(np.subtract(now.position, entry.position)))
    turned = math.degrees(quat_angle(now.orientation, entry.orientation))
    if moved > cfg.grasp_tol_pos or turned > cfg.grasp_tol_deg:
        flags.active_unreachable = True
    else:
        world.attach(active)
        for target in _sweep_targets(action.extraction, cfg.extract_speed, cfg.dt):
            world.step(target)
            rec.sample()

    # release: the active object leaves the scene together with the gripper
    rec.sample(force=True)
    rec.freeze(active)
    world.remove(a_idx)
    world.remove(world.gripper)
    flags.settled = _settle_loop(world, cfg, cfg.settle_time, cfg.rest_speed, on_step=rec.sample)
    rec.sample(force=True)

    trajs = rec.trajectories()
    for oid, tr in trajs.items():
        if oid == active:
            continue
        if not np.all(scene.workspace.contains_all(tr.positions)):
            flags.out_of_workspace.add(oid)
    final = world.to_scene(keep_velocity=False)
    final = _snap_to_entry(final, scene, cfg.rest_snap_pos, cfg.rest_snap_deg)
    return EpisodeResult(active, trajs, final, flags, duration=world.time)


def settle(scene: Scene, max_time: float = 2.0, rest_vel: float = 0.01,
           cfg: SimConfig | None = None) -> tuple[Scene, bool]:
    """Step until every object stays below ``rest_vel`` for the rest window."""
    if max_time <= 0:
        raise ValueError("max_time must be positive")
    cfg = cfg or SimConfig()
    world = World(scene, cfg)
    ok = _settle_loop(world, cfg, max_time, rest_vel)
    out = world.to_scene(keep_velocity=not ok)
    return (out.at_rest() if ok else out), ok

