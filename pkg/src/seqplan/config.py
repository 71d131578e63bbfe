"""Tunable constants for simulation, outcome prediction and planning."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace
from enum import Enum
from typing import Any, Mapping


class PruneReason(str, Enum):
    KNOWN_SUBTREE = "known_subtree"
    COST_BOUND = "cost_bound"
    ACTIVE_OBJECT_MOVED = "active_object_moved"
    OUT_OF_WORKSPACE = "out_of_workspace"
    PLANNING_FAILURE = "planning_failure"


PRUNE_REASONS = tuple(PruneReason)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1.0 / 240.0
    solver_iterations: int = 16
    sample_hz: float = 60.0
    # contact model
    contact_margin: float = 0.004
    baumgarte: float = 0.2
    penetration_slop: float = 0.0005
    max_correction_speed: float = 0.5
    restitution_threshold: float = 1.0
    angular_damping: float = 0.05
    max_angular_speed: float = 50.0
    cylinder_segments: int = 32
    # gripper and grasping
    gripper_half_extents: tuple[float, float, float] = (0.03, 0.03, 0.02)
    grasp_standoff: float = 0.001
    approach_distance: float = 0.10
    approach_speed: float = 0.4
    extract_speed: float = 0.4
    lift_height: float = 0.30
    extract_clearance: float = 0.10
    grasp_tol_pos: float = 0.01
    grasp_tol_deg: float = 5.0
    static_clearance: float = 0.001
    # settling
    settle_time: float = 2.0
    rest_speed: float = 0.01
    rest_window: float = 0.25
    rest_snap_pos: float = 1e-4
    rest_snap_deg: float = 0.05

    def __post_init__(self):
        if not (0.0 < self.dt <= 1.0 / 60.0 + 1e-12):
            raise ValueError("dt must lie in (0, 1/60] s")
        if self.solver_iterations < 1:
            raise ValueError("solver_iterations must be >= 1")
        if self.sample_hz <= 0:
            raise ValueError("sample_hz must be positive")
        object.__setattr__(self, "gripper_half_extents", tuple(float(v) for v in self.gripper_half_extents))


@dataclass(frozen=True)
class PlannerConfig:
    max_objects: int = 6
    threshold: float = 2.0
    similarity_pos: float = 0.005
    similarity_deg: float = 2.0
    workers: int = 1
    prune: Mapping[str, bool] = field(default_factory=lambda: {r.value: True for r in PRUNE_REASONS})
    tie_break: str = "lexicographic"
    tie_tolerance: float = 1e-6
    significance: float = 2.0
    jitter: float = 0.002
    sim: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        prune = {r.value: True for r in PRUNE_REASONS}
        for key, value in dict(self.prune).items():
            if key not in prune:
                raise ValueError(f"unknown prune reason {key!r}")
            prune[key] = bool(value)
        object.__setattr__(self, "prune", prune)
        if self.tie_break not in ("lexicographic",):
            raise ValueError(f"unsupported tie_break rule {self.tie_break!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.max_objects < 1:
            raise ValueError("max_objects must be >= 1")
        if self.similarity_pos < 0 or self.similarity_deg < 0:
            raise ValueError("similarity tolerances must be >= 0")
        if self.jitter < 0 or self.jitter > 0.002 + 1e-12:
            raise ValueError("jitter must lie in [0, 0.002] m")

    def prunes(self, reason: PruneReason | str) -> bool:
        return self.prune[PruneReason(reason).value]

    def without_pruning(self, *reasons: str) -> "PlannerConfig":
        """Copy with the given reasons (or ``"all"``) switched off."""
        prune = dict(self.prune)
        for reason in reasons:
            if reason == "all":
                prune = {r.value: False for r in PRUNE_REASONS}
            else:
                prune[PruneReason(reason).value] = False
        return replace(self, prune=prune)


def _from_mapping(cls, data: Mapping[str, Any], where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    return dict(data)


def sim_from_dict(data: Mapping[str, Any], base: SimConfig | None = None) -> SimConfig:
    kwargs = _from_mapping(SimConfig, data, "simulation")
    if "gripper_half_extents" in kwargs:
        kwargs["gripper_half_extents"] = tuple(kwargs["gripper_half_extents"])
    return replace(base or SimConfig(), **kwargs)


def planner_from_dict(data: Mapping[str, Any], base: PlannerConfig | None = None) -> PlannerConfig:
    base = base or PlannerConfig()
    kwargs = _from_mapping(PlannerConfig, data, "planner")
    if "sim" in kwargs:
        kwargs["sim"] = sim_from_dict(kwargs["sim"], base.sim)
    if "prune" in kwargs:
        merged = dict(base.prune)
        merged.update(kwargs["prune"])
        kwargs["prune"] = merged
    return replace(base, **kwargs)


def planner_to_dict(config: PlannerConfig) -> dict[str, Any]:
    out = asdict(config)
    out["prune"] = dict(config.prune)
    out["sim"]["gripper_half_extents"] = list(config.sim.gripper_half_extents)
    return out
