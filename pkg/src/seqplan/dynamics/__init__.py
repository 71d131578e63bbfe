"""Deterministic rigid-body simulation."""

from __future__ import annotations

from ..config import SimConfig
from ..scene import Scene
from .world import World


def step(scene: Scene, dt: float, cfg: SimConfig | None = None) -> Scene:
    """Advance every dynamic object of ``scene`` by one step of length ``dt``."""
    if not (0.0 < dt <= 1.0 / 60.0 + 1e-12):
        raise ValueError("dt must lie in (0, 1/60] s")
    base = cfg or SimConfig()
    if dt != base.dt:
        from dataclasses import replace

        base = replace(base, dt=dt)
    world = World(scene, base)
    world.step()
    return world.to_scene()


from .episode import EpisodeFlags, EpisodeResult, InvalidAction, Trajectory, run_episode, settle  # noqa: E402

__all__ = ["World", "step", "settle", "run_episode", "Trajectory", "EpisodeResult", "EpisodeFlags",
           "InvalidAction"]
