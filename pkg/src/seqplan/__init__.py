"""Physics-based prediction of manipulation damage and removal sequence planning."""

from .config import PRUNE_REASONS, PlannerConfig, PruneReason, SimConfig
from .costs import CostReport, Weights, evaluate_costs, swept_convex_volume, weighted_pose
from .geometry import Box, Cylinder, Pose, convex_hull, hull_volume
from .planner import PlanResult, plan_sequence, replan, worst_case_tree_size
from .prediction import Failure, PredictionOutcome, generate_grasps, predict_outcome
from .scene import ManipulationPlan, Scene, SceneObject, StaticBody, Workspace
from .sceneio import load_scene, parse_scene

__all__ = [
    "PRUNE_REASONS", "PlannerConfig", "PruneReason", "SimConfig",
    "CostReport", "Weights", "evaluate_costs", "swept_convex_volume", "weighted_pose",
    "Box", "Cylinder", "Pose", "convex_hull", "hull_volume",
    "PlanResult", "plan_sequence", "replan", "worst_case_tree_size",
    "Failure", "PredictionOutcome", "generate_grasps", "predict_outcome",
    "ManipulationPlan", "Scene", "SceneObject", "StaticBody", "Workspace",
    "load_scene", "parse_scene",
]
