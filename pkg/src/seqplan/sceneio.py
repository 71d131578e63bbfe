"""YAML scene files: parsing with positioned errors, validation, serialization.

A scene file looks like::

    schema_version: 1
    name: stack2
    gravity: [0, 0, -9.81]            # optional
    workspace: {min: [-1, -1, -0.1], max: [1, 1, 1]}
    static:                           # optional
      - id: floor
        shape: {type: box, half_extents: [1, 1, 0.05]}
        pose: {position: [0, 0, -0.05]}
    objects:
      - id: a
        shape: {type: cylinder, radius: 0.03, half_height: 0.06}
        pose: {position: [0, 0, 0.06], orientation: [1, 0, 0, 0]}   # w, x, y, z
        mass: 0.4                     # optional, default 1
        friction: 0.5                 # optional
        restitution: 0.0              # optional
    weights: [1, 1, 2, 1, 1, 1]       # optional, default all ones
    threshold: 2.0                    # optional
    planner: {workers: 2, sim: {dt: 0.004166666666666667}}   # optional overrides
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .config import PlannerConfig, planner_from_dict, planner_to_dict
from .costs import Weights
from .geometry import Box, Cylinder, Pose
from .scene import Scene, SceneObject, StaticBody, Workspace

SCHEMA_VERSION = 1
CONFIG_ENV = "SEQPLAN_CONFIG"


class ParseError(ValueError):
    """Malformed YAML; carries 1-based ``line`` and ``column``."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None, source: str = ""):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:" if source else ""
        if line is not None:
            where += f"{line}:{column}:"
        super().__init__(f"{where} {message}".strip())


class ValidationError(ValueError):
    """Well-formed YAML that violates a scene invariant."""


@dataclass
class SceneFile:
    scene: Scene
    weights: Weights = field(default_factory=Weights)
    threshold: float = 2.0
    config: PlannerConfig = field(default_factory=PlannerConfig)
    overrides: dict = field(default_factory=dict)
    description: str = ""


class _Mapping(dict):
    line: int | None = None


class _Sequence(list):
    line: int | None = None


class _Loader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node):
    loader.flatten_mapping(node)
    out = _Mapping()
    for key_node, value_node in node.value:
        key = loader.construct_object(key_node, deep=True)
        if key in out:
            m = key_node.start_mark
            raise ParseError(f"duplicate key {key!r}", m.line + 1, m.column + 1)
        out[key] = loader.construct_object(value_node, deep=True)
    out.line = node.start_mark.line + 1
    return out


def _construct_sequence(loader, node):
    out = _Sequence(loader.construct_object(v, deep=True) for v in node.value)
    out.line = node.start_mark.line + 1
    return out


_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)
_Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_SEQUENCE_TAG, _construct_sequence)


def _load_yaml(text: str, source: str = "") -> Any:
    try:
        return yaml.load(text, Loader=_Loader)
    except ParseError as exc:
        raise ParseError(exc.message, exc.line, exc.column, source) from None
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        msg = exc.problem or str(exc)
        raise ParseError(msg, mark.line + 1 if mark else None, mark.column + 1 if mark else None, source) from None
    except yaml.YAMLError as exc:
        raise ParseError(str(exc), source=source) from None


def _where(node, path: str) -> str:
    line = getattr(node, "line", None)
    return f"line {line}: {path}" if line else path


def _need(data, key: str, path: str):
    if not isinstance(data, dict):
        raise ValidationError(f"{_where(data, path)}: expected a mapping")
    if key not in data:
        raise ValidationError(f"{_where(data, path)}: missing required key {key!r}")
    return data[key]


def _vector(value, n: int, path: str, node=None) -> tuple:
    if not isinstance(value, (list, tuple)) or len(value) != n:
        raise ValidationError(f"{_where(node if node is not None else value, path)}: expected a list of {n} numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(float(v)):
            raise ValidationError(f"{_where(value, path)}: expected finite numbers, got {v!r}")
        out.append(float(v))
    return tuple(out)


def _number(value, path: str, node) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{_where(node, path)}: expected a number, got {value!r}")
    return float(value)


def _check_keys(data, allowed: set, path: str):
    unknown = set(data) - allowed
    if unknown:
        raise ValidationError(f"{_where(data, path)}: unknown key(s) {', '.join(sorted(map(str, unknown)))}")


def _shape(data, path: str):
    _check_keys(data, {"type", "half_extents", "radius", "half_height"}, path)
    kind = _need(data, "type", path)
    try:
        if kind == "box":
            return Box(_vector(_need(data, "half_extents", path), 3, path + ".half_extents", data))
        if kind == "cylinder":
            return Cylinder(_number(_need(data, "radius", path), path + ".radius", data),
                            _number(_need(data, "half_height", path), path + ".half_height", data))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{_where(data, path)}: {exc}") from None
    raise ValidationError(f"{_where(data, path)}: unknown shape type {kind!r} (expected box or cylinder)")


def _pose(data, path: str) -> Pose:
    _check_keys(data, {"position", "orientation"}, path)
    pos = _vector(_need(data, "position", path), 3, path + ".position", data)
    quat = _vector(data.get("orientation", [1.0, 0.0, 0.0, 0.0]), 4, path + ".orientation", data)
    try:
        return Pose(pos, quat)
    except ValueError as exc:
        raise ValidationError(f"{_where(data, path)}: {exc}") from None


def _body(data, path: str, movable: bool):
    allowed = {"id", "shape", "pose", "friction", "restitution"} | ({"mass"} if movable else set())
    if not isinstance(data, dict):
        raise ValidationError(f"{_where(data, path)}: expected a mapping")
    _check_keys(data, allowed, path)
    oid = _need(data, "id", path)
    if not isinstance(oid, (str, int)) or isinstance(oid, bool) or str(oid) == "":
        raise ValidationError(f"{_where(data, path)}: id must be a non-empty string")
    kw = dict(id=str(oid), shape=_shape(_need(data, "shape", path), path + ".shape"),
              pose=_pose(_need(data, "pose", path), path + ".pose"))
    for key in ("friction", "restitution") + (("mass",) if movable else ()):
        if key in data:
            kw[key] = _number(data[key], f"{path}.{key}", data)
    try:
        return SceneObject(**kw) if movable else StaticBody(**kw)
    except ValueError as exc:
        raise ValidationError(f"{_where(data, path)}: {exc}") from None


def scene_from_dict(data, source: str = "", base: PlannerConfig | None = None) -> SceneFile:
    if not isinstance(data, dict):
        raise ValidationError(f"{source or 'scene'}: top level must be a mapping")
    _check_keys(data, {"schema_version", "name", "description", "gravity", "workspace", "static", "objects",
                       "weights", "threshold", "planner"}, "scene")
    version = _need(data, "schema_version", "scene")
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{_where(data, 'schema_version')}: unsupported schema_version {version!r}")
    ws = _need(data, "workspace", "scene")
    _check_keys(ws, {"min", "max"}, "workspace")
    try:
        workspace = Workspace(_vector(_need(ws, "min", "workspace"), 3, "workspace.min", ws),
                              _vector(_need(ws, "max", "workspace"), 3, "workspace.max", ws))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{_where(ws, 'workspace')}: {exc}") from None
    static_list = data.get("static") or []
    objects_list = _need(data, "objects", "scene")
    if not isinstance(objects_list, list) or not objects_list:
        raise ValidationError(f"{_where(data, 'objects')}: need a non-empty list of objects")
    if not isinstance(static_list, list):
        raise ValidationError(f"{_where(data, 'static')}: expected a list")
    static = [_body(s, f"static[{i}]", False) for i, s in enumerate(static_list)]
    objects = [_body(o, f"objects[{i}]", True) for i, o in enumerate(objects_list)]
    seen: dict[str, int] = {}
    for i, o in enumerate(objects):
        if o.id in seen:
            raise ValidationError(f"{_where(objects_list[i], f'objects[{i}]')}: duplicate id {o.id!r}")
        seen[o.id] = i
    static_ids = set()
    for i, s in enumerate(static):
        if s.id in seen or s.id in static_ids:
            raise ValidationError(f"{_where(static_list[i], f'static[{i}]')}: duplicate id {s.id!r}")
        static_ids.add(s.id)
    gravity = _vector(data.get("gravity", [0.0, 0.0, -9.81]), 3, "gravity", data)
    try:
        scene = Scene(tuple(objects), workspace, tuple(static), gravity, str(data.get("name", "")))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    try:
        weights = Weights(_vector(data.get("weights", [1.0] * 6), 6, "weights", data))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"{_where(data, 'weights')}: {exc}") from None
    overrides = data.get("planner") or {}
    if not isinstance(overrides, dict):
        raise ValidationError(f"{_where(data, 'planner')}: expected a mapping")
    try:
        config = planner_from_dict(_plain(overrides), base or default_config())
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{_where(overrides, 'planner')}: {exc}") from None
    threshold = config.threshold
    if "threshold" in data:
        threshold = _number(data["threshold"], "threshold", data)
        if threshold < 0:
            raise ValidationError(f"{_where(data, 'threshold')}: threshold must be >= 0")
        config = replace(config, threshold=threshold)
    return SceneFile(scene, weights, threshold, config, _plain(overrides), str(data.get("description", "")))


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


def default_config() -> PlannerConfig:
    """Planner defaults, optionally overridden by the file named in ``SEQPLAN_CONFIG``."""
    path = os.environ.get(CONFIG_ENV)
    if not path:
        return PlannerConfig()
    return load_config(path)


def load_config(path, base: PlannerConfig | None = None) -> PlannerConfig:
    text = Path(path).read_text()
    data = _load_yaml(text, str(path)) or {}
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: config must be a mapping")
    data = _plain(data)
    version = data.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ValidationError(f"{path}: unsupported schema_version {version!r}")
    data = data.get("planner", data)
    try:
        return planner_from_dict(data, base or PlannerConfig())
    except (ValueError, TypeError) as exc:
        raise ValidationError(f"{path}: {exc}") from None


def parse_scene_text(text: str, source: str = "", base: PlannerConfig | None = None) -> SceneFile:
    return scene_from_dict(_load_yaml(text, source), source, base)


def parse_scene(path, base: PlannerConfig | None = None) -> SceneFile:
    path = Path(path)
    return parse_scene_text(path.read_text(), str(path), base)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _shape_dict(shape) -> dict:
    if isinstance(shape, Box):
        return {"type": "box", "half_extents": list(shape.half_extents)}
    return {"type": "cylinder", "radius": shape.radius, "half_height": shape.half_height}


def _pose_dict(pose: Pose) -> dict:
    return {"position": list(pose.position), "orientation": list(pose.orientation)}


def scene_to_dict(sf: SceneFile) -> dict:
    s = sf.scene
    out: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "name": s.name}
    if sf.description:
        out["description"] = sf.description
    out["gravity"] = list(s.gravity)
    out["workspace"] = {"min": list(s.workspace.lo), "max": list(s.workspace.hi)}
    out["static"] = [
        {"id": b.id, "shape": _shape_dict(b.shape), "pose": _pose_dict(b.pose), "friction": b.friction,
         "restitution": b.restitution}
        for b in s.static
    ]
    out["objects"] = [
        {"id": o.id, "shape": _shape_dict(o.shape), "pose": _pose_dict(o.pose), "mass": o.mass,
         "friction": o.friction, "restitution": o.restitution}
        for o in s.objects
    ]
    out["weights"] = list(sf.weights.w)
    out["threshold"] = sf.threshold
    if sf.overrides:
        out["planner"] = sf.overrides
    return out


def dump_yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=120)


def dump_scene(sf: SceneFile) -> str:
    return dump_yaml(scene_to_dict(sf))


def scene_hash(scene: Scene) -> str:
    """Stable digest of the scene geometry and physical parameters."""
    text = dump_yaml(scene_to_dict(SceneFile(scene)))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def config_dict(config: PlannerConfig) -> dict:
    return planner_to_dict(config)


# ---------------------------------------------------------------------------
# bundled reference scenes
# ---------------------------------------------------------------------------


def builtin_scenes() -> list[str]:
    root = resources.files("seqplan") / "scenes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def builtin_path(name: str) -> Path:
    path = resources.files("seqplan") / "scenes" / f"{name}.yaml"
    if not path.is_file():
        raise FileNotFoundError(f"no bundled scene named {name!r}")
    return Path(str(path))


def load_scene(name_or_path, base: PlannerConfig | None = None) -> SceneFile:
    """Load a scene file, or a bundled scene by name."""
    p = Path(name_or_path)
    if p.suffix in (".yaml", ".yml") or p.exists():
        return parse_scene(p, base)
    return parse_scene(builtin_path(str(name_or_path)), base)
