import textwrap

import pytest

from seqplan.config import PlannerConfig
from seqplan.costs import Weights
from seqplan.sceneio import (
    CONFIG_ENV, ParseError, ValidationError, builtin_scenes, default_config, dump_scene, load_scene,
    parse_scene, parse_scene_text, scene_hash,
)

MINIMAL = textwrap.dedent("""\
    schema_version: 1
    workspace: {min: [-1, -1, 0], max: [1, 1, 1]}
    objects:
      - id: box
        shape: {type: box, half_extents: [0.05, 0.05, 0.05]}
        pose: {position: [0, 0, 0.05]}
    """)


def test_minimal_scene_defaults():
    sf = parse_scene_text(MINIMAL)
    assert sf.scene.ids == ["box"]
    assert sf.scene.gravity == (0.0, 0.0, -9.81)
    assert sf.weights == Weights()
    assert sf.threshold == 2.0
    o = sf.scene.get("box")
    assert o.pose.orientation == (1.0, 0.0, 0.0, 0.0)
    assert o.mass == 1.0


def test_duplicate_id():
    text = MINIMAL + (
        "  - id: box\n"
        "    shape: {type: box, half_extents: [0.05, 0.05, 0.05]}\n"
        "    pose: {position: [0.3, 0, 0.05]}\n"
    )
    with pytest.raises(ValidationError, match="duplicate id"):
        parse_scene_text(text)


def test_vertical_weights():
    sf = parse_scene_text(MINIMAL + "weights: [1, 1, 2, 1, 1, 1]\n")
    assert sf.weights.w == (1.0, 1.0, 2.0, 1.0, 1.0, 1.0)


def test_parse_error_has_position():
    bad = MINIMAL.replace("pose: {position: [0, 0, 0.05]}", "pose: {position: [0, 0, 0.05]")
    with pytest.raises(ParseError) as info:
        parse_scene_text(bad, "bad.yaml")
    assert info.value.line is not None and info.value.line >= 6
    assert info.value.column is not None
    assert "bad.yaml:" in str(info.value)


def test_validation_error_names_location():
    bad = MINIMAL.replace("[0.05, 0.05, 0.05]", "[0.05, -0.05, 0.05]")
    with pytest.raises(ValidationError, match="line 5"):
        parse_scene_text(bad)


@pytest.mark.parametrize("edit,match", [
    (("schema_version: 1", "schema_version: 2"), "schema_version"),
    (("max: [1, 1, 1]", "max: [1, 1, -1]"), "workspace"),
    (("type: box", "type: sphere"), "sphere"),
    (("id: box", "id: box\n    colour: red"), "colour"),
])
def test_invalid_files(edit, match):
    with pytest.raises(ValidationError, match=match):
        parse_scene_text(MINIMAL.replace(*edit))


def test_unnormalized_quaternion_rejected():
    bad = MINIMAL.replace("position: [0, 0, 0.05]", "position: [0, 0, 0.05], orientation: [1, 1, 0, 0]")
    with pytest.raises(ValidationError):
        parse_scene_text(bad)


def test_planner_overrides():
    sf = parse_scene_text(MINIMAL + "planner: {jitter: 0.0, prune: {cost_bound: false}}\nthreshold: 3.0\n")
    assert sf.config.jitter == 0.0
    assert sf.config.prune["cost_bound"] is False
    assert sf.config.prune["known_subtree"] is True
    assert sf.threshold == 3.0 == sf.config.threshold


@pytest.mark.parametrize("name", builtin_scenes())
def test_round_trip(name):
    sf = load_scene(name)
    again = parse_scene_text(dump_scene(sf))
    assert again.scene == sf.scene
    assert again.weights == sf.weights
    assert again.threshold == sf.threshold
    assert again.config == sf.config
    assert dump_scene(again) == dump_scene(sf)


def test_reference_suite_shape():
    names = set(builtin_scenes())
    assert {"scene1", "scene2", "scene3", "scene4", "stack2", "independent3", "overhang", "wall_impact", "can_on_boxes"} <= names
    for n in ("scene1", "scene2", "scene3", "scene4"):
        assert len(load_scene(n).scene.objects) == 4


def test_scene_hash_stable_and_sensitive():
    a = parse_scene_text(MINIMAL).scene
    b = parse_scene_text(MINIMAL.replace("0.05]}", "0.06]}")).scene
    assert scene_hash(a) == scene_hash(parse_scene_text(MINIMAL).scene)
    assert scene_hash(a) != scene_hash(b)


def test_config_env(tmp_path, monkeypatch):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("schema_version: 1\nplanner: {jitter: 0.001, workers: 2}\n")
    monkeypatch.setenv(CONFIG_ENV, str(cfg))
    assert default_config() == PlannerConfig(jitter=0.001, workers=2)
    path = tmp_path / "s.yaml"
    path.write_text(MINIMAL)
    assert parse_scene(path).config.jitter == 0.001
    monkeypatch.delenv(CONFIG_ENV)
    assert default_config() == PlannerConfig()


def test_unknown_builtin():
    with pytest.raises(FileNotFoundError):
        load_scene("no_such_scene")
