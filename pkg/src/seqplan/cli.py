"""Command-line driver: predict, plan, experiment, worst-case, scenes, validate.

Exit codes: 0 success or valid prediction, 2 usage or input error,
3 invalid prediction, 4 no valid sequence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import sceneio
from .config import PRUNE_REASONS, PlannerConfig
from .dynamics import settle
from .planner import RefusesLargeScene, plan_sequence, replan, worst_case_tree_size
from .prediction import predict_outcome

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_NO_SEQUENCE = 4


class UsageError(Exception):
    pass


def _num(v):
    if v is None:
        return None
    return float(v)  # YAML renders inf and nan natively


def _load(args) -> sceneio.SceneFile:
    base = sceneio.load_config(args.config) if getattr(args, "config", None) else None
    try:
        sf = sceneio.load_scene(args.scene, base)
    except FileNotFoundError as exc:
        raise UsageError(str(exc)) from None
    if not getattr(args, "no_settle", False):
        scene, _ = settle(sf.scene, sf.config.sim.settle_time, sf.config.sim.rest_speed, sf.config.sim)
        sf = replace(sf, scene=scene)
    return sf


def _prune_flags(values) -> list[str]:
    out = []
    for v in values or []:
        for part in v.split(","):
            part = part.strip()
            if not part:
                continue
            if part != "all" and part not in {r.value for r in PRUNE_REASONS}:
                raise UsageError(f"unknown prune reason {part!r}; choose from all, "
                                 + ", ".join(r.value for r in PRUNE_REASONS))
            out.append(part)
    return out


def _planner_config(sf: sceneio.SceneFile, args) -> PlannerConfig:
    cfg = sf.config
    if getattr(args, "workers", None):
        cfg = replace(cfg, workers=args.workers)
    if getattr(args, "jitter", None) is not None:
        cfg = replace(cfg, jitter=args.jitter)
    reasons = _prune_flags(getattr(args, "no_prune", None))
    if reasons:
        cfg = cfg.without_pruning(*reasons)
    return cfg


def _emit(data, out) -> None:
    out.write(sceneio.dump_yaml(data))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_predict(args, out) -> int:
    sf = _load(args)
    if args.object not in sf.scene:
        raise UsageError(f"unknown object id {args.object!r}; scene has {', '.join(sf.scene.ids)}")
    threshold = sf.threshold if args.threshold is None else args.threshold
    outcome = predict_outcome(sf.scene, args.object, sf.weights, threshold, sf.config.sim, seed=None)
    _emit({
        "schema_version": sceneio.SCHEMA_VERSION,
        "scene": sf.scene.name or str(args.scene),
        "object": args.object,
        "grasp": outcome.plan.label if outcome.plan is not None else None,
        "failure": outcome.failure.value,
        "threshold": float(threshold),
        "valid": bool(outcome.valid),
        "report": outcome.report.to_dict(),
    }, out)
    return EXIT_OK if outcome.valid else EXIT_INVALID


def _plan_dict(result, sf, config, seed) -> dict:
    return {
        "best": list(result.best.sequence) if result.best else None,
        "best_cost": _num(result.best.total_cost) if result.best else None,
        "ranked": [{"sequence": list(r.sequence), "total_cost": _num(r.total_cost),
                    "cost_per_node": _num(r.per_node)} for r in result.ranked],
        "stats": result.stats.to_dict(),
        "nodes": [{
            "id": n.id, "parent": n.parent, "prefix": list(n.prefix), "active": n.active,
            "status": n.status.value, "prune_reason": n.prune_reason.value if n.prune_reason else None,
            "grasp": n.grasp or None, "failure": n.failure.value,
            "episode_cost": _num(n.episode_cost), "accumulated_cost": _num(n.accumulated_cost),
        } for n in result.nodes if n.parent is not None],
    }


def _closed_loop(sf, config, seed) -> tuple[dict, bool]:
    """Execute the head of the current best plan, then replan on what is left."""
    scene = sf.scene
    executed: list[str] = []
    steps = []
    first = None
    while len(scene.objects) > 1:
        result = (plan_sequence(scene, sf.weights, config, seed) if not executed
                  else replan(scene, executed, sf.weights, config, seed))
        if first is None:
            first = result
        if result.best is None:
            steps.append({"remaining": list(scene.ids), "plan": None})
            return {"initial_plan": _plan_dict(first, sf, config, seed), "executed": executed,
                    "steps": steps, "complete": False}, False
        head = result.best.sequence[0]
        step_seed = None if seed is None or config.jitter == 0 else seed + len(executed) + 1
        outcome = predict_outcome(scene, head, sf.weights, config.threshold, config.sim, seed=step_seed)
        steps.append({"remaining": list(scene.ids), "plan": list(result.best.sequence),
                      "planned_cost": _num(result.best.total_cost), "executed": head,
                      "grasp": outcome.plan.label if outcome.plan else None,
                      "failure": outcome.failure.value, "c_w": _num(outcome.report.c_w)})
        executed.append(head)
        if outcome.episode is None:
            scene = scene.without(head)
        else:
            scene = outcome.episode.final_scene
            if head in scene:
                scene = scene.without(head)
    executed.extend(scene.ids)
    return {"initial_plan": _plan_dict(first, sf, config, seed) if first else None,
            "executed": executed, "steps": steps, "complete": True}, True


def cmd_plan(args, out) -> int:
    sf = _load(args)
    config = _planner_config(sf, args)
    header = {
        "schema_version": sceneio.SCHEMA_VERSION,
        "scene": sf.scene.name or str(args.scene),
        "scene_hash": sceneio.scene_hash(sf.scene),
        "seed": args.seed,
        "prune": dict(config.prune),
    }
    try:
        if args.closed_loop:
            body, ok = _closed_loop(sf, config, args.seed)
            _emit({**header, "closed_loop": body}, out)
            return EXIT_OK if ok else EXIT_NO_SEQUENCE
        result = plan_sequence(sf.scene, sf.weights, config, seed=args.seed)
    except RefusesLargeScene as exc:
        raise UsageError(str(exc)) from None
    _emit({**header, **_plan_dict(result, sf, config, args.seed)}, out)
    return EXIT_OK if result.valid else EXIT_NO_SEQUENCE


def cmd_experiment(args, out) -> int:
    from .experiment import run_experiment, write_histogram_csv, write_records, write_stats_csv
    from .plotting import histogram_figure, pruning_figure

    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    sf = _load(args)
    config = _planner_config(sf, args)

    def progress(k, n, rec):
        if not args.quiet:
            best = rec.plan.best.sequence if rec.plan.best else None
            print(f"run {k}/{n} seed={rec.seed} best={best} {rec.wall_time:.1f}s", file=sys.stderr)

    res = run_experiment(sf.scene, sf.weights, config, runs=args.runs, seed0=args.seed0, progress=progress)
    summary = {
        "schema_version": sceneio.SCHEMA_VERSION,
        "scene": sf.scene.name or str(args.scene),
        "scene_hash": sceneio.scene_hash(sf.scene),
        "seed0": args.seed0,
        "jitter": config.jitter,
        **res.stats.to_dict(),
    }
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        files = {
            "histogram_csv": write_histogram_csv(res.stats, outdir / "histogram.csv"),
            "stats_csv": write_stats_csv(res.stats, outdir / "stats.csv"),
            "runs_jsonl": write_records(res.records, outdir / "runs.jsonl"),
            "histogram_png": histogram_figure(res.stats, outdir / "histogram.png",
                                              f"{sf.scene.name or 'scene'}: first-ranked sequences"),
            "pruning_png": pruning_figure(res.stats, outdir / "pruning.png"),
        }
        summary["files"] = {k: str(v) for k, v in files.items()}
    _emit(summary, out)
    return EXIT_OK


def cmd_worst_case(args, out) -> int:
    try:
        out.write(f"{worst_case_tree_size(args.n)}\n")
    except (ValueError, OverflowError) as exc:
        raise UsageError(str(exc)) from None
    return EXIT_OK


def cmd_scenes(args, out) -> int:
    for name in sceneio.builtin_scenes():
        out.write(f"{name}\n")
    return EXIT_OK


def cmd_validate(args, out) -> int:
    sf = _load(args)
    again = sceneio.parse_scene_text(sceneio.dump_scene(sf), "<round-trip>")
    if again.scene != sf.scene:
        raise UsageError("scene does not survive a serialize/parse round trip")
    _emit({"scene": sf.scene.name or str(args.scene), "objects": sf.scene.ids,
           "static": [s.id for s in sf.scene.static], "scene_hash": sceneio.scene_hash(sf.scene),
           "valid": True}, out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="seqplan", description="Physics-based removal sequence planning.")
    sub = p.add_subparsers(dest="command", required=True)

    def scene_args(sp, settle_flag=True):
        sp.add_argument("scene", help="scene YAML file or name of a bundled scene")
        sp.add_argument("--config", help=f"planner config YAML (default: ${sceneio.CONFIG_ENV})")
        if settle_flag:
            sp.add_argument("--no-settle", action="store_true", help="use the poses as given, without settling")

    sp = sub.add_parser("predict", help="simulate removing one object and score the damage")
    scene_args(sp)
    sp.add_argument("object", help="id of the object to remove")
    sp.add_argument("--threshold", type=float, default=None)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("plan", help="search for the cheapest removal order")
    scene_args(sp)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--no-prune", action="append", metavar="REASON",
                    help="disable a pruning rule (repeatable, or 'all')")
    sp.add_argument("--jitter", type=float, default=None, help="start pose jitter in m (<= 0.002)")
    sp.add_argument("--closed-loop", action="store_true", help="execute one step at a time and replan")
    sp.set_defaults(func=cmd_plan)

    sp = sub.add_parser("experiment", help="repeat seeded plans and aggregate statistics")
    scene_args(sp)
    sp.add_argument("--runs", type=int, default=25)
    sp.add_argument("--seed0", type=int, default=0)
    sp.add_argument("--jitter", type=float, default=None)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--no-prune", action="append", metavar="REASON")
    sp.add_argument("--out", help="directory for CSV files, run records and figures")
    sp.add_argument("--quiet", action="store_true")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("worst-case", help="node count of the full search tree for n objects")
    sp.add_argument("n", type=int)
    sp.set_defaults(func=cmd_worst_case)

    sp = sub.add_parser("scenes", help="list bundled scenes")
    sp.set_defaults(func=cmd_scenes)

    sp = sub.add_parser("validate", help="parse and check a scene file")
    scene_args(sp, settle_flag=False)
    sp.set_defaults(func=cmd_validate, no_settle=True)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except UsageError as exc:
        print(f"seqplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (sceneio.ParseError, sceneio.ValidationError, ValueError) as exc:
        print(f"seqplan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
