import math
from dataclasses import replace
from itertools import permutations

import pytest

from seqplan.config import PlannerConfig
from seqplan.dynamics import settle
from seqplan.planner import (
    NodeStatus, RefusesLargeScene, SearchNode, build_tree, evaluate_level_parallel, jitter_scene,
    plan_sequence, rank_sequences, replan, worst_case_tree_size,
)

from conftest import box, floor_scene


def direct_sum(n):
    return sum(math.factorial(n) // math.factorial(i) for i in range(1, n + 1))


@pytest.fixture(scope="module")
def prepared(scenes):
    cache = {}

    def get(name):
        if name not in cache:
            sf = scenes(name)
            cache[name] = (settle(sf.scene)[0], sf)
        return cache[name]

    return get


def assert_same_plan(a, b):
    assert [(r.sequence, r.total_cost) for r in a.ranked] == [(r.sequence, r.total_cost) for r in b.ranked]
    assert a.stats.to_dict() == b.stats.to_dict()
    assert [(n.prefix, n.episode_cost, n.status, n.prune_reason) for n in a.nodes] == \
        [(n.prefix, n.episode_cost, n.status, n.prune_reason) for n in b.nodes]


class TestTreeSize:
    @pytest.mark.parametrize("n,expected", [(1, 1), (2, 3), (3, 10), (4, 41), (5, 206), (6, 1237)])
    def test_formula(self, n, expected):
        assert worst_case_tree_size(n) == expected == direct_sum(n)

    @pytest.mark.parametrize("n", [0, -3])
    def test_rejects_non_positive(self, n):
        with pytest.raises(ValueError):
            worst_case_tree_size(n)

    def test_rejects_huge(self):
        with pytest.raises(OverflowError):
            worst_case_tree_size(13)

    def test_two_object_tree(self):
        tree = build_tree(floor_scene(box("A", (0.05,) * 3, (0, 0, 0.05)), box("B", (0.05,) * 3, (0.3, 0, 0.05))))
        assert tree.node_count() == 3
        assert list(tree.sequences()) == [("A", "B"), ("B", "A")]

    def test_four_object_levels(self, prepared):
        tree = build_tree(prepared("scene1")[0])
        assert tree.node_count() == 41
        assert tree.level_counts() == [1, 4, 12, 24]
        assert sorted(tree.sequences()) == sorted(permutations(tree.ids))

    def test_refuses_large_scene(self):
        objs = [box(f"o{i}", (0.02,) * 3, (0.1 * i - 0.5, 0, 0.02)) for i in range(7)]
        with pytest.raises(RefusesLargeScene):
            build_tree(floor_scene(*objs))


class TestRanking:
    def test_clusters_break_ties_lexicographically(self):
        found = {("b", "a"): 2.0, ("a", "b"): 2.0 + 5e-7, ("c", "a"): 1.0, ("a", "c"): math.inf}
        ranked = rank_sequences(found, 1e-6)
        assert [r.sequence for r in ranked] == [("c", "a"), ("a", "b"), ("b", "a")]

    def test_per_node_excludes_free_last_removal(self):
        ranked = rank_sequences({("a", "b", "c"): 3.0}, 1e-6)
        assert ranked[0].per_node == 1.5


class TestPlanning:
    def test_single_object(self):
        r = plan_sequence(floor_scene(box("only", (0.05,) * 3, (0, 0, 0.05))))
        assert r.best.sequence == ("only",)
        assert r.best.total_cost == 0.0

    def test_stack_top_first(self, prepared):
        sc, sf = prepared("stack2")
        r = plan_sequence(sc, sf.weights, sf.config)
        assert [x.sequence for x in r.ranked] == [("top", "bottom"), ("bottom", "top")]
        assert r.ranked[0].total_cost < r.ranked[1].total_cost
        bottom_first = [n for n in r.nodes if n.prefix == ("bottom",)][0]
        assert bottom_first.report.c_w > 2.0

    def test_independent_objects_tie(self, prepared):
        sc, sf = prepared("independent3")
        r = plan_sequence(sc, sf.weights, sf.config.without_pruning("all"))
        assert len(r.ranked) == 6
        costs = [x.total_cost for x in r.ranked]
        assert max(costs) - min(costs) <= 1e-6
        assert r.best.sequence == ("a", "b", "c")
        assert r.best.per_node == pytest.approx(1.0, abs=1e-6)

    def test_cost_bound_only_is_exact(self, prepared):
        sc, sf = prepared("can_on_boxes")
        full = plan_sequence(sc, sf.weights, sf.config.without_pruning("all"))
        cfg = sf.config.without_pruning("all")
        cfg = replace(cfg, prune={**cfg.prune, "cost_bound": True})
        bound = plan_sequence(sc, sf.weights, cfg)
        assert bound.best.total_cost == full.best.total_cost
        assert bound.best.sequence == full.best.sequence

    def test_reuse_at_zero_tolerance(self, prepared):
        sc, sf = prepared("can_on_boxes")
        full = plan_sequence(sc, sf.weights, sf.config.without_pruning("all"))
        cfg = sf.config.without_pruning("all")
        cfg = replace(cfg, prune={**cfg.prune, "known_subtree": True}, similarity_pos=0.0, similarity_deg=0.0)
        reuse = plan_sequence(sc, sf.weights, cfg)
        assert reuse.best.sequence == full.best.sequence
        assert reuse.best.total_cost == full.best.total_cost

    def test_cost_accumulation_and_accounting(self, prepared):
        sc, sf = prepared("scene2")
        r = plan_sequence(sc, sf.weights, sf.config)
        by_id = {n.id: n for n in r.nodes}
        for n in r.nodes:
            if n.parent is None or n.status is not NodeStatus.EVALUATED:
                continue
            parent = by_id[n.parent]
            assert n.accumulated_cost == parent.accumulated_cost + n.episode_cost
            assert n.remaining == parent.remaining - {n.active}
        st = r.stats
        assert st.visited == st.evaluated + sum(st.pruned.values())
        assert st.worst_case == st.visited + sum(st.unexpanded.values())
        for basis in ("worst_case", "visited"):
            assert all(0.0 <= v <= 100.0 for v in st.pruned_pct(basis).values())
            assert 0.0 <= st.total_pruned_pct(basis) <= 100.0
        for seq in (x.sequence for x in r.ranked):
            assert sorted(seq) == sc.ids

    def test_no_valid_sequence(self, prepared):
        sc, sf = prepared("walled_in")
        assert not plan_sequence(sc, sf.weights, sf.config).valid

    def test_workers_do_not_change_result(self, prepared):
        sc, sf = prepared("can_on_boxes")
        serial = plan_sequence(sc, sf.weights, sf.config, seed=3)
        parallel = plan_sequence(sc, sf.weights, replace(sf.config, workers=4), seed=3)
        assert_same_plan(serial, parallel)

    def test_seeded_runs_reproduce(self, prepared):
        sc, sf = prepared("can_on_boxes")
        assert_same_plan(plan_sequence(sc, sf.weights, sf.config, seed=11),
                         plan_sequence(sc, sf.weights, sf.config, seed=11))

    def test_jitter_zero_ignores_seed(self, prepared):
        sc, sf = prepared("can_on_boxes")
        cfg = replace(sf.config, jitter=0.0)
        assert_same_plan(plan_sequence(sc, sf.weights, cfg, seed=1), plan_sequence(sc, sf.weights, cfg, seed=2))

    def test_jitter_bounded(self, prepared):
        sc, sf = prepared("independent3")
        moved = jitter_scene(sc, 5, 0.002, sf.config)
        for o in sc.objects:
            p, q = o.pose.position, moved.get(o.id).pose.position
            assert abs(p[0] - q[0]) <= 0.002 + 1e-6 and abs(p[1] - q[1]) <= 0.002 + 1e-6


class TestParallelLevel:
    def _level(self, sc):
        return [SearchNode(id=k, parent=0, depth=1, remaining=frozenset(sc.ids) - {oid}, active=oid,
                           parent_scene=sc, prefix=(oid,)) for k, oid in enumerate(sc.ids)]

    def test_four_workers_match_serial(self, prepared):
        sc, sf = prepared("scene1")
        serial = evaluate_level_parallel(self._level(sc), 1, sf.weights, sf.config)
        parallel = evaluate_level_parallel(self._level(sc), 4, sf.weights, sf.config)
        assert len(serial) == 4
        for a, b in zip(serial, parallel):
            assert a.report == b.report
            assert a.entry_scene == b.entry_scene
            assert a.episode_cost == b.episode_cost


class TestReplan:
    def test_empty_history_equals_plan(self, prepared):
        sc, sf = prepared("can_on_boxes")
        assert_same_plan(replan(sc, [], sf.weights, sf.config), plan_sequence(sc, sf.weights, sf.config))

    def test_after_first_step(self, prepared):
        sc, sf = prepared("can_on_boxes")
        first = plan_sequence(sc, sf.weights, sf.config).best.sequence[0]
        rest = sc.without(first)
        r = replan(rest, [first], sf.weights, sf.config)
        assert r.executed == (first,)
        assert all(sorted(x.sequence) == rest.ids for x in r.ranked)

    def test_perturbed_scene(self, prepared):
        sc, sf = prepared("can_on_boxes")
        rest = jitter_scene(sc.without("can"), 9, 0.002, sf.config)
        r = replan(rest, ["can"], sf.weights, sf.config)
        assert all(sorted(x.sequence) == ["box_left", "box_right"] for x in r.ranked)

    def test_rejects_executed_object_still_present(self, prepared):
        sc, sf = prepared("can_on_boxes")
        with pytest.raises(ValueError):
            replan(sc, ["can"], sf.weights, sf.config)
