import json

import pytest

from popctl.arena import (
    BudgetExceededError,
    build_arena,
    solve_arena,
    transition_priority,
)
from popctl.capacity import LevelEvents
from popctl.nfa import GadgetSpec, build_nfa, generate
from popctl.popsim import (
    ControllerStrategy,
    EvenAdversary,
    RandomAdversary,
    run,
)
from popctl.support_game import compatible_graphs, post_support
from popctl.synthesis import (
    ControllerError,
    decide,
    deserialize_controller,
    serialize_controller,
)


class TestTransitionPriority:
    GOAL = 0b1000

    def test_goal_support_is_one(self):
        events = LevelEvents(leak_level=3, change_level=2)
        assert transition_priority(0, (1, 2), self.GOAL, self.GOAL, events) == 1

    def test_goal_bit_is_one(self):
        events = LevelEvents(leak_level=3, change_level=2)
        assert transition_priority(1, (), 0b0001, self.GOAL, events) == 1

    def test_empty_list_neutral_step(self):
        events = LevelEvents(leak_level=1, change_level=1)
        assert transition_priority(0, (), 0b0001, self.GOAL, events) == 2

    def test_leak_beats_higher_change(self):
        events = LevelEvents(leak_level=1, change_level=3)
        assert transition_priority(0, (7, 8), 0b0001, self.GOAL, events) == 3


class TestArena:
    def test_split_initial_branching(self, split_nfa):
        arena = build_arena(split_nfa)
        init_edges = arena.edges[arena.initial]
        assert len(init_edges) == 3  # one adversary node per letter
        delta_node = next(
            e.dst for e in init_edges
            if e.label == split_nfa.action_index("delta")
        )
        # three compatible graphs, pairwise distinguishable moves
        assert len(arena.edges[delta_node]) == 3

    def test_priorities_within_range(self, split_nfa):
        arena = build_arena(split_nfa)
        bound = 2 * split_nfa.n * split_nfa.n + 2
        for outs in arena.edges:
            for e in outs:
                assert 1 <= e.priority <= bound

    def test_unique_node_keys(self, split_nfa):
        arena = build_arena(split_nfa)
        keys = [
            (n.support, n.lst, n.action, n.kind)
            for n in arena.nodes
            if n.kind == "tracking"
        ]
        # adversary nodes are unique per (support, list, action)
        assert len(keys) == len(set(keys))

    def test_budget_exceeded_is_loud(self, time_nfa):
        with pytest.raises(BudgetExceededError) as err:
            build_arena(time_nfa, node_budget=50)
        assert err.value.nodes_so_far >= 50

    def test_time_arena_under_budget(self, time_nfa):
        arena = build_arena(time_nfa, node_budget=100_000)
        assert arena.node_count < 100_000

    def test_determinacy(self, split_nfa):
        arena = build_arena(split_nfa)
        solution = solve_arena(arena)
        assert solution.win1 | solution.win2 == set(range(arena.node_count))
        assert not (solution.win1 & solution.win2)


class TestDecide:
    def test_split_positive(self, split_nfa):
        assert decide(split_nfa).winner == 1

    def test_linear_negative(self):
        for c in (1, 2, 3):
            d = decide(generate(GadgetSpec("linear", c)))
            assert d.winner == 2 and d.controller is None

    def test_memory_example_positive(self, memory_nfa):
        assert decide(memory_nfa).winner == 1

    def test_decision_carries_stats(self, split_nfa):
        d = decide(split_nfa)
        assert d.arena_stats["nodes"] > 0
        assert 1 in d.arena_stats["priorities"]

    def test_one_step_forced_win(self):
        nfa = build_nfa(
            ["q0", "f"], ["go"], "q0", "f", [("q0", "go", "f"), ("f", "go", "f")]
        )
        d = decide(nfa)
        assert d.winner == 1
        ctrl = d.controller
        assert ctrl.kinds[ctrl.initial] == "forced"
        out = run(nfa, ControllerStrategy(ctrl), 5, EvenAdversary(), budget=10)
        assert out.won and out.steps == 1

    def test_initial_equals_target(self):
        nfa = build_nfa(["f", "q"], ["x"], "f", "f",
                        [("f", "x", "f"), ("q", "x", "q")])
        d = decide(nfa)
        assert d.winner == 1
        out = run(nfa, ControllerStrategy(d.controller), 3, EvenAdversary(), budget=5)
        assert out.won and out.steps == 0

    def test_nested_single_layer_positive(self):
        nfa = generate(GadgetSpec("nested", 1))
        d = decide(nfa)
        assert d.winner == 1
        from popctl.popsim import OneOffAdversary

        out = run(nfa, ControllerStrategy(d.controller), 4, OneOffAdversary(),
                  budget=4 * 16 + 16)
        assert out.won

    def test_nested_two_layers_single_agent_winnable(self):
        from popctl.popsim import exact_winner

        nfa = generate(GadgetSpec("nested", 2))
        assert exact_winner(nfa, 1) == 1


class TestCollapseSoundness:
    """The forced-win/injective-safe collapses must never change the game
    value: cross-validate against the uncollapsed construction."""

    def test_fixtures_agree(self, split_nfa, memory_nfa):
        for nfa in (split_nfa, memory_nfa,
                    generate(GadgetSpec("linear", 2)),
                    generate(GadgetSpec("linear", 3))):
            fast = decide(nfa, node_budget=400_000).winner
            slow = decide(nfa, node_budget=400_000, collapse=False).winner
            assert fast == slow

    def test_random_nfas_agree(self):
        import random

        from popctl.nfa import Nfa

        rng = random.Random(555)
        compared = 0
        for _ in range(60):
            n = rng.randint(2, 3)
            n_actions = rng.randint(1, 2)
            delta = tuple(
                tuple(rng.randrange(1, 1 << n) for _ in range(n_actions))
                for _ in range(n)
            )
            nfa = Nfa(tuple(f"q{i}" for i in range(n)), tuple("ab"[:n_actions]),
                      0, n - 1, delta)
            fast = decide(nfa, node_budget=400_000).winner
            try:
                slow = decide(nfa, node_budget=6_000, collapse=False).winner
            except BudgetExceededError:
                continue  # uncollapsed closure too large; nothing to compare
            compared += 1
            assert fast == slow, nfa
        assert compared >= 25


class TestController:
    def test_split_controller_opens_with_delta(self, split_nfa):
        ctrl = decide(split_nfa).controller
        assert ctrl.alphabet[ctrl.choose(ctrl.initial)] == "delta"

    def test_controller_closed_under_all_replies(self, split_nfa):
        ctrl = decide(split_nfa).controller
        ops = ctrl.ops
        for node in range(ctrl.size):
            action = ctrl.choose(node)
            if action is None or ctrl.kinds[node] != "tracking":
                continue
            for g in compatible_graphs(split_nfa, ops, ctrl.supports[node], action):
                nxt = ctrl.advance(node, action, g)
                assert 0 <= nxt < ctrl.size

    def test_step_at_win_repeats_last_letter(self, split_nfa):
        ctrl = decide(split_nfa).controller
        action, nxt = ctrl.step(ctrl.win, 0, last_action=2)
        assert action == 2 and nxt == ctrl.win

    def test_incompatible_graph_rejected(self, split_nfa):
        ctrl = decide(split_nfa).controller
        node = ctrl.initial
        action = ctrl.choose(node)
        bad = ctrl.ops.from_edges([(0, 3)])  # q0 -> f is not a delta move
        with pytest.raises(ControllerError):
            ctrl.advance(node, action, bad)

    def test_time_controller_advances_along_arena_edges(self, time_nfa):
        """At a both-branches-occupied memory node the only safe letter is
        keep, and observing its graph moves the memory to the parked
        support."""
        nfa = time_nfa
        ctrl = decide(nfa).controller
        ops = ctrl.ops
        branches = (1 << nfa.state_index("qtop")) | (1 << nfa.state_index("qbot"))
        parked = (1 << nfa.state_index("q0")) | (1 << nfa.state_index("k"))
        seen = 0
        for node in range(ctrl.size):
            if ctrl.kinds[node] != "tracking" or ctrl.supports[node] != branches:
                continue
            seen += 1
            action = ctrl.choose(node)
            assert nfa.alphabet[action] == "keep"
            observed = ops.from_edges(
                [(nfa.state_index("qtop"), nfa.state_index("q0")),
                 (nfa.state_index("qbot"), nfa.state_index("k"))]
            )
            nxt = ctrl.advance(node, action, observed)
            assert ctrl.supports[nxt] == parked
        assert seen > 0

    def test_memoryless_support_strategies_fail_on_memory_example(self, memory_nfa):
        """Playing only a (or only b) from the full middle support loops in
        the support arena forever, while the full synthesis still wins."""
        nfa = memory_nfa
        full = sum(1 << nfa.state_index(s) for s in ("q1", "q2", "q3", "q4"))
        for letter in ("a", "b"):
            a = nfa.action_index(letter)
            support = full
            seen = set()
            while support not in seen:
                seen.add(support)
                support = post_support(nfa, support, a)
            assert support != 1 << nfa.target
            assert 1 << nfa.target not in seen
        assert decide(nfa).winner == 1


class TestSerialization:
    def test_round_trip_identity(self, split_nfa):
        ctrl = decide(split_nfa).controller
        doc = serialize_controller(ctrl)
        again = deserialize_controller(doc, split_nfa)
        assert serialize_controller(again) == doc
        assert again.initial == ctrl.initial
        assert again.supports == ctrl.supports
        assert again.lists == ctrl.lists
        assert again.actions == ctrl.actions

    def test_document_is_deterministic(self, split_nfa):
        a = serialize_controller(decide(split_nfa).controller)
        b = serialize_controller(decide(split_nfa).controller)
        assert a == b

    def test_truncated_document_rejected(self, split_nfa):
        doc = serialize_controller(decide(split_nfa).controller)
        with pytest.raises(ControllerError):
            deserialize_controller(doc[: len(doc) // 2], split_nfa)

    def test_wrong_nfa_rejected(self, split_nfa, time_nfa):
        doc = serialize_controller(decide(split_nfa).controller)
        with pytest.raises(ControllerError, match="match"):
            deserialize_controller(doc, time_nfa)

    def test_graph_edges_sorted(self, split_nfa):
        doc = json.loads(serialize_controller(decide(split_nfa).controller))
        for node in doc["nodes"]:
            for graph in node["list"]:
                assert graph == sorted(graph)
        for edge in doc["edges"]:
            assert edge["graph"] == sorted(edge["graph"])

    def test_deserialized_replays_identically(self, time_nfa):
        ctrl = decide(time_nfa).controller
        clone = deserialize_controller(serialize_controller(ctrl), time_nfa)
        for seed in range(100):
            mine = run(time_nfa, ControllerStrategy(ctrl), 10,
                       RandomAdversary(seed), budget=600, record_trace=True)
            theirs = run(time_nfa, ControllerStrategy(clone), 10,
                         RandomAdversary(seed), budget=600, record_trace=True)
            assert mine.status == theirs.status == "won"
            assert mine.steps == theirs.steps
            assert mine.trace == theirs.trace
