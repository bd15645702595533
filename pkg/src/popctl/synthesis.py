"""Population-control decision and symbolic controller extraction.

The decision reduces to solving the synthesis parity game.  When the
controller side wins, the winning region is restricted to the reachable
part and packaged as a finite-memory controller: memory nodes are
(support, tracking list) pairs, the letter choice is positional, and the
memory update recomputes the tracking list from the observed transfer
graph, so the controller never needs agent counts.  Supports from which
the target can be forced outright are handled by lighter support-keyed
memory nodes that replay the forcing letters.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .arena import (
    ArenaSolution,
    DEFAULT_NODE_BUDGET,
    ParityArena,
    build_arena,
    solve_arena,
)
from .capacity import TrackingList, update_list
from .graphs import GraphOps, mask_of
from .nfa import Nfa, bits, serialize_nfa
from .support_game import post_support


class ControllerError(RuntimeError):
    """Controller consulted outside its contract (caller bug)."""


@dataclass
class Controller:
    """Symbolic winning strategy: memory node -> letter, graph-driven update."""

    states: tuple[str, ...]
    target: int
    supports: list[int]
    lists: list[TrackingList]
    actions: list[int | None]  # letter per node; None on the WIN node
    kinds: list[str]  # "tracking" | "forced" | "win"
    initial: int
    win: int
    alphabet: tuple[str, ...]
    nfa: Nfa | None = None
    _index: dict[tuple[int, TrackingList], int] = field(default_factory=dict)
    _forced_index: dict[int, int] = field(default_factory=dict)
    _ops: GraphOps | None = None

    def __post_init__(self):
        if self._ops is None:
            self._ops = GraphOps(len(self.states))
        if not self._index:
            for i, kind in enumerate(self.kinds):
                if kind == "tracking":
                    self._index[(self.supports[i], self.lists[i])] = i
                elif kind == "forced":
                    self._forced_index[self.supports[i]] = i

    @property
    def ops(self) -> GraphOps:
        assert self._ops is not None
        return self._ops

    @property
    def size(self) -> int:
        return len(self.supports)

    def choose(self, node: int) -> int | None:
        return self.actions[node]

    def advance(self, node: int, action: int, observed: int) -> int:
        """Memory update on one observed transfer graph."""
        if node == self.win:
            return self.win
        if self.ops.dom(observed) != self.supports[node]:
            raise ControllerError("observed graph domain does not match the support")
        if self.nfa is not None:
            for q in bits(self.supports[node]):
                if self.ops.row(observed, q) & ~self.nfa.delta[q][action]:
                    raise ControllerError(
                        f"observed graph not compatible with {self.alphabet[action]}"
                    )
        s_next = self.ops.im(observed)
        if s_next == 1 << self.target:
            return self.win
        forced = self._forced_index.get(s_next)
        if self.kinds[node] == "forced":
            if forced is None:
                raise ControllerError("forcing play left the forced region")
            return forced
        new_list, _ = update_list(self.ops, self.lists[node], observed)
        nxt = self._index.get((s_next, new_list))
        if nxt is None:
            nxt = forced
        if nxt is None:
            raise ControllerError("observed graph leads outside the controller")
        return nxt

    def step(self, node: int, observed: int, last_action: int | None = None):
        """One round: return (letter played, next memory node).

        On the absorbing WIN node any letter is legal; the convention is to
        repeat the last letter played (callers pass it in).
        """
        action = self.actions[node]
        if action is None:
            action = last_action if last_action is not None else 0
            return action, self.win
        return action, self.advance(node, action, observed)


def controller_step(controller: Controller, node: int, observed: int,
                    last_action: int | None = None):
    return controller.step(node, observed, last_action)


@dataclass
class Decision:
    winner: int
    controller: Controller | None
    arena_stats: dict
    solution: ArenaSolution | None = None

    @property
    def positive(self) -> bool:
        return self.winner == 1


# ---------------------------------------------------------------------------
# Strategy extraction


def _fast_win_strategy(arena: ParityArena, solution: ArenaSolution) -> dict[int, int]:
    """Letter choices forcing WIN/FORCED outright, where possible."""
    att = {arena.win, arena.forced}
    strat: dict[int, int] = {}
    remaining: dict[int, int] = {}
    preds: dict[int, set[int]] = {}
    for v in range(arena.node_count):
        for e in arena.edges[v]:
            preds.setdefault(e.dst, set()).add(v)
    queue = [arena.win, arena.forced]
    while queue:
        v = queue.pop()
        for u in preds.get(v, ()):  # deduplicated: one entry per source node
            if u in att:
                continue
            if arena.nodes[u].owner == 1:
                edge = next(e for e in arena.edges[u] if e.dst in att)
                strat[u] = edge.label
                att.add(u)
                queue.append(u)
            else:
                if u not in remaining:
                    remaining[u] = len({e.dst for e in arena.edges[u]})
                remaining[u] -= 1
                if remaining[u] == 0:
                    att.add(u)
                    queue.append(u)
    return strat


def _choose_letters(arena: ParityArena, solution: ArenaSolution) -> dict[int, int]:
    """Pick a letter per winning node, biased toward fast synchronization.

    Start from the greedy choice: among letters whose adversary node is
    winning (hence all replies stay winning), minimize the worst reply's
    plain graph distance to the absorbing win positions, preferring the
    solver's own choice on ties.  Greedy picks can close cycles whose
    least priority is even, which would hand the adversary an infinite
    play; nodes on such cycles are reverted to the solver's positional
    choice until no reachable cycle has an even minimum.  Reverting
    everything reproduces the solver strategy, so the loop terminates on
    a winning strategy.
    """
    win1 = solution.win1

    dist: dict[int, int] = {arena.win: 0, arena.forced: 0}
    preds: dict[int, set[int]] = {}
    for v in range(arena.node_count):
        if v in win1 or v in (arena.win, arena.forced):
            for e in arena.edges[v]:
                preds.setdefault(e.dst, set()).add(v)
    frontier = [arena.win, arena.forced]
    while frontier:
        nxt: list[int] = []
        for v in frontier:
            for u in preds.get(v, ()):
                if u not in dist:
                    dist[u] = dist[v] + 1
                    nxt.append(u)
        frontier = nxt

    far = 1 << 60
    fast = _fast_win_strategy(arena, solution)
    choices: dict[int, int] = {}
    for v in win1:
        node = arena.nodes[v]
        if node.owner != 1 or node.kind != "tracking":
            continue
        if v in fast:
            choices[v] = fast[v]
            continue
        solver_letter = solution.strategy1[v].label
        best: tuple | None = None
        for e in arena.edges[v]:
            u = e.dst
            if u not in win1:
                continue
            worst = max((dist.get(r.dst, far) for r in arena.edges[u]), default=far)
            key = (worst, 0 if e.label == solver_letter else 1, e.label)
            if best is None or key < best[0]:
                best = (key, e.label)
        assert best is not None
        choices[v] = best[1]

    while True:
        bad = _nodes_on_even_cycles(arena, choices)
        if not bad:
            return choices
        for v in bad:
            if v in fast:
                continue
            choices[v] = solution.strategy1[v].label


def _nodes_on_even_cycles(arena: ParityArena, choices: dict[int, int]) -> set[int]:
    """Controller nodes on a reachable cycle whose least priority is even."""
    nodes: set[int] = set()
    edges: list[tuple[int, int, int]] = []
    stack = [arena.initial]
    while stack:
        v = stack.pop()
        if v in nodes:
            continue
        nodes.add(v)
        node = arena.nodes[v]
        if node.kind != "tracking":
            for e in arena.edges[v]:
                edges.append((v, e.dst, e.priority))
            continue
        if node.owner == 1:
            a = choices[v]
            u = next(e.dst for e in arena.edges[v] if e.label == a)
            edges.append((v, u, arena.neutral))
            stack.append(u)
        else:
            for e in arena.edges[v]:
                edges.append((v, e.dst, e.priority))
                stack.append(e.dst)

    bad: set[int] = set()
    priorities = sorted({p for _, _, p in edges if p % 2 == 0})
    for p in priorities:
        keep = [(u, v) for u, v, q in edges if q >= p]
        comp, members = _sccs(nodes, keep)
        flagged: set[int] = set()
        for u, v, q in edges:
            if q == p and u in comp and comp[u] == comp.get(v):
                flagged.add(comp[u])
        for cid in flagged:
            for w in members[cid]:
                if arena.nodes[w].owner == 1 and arena.nodes[w].kind == "tracking":
                    bad.add(w)
    return bad


def _sccs(nodes: set[int], edge_list):
    """Tarjan SCCs that contain a cycle: (node -> id, id -> members)."""
    succ: dict[int, list[int]] = {v: [] for v in nodes}
    self_loop: set[int] = set()
    for u, v in edge_list:
        succ[u].append(v)
        if u == v:
            self_loop.add(u)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    comp: dict[int, int] = {}
    members: dict[int, list[int]] = {}
    counter = [0]
    comp_id = [0]
    stack: list[int] = []
    on_stack: set[int] = set()

    def strongconnect(root: int) -> None:
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                group = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    group.append(w)
                    if w == v:
                        break
                if len(group) > 1 or v in self_loop:
                    for w in group:
                        comp[w] = comp_id[0]
                    members[comp_id[0]] = group
                    comp_id[0] += 1

    for v in nodes:
        if v not in index:
            strongconnect(v)
    return comp, members


def _forced_images(nfa: Nfa, support: int, a: int) -> list[int]:
    """Every support the adversary can reach from a forcing move."""
    post = post_support(nfa, support, a)
    targets = list(bits(post))
    out = []
    for pick in range(1, 1 << len(targets)):
        t = 0
        for i, p in enumerate(targets):
            if (pick >> i) & 1:
                t |= 1 << p
        if all(nfa.delta[q][a] & t for q in bits(support)):
            out.append(t)
    return out


def extract_controller(arena: ParityArena, solution: ArenaSolution) -> Controller:
    """Restrict the winning region to its reachable part and package it."""
    nfa = arena.nfa
    goal = 1 << nfa.target
    letters = _choose_letters(arena, solution)

    supports: list[int] = []
    lists: list[TrackingList] = []
    actions: list[int | None] = []
    kinds: list[str] = []

    def add_node(support: int, lst: TrackingList, action: int | None, kind: str) -> int:
        supports.append(support)
        lists.append(lst)
        actions.append(action)
        kinds.append(kind)
        return len(supports) - 1

    win_id = add_node(goal, (), None, "win")
    forced_ids: dict[int, int] = {}
    forced_pending: list[int] = []

    def forced_node(support: int) -> int:
        found = forced_ids.get(support)
        if found is not None:
            return found
        letter = arena.oracle.forced_letter(support)
        assert letter is not None
        idx = add_node(support, (), letter, "forced")
        forced_ids[support] = idx
        forced_pending.append(support)
        return idx

    tracking_ids: dict[int, int] = {}
    track_pending: list[int] = []

    def tracking_node(v: int) -> int:
        found = tracking_ids.get(v)
        if found is not None:
            return found
        node = arena.nodes[v]
        idx = add_node(node.support, node.lst, letters[v], "tracking")
        tracking_ids[v] = idx
        track_pending.append(v)
        return idx

    if arena.initial == arena.win:
        initial_id = win_id
    elif arena.initial == arena.forced:
        initial_id = forced_node(1 << nfa.initial)
    else:
        initial_id = tracking_node(arena.initial)

    while track_pending or forced_pending:
        while track_pending:
            v = track_pending.pop()
            if v not in solution.win1:
                raise AssertionError("controller extraction escaped the winning region")
            a = letters[v]
            adv = next(e.dst for e in arena.edges[v] if e.label == a)
            for e in arena.edges[adv]:
                dst = arena.nodes[e.dst]
                if dst.kind == "win":
                    continue
                if dst.kind == "forced":
                    s_next = arena.ops.im(e.label)
                    forced_node(s_next)
                elif dst.kind == "tracking":
                    tracking_node(e.dst)
                else:
                    raise AssertionError("winning controller reached a losing collapse")
        while forced_pending:
            support = forced_pending.pop()
            letter = arena.oracle.forced_letter(support)
            assert letter is not None
            for t in _forced_images(nfa, support, letter):
                if t != goal:
                    forced_node(t)

    return Controller(
        states=nfa.states,
        target=nfa.target,
        supports=supports,
        lists=lists,
        actions=actions,
        kinds=kinds,
        initial=initial_id,
        win=win_id,
        alphabet=nfa.alphabet,
        nfa=nfa,
    )


def decide(nfa: Nfa, node_budget: int = DEFAULT_NODE_BUDGET, collapse: bool = True) -> Decision:
    """Decide the population control problem and synthesize on a yes."""
    arena = build_arena(nfa, node_budget, collapse=collapse)
    solution = solve_arena(arena)
    if arena.initial in solution.win1:
        controller = extract_controller(arena, solution)
        return Decision(1, controller, arena.stats(), solution)
    return Decision(2, None, arena.stats(), solution)


# ---------------------------------------------------------------------------
# Controller documents


def nfa_hash(nfa: Nfa) -> str:
    return hashlib.sha256(serialize_nfa(nfa).encode()).hexdigest()


def _graph_to_names(ops: GraphOps, states: tuple[str, ...], g: int) -> list[list[str]]:
    pairs = [[states[q], states[r]] for q, r in ops.edges(g)]
    pairs.sort()
    return pairs


def _graph_from_names(ops: GraphOps, index: dict[str, int], pairs) -> int:
    return ops.from_edges((index[src], index[dst]) for src, dst in pairs)


def serialize_controller(controller: Controller) -> str:
    """Deterministic JSON document for a controller."""
    ops = controller.ops
    states = controller.states
    nodes_doc = []
    for i in range(controller.size):
        action = controller.actions[i]
        nodes_doc.append(
            {
                "id": i,
                "kind": controller.kinds[i],
                "support": [states[q] for q in bits(controller.supports[i])],
                "list": [_graph_to_names(ops, states, g) for g in controller.lists[i]],
                "action": None if action is None else controller.alphabet[action],
            }
        )
    edges_doc = []
    if controller.nfa is not None:
        from .support_game import compatible_graphs  # local to avoid cycle

        for i in range(controller.size):
            if controller.kinds[i] != "tracking":
                continue
            action = controller.actions[i]
            seen: set[int] = set()
            for g in compatible_graphs(controller.nfa, ops, controller.supports[i], action):
                dst = controller.advance(i, action, g)
                if dst in seen:
                    continue
                seen.add(dst)
                edges_doc.append(
                    {"from": i, "graph": _graph_to_names(ops, states, g), "to": dst}
                )
    doc = {
        "nfa_hash": "" if controller.nfa is None else nfa_hash(controller.nfa),
        "states": list(states),
        "alphabet": list(controller.alphabet),
        "target": states[controller.target],
        "initial": controller.initial,
        "win": controller.win,
        "nodes": nodes_doc,
        "edges": edges_doc,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def deserialize_controller(document: str, nfa: Nfa | None = None) -> Controller:
    """Rebuild a controller from its JSON document.

    When the automaton is supplied, the stored hash is checked and the
    controller regains full compatibility validation.
    """
    try:
        doc = json.loads(document)
        states = tuple(doc["states"])
        alphabet = tuple(doc["alphabet"])
        target = states.index(doc["target"])
        ops = GraphOps(len(states))
        index = {s: i for i, s in enumerate(states)}
        count = len(doc["nodes"])
        supports = [0] * count
        lists: list[TrackingList] = [()] * count
        actions: list[int | None] = [None] * count
        kinds = ["tracking"] * count
        for node in doc["nodes"]:
            i = node["id"]
            supports[i] = mask_of(index[s] for s in node["support"])
            lists[i] = tuple(_graph_from_names(ops, index, g) for g in node["list"])
            actions[i] = None if node["action"] is None else alphabet.index(node["action"])
            kinds[i] = node["kind"]
        initial = doc["initial"]
        win = doc["win"]
        if not 0 <= initial < count or not 0 <= win < count:
            raise ValueError("node ids out of range")
    except (KeyError, ValueError, IndexError, TypeError) as exc:
        raise ControllerError(f"malformed controller document: {exc}") from exc
    if nfa is not None:
        if nfa_hash(nfa) != doc["nfa_hash"]:
            raise ControllerError("controller document does not match this automaton")
    return Controller(
        states=states,
        target=target,
        supports=supports,
        lists=lists,
        actions=actions,
        kinds=kinds,
        initial=initial,
        win=win,
        alphabet=alphabet,
        nfa=nfa,
        _ops=ops,
    )
