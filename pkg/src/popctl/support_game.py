"""Supports, transfer-graph enumeration, and the infinite-population game.

The support game abstracts an unbounded population by the set of occupied
states.  The adversary's dominant move is the maximal compatible graph, so
the game collapses to deterministic reachability over supports; a full
alternating solver over explicit graph choices exists in the tests as a
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .graphs import GraphOps
from .nfa import Nfa, bits


def is_compatible(nfa: Nfa, ops: GraphOps, g: int, a: int) -> bool:
    """True iff every edge (q, r) of g is a legal move of action a."""
    for q in range(nfa.n):
        row = ops.row(g, q)
        if row & ~nfa.delta[q][a]:
            return False
    return True


def maximal_graph(nfa: Nfa, ops: GraphOps, support: int, a: int) -> int:
    """All legal edges of action a out of the support."""
    g = 0
    for q in bits(support):
        g |= nfa.delta[q][a] << (q * nfa.n)
    return g


def post_support(nfa: Nfa, support: int, a: int) -> int:
    """Image of the maximal graph: union of successor sets over the support."""
    out = 0
    for q in bits(support):
        out |= nfa.delta[q][a]
    return out


def _nonempty_submasks(mask: int) -> list[int]:
    positions = list(bits(mask))
    out = []
    for pick in range(1, 1 << len(positions)):
        m = 0
        for i, p in enumerate(positions):
            if (pick >> i) & 1:
                m |= 1 << p
        out.append(m)
    return out


def compatible_graphs(nfa: Nfa, ops: GraphOps, support: int, a: int):
    """Stream every transfer graph the adversary may answer with.

    Each occupied state maps to a nonempty subset of its successors; the
    enumeration is lexicographic over the per-state subset masks and its
    last element is the maximal graph.  Lazy on purpose: the game
    construction must not materialize the whole product.
    """
    states = list(bits(support))
    per_state = [_nonempty_submasks(nfa.delta[q][a]) for q in states]
    n = nfa.n
    for choice in product(*per_state):
        g = 0
        for q, sub in zip(states, choice):
            g |= sub << (q * n)
        yield g


def count_compatible_graphs(nfa: Nfa, support: int, a: int) -> int:
    total = 1
    for q in bits(support):
        total *= (1 << nfa.delta[q][a].bit_count()) - 1
    return total


@dataclass(frozen=True)
class SupportGameResult:
    winner: int  # 1 or 2
    witness_actions: tuple[int, ...] | None  # player 1: action sequence to {f}
    safe_supports: frozenset[int] | None  # player 2: reachable supports

    @property
    def player1_wins(self) -> bool:
        return self.winner == 1


def solve_support_game(nfa: Nfa) -> SupportGameResult:
    """Decide the infinite-population game by support reachability.

    The adversary never gains by dropping edges when the population is
    unbounded, so supports evolve deterministically under maximal graphs
    and the controller wins iff {target} is reachable from {initial}.
    """
    goal = 1 << nfa.target
    start = 1 << nfa.initial
    parent: dict[int, tuple[int, int] | None] = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for s in frontier:
            if s == goal:
                actions = []
                cur = s
                while parent[cur] is not None:
                    prev, a = parent[cur]
                    actions.append(a)
                    cur = prev
                return SupportGameResult(1, tuple(reversed(actions)), None)
            for a in range(len(nfa.alphabet)):
                t = post_support(nfa, s, a)
                if t not in parent:
                    parent[t] = (s, a)
                    nxt.append(t)
        frontier = nxt
    return SupportGameResult(2, None, frozenset(parent))


def replay_witness(nfa: Nfa, actions: tuple[int, ...]) -> int:
    """Run a support-game witness under maximal graphs; returns final support."""
    s = 1 << nfa.initial
    for a in actions:
        s = post_support(nfa, s, a)
    return s
