"""Recursive parity game solver.

Min-parity convention: the relevant value of an infinite play is the least
node priority seen infinitely often, and odd values are good for player 1.
The solver returns the full winning-region partition together with a
positional strategy for each player on its own region.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field


@dataclass
class ParityGame:
    owner: list[int]  # 1 or 2 per node
    priority: list[int]
    succ: list[list[int]]
    pred: list[list[int]] = field(default_factory=list)

    def __post_init__(self):
        if not self.pred:
            self.pred = [[] for _ in self.owner]
            for u, outs in enumerate(self.succ):
                if not outs:
                    raise ValueError(f"node {u} has no successor (dead end)")
                for v in outs:
                    self.pred[v].append(u)

    @property
    def size(self) -> int:
        return len(self.owner)


@dataclass
class ParitySolution:
    win1: set[int]
    win2: set[int]
    strategy1: dict[int, int]  # player-1 node -> chosen successor, on win1
    strategy2: dict[int, int]

    def winner(self, node: int) -> int:
        return 1 if node in self.win1 else 2

    def region(self, player: int) -> set[int]:
        return self.win1 if player == 1 else self.win2

    def strategy(self, player: int) -> dict[int, int]:
        return self.strategy1 if player == 1 else self.strategy2


def attractor(
    game: ParityGame, player: int, targets: set[int], active: set[int]
) -> tuple[set[int], dict[int, int]]:
    """Player's attractor to ``targets`` within the subgame ``active``.

    Returns the attractor set and a rank-decreasing strategy for the
    player's nodes added along the way.
    """
    att = set(targets)
    strat: dict[int, int] = {}
    out_count: dict[int, int] = {}
    queue = list(targets)
    pred, succ, owner = game.pred, game.succ, game.owner
    while queue:
        v = queue.pop()
        for u in pred[v]:
            if u not in active or u in att:
                continue
            if owner[u] == player:
                att.add(u)
                strat[u] = v
                queue.append(u)
            else:
                cnt = out_count.get(u)
                if cnt is None:
                    cnt = 0
                    for w in succ[u]:
                        if w in active:
                            cnt += 1
                out_count[u] = cnt - 1
                if cnt == 1:
                    att.add(u)
                    queue.append(u)
    return att, strat


def _zielonka(game: ParityGame, active: set[int]) -> ParitySolution:
    if not active:
        return ParitySolution(set(), set(), {}, {})

    p = min(game.priority[v] for v in active)
    alpha = 1 if p % 2 == 1 else 2
    beta = 3 - alpha
    tops = {v for v in active if game.priority[v] == p}

    attr, attr_strat = attractor(game, alpha, tops, active)
    sub = _zielonka(game, active - attr)
    opp_region = sub.region(beta)

    if not opp_region:
        # alpha sweeps the whole subgame: follow the recursive strategy off
        # the attractor, the attractor strategy toward the top nodes, and
        # any in-game move from the top nodes themselves.
        strat_alpha = dict(sub.strategy(alpha))
        strat_alpha.update(attr_strat)
        for v in tops:
            if game.owner[v] == alpha and v not in strat_alpha:
                strat_alpha[v] = next(w for w in game.succ[v] if w in active)
        if alpha == 1:
            return ParitySolution(set(active), set(), strat_alpha, {})
        return ParitySolution(set(), set(active), {}, strat_alpha)

    escape, escape_strat = attractor(game, beta, opp_region, active)
    rest = _zielonka(game, active - escape)

    win_beta = rest.region(beta) | escape
    win_alpha = rest.region(alpha)
    strat_beta = dict(rest.strategy(beta))
    strat_beta.update(sub.strategy(beta))
    strat_beta.update(escape_strat)
    strat_alpha = dict(rest.strategy(alpha))
    if alpha == 1:
        return ParitySolution(win_alpha, win_beta, strat_alpha, strat_beta)
    return ParitySolution(win_beta, win_alpha, strat_beta, strat_alpha)


def solve_parity_game(game: ParityGame) -> ParitySolution:
    """Zielonka recursion over the whole game."""
    limit = max(10_000, 4 * game.size + 1000)
    old = sys.getrecursionlimit()
    if old < limit:
        sys.setrecursionlimit(limit)
    try:
        solution = _zielonka(game, set(range(game.size)))
    finally:
        if old < limit:
            sys.setrecursionlimit(old)
    assert not (solution.win1 & solution.win2)
    assert len(solution.win1) + len(solution.win2) == game.size
    return solution
