"""Counting-abstraction simulation of finite-population games.

A configuration counts agents per state.  One round: the controller
broadcasts a letter, the adversary splits each state's agents over the
letter's successors, and the controller observes only the induced transfer
graph.  Exact small-population solving is an attractor computation over
configurations and doubles as the test oracle for the symbolic decision.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

from .nfa import Nfa, bits
from .synthesis import Controller, ControllerError

Config = tuple[int, ...]
Split = dict[int, dict[int, int]]  # source state -> successor -> count


class SimulationError(ValueError):
    pass


class ResourceExceededError(RuntimeError):
    def __init__(self, message: str, last_decided_m: int | None = None):
        super().__init__(message)
        self.last_decided_m = last_decided_m


def initial_config(nfa: Nfa, m: int) -> Config:
    if m < 1:
        raise SimulationError("population size must be at least 1")
    counts = [0] * nfa.n
    counts[nfa.initial] = m
    return tuple(counts)


def target_config(nfa: Nfa, m: int) -> Config:
    counts = [0] * nfa.n
    counts[nfa.target] = m
    return tuple(counts)


def validate_split(nfa: Nfa, cfg: Config, a: int, split: Split) -> None:
    """Check conservation and edge legality; errors name the offending state."""
    for q, moves in split.items():
        if cfg[q] == 0:
            raise SimulationError(f"split moves agents from empty state {nfa.states[q]}")
        total = 0
        legal = nfa.delta[q][a]
        for r, k in moves.items():
            if k < 0:
                raise SimulationError(f"negative agent count at {nfa.states[q]}")
            if k > 0 and not (legal >> r) & 1:
                raise SimulationError(
                    f"illegal move {nfa.states[q]} -> {nfa.states[r]} "
                    f"on {nfa.alphabet[a]}"
                )
            total += k
        if total != cfg[q]:
            raise SimulationError(
                f"conservation violated at {nfa.states[q]}: "
                f"allocated {total} of {cfg[q]}"
            )
    for q in range(nfa.n):
        if cfg[q] > 0 and q not in split:
            raise SimulationError(f"no allocation for occupied state {nfa.states[q]}")


def apply_split(nfa: Nfa, cfg: Config, a: int, split: Split) -> Config:
    validate_split(nfa, cfg, a, split)
    counts = [0] * nfa.n
    for q, moves in split.items():
        for r, k in moves.items():
            counts[r] += k
    return tuple(counts)


def project(nfa: Nfa, cfg: Config, a: int, split: Split) -> tuple[int, int, int]:
    """(support before, transfer graph with positive flow, support after)."""
    n = nfa.n
    before = 0
    graph = 0
    after_counts = [0] * n
    for q in range(n):
        if cfg[q] > 0:
            before |= 1 << q
    for q, moves in split.items():
        for r, k in moves.items():
            if k > 0:
                graph |= 1 << (q * n + r)
                after_counts[r] += k
    after = 0
    for r in range(n):
        if after_counts[r] > 0:
            after |= 1 << r
    return before, graph, after


# ---------------------------------------------------------------------------
# Adversary policies


class Adversary:
    """Resolves nondeterminism: produces one legal split per round."""

    def reset(self, rng_seed: int | None = None) -> None:
        pass

    def split(self, nfa: Nfa, cfg: Config, a: int) -> Split:
        raise NotImplementedError


class EvenAdversary(Adversary):
    """Spread each state's agents as evenly as possible, remainder to the
    lowest-index successors."""

    def split(self, nfa: Nfa, cfg: Config, a: int) -> Split:
        out: Split = {}
        for q in range(nfa.n):
            c = cfg[q]
            if c == 0:
                continue
            succs = list(bits(nfa.delta[q][a]))
            base, rem = divmod(c, len(succs))
            moves = {}
            for i, r in enumerate(succs):
                k = base + (1 if i < rem else 0)
                if k:
                    moves[r] = k
            out[q] = moves
        return out


class OneOffAdversary(Adversary):
    """Keep the herd on the first successor, peel one agent off to the
    lowest-index non-first successor whenever there is a real choice."""

    def split(self, nfa: Nfa, cfg: Config, a: int) -> Split:
        out: Split = {}
        for q in range(nfa.n):
            c = cfg[q]
            if c == 0:
                continue
            succs = list(bits(nfa.delta[q][a]))
            if len(succs) > 1 and c > 1:
                out[q] = {succs[0]: c - 1, succs[1]: 1}
            else:
                out[q] = {succs[0]: c}
        return out


class RandomAdversary(Adversary):
    """Uniform over legal splits (per-state compositions), seeded."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = random.Random(seed)

    def reset(self, rng_seed: int | None = None) -> None:
        self._rng = random.Random(self.seed if rng_seed is None else rng_seed)

    def split(self, nfa: Nfa, cfg: Config, a: int) -> Split:
        out: Split = {}
        for q in range(nfa.n):
            c = cfg[q]
            if c == 0:
                continue
            succs = list(bits(nfa.delta[q][a]))
            k = len(succs)
            if k == 1:
                out[q] = {succs[0]: c}
                continue
            # Uniform composition of c into k parts via random bar placement.
            slots = sorted(self._rng.sample(range(c + k - 1), k - 1))
            moves = {}
            prev = -1
            for i, bar in enumerate(slots + [c + k - 1]):
                part = bar - prev - 1
                if part:
                    moves[succs[i]] = part
                prev = bar
            out[q] = moves
        return out


class ScriptedAdversary(Adversary):
    """Replays a fixed list of splits."""

    def __init__(self, splits: list[Split]):
        self.splits = splits
        self._pos = 0

    def reset(self, rng_seed: int | None = None) -> None:
        self._pos = 0

    def split(self, nfa: Nfa, cfg: Config, a: int) -> Split:
        if self._pos >= len(self.splits):
            raise SimulationError("scripted adversary ran out of splits")
        s = self.splits[self._pos]
        self._pos += 1
        return s


def make_adversary(kind: str, seed: int | None = None) -> Adversary:
    if kind == "even":
        return EvenAdversary()
    if kind == "oneoff":
        return OneOffAdversary()
    if kind == "random":
        if seed is None:
            raise SimulationError("the random adversary needs an explicit seed")
        return RandomAdversary(seed)
    raise SimulationError(f"unknown adversary {kind!r}")


# ---------------------------------------------------------------------------
# Controller-side policies


class Strategy:
    """Action chooser fed by observed transfer graphs."""

    def start(self, nfa: Nfa, m: int) -> None:
        pass

    def action(self, nfa: Nfa, cfg: Config) -> int:
        raise NotImplementedError

    def observe(self, action: int, graph: int) -> None:
        pass


class ControllerStrategy(Strategy):
    """Drives a synthesized controller, repeating the last letter once won."""

    def __init__(self, controller: Controller):
        self.controller = controller
        self.node = controller.initial
        self.last_action: int | None = None

    def start(self, nfa: Nfa, m: int) -> None:
        self.node = self.controller.initial
        self.last_action = None

    def action(self, nfa: Nfa, cfg: Config) -> int:
        a = self.controller.choose(self.node)
        if a is None:
            a = self.last_action if self.last_action is not None else 0
        return a

    def observe(self, action: int, graph: int) -> None:
        self.last_action = action
        if self.node != self.controller.win:
            self.node = self.controller.advance(self.node, action, graph)


class TimeGadgetScript(Strategy):
    """Hand-scripted strategy for the try/keep gadget.

    Try while the initial state is occupied; keep while both branch states
    are; flush a lone branch with top/bot; restart to recycle the parked
    agents.
    """

    def start(self, nfa: Nfa, m: int) -> None:
        self._idx = {name: nfa.state_index(name) for name in ("q0", "qtop", "qbot", "k")}
        self._act = {name: nfa.action_index(name) for name in ("try", "keep", "top", "bot", "restart")}

    def action(self, nfa: Nfa, cfg: Config) -> int:
        q0, top, bot, k = (cfg[self._idx[s]] for s in ("q0", "qtop", "qbot", "k"))
        if q0 > 0:
            return self._act["try"]
        if top > 0 and bot > 0:
            return self._act["keep"]
        if top > 0:
            return self._act["top"]
        if bot > 0:
            return self._act["bot"]
        if k > 0:
            return self._act["restart"]
        return self._act["try"]


# ---------------------------------------------------------------------------
# Running games


@dataclass
class RunOutcome:
    status: str  # "won" | "lost" | "inconclusive"
    steps: int
    trace: list[tuple[int, Split, Config]] | None = None

    @property
    def won(self) -> bool:
        return self.status == "won"


def run(
    nfa: Nfa,
    strategy: Strategy,
    m: int,
    adversary: Adversary,
    budget: int = 10_000,
    record_trace: bool = False,
) -> RunOutcome:
    """Play one m-agent game to the target, a dead end, or the step budget.

    Budget-exhausted runs are inconclusive, not losses; a run is lost only
    once some agent reaches a state from which the target is unreachable.
    """
    goal = target_config(nfa, m)
    doomed = ~nfa.target_reachable_from()
    cfg = initial_config(nfa, m)
    strategy.start(nfa, m)
    adversary.reset()
    trace: list[tuple[int, Split, Config]] | None = [] if record_trace else None

    for step in range(1, budget + 1):
        if cfg == goal:
            return RunOutcome("won", step - 1, trace)
        a = strategy.action(nfa, cfg)
        split = adversary.split(nfa, cfg, a)
        new_cfg = apply_split(nfa, cfg, a, split)
        _, graph, _ = project(nfa, cfg, a, split)
        strategy.observe(a, graph)
        if trace is not None:
            trace.append((a, split, new_cfg))
        cfg = new_cfg
        if any(cfg[q] > 0 for q in bits(doomed & ((1 << nfa.n) - 1))):
            return RunOutcome("lost", step, trace)
    if cfg == goal:
        return RunOutcome("won", budget, trace)
    return RunOutcome("inconclusive", budget, trace)


def format_trace(nfa: Nfa, trace) -> str:
    """Line-per-step export with deterministic field order."""
    lines = []
    for k, (a, split, cfg) in enumerate(trace, start=1):
        moves = []
        for q in sorted(split):
            for r in sorted(split[q]):
                if split[q][r] > 0:
                    moves.append(f"{nfa.states[q]}->{nfa.states[r]}:{split[q][r]}")
        counts = [f"{nfa.states[q]}:{cfg[q]}" for q in range(nfa.n) if cfg[q] > 0]
        lines.append(
            f"step {k}: action={nfa.alphabet[a]} "
            f"split={','.join(moves)} config={','.join(counts)}"
        )
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Exact finite-population solving


@dataclass
class ResourceBudget:
    max_configs: int = 2_000_000
    max_branch: int = 2_000_000


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int) -> tuple[tuple[int, ...], ...]:
    if parts == 1:
        return ((total,),)
    out = []
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


def _p2_successors(nfa: Nfa, cfg: Config, a: int, budget: ResourceBudget) -> set[Config]:
    """Every configuration reachable by some legal split (stars and bars)."""
    moving: list[tuple[int, tuple[int, ...], tuple[tuple[int, ...], ...]]] = []
    branch = 1
    for q in range(nfa.n):
        if cfg[q] == 0:
            continue
        succs = tuple(bits(nfa.delta[q][a]))
        comps = _compositions(cfg[q], len(succs))
        branch *= len(comps)
        if branch > budget.max_branch:
            raise ResourceExceededError(
                f"successor budget exceeded expanding {cfg} on {nfa.alphabet[a]}"
            )
        moving.append((q, succs, comps))
    out: set[Config] = set()
    for combo in product(*(comps for _, _, comps in moving)):
        counts = [0] * nfa.n
        for (q, succs, _), parts in zip(moving, combo):
            for r, k in zip(succs, parts):
                counts[r] += k
        out.add(tuple(counts))
    return out


def exact_winner(nfa: Nfa, m: int, budget: ResourceBudget | None = None) -> int:
    """Solve the m-agent reachability game exactly by attractor computation.

    Forward-explores the reachable configurations, then pulls the winning
    region back from the all-in-target configuration: the controller wins a
    configuration if some letter wins, the adversary node (cfg, letter)
    wins if every split lands in the winning region.
    """
    budget = budget or ResourceBudget()
    goal = target_config(nfa, m)
    start = initial_config(nfa, m)
    n_actions = len(nfa.alphabet)

    succs: dict[tuple[Config, int], set[Config]] = {}
    preds: dict[Config, list[tuple[Config, int]]] = {}
    seen = {start}
    frontier = [start]
    while frontier:
        cfg = frontier.pop()
        if cfg == goal:
            continue
        for a in range(n_actions):
            nxt = _p2_successors(nfa, cfg, a, budget)
            succs[(cfg, a)] = nxt
            for t in nxt:
                preds.setdefault(t, []).append((cfg, a))
                if t not in seen:
                    if len(seen) >= budget.max_configs:
                        raise ResourceExceededError("configuration budget exceeded")
                    seen.add(t)
                    frontier.append(t)

    if goal not in seen:
        return 2
    winning: set[Config] = {goal}
    pending_count = {key: len(s) for key, s in succs.items()}
    queue = [goal]
    won_nodes: set[tuple[Config, int]] = set()
    while queue:
        t = queue.pop()
        for (cfg, a) in preds.get(t, ()):  # adversary node (cfg, a)
            if (cfg, a) in won_nodes:
                continue
            pending_count[(cfg, a)] -= 1
            if pending_count[(cfg, a)] == 0:
                won_nodes.add((cfg, a))
                if cfg not in winning:
                    winning.add(cfg)
                    queue.append(cfg)
    return 1 if start in winning else 2


@dataclass
class CutoffResult:
    kind: str  # "cutoff" | "none-up-to"
    value: int
    exhausted_budget: bool = False

    @property
    def is_cutoff(self) -> bool:
        return self.kind == "cutoff"


def find_cutoff(nfa: Nfa, m_max: int, budget: ResourceBudget | None = None) -> CutoffResult:
    """Scan m = 1..m_max; by monotonicity stop at the first adversary win."""
    if m_max < 1:
        raise SimulationError("m_max must be at least 1")
    last_decided = 0
    for m in range(1, m_max + 1):
        try:
            winner = exact_winner(nfa, m, budget)
        except ResourceExceededError as exc:
            raise ResourceExceededError(str(exc), last_decided_m=last_decided) from exc
        if winner == 2:
            return CutoffResult("cutoff", m)
        last_decided = m
    return CutoffResult("none-up-to", m_max)


def exhaustive_verify(
    nfa: Nfa, controller: Controller, m: int, budget: int = 500_000
) -> bool:
    """Check the controller beats every adversary at population size m.

    Depth-first over all splits; a revisited (configuration, memory) pair
    on the current path is a loop the adversary can sustain forever, hence
    a failure.  Guarded: meant for small m.
    """
    goal = target_config(nfa, m)
    start = initial_config(nfa, m)
    res = ResourceBudget(max_branch=budget)

    proven: set[tuple[Config, int]] = set()
    expanded = 0

    def explore(cfg: Config, node: int, on_path: set) -> bool:
        nonlocal expanded
        if cfg == goal:
            return True
        key = (cfg, node)
        if key in proven:
            return True
        if key in on_path:
            return False
        expanded += 1
        if expanded > budget:
            raise ResourceExceededError("verification budget exceeded")
        a = controller.choose(node)
        if a is None:
            return False  # WIN memory without the winning configuration
        on_path.add(key)
        try:
            for split in _all_splits(nfa, cfg, a, res):
                new_cfg = apply_split(nfa, cfg, a, split)
                _, graph, _ = project(nfa, cfg, a, split)
                try:
                    nxt = controller.advance(node, a, graph)
                except ControllerError:
                    return False  # escaping branch: the strategy broke down
                if not explore(new_cfg, nxt, on_path):
                    return False
        finally:
            on_path.discard(key)
        proven.add(key)
        return True

    import sys

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 100_000))
    try:
        return explore(start, controller.initial, set())
    finally:
        sys.setrecursionlimit(old)


def _all_splits(nfa: Nfa, cfg: Config, a: int, budget: ResourceBudget):
    moving = []
    branch = 1
    for q in range(nfa.n):
        if cfg[q] == 0:
            continue
        succs = tuple(bits(nfa.delta[q][a]))
        comps = _compositions(cfg[q], len(succs))
        branch *= len(comps)
        if branch > budget.max_branch:
            raise ResourceExceededError("split enumeration budget exceeded")
        moving.append((q, succs, comps))
    for combo in product(*(comps for _, _, comps in moving)):
        split: Split = {}
        for (q, succs, _), parts in zip(moving, combo):
            split[q] = {r: k for r, k in zip(succs, parts) if k > 0}
        yield split
