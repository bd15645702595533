"""On-the-fly construction of the synthesis parity game.

Game positions pair the current support with the tracking list; the
controller owns letter choices, the adversary owns transfer-graph choices.
Priorities live on adversary edges: an odd 2r+1 when list level r leaks at
the chosen graph, an even 2r when level r stops being a plain composition,
the minimum of the two deciding.  Reaching the target support is absorbed
into a single WIN position with a priority-1 self-loop.

Two sound collapses keep the closure small:

* supports from which the controller can force the target support outright
  (deterministic reachability under maximal graphs, by the adversary's
  maximal-graph dominance) are absorbed into a FORCED position that the
  controller side wins;
* supports from which the adversary can forever answer every letter with
  an injective transfer graph while avoiding the target are absorbed into
  a LOSE position: injective graphs admit no leaks, so every priority on
  such a play is even and the adversary wins whatever the tracking list.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .capacity import LevelEvents, TrackingList
from .graphs import GraphOps
from .nfa import Nfa, bits
from .parity import ParityGame, solve_parity_game
from .support_game import post_support

DEFAULT_NODE_BUDGET = 5_000_000
INJECTIVE_PRUNE_MAX_STATES = 7


class BudgetExceededError(RuntimeError):
    """Arena construction ran past its node budget."""

    def __init__(self, budget: int, nodes_so_far: int):
        self.budget = budget
        self.nodes_so_far = nodes_so_far
        super().__init__(f"node budget {budget} exceeded ({nodes_so_far} nodes built)")


def transition_priority(
    goal_bit: int, lst: TrackingList, s_next: int, goal_support: int, events: LevelEvents
) -> int:
    """Priority of one adversary move, given the update's level events."""
    if goal_bit == 1 or s_next == goal_support:
        return 1
    return min(2 * events.leak_level + 1, 2 * events.change_level)


def _fast_update(ops: GraphOps, lst: TrackingList, g: int):
    """update_list fused with leak detection against precomputed g data."""
    n = ops.n
    row_mask = ops.row_mask
    grows = ops.rows(g)
    gcols = ops.columns(g)
    ell = len(lst)

    composed = []
    leak_level = ell + 1
    for r, h in enumerate(lst, start=1):
        out = 0
        leak_here = False
        for q in range(n):
            hrow = (h >> (q * n)) & row_mask
            if not hrow:
                continue
            acc = 0
            rest = hrow
            while rest:
                low = rest & -rest
                acc |= grows[low.bit_length() - 1]
                rest ^= low
            out |= acc << (q * n)
            if not leak_here and leak_level > r:
                scan = acc
                while scan:
                    low = scan & -scan
                    y = low.bit_length() - 1
                    if gcols[y] & ~hrow:
                        leak_here = True
                        break
                    scan ^= low
        if leak_here and leak_level > r:
            leak_level = r
        composed.append(out)

    kept = []
    seen = 0
    for h in composed:
        sep = ops.separations(h)
        if sep & ~seen:
            kept.append(h)
            seen |= sep
    gsep = ops.separations(g)
    if gsep & ~seen:
        kept.append(g)

    change_level = ell + 1
    for r in range(1, ell + 1):
        if r > len(kept) or kept[r - 1] != composed[r - 1]:
            change_level = r
            break
    return tuple(kept), LevelEvents(leak_level, change_level)


class SupportOracle:
    """Per-support forced-win and injective-safety classification."""

    def __init__(self, nfa: Nfa):
        self.nfa = nfa
        self.goal = 1 << nfa.target
        self._dist: dict[int, int] = {self.goal: 0}
        self._letter: dict[int, int] = {}
        self._known: set[int] = {self.goal}
        self.injective_safe: set[int] = set()
        if nfa.n <= INJECTIVE_PRUNE_MAX_STATES:
            self.injective_safe = self._compute_injective_safe()

    # -- forced reach of the goal support ---------------------------------

    def forced_letter(self, support: int) -> int | None:
        """First letter of a shortest forcing run to the goal, if any.

        By maximal-graph dominance, forcing is reachability in the
        deterministic post-support graph.  Distances are monotone under
        support inclusion, so replaying per-support shortest letters
        strictly decreases the distance whatever the adversary does.
        """
        if support in self._known:
            return self._letter.get(support)
        nfa = self.nfa
        closure: list[int] = []
        stack = [support]
        seen = {support}
        posts: dict[int, list[int]] = {}
        while stack:
            s = stack.pop()
            if s in self._known:
                continue
            closure.append(s)
            outs = [post_support(nfa, s, a) for a in range(len(nfa.alphabet))]
            posts[s] = outs
            for t in outs:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        changed = True
        while changed:
            changed = False
            for s in closure:
                for a, t in enumerate(posts[s]):
                    d = self._dist.get(t)
                    if d is not None and self._dist.get(s, 1 << 60) > d + 1:
                        self._dist[s] = d + 1
                        self._letter[s] = a
                        changed = True
        self._known.update(closure)
        return self._letter.get(support)

    def is_forced_win(self, support: int) -> bool:
        if support == self.goal:
            return True
        return self.forced_letter(support) is not None

    # -- injective safety ---------------------------------------------------

    def _injective_images(self, support: int, a: int) -> list[int]:
        """Image sets achievable by injective graphs with this domain.

        T is achievable iff every state of T has a legal source in the
        support and the sources admit a matching into T (each source then
        absorbs its share of T without column collisions).
        """
        nfa = self.nfa
        sources = list(bits(support))
        post = post_support(nfa, support, a)
        targets = list(bits(post))
        out = []
        for pick in range(1, 1 << len(targets)):
            t_mask = 0
            for i, t in enumerate(targets):
                if (pick >> i) & 1:
                    t_mask |= 1 << t
            if any(nfa.delta[q][a] & t_mask == 0 for q in sources):
                continue
            if not self._saturating_matching(sources, t_mask, a):
                continue
            covered = 0
            for q in sources:
                covered |= nfa.delta[q][a] & t_mask
            if covered == t_mask:
                out.append(t_mask)
        return out

    def _saturating_matching(self, sources: list[int], t_mask: int, a: int) -> bool:
        match: dict[int, int] = {}

        def try_assign(q: int, taken: set[int]) -> bool:
            for t in bits(self.nfa.delta[q][a] & t_mask):
                if t in taken:
                    continue
                taken.add(t)
                if t not in match or try_assign(match[t], taken):
                    match[t] = q
                    return True
            return False

        for q in sources:
            if not try_assign(q, set()):
                return False
        return True

    def _compute_injective_safe(self) -> set[int]:
        nfa = self.nfa
        alive = {s for s in range(1, 1 << nfa.n) if s != self.goal}
        images: dict[tuple[int, int], list[int]] = {}
        for s in alive:
            for a in range(len(nfa.alphabet)):
                images[(s, a)] = self._injective_images(s, a)
        changed = True
        while changed:
            changed = False
            for s in list(alive):
                for a in range(len(nfa.alphabet)):
                    if not any(t in alive for t in images[(s, a)]):
                        alive.discard(s)
                        changed = True
                        break
        return alive


class _InertOracle(SupportOracle):
    """Oracle with the collapses switched off (goal support only)."""

    def __init__(self, nfa: Nfa):
        self.nfa = nfa
        self.goal = 1 << nfa.target
        self._dist = {self.goal: 0}
        self._letter: dict[int, int] = {}
        self._known = {self.goal}
        self.injective_safe = set()

    def forced_letter(self, support: int) -> int | None:
        return None

    def is_forced_win(self, support: int) -> bool:
        return support == self.goal


@dataclass
class ArenaNode:
    owner: int  # 1 or 2
    support: int
    lst: TrackingList
    action: int | None = None  # pending letter, adversary nodes only
    kind: str = "tracking"  # "tracking" | "win" | "forced" | "lose"


@dataclass
class ArenaEdge:
    dst: int
    priority: int
    label: int  # letter index from controller nodes, transfer graph otherwise


@dataclass
class ParityArena:
    nfa: Nfa
    ops: GraphOps
    nodes: list[ArenaNode]
    edges: list[list[ArenaEdge]]
    initial: int
    win: int
    forced: int
    lose: int
    neutral: int
    p1_index: dict[tuple[int, TrackingList], int]
    oracle: SupportOracle

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def priority_histogram(self) -> dict[int, int]:
        hist: dict[int, int] = {}
        for outs in self.edges:
            for e in outs:
                hist[e.priority] = hist.get(e.priority, 0) + 1
        return hist

    def stats(self) -> dict:
        return {
            "nodes": self.node_count,
            "edges": self.edge_count,
            "priorities": self.priority_histogram(),
        }


def _graph_stream(nfa: Nfa, support: int, a: int, cache: dict | None = None):
    """Yield (graph, image) for every adversary reply from this support.

    The per-state subset tables depend only on (support, action), which
    recurs once per tracking-list variant; they are memoized in ``cache``.
    """
    key = (support, a)
    per_state = None if cache is None else cache.get(key)
    if per_state is None:
        n = nfa.n
        per_state = []
        for q in bits(support):
            succ = nfa.delta[q][a]
            positions = list(bits(succ))
            subs = []
            for pick in range(1, 1 << len(positions)):
                m = 0
                for i, p in enumerate(positions):
                    if (pick >> i) & 1:
                        m |= 1 << p
                subs.append((m << (q * n), m))
            per_state.append(subs)
        if cache is not None:
            cache[key] = per_state
    for choice in product(*per_state):
        g = 0
        im = 0
        for shifted, m in choice:
            g |= shifted
            im |= m
        yield g, im


def build_arena(
    nfa: Nfa, node_budget: int = DEFAULT_NODE_BUDGET, collapse: bool = True
) -> ParityArena:
    """Breadth-first closure of the game from ({initial}, empty list).

    Adversary moves are streamed and deduplicated by (priority, successor):
    two graphs inducing the same list update and priority are
    interchangeable.  Exceeding the node budget raises rather than
    truncating.  ``collapse=False`` disables the forced-win/injective-safe
    support collapses (for cross-validation; the game value is unchanged).
    """
    ops = GraphOps(nfa.n)
    neutral = 2 * nfa.n * nfa.n + 2
    goal_support = 1 << nfa.target
    n_actions = len(nfa.alphabet)
    oracle = SupportOracle(nfa) if collapse else _InertOracle(nfa)

    nodes: list[ArenaNode] = []
    edges: list[list[ArenaEdge]] = []
    p1_index: dict[tuple[int, TrackingList], int] = {}
    update_cache: dict[tuple[TrackingList, int], tuple[TrackingList, LevelEvents]] = {}
    stream_cache: dict = {}

    def new_node(node: ArenaNode) -> int:
        if len(nodes) >= node_budget:
            raise BudgetExceededError(node_budget, len(nodes))
        nodes.append(node)
        edges.append([])
        return len(nodes) - 1

    win = new_node(ArenaNode(owner=1, support=goal_support, lst=(), kind="win"))
    edges[win].append(ArenaEdge(dst=win, priority=1, label=0))
    forced = new_node(ArenaNode(owner=1, support=0, lst=(), kind="forced"))
    edges[forced].append(ArenaEdge(dst=forced, priority=1, label=0))
    lose = new_node(ArenaNode(owner=1, support=0, lst=(), kind="lose"))
    edges[lose].append(ArenaEdge(dst=lose, priority=2, label=0))

    pending: list[int] = []

    def p1_node(support: int, lst: TrackingList) -> int:
        if support == goal_support:
            return win
        if oracle.is_forced_win(support):
            return forced
        if support in oracle.injective_safe:
            return lose
        key = (support, lst)
        found = p1_index.get(key)
        if found is not None:
            return found
        idx = new_node(ArenaNode(owner=1, support=support, lst=lst))
        p1_index[key] = idx
        pending.append(idx)
        return idx

    initial = p1_node(1 << nfa.initial, ())

    while pending:
        v = pending.pop()
        support, lst = nodes[v].support, nodes[v].lst
        for a in range(n_actions):
            u = new_node(ArenaNode(owner=2, support=support, lst=lst, action=a))
            edges[v].append(ArenaEdge(dst=u, priority=neutral, label=a))
            # Forced-win edges are deduplicated per entry support, not just
            # per target, so controller extraction sees every entry point.
            seen_moves: set[tuple[int, int, int]] = set()
            for g, s_next in _graph_stream(nfa, support, a, stream_cache):
                if s_next == goal_support:
                    move = (1, win, 0)
                elif oracle.is_forced_win(s_next):
                    move = (1, forced, s_next)
                elif s_next in oracle.injective_safe:
                    move = (2, lose, 0)
                else:
                    key = (lst, g)
                    cached = update_cache.get(key)
                    if cached is None:
                        cached = _fast_update(ops, lst, g)
                        update_cache[key] = cached
                    new_lst, events = cached
                    priority = min(2 * events.leak_level + 1, 2 * events.change_level)
                    move = (priority, p1_node(s_next, new_lst), 0)
                if move in seen_moves:
                    continue
                seen_moves.add(move)
                edges[u].append(ArenaEdge(dst=move[1], priority=move[0], label=g))

    return ParityArena(
        nfa=nfa,
        ops=ops,
        nodes=nodes,
        edges=edges,
        initial=initial,
        win=win,
        forced=forced,
        lose=lose,
        neutral=neutral,
        p1_index=p1_index,
        oracle=oracle,
    )


@dataclass
class ArenaSolution:
    arena: ParityArena
    win1: set[int]
    win2: set[int]
    strategy1: dict[int, ArenaEdge]  # controller node -> chosen letter edge
    strategy2: dict[int, ArenaEdge]  # adversary node -> chosen graph edge

    def winner(self, node: int) -> int:
        return 1 if node in self.win1 else 2


def solve_arena(arena: ParityArena) -> ArenaSolution:
    """Solve the edge-priority game via relay expansion.

    Every prioritized edge is routed through one auxiliary relay node per
    (priority, target) pair which carries that priority; original nodes
    carry the neutral maximum, so the least priority seen infinitely often
    is unchanged.  Controller letter edges are already neutral and stay
    direct.
    """
    count = arena.node_count
    owner = [node.owner for node in arena.nodes]
    priority = [arena.neutral] * count
    succ: list[list[int]] = [[] for _ in range(count)]

    relay_index: dict[tuple[int, int], int] = {}

    def relay(prio: int, dst: int) -> int:
        key = (prio, dst)
        found = relay_index.get(key)
        if found is not None:
            return found
        owner.append(1)
        priority.append(prio)
        succ.append([dst])
        relay_index[key] = len(owner) - 1
        return len(owner) - 1

    for v in range(count):
        for e in arena.edges[v]:
            if e.priority == arena.neutral:
                succ[v].append(e.dst)
            else:
                succ[v].append(relay(e.priority, e.dst))

    game = ParityGame(owner=owner, priority=priority, succ=succ)
    solution = solve_parity_game(game)

    relay_move = {idx: key for key, idx in relay_index.items()}

    def arena_edge(v: int, game_succ: int) -> ArenaEdge:
        if game_succ >= count:
            prio, dst = relay_move[game_succ]
        else:
            prio, dst = arena.neutral, game_succ
        for e in arena.edges[v]:
            if e.dst == dst and e.priority == prio:
                return e
        raise AssertionError("solver strategy uses an unknown edge")

    strategy1 = {
        v: arena_edge(v, s)
        for v, s in solution.strategy1.items()
        if v < count and arena.nodes[v].owner == 1
    }
    strategy2 = {
        v: arena_edge(v, s)
        for v, s in solution.strategy2.items()
        if v < count and arena.nodes[v].owner == 2
    }
    win1 = {v for v in solution.win1 if v < count}
    win2 = {v for v in solution.win2 if v < count}
    return ArenaSolution(arena, win1, win2, strategy1, strategy2)
