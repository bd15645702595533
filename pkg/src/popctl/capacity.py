"""Transfer-graph capacity machinery.

The tracking list is a bounded list of composed transfer graphs whose
separation sets form a strictly increasing chain; its incremental update
drives the priorities of the synthesis game.  This module also houses the
brute-force capacity oracles (accumulator entry counting, lasso
classification, loop partitions) used as test ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

from .graphs import GraphOps
from .nfa import bits

TrackingList = tuple[int, ...]


class CapacityError(ValueError):
    pass


@dataclass(frozen=True)
class LevelEvents:
    """Leak/change levels produced by one tracking-list update.

    Both are 1-based levels into the pre-update list of length l;
    the value l+1 means "no such level".
    """

    leak_level: int
    change_level: int


def update_list(ops: GraphOps, lst: TrackingList, g: int) -> tuple[TrackingList, LevelEvents]:
    """Advance the tracking list by one observed transfer graph.

    Three stages: compose every tracked graph with ``g``, append ``g``
    itself, then keep only graphs separating a pair not separated by any
    earlier graph in the list (earliest kept on ties).  Also reports the
    smallest level that leaks at ``g`` and the smallest level whose new
    entry differs from plain composition (a vanished level counts as a
    difference).
    """
    ell = len(lst)
    composed = tuple(ops.compose(h, g) for h in lst)
    staged = composed + (g,)

    kept: list[int] = []
    seen = 0
    for h in staged:
        sep = ops.separations(h)
        if sep & ~seen:
            kept.append(h)
            seen |= sep

    leak_level = ell + 1
    for r, h in enumerate(lst, start=1):
        if ops.leaks_at(h, g) is not None:
            leak_level = r
            break

    change_level = ell + 1
    for r in range(1, ell + 1):
        if r > len(kept) or kept[r - 1] != composed[r - 1]:
            change_level = r
            break

    return tuple(kept), LevelEvents(leak_level, change_level)


def exact_list(ops: GraphOps, history: list[int]) -> TrackingList:
    """Ground-truth tracking list for a full history of transfer graphs.

    Computes every suffix composition of the history and keeps the suffixes
    at which the separation set strictly grows (scanning suffix start
    indices in ascending order, starting from the empty set).
    """
    if not history:
        raise CapacityError("history must be nonempty")
    n = len(history)
    suffix = [0] * n  # suffix[i] = composition of history[i:]
    suffix[n - 1] = history[n - 1]
    for i in range(n - 2, -1, -1):
        suffix[i] = ops.compose(history[i], suffix[i + 1])

    kept = []
    prev = 0
    for i in range(n):
        sep = ops.separations(suffix[i])
        if sep != prev:
            kept.append(suffix[i])
            prev = sep
    return tuple(kept)


def count_entries(ops: GraphOps, play: list[int], accumulator: list[int]) -> int:
    """Count the edges entering a successor-closed accumulator.

    ``accumulator`` gives one state subset per position (one more than the
    number of graphs).  An entry at step j is an edge of graph j+1 from
    outside the accumulator into it.
    """
    if len(accumulator) != len(play) + 1:
        raise CapacityError(
            f"accumulator length {len(accumulator)} != play length {len(play)} + 1"
        )
    for j, g in enumerate(play):
        support = ops.dom(g) if j == 0 else ops.im(play[j - 1])
        if accumulator[j] & ~support:
            raise CapacityError(f"accumulator at index {j} leaves the support")
        for s in bits(accumulator[j]):
            if ops.row(g, s) & ~accumulator[j + 1]:
                raise CapacityError(f"accumulator not successor-closed at index {j}")
    if accumulator[-1] & ~ops.im(play[-1]):
        raise CapacityError(f"accumulator at index {len(play)} leaves the support")

    entries = 0
    for j, g in enumerate(play):
        t_now, t_next = accumulator[j], accumulator[j + 1]
        for q in range(ops.n):
            if (t_now >> q) & 1:
                continue
            entries += (ops.row(g, q) & t_next).bit_count()
    return entries


@dataclass(frozen=True)
class LassoPlay:
    """Ultimately periodic sequence of transfer graphs.

    Consecutive graphs must chain: the image of each equals the domain of
    the next, around the cycle and from the prefix into it.
    """

    prefix: tuple[int, ...]
    cycle: tuple[int, ...]

    def validate(self, ops: GraphOps) -> None:
        if not self.cycle:
            raise CapacityError("lasso cycle must be nonempty")
        seq = list(self.prefix) + list(self.cycle)
        for a, b in zip(seq, seq[1:]):
            if ops.im(a) != ops.dom(b):
                raise CapacityError("graphs do not chain: im != next dom")
        if ops.im(seq[-1]) != ops.dom(self.cycle[0]):
            raise CapacityError("cycle does not close: im != cycle dom")

    def graph_at(self, j: int) -> int:
        """Graph at 0-based position j of the infinite unrolling."""
        k = len(self.prefix)
        if j < k:
            return self.prefix[j]
        return self.cycle[(j - k) % len(self.cycle)]


@dataclass(frozen=True)
class CapacityVerdict:
    kind: str  # "finite" | "infinite"
    witness: tuple[int, int] | None = None  # (start index, leak position in cycle)

    @property
    def infinite(self) -> bool:
        return self.kind == "infinite"


def lasso_capacity(ops: GraphOps, play: LassoPlay) -> CapacityVerdict:
    """Classify an ultimately periodic play as finite or infinite capacity.

    The play has infinite capacity iff for some start index the running
    composition leaks at the next graph infinitely often.  For a fixed
    start, the pair (composed graph, position within the cycle) ranges
    over a finite set, so we iterate until that pair repeats and report
    infinite iff a leak occurred inside the detected loop.  Start indices
    beyond one prefix+period window generate the same composed-graph
    sequences by periodicity and are skipped.
    """
    play.validate(ops)
    k = len(play.prefix)
    period = len(play.cycle)

    for start in range(k + period):
        composed = play.graph_at(start)
        seen: dict[tuple[int, int], int] = {}
        leak_at_step: dict[int, bool] = {}
        j = start + 1
        while True:
            if j >= k:
                state = (composed, (j - k) % period)
                first = seen.get(state)
                if first is not None:
                    window = [s for s in range(first, j) if leak_at_step[s]]
                    if window:
                        pos = (window[0] - k) % period
                        return CapacityVerdict("infinite", (start, pos))
                    break
                seen[state] = j
            nxt = play.graph_at(j)
            leak_at_step[j] = ops.leaks_at(composed, nxt) is not None
            composed = ops.compose(composed, nxt)
            j += 1
    return CapacityVerdict("finite")


def loop_partition(ops: GraphOps, h: int, support: int) -> tuple[int, int] | None:
    """Find a partition (T, U) of a loop graph witnessing unbounded entries.

    Requires dom(h) = im(h) = support.  Returns (T, U) with U nonempty,
    h(U) contained in U, and an h-edge from T into U; or None if no such
    partition exists.  Exhaustive over subsets: this is a test oracle, not
    a production path.
    """
    if ops.dom(h) != support or ops.im(h) != support:
        raise CapacityError("loop_partition needs dom(h) = im(h) = support")
    members = list(bits(support))
    rows = ops.rows(h)
    for pick in range(1, 1 << len(members)):
        u = 0
        for i, q in enumerate(members):
            if (pick >> i) & 1:
                u |= 1 << q
        t = support & ~u
        if not t:
            continue
        if any(rows[q] & ~u for q in bits(u)):
            continue
        if any(rows[q] & u for q in bits(t)):
            return (t, u)
    return None
