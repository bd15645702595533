"""Bit-level algebra for supports and transfer graphs.

A support is a bitmask over state indices.  A transfer graph on n states
is a bitmask over n*n bits, bit ``q*n + r`` meaning the edge (q, r).
All operations here are pure; a :class:`GraphOps` instance fixes n and
caches derived data per graph.
"""

from __future__ import annotations

from .nfa import bits


class GraphOps:
    """Relational operations on n-state transfer graphs."""

    def __init__(self, n: int):
        self.n = n
        self.row_mask = (1 << n) - 1
        self._sep_cache: dict[int, int] = {}

    # -- basic accessors ----------------------------------------------------

    def row(self, g: int, q: int) -> int:
        return (g >> (q * self.n)) & self.row_mask

    def rows(self, g: int) -> list[int]:
        n = self.n
        return [(g >> (q * n)) & self.row_mask for q in range(n)]

    def from_rows(self, rows) -> int:
        g = 0
        for q, row in enumerate(rows):
            g |= row << (q * self.n)
        return g

    def edge(self, q: int, r: int) -> int:
        return 1 << (q * self.n + r)

    def from_edges(self, edges) -> int:
        g = 0
        for q, r in edges:
            g |= 1 << (q * self.n + r)
        return g

    def edges(self, g: int) -> list[tuple[int, int]]:
        n = self.n
        return [divmod(b, n) for b in bits(g)]

    def dom(self, g: int) -> int:
        d = 0
        n = self.n
        for q in range(n):
            if (g >> (q * n)) & self.row_mask:
                d |= 1 << q
        return d

    def im(self, g: int) -> int:
        out = 0
        n = self.n
        for q in range(n):
            out |= (g >> (q * n)) & self.row_mask
        return out

    def columns(self, g: int) -> list[int]:
        """cols[r] = bitmask of predecessors of r."""
        cols = [0] * self.n
        n = self.n
        for q in range(n):
            row = (g >> (q * n)) & self.row_mask
            for r in bits(row):
                cols[r] |= 1 << q
        return cols

    # -- algebra ------------------------------------------------------------

    def identity(self, support: int) -> int:
        g = 0
        for q in bits(support):
            g |= 1 << (q * self.n + q)
        return g

    def compose(self, g: int, h: int) -> int:
        """Relational composition g;h: (a,b) iff a -g-> z -h-> b for some z."""
        n = self.n
        out = 0
        hrows = self.rows(h)
        for q in range(n):
            row = (g >> (q * n)) & self.row_mask
            if not row:
                continue
            acc = 0
            for z in bits(row):
                acc |= hrows[z]
            out |= acc << (q * n)
        return out

    def separations(self, g: int) -> int:
        """Separated pairs of ``g`` as a pair bitmask (bit r*n + t).

        (r, t) is separated when some common source reaches r but not t.
        Pairs range over the image of the graph: only states the graph can
        actually deliver agents to can later be told apart.
        """
        cached = self._sep_cache.get(g)
        if cached is not None:
            return cached
        n = self.n
        image = self.im(g)
        per_r = [0] * n
        for q in range(n):
            row = (g >> (q * n)) & self.row_mask
            if not row:
                continue
            non = image & ~row
            if not non:
                continue
            for r in bits(row):
                per_r[r] |= non
        sep = 0
        for r in range(n):
            if per_r[r]:
                sep |= per_r[r] << (r * n)
        if len(self._sep_cache) < 1_000_000:
            self._sep_cache[g] = sep
        return sep

    def sep_pairs(self, g: int) -> set[tuple[int, int]]:
        return set(self.edges(self.separations(g)))

    def leaks_at(self, g: int, h: int) -> tuple[int, int, int] | None:
        """Witness (q, x, y) that g leaks at h, or None.

        A leak means (q, y) in g;h and (x, y) in h with (q, x) not in g:
        agents reach y both through g's image and from outside it.
        """
        n = self.n
        hrows = self.rows(h)
        hcols = self.columns(h)
        for q in range(n):
            grow = (g >> (q * n)) & self.row_mask
            if not grow:
                continue
            reach = 0
            for z in bits(grow):
                reach |= hrows[z]
            for y in bits(reach):
                outside = hcols[y] & ~grow
                if outside:
                    x = (outside & -outside).bit_length() - 1
                    return (q, x, y)
        return None


def support_set(mask: int) -> frozenset[int]:
    return frozenset(bits(mask))


def mask_of(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m
