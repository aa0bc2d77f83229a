"""Finite graphs with a reflexive symmetric edge relation, and paths.

Vertices are always the dense integers ``0..n-1``.  Adjacency is stored as
one bitmask per vertex (bit ``j`` of ``rows[i]`` set iff ``i`` and ``j`` are
adjacent), which is what the relation algebra builds on.  A vertex may carry
an optional label (the original vertex it came from, a clique, a block) that
never takes part in equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Hashable, Iterable, Sequence


class GraphError(ValueError):
    """Raised when a graph, path or partition fails validation."""


def bits(mask: int) -> list[int]:
    """Indices of the set bits of ``mask``, ascending."""
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_of(vertices: Iterable[int]) -> int:
    m = 0
    for v in vertices:
        m |= 1 << v
    return m


@dataclass(frozen=True)
class Graph:
    n: int
    rows: tuple[int, ...]
    labels: tuple[Hashable, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GraphError("a graph needs at least one vertex")
        if len(self.rows) != self.n:
            raise GraphError("adjacency has the wrong number of rows")
        full = (1 << self.n) - 1
        for i, row in enumerate(self.rows):
            if row & ~full:
                raise GraphError(f"row {i} mentions a vertex outside 0..{self.n - 1}")
            if not row >> i & 1:
                raise GraphError(f"vertex {i} is not adjacent to itself")
            for j in bits(row):
                if not self.rows[j] >> i & 1:
                    raise GraphError(f"adjacency is not symmetric at ({i}, {j})")
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphError("label count differs from vertex count")

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]],
                   labels: Sequence[Hashable] | None = None) -> "Graph":
        rows = [1 << i for i in range(n)]
        for a, b in edges:
            if not (0 <= a < n and 0 <= b < n):
                raise GraphError(f"edge ({a}, {b}) out of range")
            rows[a] |= 1 << b
            rows[b] |= 1 << a
        return cls(n, tuple(rows), tuple(labels) if labels is not None else None)

    @property
    def vertices(self) -> range:
        return range(self.n)

    @property
    def full(self) -> int:
        return (1 << self.n) - 1

    def adjacent(self, a: int, b: int) -> bool:
        return bool(self.rows[a] >> b & 1)

    def edges(self) -> list[tuple[int, int]]:
        """Unordered edges ``(i, j)`` with ``i < j``."""
        return [(i, j) for i in range(self.n) for j in bits(self.rows[i]) if j > i]

    def order(self, v: int) -> int:
        return self.rows[v].bit_count() - 1

    def label(self, v: int) -> Hashable:
        return v if self.labels is None else self.labels[v]

    def induced(self, vertices: Sequence[int]) -> "Graph":
        """Subgraph on ``vertices`` relabelled densely in the given order."""
        index = {v: k for k, v in enumerate(vertices)}
        rows = []
        for v in vertices:
            rows.append(mask_of(index[w] for w in bits(self.rows[v]) if w in index))
        return Graph(len(vertices), tuple(rows), tuple(self.label(v) for v in vertices))

    def is_connected_set(self, mask: int) -> bool:
        if not mask:
            return False
        start = mask & -mask
        seen = start
        frontier = start
        while frontier:
            nxt = 0
            for v in bits(frontier):
                nxt |= self.rows[v]
            nxt &= mask & ~seen
            seen |= nxt
            frontier = nxt
        return seen == mask


@dataclass(frozen=True)
class PathStats:
    is_path: bool
    ends: frozenset[int]
    edge_count: int
    orders: tuple[int, ...]


def path_stats(g: Graph) -> PathStats:
    orders = tuple(g.order(v) for v in g.vertices)
    ends = frozenset(v for v in g.vertices if orders[v] <= 1)
    edge_count = sum(orders) // 2
    is_path = bool(ends) and max(orders) <= 2 and g.is_connected_set(g.full)
    return PathStats(is_path, ends, edge_count, orders)


@lru_cache(maxsize=4096)
def path_order(g: Graph) -> tuple[int, ...] | None:
    """Linear arrangement witnessing that ``g`` is a path, or ``None``.

    The walk starts from the smallest end, so canonical paths get the
    identity arrangement.
    """
    stats = path_stats(g)
    if not stats.is_path:
        return None
    walk = [min(stats.ends)]
    prev = -1
    while len(walk) < g.n:
        cur = walk[-1]
        nxt = [w for w in bits(g.rows[cur]) if w != cur and w != prev]
        prev = cur
        walk.append(nxt[0])
    return tuple(walk)


@dataclass(frozen=True)
class Path:
    """A graph together with the arrangement ``v0..vn`` realising ``P_n``."""

    graph: Graph
    order: tuple[int, ...]

    def __post_init__(self) -> None:
        g, order = self.graph, self.order
        if sorted(order) != list(range(g.n)):
            raise GraphError("order witness is not a permutation of the vertices")
        pos = {v: i for i, v in enumerate(order)}
        for a in g.vertices:
            for b in g.vertices:
                if g.adjacent(a, b) != (abs(pos[a] - pos[b]) <= 1):
                    raise GraphError("order witness does not realise a path")

    @classmethod
    def of(cls, g: Graph) -> "Path":
        order = path_order(g)
        if order is None:
            raise GraphError("graph is not a path")
        return cls(g, order)

    @property
    def length(self) -> int:
        return self.graph.n - 1

    @property
    def ends(self) -> tuple[int, ...]:
        return (self.order[0],) if self.graph.n == 1 else (self.order[0], self.order[-1])

    def position(self, v: int) -> int:
        return self.order.index(v)

    def interval(self, i: int, j: int) -> int:
        """Bitmask of the vertices at order positions ``i..j`` inclusive."""
        return mask_of(self.order[i:j + 1])


@lru_cache(maxsize=512)
def canonical_path(n: int) -> Graph:
    """``P_n``: vertices ``0..n`` with ``j`` adjacent to ``k`` iff ``|j-k| <= 1``."""
    if n < 0:
        raise GraphError("path length must be non-negative")
    full = (1 << (n + 1)) - 1
    return Graph(n + 1, tuple((0b111 << i >> 1) & full for i in range(n + 1)))


def is_path(g: Graph) -> bool:
    return path_order(g) is not None


def subpath(p: Path, a: int, b: int) -> Path:
    """The smallest subpath containing ``a`` and ``b``, labelled by original vertices."""
    for v in (a, b):
        if not 0 <= v < p.graph.n:
            raise GraphError(f"vertex {v} is not in the path")
    i, j = sorted((p.position(a), p.position(b)))
    members = p.order[i:j + 1]
    return Path(p.graph.induced(members), tuple(range(len(members))))


def clique_path(p: Path) -> Path:
    """Singletons and edges of ``p`` ordered by inclusion; labels are frozensets."""
    order = p.order
    cliques: list[frozenset[int]] = []
    for k, v in enumerate(order):
        if k:
            cliques.append(frozenset((order[k - 1], v)))
        cliques.append(frozenset((v,)))
    g = canonical_path(len(cliques) - 1)
    return Path(Graph(g.n, g.rows, tuple(cliques)), tuple(range(g.n)))


@dataclass(frozen=True)
class Partition:
    base: Graph
    blocks: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for block in self.blocks:
            if not block:
                raise GraphError("partition blocks must be non-empty")
            if seen & block:
                raise GraphError("partition blocks overlap")
            seen |= block
        if seen != set(self.base.vertices):
            raise GraphError("partition blocks do not cover the graph")

    def block_of(self, v: int) -> int:
        for k, block in enumerate(self.blocks):
            if v in block:
                return k
        raise GraphError(f"vertex {v} is not covered")


def quotient(g: Graph, part: Partition):
    """Quotient graph on the blocks plus the quotient map as a relation."""
    from .relations import Rel

    if part.base != g:
        raise GraphError("partition is over a different graph")
    masks = [mask_of(b) for b in part.blocks]
    rows = []
    for bm in masks:
        reach = 0
        for v in bits(bm):
            reach |= g.rows[v]
        rows.append(mask_of(k for k, other in enumerate(masks) if other & reach))
    q = Graph(len(masks), tuple(rows), tuple(part.blocks))
    qmap = Rel(g, q, tuple(masks))
    return q, qmap


def product_edges(g: Graph, h: Graph, mode: str = "canonical") -> Graph:
    """Graph on ``g x h``; vertex ``(a, b)`` has index ``a * h.n + b``."""
    if mode not in ("canonical", "strict"):
        raise GraphError(f"unknown product mode {mode!r}")
    pairs = list(product(g.vertices, h.vertices))
    rows = []
    for a, b in pairs:
        row = 0
        for k, (c, d) in enumerate(pairs):
            ga, hb = g.adjacent(a, c), h.adjacent(b, d)
            if mode == "canonical":
                ok = ga and hb
            else:
                ok = (a == c and hb) or (ga and b == d)
            if ok:
                row |= 1 << k
        rows.append(row)
    return Graph(len(pairs), tuple(rows), tuple(pairs))
