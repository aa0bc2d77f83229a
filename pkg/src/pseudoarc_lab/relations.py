"""Relations between finite graphs, stored as bitset rows.

A relation from ``dom`` to ``cod`` keeps, for every codomain vertex ``y``, the
bitmask of domain vertices related to it.  The same pairs read column-wise
give the image of each domain vertex.  A morphism from ``Q`` to ``R`` is a
relation with ``dom=Q`` and ``cod=R``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .graph_core import Graph, GraphError, bits, mask_of, path_order


class RelationError(ValueError):
    """Raised on mismatched graphs or out-of-range vertices."""


@dataclass(frozen=True)
class Rel:
    dom: Graph
    cod: Graph
    rows: tuple[int, ...]  # rows[y] = domain vertices related to codomain vertex y

    def __post_init__(self) -> None:
        if len(self.rows) != self.cod.n:
            raise RelationError("one row per codomain vertex is required")
        full = self.dom.full
        for row in self.rows:
            if row & ~full:
                raise RelationError("pair refers to a vertex outside the domain")

    @classmethod
    def from_pairs(cls, dom: Graph, cod: Graph, pairs: Iterable[Sequence[int]]) -> "Rel":
        """Build from ``(cod_vertex, dom_vertex)`` pairs."""
        rows = [0] * cod.n
        for y, x in pairs:
            if not (0 <= y < cod.n and 0 <= x < dom.n):
                raise RelationError(f"pair ({y}, {x}) out of range")
            rows[y] |= 1 << x
        return cls(dom, cod, tuple(rows))

    @classmethod
    def from_images(cls, dom: Graph, cod: Graph, images: Sequence[Iterable[int] | int]) -> "Rel":
        """Build from the image of each domain vertex (an int means a singleton)."""
        if len(images) != dom.n:
            raise RelationError("one image per domain vertex is required")
        pairs = []
        for x, img in enumerate(images):
            for y in ([img] if isinstance(img, int) else img):
                pairs.append((y, x))
        return cls.from_pairs(dom, cod, pairs)

    @classmethod
    def identity(cls, g: Graph) -> "Rel":
        return cls(g, g, tuple(1 << v for v in g.vertices))

    @classmethod
    def full_relation(cls, dom: Graph, cod: Graph) -> "Rel":
        return cls(dom, cod, (dom.full,) * cod.n)

    @classmethod
    def empty(cls, dom: Graph, cod: Graph) -> "Rel":
        return cls(dom, cod, (0,) * cod.n)

    @cached_property
    def cols(self) -> tuple[int, ...]:
        """cols[x] = codomain vertices related to domain vertex x."""
        out = [0] * self.dom.n
        for y, row in enumerate(self.rows):
            for x in bits(row):
                out[x] |= 1 << y
        return tuple(out)

    def pairs(self) -> list[tuple[int, int]]:
        return [(y, x) for y, row in enumerate(self.rows) for x in bits(row)]

    def related(self, y: int, x: int) -> bool:
        return bool(self.rows[y] >> x & 1)

    def __le__(self, other: "Rel") -> bool:
        """Containment of pair sets over the same graphs."""
        _same_graphs(self, other)
        return all(a & ~b == 0 for a, b in zip(self.rows, other.rows))

    def __and__(self, other: "Rel") -> "Rel":
        _same_graphs(self, other)
        return Rel(self.dom, self.cod, tuple(a & b for a, b in zip(self.rows, other.rows)))

    def __or__(self, other: "Rel") -> "Rel":
        _same_graphs(self, other)
        return Rel(self.dom, self.cod, tuple(a | b for a, b in zip(self.rows, other.rows)))

    def function_values(self) -> tuple[int, ...]:
        """Values of a relation that is a function on its domain."""
        if not is_function(self):
            raise RelationError("relation is not a function")
        return tuple(c.bit_length() - 1 for c in self.cols)


def _same_graphs(a: Rel, b: Rel) -> None:
    if a.dom != b.dom or a.cod != b.cod:
        raise RelationError("relations are over different graphs")


def _check_mask(g: Graph, w: int) -> None:
    if w & ~g.full:
        raise RelationError("vertex set mentions a vertex outside the graph")


def _as_mask(w: int | Iterable[int]) -> int:
    return w if isinstance(w, int) else mask_of(w)


def image(r: Rel, w: int | Iterable[int]) -> int:
    """Codomain vertices related to some member of ``w`` (bitmask in, bitmask out)."""
    w = _as_mask(w)
    _check_mask(r.dom, w)
    return mask_of(y for y, row in enumerate(r.rows) if row & w)


def preimage(r: Rel, z: int | Iterable[int]) -> int:
    """Domain vertices related to some member of ``z``."""
    z = _as_mask(z)
    _check_mask(r.cod, z)
    out = 0
    for y in bits(z):
        out |= r.rows[y]
    return out


def demonic_image(r: Rel, w: int | Iterable[int]) -> int:
    """Codomain vertices related to every member of ``w``."""
    w = _as_mask(w)
    _check_mask(r.dom, w)
    return mask_of(y for y, row in enumerate(r.rows) if w & ~row == 0)


def _composable(s: Rel, r: Rel) -> None:
    if r.cod != s.dom:
        raise RelationError("cannot compose: codomain of the right factor differs "
                            "from the domain of the left factor")


def compose(s: Rel, r: Rel) -> Rel:
    """``s`` after ``r``: z relates to x when some y has z s y and y r x."""
    _composable(s, r)
    rows = []
    for srow in s.rows:
        acc = 0
        for y in bits(srow):
            acc |= r.rows[y]
        rows.append(acc)
    return Rel(r.dom, s.cod, tuple(rows))


def compose_all(*rels: Rel) -> Rel:
    """Compose left to right as written: ``compose_all(a, b, c) = a∘b∘c``."""
    if not rels:
        raise RelationError("nothing to compose")
    out = rels[-1]
    for rel in reversed(rels[:-1]):
        out = compose(rel, out)
    return out


def demonic_compose(s: Rel, r: Rel) -> Rel:
    """z relates to x when the r-image of x is non-empty and lies inside z's s-row."""
    _composable(s, r)
    cols = r.cols
    rows = []
    for srow in s.rows:
        rows.append(mask_of(x for x, c in enumerate(cols) if c and c & ~srow == 0))
    return Rel(r.dom, s.cod, tuple(rows))


def codemonic_compose(s: Rel, r: Rel) -> Rel:
    """z relates to x when z's s-row is non-empty and lies inside the r-image of x."""
    _composable(s, r)
    cols = r.cols
    rows = []
    for srow in s.rows:
        if not srow:
            rows.append(0)
            continue
        rows.append(mask_of(x for x, c in enumerate(cols) if srow & ~c == 0))
    return Rel(r.dom, s.cod, tuple(rows))


def inverse(r: Rel) -> Rel:
    return Rel(r.cod, r.dom, r.cols)


def restrict(r: Rel, w: int | Iterable[int], z: int | Iterable[int]) -> Rel:
    """Intersect with ``z x w``, keeping both graphs."""
    w, z = _as_mask(w), _as_mask(z)
    _check_mask(r.dom, w)
    _check_mask(r.cod, z)
    return Rel(r.dom, r.cod, tuple(row & w if z >> y & 1 else 0 for y, row in enumerate(r.rows)))


def restrict_to(r: Rel, dom_vertices: Sequence[int], cod_vertices: Sequence[int] | None = None) -> Rel:
    """Restriction as a relation between the induced subgraphs (relabelled)."""
    cod_vertices = list(r.cod.vertices) if cod_vertices is None else list(cod_vertices)
    sub_dom = r.dom.induced(list(dom_vertices))
    sub_cod = r.cod.induced(cod_vertices)
    dindex = {v: k for k, v in enumerate(dom_vertices)}
    rows = []
    for y in cod_vertices:
        rows.append(mask_of(dindex[x] for x in bits(r.rows[y]) if x in dindex))
    return Rel(sub_dom, sub_cod, tuple(rows))


def equality(g: Graph) -> Rel:
    return Rel.identity(g)


def adjacency(g: Graph) -> Rel:
    """The edge relation of ``g`` as a relation from ``g`` to itself."""
    return Rel(g, g, g.rows)


# ---------------------------------------------------------------------------
# morphism predicates

def is_function(r: Rel) -> bool:
    return all(c.bit_count() == 1 for c in r.cols)


def is_surjective(r: Rel) -> bool:
    return all(r.rows)


def is_co_surjective(r: Rel) -> bool:
    return all(r.cols)


def is_co_injective(r: Rel) -> bool:
    singles = {c for c in r.cols if c.bit_count() == 1}
    return all(1 << y in singles for y in r.cod.vertices)


def is_co_bijective(r: Rel) -> bool:
    return is_co_surjective(r) and is_co_injective(r)


def is_edge_preserving(r: Rel) -> bool:
    """Images of adjacent domain vertices are pairwise adjacent."""
    cols, cod = r.cols, r.cod
    for q in r.dom.vertices:
        near = 0
        for q2 in bits(r.dom.rows[q]):
            near |= cols[q2]
        for y in bits(cols[q]):
            if near & ~cod.rows[y]:
                return False
    return True


def is_morphism(r: Rel) -> bool:
    return is_co_bijective(r) and is_edge_preserving(r)


def is_edge_witnessing(r: Rel) -> bool:
    """Every codomain edge (and vertex) lies inside a single domain vertex's image."""
    cols = r.cols
    for y in r.cod.vertices:
        for y2 in bits(r.cod.rows[y]):
            if y2 < y:
                continue
            need = (1 << y) | (1 << y2)
            if not any(c & need == need for c in cols):
                return False
    return True


def is_edge_injective(r: Rel) -> bool:
    """Adjacent distinct domain vertices have distinct singleton images."""
    cols = r.cols
    for a, b in r.dom.edges():
        if cols[a].bit_count() != 1 or cols[b].bit_count() != 1 or cols[a] == cols[b]:
            return False
    return True


def _path_ends(g: Graph) -> list[int]:
    return [v for v in g.vertices if g.order(v) <= 1]


def is_end_preserving(r: Rel) -> bool:
    cols = r.cols
    dom_ends = _path_ends(r.dom)
    return all(any(cols[q] == 1 << y for q in dom_ends) for y in _path_ends(r.cod))


def is_proper(r: Rel) -> bool | None:
    """No proper subpath of the domain still carries a morphism onto the codomain.

    ``None`` when either graph is not a path.  Restricting to a subpath keeps
    co-surjectivity and edge-preservation, and co-injectivity only gets
    harder on smaller subpaths, so the two maximal proper subpaths decide it.
    """
    order = path_order(r.dom)
    if order is None or path_order(r.cod) is None:
        return None
    if r.dom.n == 1:
        return True
    cols = r.cols
    for members in (order[1:], order[:-1]):
        singles = {cols[q] for q in members}
        if all(1 << y in singles for y in r.cod.vertices):
            return False
    return True


@dataclass(frozen=True)
class MorphismReport:
    surjective: bool
    co_surjective: bool
    co_injective: bool
    co_bijective: bool
    edge_preserving: bool
    edge_witnessing: bool
    edge_injective: bool
    end_preserving: bool
    proper: bool | None
    is_function: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_morphism(r: Rel) -> MorphismReport:
    co_s, co_i = is_co_surjective(r), is_co_injective(r)
    return MorphismReport(
        surjective=is_surjective(r),
        co_surjective=co_s,
        co_injective=co_i,
        co_bijective=co_s and co_i,
        edge_preserving=is_edge_preserving(r),
        edge_witnessing=is_edge_witnessing(r),
        edge_injective=is_edge_injective(r),
        end_preserving=is_end_preserving(r),
        proper=is_proper(r),
        is_function=is_function(r),
    )


# ---------------------------------------------------------------------------
# tangledness

def _interval_tables(r: Rel, order: tuple[int, ...]):
    """Bitmask, image and saturation of every interval of the domain order."""
    n = len(order)
    cols = r.cols
    sat_of_cod = {}

    def saturate(img: int) -> int:
        if img not in sat_of_cod:
            sat_of_cod[img] = preimage(r, img)
        return sat_of_cod[img]

    members, sats = {}, {}
    for i in range(n):
        m, img = 0, 0
        for j in range(i, n):
            m |= 1 << order[j]
            img |= cols[order[j]]
            members[i, j] = m
            sats[i, j] = saturate(img)
    return members, sats


def tangle_violation(r: Rel) -> tuple[tuple[int, int], tuple[int, int]] | None:
    """A pair of order intervals ``S, T`` breaking tangledness, or ``None``.

    Only pairs with ``S`` starting no later than ``T`` are scanned, which is
    enough since the condition is symmetric in ``S`` and ``T``.  For fixed
    ``S = [i, j]`` and start ``k`` of ``T``, ``T ⊆ sat(S)`` fails from some
    end point onward while ``S ⊆ sat(T)`` only gets easier, so the smallest
    failing end point is the only one worth testing.
    """
    order = path_order(r.dom)
    if order is None:
        raise RelationError("domain is not a path")
    n = len(order)
    members, sats = _interval_tables(r, order)
    for i in range(n):
        for j in range(i, n):
            s_mem, s_sat = members[i, j], sats[i, j]
            for k in range(i, min(j + 1, n - 1) + 1):
                # T = [k, l] with l >= k; S ∪ T connected since k <= j + 1
                lo, hi = k, n - 1
                if members[k, hi] & ~s_sat == 0:
                    continue
                while lo < hi:
                    mid = (lo + hi) // 2
                    if members[k, mid] & ~s_sat:
                        hi = mid
                    else:
                        lo = mid + 1
                if s_mem & ~sats[k, lo]:
                    return (i, j), (k, lo)
    return None


def is_tangled(r: Rel) -> bool:
    """Tangledness over all pairs of subpaths with connected union."""
    if path_order(r.dom) is None or path_order(r.cod) is None:
        raise RelationError("tangledness is defined for relations between paths")
    if not is_morphism(r):
        raise RelationError("tangledness requires a co-bijective edge-preserving relation")
    return tangle_violation(r) is None


def is_tangled_bruteforce(r: Rel) -> bool:
    """Literal scan over all ordered pairs of subpaths; reference for tests."""
    order = path_order(r.dom)
    if order is None:
        raise RelationError("domain is not a path")
    members, sats = _interval_tables(r, order)
    keys = list(members)
    for a in keys:
        for b in keys:
            if max(a[0], b[0]) > min(a[1], b[1]) + 1:
                continue
            if members[a] & ~sats[b] and members[b] & ~sats[a]:
                return False
    return True


__all__ = [
    "Rel", "RelationError", "MorphismReport", "GraphError",
    "image", "preimage", "demonic_image", "compose", "compose_all",
    "demonic_compose", "codemonic_compose", "inverse", "restrict", "restrict_to",
    "equality", "adjacency", "is_function", "is_surjective", "is_co_surjective",
    "is_co_injective", "is_co_bijective", "is_edge_preserving", "is_morphism",
    "is_edge_witnessing", "is_edge_injective", "is_end_preserving", "is_proper",
    "check_morphism", "is_tangled", "is_tangled_bruteforce", "tangle_violation",
]
