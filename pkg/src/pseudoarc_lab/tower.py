"""Finite truncations of graded omega-posets built from graph levels and bonds.

A tower element is a pair ``(level, vertex)``.  Level 0 is the coarsest.
``bonds[k]`` is a morphism from ``levels[k+1]`` onto ``levels[k]`` and the
order is ``(n, x) <= (m, y)`` iff ``m <= n`` and the composite bond from
level ``n`` to level ``m`` relates ``y`` to ``x``.

Everything that quantifies over "all deeper elements" or "all caps" is
evaluated inside the truncation.  Functions that do so take a ``depth``
argument and the results record it, since a deeper truncation can change
the answer (in the direction documented on each function).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph_core import Graph, bits, mask_of
from .relations import (
    Rel,
    compose,
    compose_all,
    image,
    inverse,
    is_co_bijective,
    is_edge_preserving,
    is_edge_witnessing,
)

Element = tuple[int, int]


class TowerError(ValueError):
    """Invalid tower data or an out-of-range level/depth index."""


@dataclass(frozen=True, eq=False)
class Tower:
    levels: tuple[Graph, ...]
    bonds: tuple[Rel, ...]
    require_edge_witnessing: bool = True
    _composites: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "bonds", tuple(self.bonds))
        if not self.levels:
            raise TowerError("a tower needs at least one level")
        if len(self.bonds) != len(self.levels) - 1:
            raise TowerError("need exactly one bond between consecutive levels")
        for k, b in enumerate(self.bonds):
            if b.dom != self.levels[k + 1] or b.cod != self.levels[k]:
                raise TowerError(f"bond {k} does not run from level {k + 1} to level {k}")
            if not is_co_bijective(b):
                raise TowerError(f"bond {k} is not co-bijective")
            if not is_edge_preserving(b):
                raise TowerError(f"bond {k} is not edge-preserving")
            if self.require_edge_witnessing and not is_edge_witnessing(b):
                raise TowerError(f"bond {k} is not edge-witnessing (use require_edge_witnessing=False)")
        comps = self._composites
        for m, g in enumerate(self.levels):
            comps[(m, m)] = Rel.identity(g)
            for n in range(m + 1, len(self.levels)):
                comps[(m, n)] = compose(comps[(m, n - 1)], self.bonds[n - 1])
        for l in range(len(self.levels)):
            for m in range(l, len(self.levels)):
                for n in range(m, len(self.levels)):
                    if comps[(l, n)] != compose(comps[(l, m)], comps[(m, n)]):
                        raise TowerError(f"gradedness fails for levels {l} <= {m} <= {n}")
        if self.require_edge_witnessing:
            for k, b in enumerate(self.bonds):
                if compose(b, inverse(b)).rows != self.levels[k].rows:
                    raise TowerError(f"one-step wedge at level {k} differs from its adjacency")

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def size(self, level: int) -> int:
        return self.levels[self._level(level)].n

    def elements(self, upto: int | None = None) -> list[Element]:
        top = self.depth if upto is None else self._level(upto)
        return [(k, v) for k in range(top + 1) for v in self.levels[k].vertices]

    def _level(self, k: int) -> int:
        if not 0 <= k <= self.depth:
            raise TowerError(f"level {k} outside 0..{self.depth}")
        return k

    def _element(self, p: Element) -> Element:
        k, v = p
        self._level(k)
        if not 0 <= v < self.levels[k].n:
            raise TowerError(f"vertex {v} not on level {k}")
        return k, v

    def composite(self, m: int, n: int) -> Rel:
        """The order restricted to level ``m`` above level ``n`` (``m <= n``)."""
        self._level(m), self._level(n)
        if m > n:
            raise TowerError(f"composite needs m <= n, got {m} > {n}")
        return self._composites[(m, n)]

    def down(self, p: Element, level: int) -> int:
        """Mask of the elements of ``level`` (at least as deep as ``p``) below ``p``."""
        k, v = self._element(p)
        if level < k:
            raise TowerError("down-set is only taken at deeper levels")
        return self.composite(k, level).rows[v]

    def up(self, p: Element, level: int) -> int:
        """Mask of the elements of ``level`` (no deeper than ``p``) above ``p``."""
        k, v = self._element(p)
        if level > k:
            raise TowerError("up-set is only taken at coarser levels")
        return self.composite(level, k).cols[v]

    def leq(self, p: Element, q: Element) -> bool:
        """``p <= q`` in the poset."""
        (k, v), (m, w) = self._element(p), self._element(q)
        return m <= k and bool(self.composite(m, k).cols[v] >> w & 1)

    def wedge_at(self, p: Element, q: Element, depth: int | None = None) -> bool:
        """Common lower bound for ``p`` and ``q`` among elements of the truncation."""
        d = self.depth if depth is None else self._level(depth)
        d = max(d, p[0], q[0])
        return bool(self.down(p, d) & self.down(q, d))

    def deep_shadow(self, p: Element, level: int, depth: int | None = None) -> int:
        """Elements of ``level`` sharing a lower bound with ``p`` (witnesses at ``depth``)."""
        d = self.depth if depth is None else self._level(depth)
        d = max(d, p[0], level)
        return image(self.composite(level, d), self.down(p, d))


# ---------------------------------------------------------------------------
# level calculus

def wedge(t: Tower, level: int, depth: int) -> Graph:
    """Common-lower-bound graph on one level, witnesses taken from levels up to ``depth``."""
    t._level(level), t._level(depth)
    if depth < level:
        raise TowerError("depth must be at least the level")
    g = t.levels[level]
    if depth == level:
        return Graph(g.n, tuple(1 << v for v in g.vertices))
    c = t.composite(level, depth)
    return Graph(g.n, compose(c, inverse(c)).rows)


def star_below(t: Tower, p: Element, q: Element, cap_level: int, depth: int | None = None) -> bool:
    """Whether every element of level ``cap_level`` meeting ``p`` lies below ``q``."""
    t._element(p), t._element(q), t._level(cap_level)
    if cap_level < q[0]:
        return False
    cp = t.deep_shadow(p, cap_level, depth)
    return cp & ~t.down(q, cap_level) == 0


def star_below_relation(t: Tower, small_level: int, big_level: int, cap_level: int,
                        depth: int | None = None) -> Rel:
    """Relation from ``small_level`` to ``big_level`` holding ``q`` above ``p`` iff p star-below q."""
    src, dst = t.levels[t._level(small_level)], t.levels[t._level(big_level)]
    rows = []
    for y in dst.vertices:
        rows.append(mask_of(x for x in src.vertices
                            if star_below(t, (small_level, x), (big_level, y), cap_level, depth)))
    return Rel(src, dst, tuple(rows))


def barwedge_at_depth(t: Tower, p: Element, q: Element, depth: int) -> bool:
    """Adjacency in the limit, approximated by checking the levels ``0..depth``.

    For each such level some element must share lower bounds with both
    ``p`` and ``q``; lower bounds are searched in the whole truncation.
    A larger ``depth`` can only turn True into False.
    """
    t._element(p), t._element(q), t._level(depth)
    for n in range(depth + 1):
        if not t.deep_shadow(p, n) & t.deep_shadow(q, n):
            return False
    return True


def barwedge_relation(t: Tower, level: int, depth: int, other_level: int | None = None) -> Rel:
    other = level if other_level is None else other_level
    src, dst = t.levels[t._level(level)], t.levels[t._level(other)]
    rows = []
    for y in dst.vertices:
        rows.append(mask_of(x for x in src.vertices if barwedge_at_depth(t, (level, x), (other, y), depth)))
    return Rel(src, dst, tuple(rows))


def is_level_cap(t: Tower, c: Iterable[Element], witness_level: int) -> bool:
    """Whether every element of ``witness_level`` lies below some member of ``c``."""
    t._level(witness_level)
    covered = 0
    for p in c:
        t._element(p)
        if p[0] <= witness_level:
            covered |= t.down(p, witness_level)
    return covered == t.levels[witness_level].full


# ---------------------------------------------------------------------------
# arrows

@dataclass(frozen=True, eq=False)
class Arrow:
    """A relation from level ``level_dom`` of ``tower_dom`` to level ``level_cod`` of ``tower_cod``."""

    tower_dom: Tower
    tower_cod: Tower
    level_dom: int
    level_cod: int
    rel: Rel

    def __post_init__(self) -> None:
        self.tower_dom._level(self.level_dom)
        self.tower_cod._level(self.level_cod)
        if self.rel.dom != self.tower_dom.levels[self.level_dom]:
            raise TowerError("arrow domain is not the named level graph")
        if self.rel.cod != self.tower_cod.levels[self.level_cod]:
            raise TowerError("arrow codomain is not the named level graph")

    def with_rel(self, rel: Rel) -> "Arrow":
        return Arrow(self.tower_dom, self.tower_cod, self.level_dom, self.level_cod, rel)


def _same_towers(a: Arrow, b: Arrow) -> None:
    if a.tower_dom is not b.tower_dom or a.tower_cod is not b.tower_cod:
        raise TowerError("arrows live over different tower pairs")


def arrow_leq(a: Arrow, b: Arrow) -> bool:
    """Every pair of ``a`` sits below some pair of ``b`` on both sides."""
    _same_towers(a, b)
    if a.level_dom < b.level_dom or a.level_cod < b.level_cod:
        raise TowerError("the smaller arrow must live at deeper levels")
    up_q = a.tower_cod.composite(b.level_cod, a.level_cod)
    up_p = a.tower_dom.composite(b.level_dom, a.level_dom)
    return a.rel <= compose_all(inverse(up_q), b.rel, up_p)


def arrow_triangleleft_n(a: Arrow, b: Arrow, depth: int | None = None) -> bool:
    """``a`` sits star-below ``b`` on both sides, with caps at ``a``'s own levels."""
    _same_towers(a, b)
    if a.level_dom < b.level_dom or a.level_cod < b.level_cod:
        raise TowerError("the smaller arrow must live at deeper levels")
    sq = star_below_relation(a.tower_cod, a.level_cod, b.level_cod, a.level_cod, depth)
    sp = star_below_relation(a.tower_dom, a.level_dom, b.level_dom, a.level_dom, depth)
    return a.rel <= compose_all(inverse(sq), b.rel, sp)


def _check_depth(t: Tower, depth: int) -> int:
    return t._level(depth)


def langle_arrow(a: Arrow, depth: int, q_level: int | None = None, cap_level: int | None = None) -> Rel:
    """The strong-refiner approximation of an arrow.

    ``q`` (on ``q_level`` of the codomain tower) relates to ``p`` (on the
    arrow's domain level) iff the arrow's image of the limit-neighbourhood
    of ``p`` is non-empty and star-below ``q``.  Adjacency is checked down
    to ``depth`` and star-below uses ``cap_level`` (default: deepest level).
    Growing ``depth`` can only add pairs.
    """
    P, Q = a.tower_dom, a.tower_cod
    _check_depth(P, depth)
    ql = a.level_cod if q_level is None else Q._level(q_level)
    cap = Q.depth if cap_level is None else Q._level(cap_level)
    bw = barwedge_relation(P, a.level_dom, depth)
    neighbourhood_image = compose(a.rel, bw)
    sb = star_below_relation(Q, a.level_cod, ql, cap)
    dst = Q.levels[ql]
    rows = [0] * dst.n
    for x, img in enumerate(neighbourhood_image.cols):
        if not img:
            continue
        for y in dst.vertices:
            if img & ~sb.rows[y] == 0:
                rows[y] |= 1 << x
    return Rel(a.rel.dom, dst, tuple(rows))


def bracket_arrow(a: Arrow, q_level: int | None = None) -> Rel:
    """Weaker variant: ``q`` relates to ``p`` iff the image of ``p``'s wedge-neighbourhood lies below ``q``."""
    P, Q = a.tower_dom, a.tower_cod
    ql = a.level_cod if q_level is None else Q._level(q_level)
    if ql > a.level_cod:
        raise TowerError("bracket target level must not be deeper than the arrow")
    nb = wedge(P, a.level_dom, P.depth)
    img = compose(a.rel, Rel(a.rel.dom, a.rel.dom, nb.rows))
    up = Q.composite(ql, a.level_cod)
    dst = Q.levels[ql]
    rows = [0] * dst.n
    for x, c in enumerate(img.cols):
        if not c:
            continue
        for y in dst.vertices:
            if c & ~up.rows[y] == 0:
                rows[y] |= 1 << x
    return Rel(a.rel.dom, dst, tuple(rows))


def is_arrow_at_depth(a: Arrow, depth: int) -> bool:
    """Every element of the domain truncation is adjacent (at ``depth``) to the arrow's domain."""
    P = a.tower_dom
    _check_depth(P, depth)
    support = [x for x, c in enumerate(a.rel.cols) if c]
    if not support:
        return False
    for p in P.elements():
        if not any(barwedge_at_depth(P, p, (a.level_dom, x), depth) for x in support):
            return False
    return True


@dataclass(frozen=True, eq=False)
class ArrowSequence:
    arrows: tuple[Arrow, ...]

    def __post_init__(self) -> None:
        arrows = tuple(self.arrows)
        object.__setattr__(self, "arrows", arrows)
        for prev, nxt in zip(arrows, arrows[1:]):
            _same_towers(prev, nxt)
            if nxt.level_dom <= prev.level_dom or nxt.level_cod <= prev.level_cod:
                raise TowerError("arrow levels must strictly increase along the sequence")
            if not arrow_leq(nxt, prev):
                raise TowerError("sequence is not decreasing in the arrow order")

    def __len__(self) -> int:
        return len(self.arrows)

    def __getitem__(self, k: int) -> Arrow:
        return self.arrows[k]


def compose_sequences(s1: ArrowSequence, s2: ArrowSequence, depth: int) -> ArrowSequence:
    """Termwise ``s2[k] ∘ adjacency ∘ s1[k]``; adjacency is taken on the shared middle level."""
    if len(s1) != len(s2):
        raise TowerError("sequences have different lengths")
    out = []
    for a, b in zip(s1.arrows, s2.arrows):
        if a.tower_cod is not b.tower_dom or a.level_cod != b.level_dom:
            raise TowerError("sequences are not aligned on the middle tower")
        mid = barwedge_relation(a.tower_cod, a.level_cod, depth)
        out.append(Arrow(a.tower_dom, b.tower_cod, a.level_dom, b.level_cod,
                         compose_all(b.rel, mid, a.rel)))
    return ArrowSequence(tuple(out))


def star_compose(s: Rel, r: Rel, t: Tower, level: int | None = None, depth: int | None = None) -> Rel:
    """Star of ``s ∘ r`` over the level caps of ``t``.

    ``r`` starts at level ``level`` of ``t`` (found by graph equality when
    omitted).  A deeper element ``c`` counts as related to ``q`` when some
    element of that level above ``c`` is.  ``q`` relates to ``p`` iff for
    some cap level between ``level`` and ``depth`` every cap element meeting
    ``p`` is related to ``q``.  The result only grows with ``depth`` and is
    always contained in ``s ∘ r``.
    """
    x = compose(s, r)
    if level is None:
        matches = [k for k, g in enumerate(t.levels) if g == x.dom]
        if len(matches) != 1:
            raise TowerError("cannot identify the level of the relation; pass level=")
        level = matches[0]
    t._level(level)
    if t.levels[level] != x.dom:
        raise TowerError("relation does not start at the given level")
    d = t.depth if depth is None else t._level(depth)
    rows = [0] * x.cod.n
    for p in x.dom.vertices:
        for y in x.cod.vertices:
            related_here = x.rows[y]
            for n in range(level, d + 1):
                cp = t.deep_shadow((level, p), n, d)
                up = t.composite(level, n)
                if all(up.cols[c] & related_here for c in bits(cp)):
                    rows[y] |= 1 << p
                    break
    return Rel(x.dom, x.cod, tuple(rows))


@dataclass(frozen=True)
class RegularityCertificate:
    ok: bool
    depth: int | None
    pairs: tuple[tuple[int, int], ...]
    cap_witnesses: tuple[tuple[int, int], ...]
    failed_at: int | None = None

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "depth": self.depth,
            "pairs": [list(p) for p in self.pairs],
            "cap_witnesses": [list(w) for w in self.cap_witnesses],
            "failed_at": self.failed_at,
        }


def regularity_certificate(seq: ArrowSequence, depth: int | None = None) -> RegularityCertificate:
    """For each index ``m`` with a later arrow, the least ``n > m`` star-refining it.

    A pair ``(m, n)`` also needs the domain of arrow ``n`` to be a cap,
    witnessed by arrow ``n``'s own level.  The final arrow has no successor
    inside a finite sequence and is not checked.
    """
    pairs, caps = [], []
    for m in range(len(seq) - 1):
        found = None
        for n in range(m + 1, len(seq)):
            a = seq[n]
            dom_elems = [(a.level_dom, x) for x, c in enumerate(a.rel.cols) if c]
            if not is_level_cap(a.tower_dom, dom_elems, a.level_dom):
                continue
            if arrow_triangleleft_n(a, seq[m], depth):
                found = n
                break
        if found is None:
            return RegularityCertificate(False, depth, tuple(pairs), tuple(caps), m)
        pairs.append((m, found))
        caps.append((found, seq[found].level_dom))
    return RegularityCertificate(True, depth, tuple(pairs), tuple(caps))


def level_arrow(tower_dom: Tower, tower_cod: Tower, level_dom: int, level_cod: int,
                pairs: Sequence[Sequence[int]] | None = None, full: bool = False) -> Arrow:
    """Convenience constructor for arrows given by explicit pairs or the full relation."""
    dom, cod = tower_dom.levels[level_dom], tower_cod.levels[level_cod]
    rel = Rel.full_relation(dom, cod) if full else Rel.from_pairs(dom, cod, pairs or [])
    return Arrow(tower_dom, tower_cod, level_dom, level_cod, rel)
