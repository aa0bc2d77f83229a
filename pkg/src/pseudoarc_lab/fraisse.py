"""Constructive ingredients of the Fraisse theory of the pseudoarc.

This module puts the path-level tools together:

* tangled towers, generated level by level with :func:`build_tangled`;
* subabsorption, which pushes a morphism out of a tower level back into
  the tower below a deeper level;
* back-and-forth certificates between two tangled towers, which are the
  finite shadow of a homeomorphism between their limits;
* the end-moving partition of a tangled morphism;
* digraphs on paths (a path with a bi-surjective connected relation),
  their walk decomposition, strictification and joins;
* bounded search oracles for amalgamation and subfactorisability.

All searches are exact over the stated bounds.  Anything that is built by an
explicit recipe is re-checked before it is returned.
"""

from __future__ import annotations

from collections import deque
from functools import reduce
from operator import or_
from dataclasses import dataclass
from typing import Sequence

from .graph_core import Graph, Partition, Path, bits, canonical_path, clique_path, mask_of, path_order, quotient
from .limits import ResourceLimitError, check_vertex_budget
from .path_morphisms import (
    ConstructionFailed,
    PathMorphismError,
    clique_functor,
    canonicalize,
    decompose_in_F,
    find_lift,
    from_values,
    left_subfactor_detailed,
    membership_morphism,
    subfactor_kind,
    build_tangled,
)
from .relations import (
    Rel,
    compose,
    compose_all,
    inverse,
    is_co_surjective,
    is_edge_preserving,
    is_function,
    is_morphism,
    is_surjective,
    is_tangled,
)
from .rng import derive_seed, named_rng
from .tower import Tower, wedge


class FraisseError(ValueError):
    """A precondition of one of the constructions does not hold."""


class InsufficientDepth(RuntimeError):
    """The tower ran out of levels before a construction could finish."""


# ---------------------------------------------------------------------------
# tangled towers

@dataclass(frozen=True, eq=False)
class TangledTower:
    """A tower together with, for each level ``m``, a deeper level ``n`` whose
    composite bond onto ``m`` is tangled."""

    tower: Tower
    tangle_witnesses: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tangle_witnesses", tuple(self.tangle_witnesses))
        t = self.tower
        if path_order(t.levels[0]) is None or t.levels[0].n < 2:
            raise FraisseError("level 0 must be a path with at least one edge")
        if len(self.tangle_witnesses) != t.depth:
            raise FraisseError("need one tangle witness for every level but the deepest")
        for m, n in enumerate(self.tangle_witnesses):
            if not m < n <= t.depth:
                raise FraisseError(f"witness {n} for level {m} is not deeper than it")
            if not is_tangled(t.composite(m, n)):
                raise FraisseError(f"composite from level {n} onto level {m} is not tangled")

    @property
    def depth(self) -> int:
        return self.tower.depth

    @property
    def levels(self) -> tuple[Graph, ...]:
        return self.tower.levels

    def composite(self, m: int, n: int) -> Rel:
        return self.tower.composite(m, n)


def generate_tangled_tower(depth: int, root_len: int = 1, seed: int = 0,
                           stutter: bool = True) -> TangledTower:
    """Tower with ``levels[0] = P_root_len`` and each bond tangled onto the level above it."""
    if root_len < 1:
        raise FraisseError("the root level needs at least one edge (e(P_0) >= 1)")
    if depth < 1:
        raise FraisseError("depth must be at least 1")
    levels = [canonical_path(root_len)]
    bonds = []
    for k in range(depth):
        try:
            bond = build_tangled(levels[-1], seed=derive_seed(seed, "tower-bond", k), stutter=stutter)
        except ResourceLimitError as exc:
            raise ResourceLimitError(f"level {k + 1} of the tower (bond onto level {k}, "
                                     f"{levels[-1].n} vertices): {exc}") from exc
        bonds.append(bond)
        levels.append(bond.dom)
    tower = Tower(tuple(levels), tuple(bonds))
    return TangledTower(tower, tuple(range(1, depth + 1)), seed)


# ---------------------------------------------------------------------------
# subabsorption

def membership_factors(e: int) -> list[Rel]:
    """Simple factors ``s_1, ..., s_e`` with ``s_1∘...∘s_e`` the membership
    relation from the clique path of ``P_e`` onto ``P_e``.

    The intermediate path ``X_k`` lists the cliques of the first ``k`` edges
    of ``P_e`` followed by the plain vertices ``k+1..e``; ``s_k`` splits the
    edge clique ``{k-1, k}`` back into its two members.
    """
    if e < 0:
        raise FraisseError("path length must be non-negative")
    out = []
    for k in range(1, e + 1):
        # X_k has e+k+1 vertices, X_{k-1} has e+k
        images = []
        for pos in range(e + k + 1):
            if pos < 2 * k - 1:
                images.append([pos])
            elif pos == 2 * k - 1:
                images.append([2 * k - 2, 2 * k - 1])
            else:
                images.append([pos - 1])
        out.append(Rel.from_images(canonical_path(e + k), canonical_path(e + k - 1), images))
    return out


@dataclass(frozen=True)
class PeelStep:
    factor_index: int
    kind: str
    level: int
    method: str


@dataclass(frozen=True)
class Absorption:
    """Result of :func:`subabsorb`: ``m∘rel ⊆ composite(level_from, level)``."""

    level: int
    rel: Rel
    method: str
    steps: tuple[PeelStep, ...] = ()

    def __iter__(self):
        yield self.level
        yield self.rel


def _tower_of(t) -> Tower:
    return t.tower if isinstance(t, TangledTower) else t


def _locate_level(tw: Tower, g: Graph, level: int | None) -> int:
    if level is not None:
        if tw.levels[tw._level(level)] != g:
            raise FraisseError(f"codomain is not level {level} of the tower")
        return level
    hits = [k for k, lv in enumerate(tw.levels) if lv == g]
    if not hits:
        raise FraisseError("codomain is not a level of the tower")
    return hits[0]


def _factor_chain(m: Rel, e: int) -> tuple[list[Rel], Rel | None]:
    """Prime factors of ``m∘∈`` rewritten as ``∈∘F^m``, plus a trailing isomorphism."""
    fm = clique_functor(m)
    dec = decompose_in_F(fm)
    return membership_factors(e) + list(dec.factors), dec.isomorphism


def _peel(tw: Tower, m: Rel, n: int) -> tuple[int, Rel, list[PeelStep]]:
    factors, iso = _factor_chain(m, tw.levels[n].n - 1)
    cur = n
    prefix = Rel.identity(tw.levels[n])  # relation from level `cur` into the codomain of the next factor
    steps: list[PeelStep] = []
    for idx, factor in enumerate(factors):
        kind = subfactor_kind(factor)
        span = 2 if kind == "improper-simple" else 1
        if cur + span > tw.depth:
            raise InsufficientDepth(f"factor {idx} ({kind}) needs level {cur + span} "
                                    f"but the tower stops at {tw.depth}")
        target = compose(prefix, tw.composite(cur, cur + span))
        if is_tangled(target):
            try:
                sub = left_subfactor_detailed(factor, target, kind)
                lifted, method = sub.m, sub.method
            except PathMorphismError:
                lifted, method = find_lift(factor, target), "search"
        else:
            lifted, method = find_lift(factor, target), "search"
        if lifted is None:
            raise InsufficientDepth(f"factor {idx} ({kind}) has no lift through level {cur + span}")
        cur += span
        prefix = lifted
        steps.append(PeelStep(idx, kind, cur, method))
    if cur == n:
        prefix, cur = compose(prefix, tw.composite(n, n + 1)), n + 1
    sigma = prefix if iso is None else compose(inverse(iso), prefix)
    return cur, sigma, steps


def subabsorb(t: TangledTower | Tower, m: Rel, level: int | None = None,
              strategy: str = "auto") -> Absorption:
    """A level ``n' > n`` and a morphism ``m'`` from it to ``Q`` with ``m∘m' ⊆ ≥^n_{n'}``.

    ``m`` runs from a path ``Q`` onto level ``n`` of the tower.  The
    ``"peel"`` strategy factors ``m∘∈^Q = ∈∘F^m`` into primes and lifts them
    one by one against tangled bonds; ``"search"`` runs the exact lifting
    search against ``≥^n_{n'}`` for increasing ``n'``; ``"auto"`` peels and
    falls back to the search when the tower is too shallow.
    """
    if strategy not in ("auto", "peel", "search"):
        raise FraisseError(f"unknown strategy {strategy!r}")
    tw = _tower_of(t)
    if not is_morphism(m):
        raise FraisseError("subabsorption needs a co-bijective edge-preserving relation")
    if path_order(m.dom) is None:
        raise FraisseError("the domain of m must be a path")
    n = _locate_level(tw, m.cod, level)
    if n >= tw.depth:
        raise InsufficientDepth(f"level {n} is the deepest level of the tower")
    result = None
    peel_error = None
    if strategy in ("auto", "peel"):
        try:
            cur, sigma, steps = _peel(tw, m, n)
            mem = membership_morphism(Path.of(m.dom))
            result = Absorption(cur, compose(mem, sigma), "peel", tuple(steps))
        except InsufficientDepth as exc:
            if strategy == "peel":
                raise
            peel_error = exc
    if result is None:
        for deeper in range(n + 1, tw.depth + 1):
            lift = find_lift(m, tw.composite(n, deeper))
            if lift is not None:
                result = Absorption(deeper, lift, "search")
                break
    if result is None:
        reason = f"; peeling stopped: {peel_error}" if peel_error else ""
        raise InsufficientDepth(f"no level down to {tw.depth} absorbs the morphism{reason}")
    if not is_morphism(result.rel) or not compose(m, result.rel) <= tw.composite(n, result.level):
        raise AssertionError("subabsorption result fails its own inclusion check")
    return result


# ---------------------------------------------------------------------------
# back-and-forth certificates

def staircase(dom: Graph, cod: Graph) -> Rel:
    """Monotone surjection ``i -> floor(i (b+1) / (a+1))`` along both path orders."""
    d_order, c_order = path_order(dom), path_order(cod)
    if d_order is None or c_order is None:
        raise FraisseError("staircase maps run between paths")
    a, b = len(d_order) - 1, len(c_order) - 1
    if a < b:
        raise FraisseError("the domain must be at least as long as the codomain")
    images = [0] * dom.n
    for i, v in enumerate(d_order):
        images[v] = c_order[i * (b + 1) // (a + 1)]
    return Rel.from_images(dom, cod, images)


def _wedge_rel(tw: Tower, level: int) -> Rel:
    g = wedge(tw, level, tw.depth)
    return Rel(tw.levels[level], tw.levels[level], g.rows)


@dataclass(frozen=True)
class BackAndForthCertificate:
    """``forward[k]`` runs from P-level ``p_levels[k]`` to Q-level ``q_levels[k]``;
    ``backward[k]`` from Q-level ``q_levels[k+1]`` to P-level ``p_levels[k]``."""

    forward: tuple[Rel, ...]
    backward: tuple[Rel, ...]
    p_levels: tuple[int, ...]
    q_levels: tuple[int, ...]
    p_depth: int
    q_depth: int
    methods: tuple[str, ...] = ()

    @property
    def rounds(self) -> int:
        return len(self.backward)

    def checks(self, p: TangledTower | Tower, q: TangledTower | Tower) -> dict[str, bool]:
        """Each invariant evaluated exactly on the two towers."""
        pt, qt = _tower_of(p), _tower_of(q)
        out = {}
        for k, fw in enumerate(self.forward):
            c, d = self.p_levels[k], self.q_levels[k]
            ok_graphs = fw.dom == pt.levels[c] and fw.cod == qt.levels[d]
            out[f"forward[{k}].co_surjective"] = ok_graphs and is_co_surjective(fw)
            out[f"forward[{k}].wedge_preserving"] = ok_graphs and (
                compose_all(fw, _wedge_rel(pt, c), inverse(fw)) <= _wedge_rel(qt, d))
        for k, bw in enumerate(self.backward):
            c, d = self.p_levels[k], self.q_levels[k + 1]
            ok_graphs = bw.dom == qt.levels[d] and bw.cod == pt.levels[c]
            out[f"backward[{k}].co_surjective"] = ok_graphs and is_co_surjective(bw)
            out[f"backward[{k}].wedge_preserving"] = ok_graphs and (
                compose_all(bw, _wedge_rel(qt, d), inverse(bw)) <= _wedge_rel(pt, c))
            out[f"subequality_q[{k}]"] = ok_graphs and (
                compose(self.forward[k], bw) <= qt.composite(self.q_levels[k], d))
            if k + 1 < len(self.forward):
                out[f"subequality_p[{k}]"] = ok_graphs and (
                    compose(bw, self.forward[k + 1]) <= pt.composite(c, self.p_levels[k + 1]))
        return out

    def verify(self, p: TangledTower | Tower, q: TangledTower | Tower) -> bool:
        return all(self.checks(p, q).values())


class BackAndForthIncomplete(InsufficientDepth):
    """Depth ran out mid-way; ``partial`` holds the verified prefix."""

    def __init__(self, message: str, partial: BackAndForthCertificate):
        super().__init__(message)
        self.partial = partial


def back_and_forth(p: TangledTower | Tower, q: TangledTower | Tower, rounds: int,
                   strategy: str = "auto") -> BackAndForthCertificate:
    """Alternate subabsorption in ``q`` and ``p`` starting from a staircase seed."""
    if rounds < 0:
        raise FraisseError("rounds must be non-negative")
    pt, qt = _tower_of(p), _tower_of(q)
    q0 = qt.levels[0]
    start = next((k for k, g in enumerate(pt.levels) if g.n >= q0.n), None)
    if start is None:
        raise InsufficientDepth("no level of the first tower is long enough to map onto level 0 of the second")
    forward = [staircase(pt.levels[start], q0)]
    backward: list[Rel] = []
    p_levels, q_levels = [start], [0]
    methods: list[str] = []

    def snapshot() -> BackAndForthCertificate:
        return BackAndForthCertificate(tuple(forward), tuple(backward), tuple(p_levels),
                                       tuple(q_levels), pt.depth, qt.depth, tuple(methods))

    for k in range(rounds):
        try:
            back = subabsorb(qt, forward[-1], q_levels[-1], strategy)
        except InsufficientDepth as exc:
            raise BackAndForthIncomplete(f"round {k}, backward step in the second tower: {exc}",
                                         snapshot()) from exc
        backward.append(back.rel)
        q_levels.append(back.level)
        methods.append(back.method)
        try:
            fwd = subabsorb(pt, back.rel, p_levels[-1], strategy)
        except InsufficientDepth as exc:
            # keep the prefix consistent: drop the dangling backward step
            backward.pop(), q_levels.pop(), methods.pop()
            raise BackAndForthIncomplete(f"round {k}, forward step in the first tower: {exc}",
                                         snapshot()) from exc
        forward.append(fwd.rel)
        p_levels.append(fwd.level)
        methods.append(fwd.method)
    cert = snapshot()
    if not cert.verify(pt, qt):
        raise AssertionError("back-and-forth certificate fails its own checks")
    return cert


# ---------------------------------------------------------------------------
# end-moving partitions

@dataclass(frozen=True)
class EndMove:
    """Blocks of the partition in path order, the block of ``v`` first.

    ``choices`` records, for every recursion level, the chosen minimal
    subpath ``(lo, hi)`` of the domain, the end of the codomain it sits
    over, and the codomain subpath ``(a, b)`` used for the recursion, all as
    order positions.  Ties are broken towards the leftmost subpath, then the
    lower end, then the longest codomain subpath that works.
    """

    partition: Partition
    blocks: tuple[frozenset[int], ...]
    choices: tuple[tuple[int, int, int], ...]


def _canonical_cols(t: Rel) -> list[int]:
    return list(canonicalize(t).cols)


def _intersection(cols: Sequence[int], block) -> int:
    acc = -1
    for r in block:
        acc &= cols[r]
    return acc


def _end_move_blocks(cols: list[int], e: int, v: int, choices: list,
                     anchor: int | None = None) -> list[set[int]]:
    """Partition of positions ``0..len(cols)-1`` for a canonical morphism onto ``P_e``.

    At the top level (``anchor is None``) the full end condition is
    required.  A recursive call only has to deliver what the caller uses:
    the first block, walking away from ``v``, that holds an end of the
    domain must lie over ``anchor``.  The two-block base case cannot always
    meet the full end condition (an end of the domain may sit over both
    ends of ``P_1``), while the weaker demand is always met by one of its two
    choices in the cases we have tested.
    """
    size = len(cols)
    every = set(range(size))
    if e == 0:
        return [every]
    if e == 1:
        for s in (0, 1):
            inner = {r for r in range(size) if cols[r] >> s & 1}
            outer = every - inner
            if not outer:
                continue
            blocks = [inner, outer] if v in inner else [outer, inner]
            if _end_move_ok(cols, e, v, blocks, anchor):
                choices.append((0, size - 1, s, 0, 1))
                return blocks
        raise ConstructionFailed("no two-block partition meets the end condition")
    candidates = list(_end_subpaths(cols, e, v))
    if not candidates:
        raise ConstructionFailed("no subpath around the vertex sits over an end of the codomain")
    # the minimal subpath is tried first; later candidates are a fallback
    for lo, hi, s_v in candidates:
        blocks = _end_move_around(cols, e, v, lo, hi, s_v, anchor, choices)
        if blocks is not None:
            return blocks
    raise ConstructionFailed("no subpath around the vertex yields a valid partition")


def _end_subpaths(cols: Sequence[int], e: int, v: int):
    """Subpaths ``(lo, hi)`` around ``v`` with both ends over an end ``s`` of
    ``P_e`` and some member over ``s`` alone; shortest, then leftmost first."""
    size = len(cols)
    for width in range(size):
        for lo in range(max(0, v - width), min(v, size - 1 - width) + 1):
            hi = lo + width
            for s_v in (0, e):
                bit = 1 << s_v
                if cols[lo] & bit and cols[hi] & bit and any(cols[r] == bit for r in range(lo, hi + 1)):
                    yield lo, hi, s_v


def _end_move_around(cols: list[int], e: int, v: int, lo: int, hi: int, s_v: int,
                     anchor: int | None, choices: list) -> list[set[int]] | None:
    # the sub-codomain T is a proper subpath at the end s_v; the restriction
    # to R_v x T must again be a tangled morphism.  Longest T first.
    for k in range(e - 1, -1, -1):
        a, b = (0, k) if s_v == 0 else (e - k, e)
        t_mask = ((1 << (b + 1)) - 1) & ~((1 << a) - 1)
        sub_cols = [(cols[r] & t_mask) >> a for r in range(lo, hi + 1)]
        if not all(sub_cols):
            continue
        sub = Rel.from_images(canonical_path(hi - lo), canonical_path(b - a),
                              [list(bits(c)) for c in sub_cols])
        if not is_morphism(sub) or not is_tangled(sub):
            continue
        sub_choices: list = []
        try:
            inner = _end_move_blocks(sub_cols, b - a, v - lo, sub_choices, s_v - a)
        except ConstructionFailed:
            continue
        blocks = _assemble_end_move(cols, [{r + lo for r in blk} for blk in inner], lo, hi, s_v)
        if _end_move_ok(cols, e, v, blocks, anchor):
            choices.append((lo, hi, s_v, a, b))
            choices.extend((c[0] + lo, c[1] + lo, *(x + a for x in c[2:])) for c in sub_choices)
            return blocks
    return None


def _assemble_end_move(cols: list[int], inner: list[set[int]], lo: int, hi: int, s_v: int) -> list[set[int]]:
    size = len(cols)
    first_end = next(k for k, blk in enumerate(inner) if lo in blk or hi in blk)
    early = inner[:first_end]
    used = set().union(*early) if early else set()
    p_sv = {r for r in range(size) if cols[r] >> s_v & 1} - used
    by_s: dict[int, set[int]] = {}
    for r in range(size):
        if r in used or r in p_sv:
            continue
        far = max(bits(cols[r]), key=lambda s: abs(s - s_v))
        by_s.setdefault(far, set()).add(r)
    rest = [by_s[s] for s in sorted(by_s, key=lambda s: abs(s - s_v))]
    return early + [p_sv] + rest


def _end_move_ok(cols: Sequence[int], e: int, v: int, blocks: Sequence[set[int]],
                 anchor: int | None = None) -> bool:
    return not _end_move_failures(cols, e, v, blocks, anchor)


def _end_move_failures(cols: Sequence[int], e: int, v: int, blocks: Sequence[set[int]],
                       anchor: int | None = None) -> list[str]:
    size = len(cols)
    g = canonical_path(size - 1)
    fails = []
    if any(not blk for blk in blocks) or sorted(r for blk in blocks for r in blk) != list(range(size)):
        return ["blocks do not partition the domain"]
    part = Partition(g, tuple(frozenset(b) for b in blocks))
    qg, _ = quotient(g, part)
    order = path_order(qg)
    if order is None:
        fails.append("quotient is not a path")
    elif order not in (tuple(range(len(blocks))), tuple(reversed(range(len(blocks))))):
        fails.append("blocks are not listed in path order")
    if any(_intersection(cols, blk) == 0 for blk in blocks):
        fails.append("some block has no codomain vertex common to all its members")
    if v not in blocks[0] or (order is not None and qg.n > 1 and qg.order(0) > 1):
        fails.append("the block of v is not an end")
    if anchor is not None:
        first = next(b for b in blocks if 0 in b or size - 1 in b)
        if not _intersection(cols, first) >> anchor & 1:
            fails.append(f"first block with an end does not lie over {anchor}")
        return fails
    for r in (0, size - 1):
        for s in (0, e):
            if cols[r] >> s & 1:
                blk = next(b for b in blocks if r in b)
                if not _intersection(cols, blk) >> s & 1:
                    fails.append(f"end {r} over end {s} is not kept by its block")
    return fails


def end_move_detailed(t: Rel, v: int) -> EndMove:
    dom_order, cod_order = path_order(t.dom), path_order(t.cod)
    if dom_order is None or cod_order is None:
        raise FraisseError("end_move needs a relation between paths")
    if not is_morphism(t) or not is_tangled(t):
        raise FraisseError("end_move needs a tangled morphism")
    if not 0 <= v < t.dom.n:
        raise FraisseError(f"vertex {v} is not in the domain")
    cols = _canonical_cols(t)
    e = len(cod_order) - 1
    pos_v = dom_order.index(v)
    choices: list = []
    blocks = _end_move_blocks(cols, e, pos_v, choices)
    fails = _end_move_failures(cols, e, pos_v, blocks)
    if fails:
        raise ConstructionFailed("end-move partition failed: " + "; ".join(fails))
    mapped = tuple(frozenset(dom_order[r] for r in blk) for blk in blocks)
    return EndMove(Partition(t.dom, mapped), mapped, tuple(choices))


def end_move(t: Rel, v: int) -> Partition:
    """Partition of the domain into a path of blocks with ``v``'s block at an end.

    Every block has a codomain vertex over all of its members, and an end of
    the domain over an end of the codomain keeps that end in its block.
    """
    return end_move_detailed(t, v).partition


# ---------------------------------------------------------------------------
# digraphs on paths

def is_bi_surjective(rel: Rel) -> bool:
    return is_surjective(rel) and is_co_surjective(rel)


def _pairs_connected(rel: Rel, strict: bool) -> bool:
    pairs = rel.pairs()
    if not pairs:
        return False
    g = rel.cod
    h = rel.dom
    index = {p: k for k, p in enumerate(pairs)}
    seen = {pairs[0]}
    stack = [pairs[0]]
    while stack:
        y, x = stack.pop()
        for y2 in bits(g.rows[y]):
            for x2 in bits(h.rows[x]):
                if strict and y2 != y and x2 != x:
                    continue
                p = (y2, x2)
                if p in index and p not in seen:
                    seen.add(p)
                    stack.append(p)
    return len(seen) == len(pairs)


def is_connected_relation(rel: Rel) -> bool:
    """Related pairs form a connected subgraph of the canonical product."""
    return _pairs_connected(rel, strict=False)


def is_strictly_connected(rel: Rel) -> bool:
    """Related pairs are connected when steps may move only one coordinate."""
    return _pairs_connected(rel, strict=True)


def is_digraph(g: Graph, rel: Rel) -> bool:
    if path_order(g) is None or rel.dom != g or rel.cod != g:
        return False
    return is_bi_surjective(rel) and is_connected_relation(rel)


@dataclass(frozen=True)
class Digraph:
    """A path with a bi-surjective relation whose pairs are connected."""

    path: Graph
    rel: Rel

    def __post_init__(self) -> None:
        if not is_digraph(self.path, self.rel):
            raise FraisseError("relation is not bi-surjective and connected on the path")

    @property
    def length(self) -> int:
        return self.path.n - 1

    @property
    def strict(self) -> bool:
        return is_strictly_connected(self.rel)


def digraph_decompose(g: Graph, rel: Rel) -> tuple[Graph, Rel, Rel]:
    """A walk ``R`` through the related pairs and functions ``f, g`` with ``rel = f∘g⁻¹``.

    ``f`` reads off the codomain coordinate of each pair and ``g`` the domain
    coordinate.  The walk is a depth-first traversal that steps back along
    the tree edge after finishing each branch.
    """
    if not is_digraph(g, rel):
        raise FraisseError("relation is not bi-surjective and connected on the path")
    pairs = sorted(rel.pairs())
    pair_set = set(pairs)
    walk = [pairs[0]]
    seen = {pairs[0]}

    def visit(p):
        y, x = p
        for y2 in bits(g.rows[y]):
            for x2 in bits(g.rows[x]):
                nxt = (y2, x2)
                if nxt in pair_set and nxt not in seen:
                    seen.add(nxt)
                    walk.append(nxt)
                    visit(nxt)
                    walk.append(p)

    visit(pairs[0])
    # trailing returns to the root carry no new pairs
    last_new = max(walk.index(p) for p in pairs)
    walk = walk[:last_new + 1]
    r = canonical_path(len(walk) - 1)
    f = Rel.from_images(r, g, [y for y, _ in walk])
    gg = Rel.from_images(r, g, [x for _, x in walk])
    if compose(f, inverse(gg)) != rel:
        raise AssertionError("walk decomposition does not recompose")
    return r, f, gg


def strictify(d: Digraph) -> Digraph:
    """Relation on the clique path: ``Y`` over ``X`` iff some member of ``Y`` is over some member of ``X``."""
    p = Path.of(d.path)
    cp = clique_path(p)
    mem = membership_morphism(p)
    out = compose_all(inverse(mem), d.rel, mem)
    out = Rel(cp.graph, cp.graph, out.rows)
    if not (is_bi_surjective(out) and is_strictly_connected(out)):
        raise AssertionError("strictified relation is not strictly connected and bi-surjective")
    return Digraph(cp.graph, out)


def is_digraph_morphism(f: Rel, src: Digraph, dst: Digraph) -> bool:
    """``f`` is a surjective edge-preserving function carrying ``src.rel`` into ``dst.rel``."""
    if f.dom != src.path or f.cod != dst.path:
        return False
    if not (is_function(f) and is_morphism(f)):
        return False
    return src.rel <= compose_all(inverse(f), dst.rel, f)


def is_digraph_relation_morphism(m: Rel, src: Digraph, dst: Digraph) -> bool:
    """Relation version: ``src.rel ⊆ m⁻¹∘dst.rel∘m`` with ``m`` co-bijective edge-preserving."""
    if m.dom != src.path or m.cod != dst.path or not is_morphism(m):
        return False
    return src.rel <= compose_all(inverse(m), dst.rel, m)


@dataclass(frozen=True)
class Join:
    f: Rel
    g: Rel
    c: Digraph


def digraph_join(a: Digraph, b: Digraph) -> Join:
    """A strictly connected digraph on ``P_l``, ``l = (m+1)(n+1)-1``, mapping onto both inputs."""
    for name, d in (("first", a), ("second", b)):
        if d.path != canonical_path(d.length):
            raise FraisseError(f"{name} digraph must live on a canonical path")
        if not is_strictly_connected(d.rel):
            raise FraisseError(f"{name} digraph is not strictly connected")
    m, n = a.length, b.length
    l = (m + 1) * (n + 1) - 1
    check_vertex_budget(l + 1, "digraph join")
    f_vals, g_vals = [], []
    for i in range(m + 1):
        for j in range(n + 1):
            f_vals.append(i)
            g_vals.append(j if i % 2 == 0 else n - j)
    f, g = from_values(f_vals, m), from_values(g_vals, n)
    c_rel = compose_all(inverse(f), a.rel, f) & compose_all(inverse(g), b.rel, g)
    if not (is_bi_surjective(c_rel) and is_strictly_connected(c_rel)):
        raise AssertionError("joined relation is not strictly connected and bi-surjective")
    c = Digraph(canonical_path(l), c_rel)
    if not (is_digraph_morphism(f, c, a) and is_digraph_morphism(g, c, b)):
        raise AssertionError("join projections are not digraph morphisms")
    return Join(f, g, c)


def random_strict_digraph(n: int, seed: int, extra_steps: int | None = None) -> Digraph:
    """Random walk in the strict product of ``P_n`` with itself until both coordinates are covered."""
    if n < 0:
        raise FraisseError("path length must be non-negative")
    rng = named_rng(seed, "strict-digraph", n)
    g = canonical_path(n)
    y, x = rng.randrange(n + 1), rng.randrange(n + 1)
    pairs = {(y, x)}
    extra = rng.randrange(n + 2) if extra_steps is None else extra_steps
    full = g.full

    def covered() -> bool:
        return mask_of(p[0] for p in pairs) == full and mask_of(p[1] for p in pairs) == full

    while not covered() or extra > 0:
        if covered():
            extra -= 1
        if n == 0:
            break
        if rng.random() < 0.5:
            y = min(n, max(0, y + rng.choice((-1, 1))))
        else:
            x = min(n, max(0, x + rng.choice((-1, 1))))
        pairs.add((y, x))
    return Digraph(g, Rel.from_pairs(g, g, sorted(pairs)))


# ---------------------------------------------------------------------------
# bounded search oracles

@dataclass(frozen=True)
class Amalgam:
    status: str  # "found", "inconclusive" or "exhausted"
    s: Graph | None = None
    u: Rel | None = None
    v: Rel | None = None
    explored: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def _ends(g: Graph) -> list[int]:
    order = path_order(g)
    return [order[0]] if len(order) == 1 else [order[0], order[-1]]


def _walk_search(states0, goal, moves, bound: int):
    """Breadth-first search for a shortest walk; returns (walk, explored, exhausted).

    ``exhausted`` is True only when every reachable state was expanded, in
    which case no walk exists at any length.
    """
    parent = {}
    cut = False
    frontier = deque()
    for st in states0:
        if st not in parent:
            parent[st] = None
            frontier.append((st, 0))
    explored = 0
    while frontier:
        st, dist = frontier.popleft()
        explored += 1
        if goal(st):
            walk = []
            while st is not None:
                walk.append(st)
                st = parent[st]
            return walk[::-1], explored, False
        if dist >= bound:
            cut = cut or any(nxt not in parent for nxt in moves(st))
            continue
        for nxt in moves(st):
            if nxt not in parent:
                parent[nxt] = st
                frontier.append((nxt, dist + 1))
    return None, explored, not cut


def amalgamate_bruteforce(f: Rel, g: Rel, bound: int, end_preserving: bool = False) -> Amalgam:
    """Shortest path ``S`` with functions ``u, v`` such that ``f∘u = g∘v``.

    The search walks through the pullback ``{(q, r) : f(q) = g(r)}`` where
    consecutive pairs are adjacent or equal in each coordinate, until both
    coordinates are covered.  With ``end_preserving`` the walk must start at
    a pair of ends and finish at the opposite pair of ends.
    """
    for name, h in (("f", f), ("g", g)):
        if not (is_function(h) and is_surjective(h) and is_edge_preserving(h)):
            raise FraisseError(f"{name} must be a surjective edge-preserving function")
        if path_order(h.dom) is None or path_order(h.cod) is None:
            raise FraisseError(f"{name} must run between paths")
    if f.cod != g.cod:
        raise FraisseError("f and g need the same codomain")
    if f == g:
        ident = Rel.identity(f.dom)
        return Amalgam("found", f.dom, ident, ident, 0)
    qg, rg = f.dom, g.dom
    check_vertex_budget(qg.n + rg.n, "amalgamation search (covered-set masks)")
    fv, gv = f.function_values(), g.function_values()
    pull = [(q, r) for q in qg.vertices for r in rg.vertices if fv[q] == gv[r]]
    q_ends, r_ends = _ends(qg), _ends(rg)
    if end_preserving:
        starts = [(q, r, 1 << q, 1 << r, q, r) for q, r in pull if q in q_ends and r in r_ends]
    else:
        starts = [(q, r, 1 << q, 1 << r, -1, -1) for q, r in pull]

    def goal(st) -> bool:
        q, r, cq, cr, q0, r0 = st
        if cq != qg.full or cr != rg.full:
            return False
        if not end_preserving:
            return True
        q_ok = q in q_ends and (len(q_ends) == 1 or q != q0)
        r_ok = r in r_ends and (len(r_ends) == 1 or r != r0)
        return q_ok and r_ok

    def moves(st):
        q, r, cq, cr, q0, r0 = st
        for q2 in bits(qg.rows[q]):
            for r2 in bits(rg.rows[r]):
                if (q2, r2) != (q, r) and fv[q2] == gv[r2]:
                    yield q2, r2, cq | 1 << q2, cr | 1 << r2, q0, r0

    walk, explored, exhausted = _walk_search(starts, goal, moves, bound)
    if walk is None:
        return Amalgam("exhausted" if exhausted else "inconclusive", explored=explored)
    s = canonical_path(len(walk) - 1)
    u = Rel.from_images(s, qg, [st[0] for st in walk])
    v = Rel.from_images(s, rg, [st[1] for st in walk])
    if compose(f, u) != compose(g, v) or not is_morphism(u) or not is_morphism(v):
        raise AssertionError("amalgam fails its own check")
    return Amalgam("found", s, u, v, explored)


def _component_covers(nodes, steps, marks, want):
    """A node of some connected component whose ``marks`` OR up to ``want``, else ``None``."""
    seen = set()
    for start in nodes:
        if start in seen:
            continue
        seen.add(start)
        acc = [0] * len(want)
        stack = [start]
        while stack:
            node = stack.pop()
            for k, m in enumerate(marks(node)):
                acc[k] |= m
            for nxt in steps(node):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if tuple(acc) == tuple(want):
            return start
    return None


@dataclass(frozen=True)
class SubfactorWitness:
    status: str  # "found", "inconclusive", "exhausted" or "not-bi-surjective"
    h: Graph | None = None
    left: Rel | None = None
    right: Rel | None = None
    explored: int = 0

    @property
    def found(self) -> bool:
        return self.status == "found"


def _path_cliques(order: Sequence[int]) -> list[int]:
    out = [1 << v for v in order]
    out += [(1 << a) | (1 << b) for a, b in zip(order, order[1:])]
    return out


def _tour(start, steps, marks, want) -> list:
    """Depth-first tour from ``start``, stopped once the marks reach ``want``."""
    walk = [start]
    acc = list(marks(start))
    seen = {start}

    def done() -> bool:
        return tuple(acc) == tuple(want)

    def visit(node) -> bool:
        for nxt in steps(node):
            if nxt in seen:
                continue
            seen.add(nxt)
            walk.append(nxt)
            for k, m in enumerate(marks(nxt)):
                acc[k] |= m
            if done() or visit(nxt):
                return True
            walk.append(node)
        return False

    if not done():
        visit(start)
    return walk


def subfactorisability_bruteforce(rel: Rel, bound: int, covering: bool = False,
                                  shortest: bool = True) -> SubfactorWitness:
    """Search a path ``H`` and morphisms ``left, right`` from ``H`` onto the
    path with every ``h`` having ``left(h)`` over ``right(h)`` somewhere in ``rel``.

    Consecutive vertices of ``H`` carry cliques whose unions are cliques and
    each side must hit every singleton, which is exactly co-bijectivity plus
    edge preservation.  ``bound`` caps ``e(H)``.  With ``covering`` every
    pair of ``rel`` must also be realised as ``(left(h), right(h))`` by some
    ``h``, that is ``rel ⊆ left∘right⁻¹``; this stronger form is the one
    equivalent to being bi-surjective and connected.

    Existence is decided exactly from the connected components of the
    position graph.  With ``shortest`` the witness is a shortest one found by
    breadth-first search (``bound`` caps the search); otherwise it is a
    depth-first tour of a suitable component, which is much cheaper and is
    reported as inconclusive only if it is longer than ``bound``.
    """
    g = rel.dom
    order = path_order(g)
    if order is None or rel.cod != g:
        raise FraisseError("relation must be on a single path")
    if not is_bi_surjective(rel):
        return SubfactorWitness("not-bi-surjective")
    check_vertex_budget(2 * g.n + (len(rel.pairs()) if covering else 0),
                        "subfactorisability search (covered-set masks)")
    cliques = _path_cliques(order)
    pair_bit = {p: 1 << k for k, p in enumerate(rel.pairs())}
    all_pairs = (1 << len(pair_bit)) - 1 if covering else 0

    def clique_like(mask: int) -> bool:
        vs = bits(mask)
        return all(g.adjacent(a, b) for a in vs for b in vs)

    def ok(a: int, b: int) -> bool:
        return any(rel.rows[q] & b for q in bits(a))

    def single(c: int) -> int:
        return c if c.bit_count() == 1 else 0

    def covered(a: int, b: int) -> int:
        if not covering:
            return 0
        return reduce(or_, (pair_bit.get((q, q2), 0) for q in bits(a) for q2 in bits(b)), 0)

    positions = [(a, b) for a in cliques for b in cliques if ok(a, b)]

    def steps(pos):
        a, b = pos
        for a2 in cliques:
            if not clique_like(a | a2):
                continue
            for b2 in cliques:
                if (a2, b2) != (a, b) and clique_like(b | b2) and ok(a2, b2):
                    yield a2, b2

    # Steps are symmetric, so a walk visiting every target exists iff one
    # connected component of the position graph meets all of them.
    def marks(pos):
        return single(pos[0]), single(pos[1]), covered(*pos)

    want = (g.full, g.full, all_pairs)
    root = _component_covers(positions, steps, marks, want)
    if root is None:
        return SubfactorWitness("exhausted")
    if not shortest:
        tour = _tour(root, steps, marks, want)
        if len(tour) - 1 > bound:
            return SubfactorWitness("inconclusive")
        return _subfactor_result(rel, g, [(a, b) for a, b in tour], covering, len(tour))
    starts = [(a, b, single(a), single(b), covered(a, b)) for a, b in positions]

    def goal(st) -> bool:
        return st[2] == g.full and st[3] == g.full and st[4] == all_pairs

    def moves(st):
        a, b, ca, cb, cp = st
        for a2, b2 in steps((a, b)):
            yield a2, b2, ca | single(a2), cb | single(b2), cp | covered(a2, b2)

    walk, explored, exhausted = _walk_search(starts, goal, moves, bound)
    if walk is None:
        return SubfactorWitness("exhausted" if exhausted else "inconclusive", explored=explored)
    return _subfactor_result(rel, g, [st[:2] for st in walk], covering, explored)


def _subfactor_result(rel: Rel, g: Graph, walk, covering: bool, explored: int) -> SubfactorWitness:
    h = canonical_path(len(walk) - 1)
    left = Rel.from_images(h, g, [bits(st[0]) for st in walk])
    right = Rel.from_images(h, g, [bits(st[1]) for st in walk])
    # each h has some q in left(h) related (via rel) from some q' in right(h)
    diag = compose_all(inverse(left), rel, right)
    if not (is_morphism(left) and is_morphism(right) and Rel.identity(h) <= diag):
        raise AssertionError("subfactorisability witness fails its own check")
    if covering and not rel <= compose(left, inverse(right)):
        raise AssertionError("subfactorisability witness does not cover the relation")
    return SubfactorWitness("found", h, left, right, explored)
