"""Structure theory of morphisms between paths.

Most helpers assume *canonical* paths, i.e. graphs equal to ``P_n`` with the
vertices in their natural order.  :func:`canonicalize` moves any relation
between paths onto canonical paths along the order witnesses.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterator, Sequence

from .graph_core import Graph, Path, bits, canonical_path, clique_path, mask_of, path_order
from .relations import (
    Rel,
    compose,
    compose_all,
    is_edge_injective,
    is_function,
    is_morphism,
    is_proper,
    is_tangled,
    preimage,
)


class PathMorphismError(ValueError):
    """A precondition on a path morphism does not hold."""


class ConstructionFailed(PathMorphismError):
    """An explicit construction did not produce a valid subfactor."""


class InconclusiveSearch(RuntimeError):
    """A bounded search ran out of room before it could decide."""


# ---------------------------------------------------------------------------
# small helpers

def path_length(g: Graph) -> int:
    if path_order(g) is None:
        raise PathMorphismError("graph is not a path")
    return g.n - 1


def canonicalize(r: Rel) -> Rel:
    """Relabel both sides along their order witnesses onto ``P_m`` and ``P_n``."""
    dom_order, cod_order = path_order(r.dom), path_order(r.cod)
    if dom_order is None or cod_order is None:
        raise PathMorphismError("relation is not between paths")
    dpos = {v: i for i, v in enumerate(dom_order)}
    rows = []
    for y in cod_order:
        rows.append(mask_of(dpos[x] for x in bits(r.rows[y])))
    return Rel(canonical_path(r.dom.n - 1), canonical_path(r.cod.n - 1), tuple(rows))


def from_values(values: Sequence[int], cod_len: int | None = None) -> Rel:
    """Function between canonical paths from its list of values."""
    cod_len = max(values) if cod_len is None else cod_len
    return Rel.from_images(canonical_path(len(values) - 1), canonical_path(cod_len), list(values))


def values(f: Rel) -> tuple[int, ...]:
    return f.function_values()


def reversal(n: int) -> Rel:
    """The order-reversing automorphism of ``P_n``."""
    return from_values([n - k for k in range(n + 1)], n)


def is_isomorphism(r: Rel) -> bool:
    if r.dom.n != r.cod.n or not is_function(r):
        return False
    vals = r.function_values()
    if len(set(vals)) != len(vals):
        return False
    return all(r.dom.adjacent(a, b) == r.cod.adjacent(vals[a], vals[b])
               for a in r.dom.vertices for b in r.dom.vertices)


def is_simple(r: Rel) -> bool:
    return path_length(r.cod) == path_length(r.dom) - 1


# ---------------------------------------------------------------------------
# turning numbers

def turning_number(f: Rel) -> int:
    """Number of length-two subpaths folded onto a single edge."""
    if not is_function(f) or not is_edge_injective(f):
        raise PathMorphismError("turning number needs an edge-injective function")
    order = path_order(f.dom)
    if order is None or path_order(f.cod) is None:
        raise PathMorphismError("turning number is defined between paths")
    vals = f.function_values()
    return sum(1 for i in range(1, len(order) - 1) if vals[order[i - 1]] == vals[order[i + 1]])


def turn_positions(vals: Sequence[int]) -> list[int]:
    return [i for i in range(1, len(vals) - 1) if vals[i - 1] == vals[i + 1]]


# ---------------------------------------------------------------------------
# canonical constructors

def make_simple(n: int, m: int, strict: bool = False) -> Rel:
    """Simple morphism ``P_{n+1} -> P_n`` merging the two vertices over ``m``.

    Codomain ``j`` is related to domain ``k`` when ``j = k <= m`` or
    ``j = k - 1 >= m``.  With ``strict=True`` both comparisons are strict,
    which gives a subrelation that is no longer a morphism.
    """
    if not 0 <= m <= n:
        raise PathMorphismError("need 0 <= m <= n")
    pairs = []
    for j in range(n + 1):
        for k in range(n + 2):
            lo = m > j if strict else m >= j
            hi = m < j if strict else m <= j
            if (lo and j == k) or (hi and j == k - 1):
                pairs.append((j, k))
    return Rel.from_pairs(canonical_path(n + 1), canonical_path(n), pairs)


def make_hook(m: int, n: int) -> Rel:
    """Hook ``P_{m+n} -> P_n`` running up to ``n`` and folding back ``m`` steps."""
    if not 1 <= m <= n:
        raise PathMorphismError("hooks need 1 <= m <= n")
    return from_values([k if k <= n else 2 * n - k for k in range(m + n + 1)], n)


def make_snake(l: int, m: int, n: int) -> Rel:
    """Proper snake ``P_{l+m+n} -> P_{l-m+n}`` with turns after ``l`` and ``l+m`` steps."""
    if not (m >= 1 and l > m and n > m):
        raise PathMorphismError("snakes need l > m, n > m and m >= 1")
    vals = []
    for k in range(l + m + n + 1):
        if k <= l:
            vals.append(k)
        elif k <= l + m:
            vals.append(2 * l - k)
        else:
            vals.append(k - 2 * m)
    return from_values(vals, l - m + n)


def make_turn() -> Rel:
    return from_values([0, 1, 0], 1)


# ---------------------------------------------------------------------------
# classification

class Tag(str, Enum):
    ISOMORPHISM = "Isomorphism"
    SIMPLE = "Simple"
    HOOK = "Hook"
    PROPER_SNAKE = "ProperSnake"
    IMPROPER_SNAKE = "ImproperSnake"
    HIGHER_TURNING = "HigherTurning"
    NON_EDGE_INJECTIVE = "NonEdgeInjective"


@dataclass(frozen=True)
class MorphismClass:
    tag: Tag
    turning: int | None = None


def classify(f: Rel) -> MorphismClass:
    if path_order(f.dom) is None or path_order(f.cod) is None:
        raise PathMorphismError("classification is defined between paths")
    if not is_morphism(f):
        raise PathMorphismError("classification needs a co-bijective edge-preserving relation")
    if is_isomorphism(f):
        return MorphismClass(Tag.ISOMORPHISM, 0)
    if is_function(f) and is_edge_injective(f):
        t = turning_number(f)
        if t == 1:
            return MorphismClass(Tag.HOOK, 1)
        if t == 2:
            return MorphismClass(Tag.PROPER_SNAKE if is_proper(f) else Tag.IMPROPER_SNAKE, 2)
        return MorphismClass(Tag.HIGHER_TURNING, t)
    if is_simple(f):
        return MorphismClass(Tag.SIMPLE)
    return MorphismClass(Tag.NON_EDGE_INJECTIVE)


# ---------------------------------------------------------------------------
# enumeration of morphisms between canonical paths

def _cliques(n: int) -> list[int]:
    """Bitmasks of the singletons and edges of ``P_n``."""
    return [1 << i for i in range(n + 1)] + [3 << i for i in range(n)]


def _span_ok(a: int, b: int) -> bool:
    u = a | b
    return u.bit_length() - (u & -u).bit_length() <= 1


def iter_morphisms(dom_len: int, cod_len: int, functions_only: bool = False) -> Iterator[Rel]:
    """Every co-bijective edge-preserving relation ``P_dom_len -> P_cod_len``.

    Images of a morphism between paths are cliques and neighbouring images
    together still span a clique, so a depth-first walk over image
    sequences enumerates exactly the edge-preserving relations.
    """
    dom, cod = canonical_path(dom_len), canonical_path(cod_len)
    options = [1 << i for i in range(cod_len + 1)]
    if not functions_only:
        options += [3 << i for i in range(cod_len)]
    need = cod.full
    size = dom_len + 1
    cols: list[int] = []

    def rec(singles: int) -> Iterator[Rel]:
        if len(cols) == size:
            if singles == need:
                rows = [0] * (cod_len + 1)
                for x, c in enumerate(cols):
                    for y in bits(c):
                        rows[y] |= 1 << x
                yield Rel(dom, cod, tuple(rows))
            return
        missing = (need & ~singles).bit_count()
        if missing > size - len(cols):
            return
        for c in options:
            if cols and not _span_ok(cols[-1], c):
                continue
            cols.append(c)
            yield from rec(singles | c if c.bit_count() == 1 else singles)
            cols.pop()

    yield from rec(0)


def forced_left_factor(f: Rel, h: Rel) -> Rel | None:
    """The only possible ``g`` with ``g∘h = f`` when ``h`` is co-injective.

    Every vertex ``p`` of the middle path has some ``x`` with image
    exactly ``{p}``, which forces the image of ``p`` under ``g`` to be the
    image of ``x`` under ``f``.
    """
    fcols, hcols = f.cols, h.cols
    g_cols = [None] * h.cod.n
    for x, c in enumerate(hcols):
        if c.bit_count() == 1:
            p = c.bit_length() - 1
            if g_cols[p] is None:
                g_cols[p] = fcols[x]
            elif g_cols[p] != fcols[x]:
                return None
    if any(c is None for c in g_cols):
        return None
    rows = [0] * f.cod.n
    for p, c in enumerate(g_cols):
        for y in bits(c):
            rows[y] |= 1 << p
    g = Rel(h.cod, f.cod, tuple(rows))
    if not is_morphism(g) or compose(g, h) != f:
        return None
    return g


def find_factorization(f: Rel, bound: int) -> tuple[Rel, Rel] | None:
    """A factorisation ``f = g∘h`` with neither factor an isomorphism.

    Raises :class:`InconclusiveSearch` when some middle length lies beyond
    ``bound``.
    """
    f = canonicalize(f)
    lo, hi = f.cod.n - 1, f.dom.n - 1
    if hi - 1 > bound:
        raise InconclusiveSearch(f"middle paths up to length {hi - 1} exceed bound {bound}")
    for k in range(lo + 1, hi):
        for h in iter_morphisms(hi, k):
            g = forced_left_factor(f, h)
            if g is not None:
                return g, h
    return None


def is_prime_bruteforce(f: Rel, bound: int = 8) -> bool:
    """Exhaustive primality test: no factorisation through a strictly intermediate path."""
    if not is_morphism(f):
        raise PathMorphismError("primality needs a co-bijective edge-preserving relation")
    if is_isomorphism(f):
        return False
    return find_factorization(f, bound) is None


# ---------------------------------------------------------------------------
# prime decomposition of surjective edge-preserving functions

@dataclass(frozen=True)
class PrimeFactorization:
    """``factors[0]∘factors[1]∘...`` followed by an optional leftover isomorphism.

    ``isomorphism`` is only set when the input is itself an isomorphism
    other than the identity, since there is no factor to absorb it into.
    """

    source: Rel
    factors: tuple[Rel, ...]
    tags: tuple[Tag, ...]
    isomorphism: Rel | None = field(default=None)

    def recompose(self) -> Rel:
        parts = list(self.factors)
        if self.isomorphism is not None:
            parts.append(self.isomorphism)
        if not parts:
            return Rel.identity(self.source.dom)
        return compose_all(*parts)


def _collapse_edge(vals: list[int], i: int) -> tuple[Rel, list[int]]:
    """Merge positions ``i`` and ``i+1`` of the domain; return the simple factor and new values."""
    n = len(vals) - 1
    merge = from_values([k if k <= i else k - 1 for k in range(n + 1)], n - 1)
    return merge, vals[:i + 1] + vals[i + 2:]


def _runs(vals: Sequence[int]) -> list[tuple[int, int]]:
    """Maximal intervals of positions on which an edge-injective function is injective."""
    turns = turn_positions(vals)
    cuts = [0] + turns + [len(vals) - 1]
    return [(cuts[k], cuts[k + 1]) for k in range(len(cuts) - 1)]


def _split_improper_snake(vals: list[int]) -> tuple[list[int], int, list[int]]:
    """Write an improper snake as hook∘hook.

    Returns the values of the outer hook on a subpath, its length, and the
    values of the inner hook that folds the remaining run back.
    """
    n = len(vals) - 1
    (a0, b0), (a1, b1), (a2, b2) = _runs(vals)
    full = set(vals)
    if set(vals[a0:b1 + 1]) == full:
        keep = list(range(a0, b1 + 1))
        run = range(a1, b1 + 1)
    elif set(vals[a1:b2 + 1]) == full:
        keep = list(range(a1, b2 + 1))
        run = range(a1, b2 + 1)
    else:
        raise PathMorphismError("snake is proper; it cannot be split")
    on_run = {vals[k]: k for k in run if k in keep}
    pos = {v: i for i, v in enumerate(keep)}
    inner = []
    for k in range(n + 1):
        target = k if k in pos else on_run[vals[k]]
        inner.append(pos[target])
    outer = [vals[k] for k in keep]
    return outer, len(keep) - 1, inner


def _split_higher(vals: list[int]) -> tuple[list[int], list[int]]:
    """Split an edge-injective function with three or more turns as ``g∘h``.

    When some interior run has its image inside both neighbours (the
    smallest such index is used), ``h`` has two turns and ``g`` two fewer
    turns than the input.  Otherwise a shortest run sits at an end and lies
    inside its only neighbour; it is folded back by a hook ``h`` and ``g``
    has one turn fewer.
    """
    runs = _runs(vals)
    image = [set(vals[a:b + 1]) for a, b in runs]
    for k in range(1, len(runs) - 1):
        if image[k - 1] >= image[k] <= image[k + 1]:
            break
    else:
        return _fold_end_run(vals, runs, image)
    (ap, bp), (ak, bk), (an, bn) = runs[k - 1], runs[k], runs[k + 1]
    seg = set(range(ak, bk + 1)) | {j for j in range(an, bn + 1) if vals[j] in image[k]}
    s_lo, s_hi = min(seg), max(seg)
    # quotient: positions before s_lo, the collapsed block, positions after s_hi
    n = len(vals) - 1
    new_index = {}
    for j in range(s_lo):
        new_index[j] = j
    block = s_lo
    for j in range(s_hi + 1, n + 1):
        new_index[j] = j - (s_hi - s_lo)
    prev_run = {vals[j]: j for j in range(ap, bp + 1)}
    h_vals = []
    for j in range(n + 1):
        if j < s_lo or j > s_hi:
            h_vals.append(new_index[j])
        elif j in (s_lo, s_hi):
            h_vals.append(block)
        else:
            h_vals.append(new_index[prev_run[vals[j]]])
    g_vals = [vals[j] for j in range(s_lo)] + [vals[s_lo]] + [vals[j] for j in range(s_hi + 1, n + 1)]
    return g_vals, h_vals


def _fold_end_run(vals: list[int], runs, image) -> tuple[list[int], list[int]]:
    n = len(vals) - 1
    if image[-1] <= image[-2]:
        (ap, bp), (al, _) = runs[-2], runs[-1]
        prev_run = {vals[j]: j for j in range(ap, bp + 1)}
        h_vals = [j if j <= al else prev_run[vals[j]] for j in range(n + 1)]
        return vals[:al + 1], h_vals
    if image[0] <= image[1]:
        (_, b0), (a1, b1) = runs[0], runs[1]
        next_run = {vals[j]: j for j in range(a1, b1 + 1)}
        h_vals = [(j if j >= b0 else next_run[vals[j]]) - b0 for j in range(n + 1)]
        return vals[b0:], h_vals
    raise PathMorphismError("no foldable run found")  # pragma: no cover - a shortest run always folds


def _decompose_edge_injective(vals: list[int], cod_len: int) -> list[tuple[Rel, Tag]]:
    t = len(turn_positions(vals))
    f = from_values(vals, cod_len)
    if t == 0:
        return [(f, Tag.ISOMORPHISM)]
    if t == 1:
        return [(f, Tag.HOOK)]
    if t == 2:
        if is_proper(f):
            return [(f, Tag.PROPER_SNAKE)]
        outer, mid_len, inner = _split_improper_snake(vals)
        return [(from_values(outer, cod_len), Tag.HOOK), (from_values(inner, mid_len), Tag.HOOK)]
    g_vals, h_vals = _split_higher(vals)
    return (_decompose_edge_injective(g_vals, cod_len)
            + _decompose_edge_injective(h_vals, len(g_vals) - 1))


def decompose_in_F(f: Rel) -> PrimeFactorization:
    """Factor a surjective edge-preserving function between paths into primes."""
    if not is_function(f):
        raise PathMorphismError("decomposition needs a function")
    canon = canonicalize(f)
    if not is_morphism(canon):
        raise PathMorphismError("decomposition needs a surjective edge-preserving function")
    vals = list(canon.function_values())
    cod_len = canon.cod.n - 1
    inner: list[Rel] = []  # simple factors, innermost last
    while True:
        fiber_edge = next((i for i in range(len(vals) - 1) if vals[i] == vals[i + 1]), None)
        if fiber_edge is None:
            break
        simple, vals = _collapse_edge(vals, fiber_edge)
        inner.insert(0, simple)
    pieces = _decompose_edge_injective(vals, cod_len)
    pieces += [(s, Tag.SIMPLE) for s in inner]
    # absorb isomorphisms into a neighbouring factor
    factors: list[Rel] = []
    tags: list[Tag] = []
    pending_iso: Rel | None = None
    for rel, tag in pieces:
        if tag is Tag.ISOMORPHISM:
            if factors:
                factors[-1] = compose(factors[-1], rel)
            else:
                pending_iso = rel if pending_iso is None else compose(pending_iso, rel)
            continue
        if pending_iso is not None:
            rel = compose(pending_iso, rel)
            pending_iso = None
        factors.append(rel)
        tags.append(tag)
    leftover = None
    if pending_iso is not None and pending_iso != Rel.identity(pending_iso.dom):
        leftover = pending_iso
    # move back onto the caller's graphs at both ends
    factors, leftover = _reattach(f, canon, factors, leftover)
    result = PrimeFactorization(f, tuple(factors), tuple(tags), leftover)
    if result.recompose() != f:  # pragma: no cover - guarded invariant
        raise AssertionError("prime factorization does not recompose to its input")
    return result


def _reattach(f: Rel, canon: Rel, factors: list[Rel], leftover: Rel | None):
    """Swap the canonical end graphs for the caller's graphs."""
    dom_order, cod_order = path_order(f.dom), path_order(f.cod)
    from_dom = Rel.from_images(f.dom, canonical_path(f.dom.n - 1),
                               [dom_order.index(v) for v in f.dom.vertices])
    to_cod = Rel.from_images(canonical_path(f.cod.n - 1), f.cod, list(cod_order))
    if not factors:
        if leftover is None:
            return [], None
        return [], compose_all(to_cod, leftover, from_dom)
    factors = list(factors)
    factors[0] = compose(to_cod, factors[0])
    if leftover is not None:
        leftover = compose(leftover, from_dom)
    else:
        factors[-1] = compose(factors[-1], from_dom)
    return factors, leftover


# ---------------------------------------------------------------------------
# clique functor

def membership_morphism(p: Path) -> Rel:
    """Relation from the clique path of ``p`` to ``p`` relating each clique to its members."""
    cp = clique_path(p)
    pairs = [(v, k) for k, clique in enumerate(cp.graph.labels) for v in clique]
    return Rel.from_pairs(cp.graph, p.graph, pairs)


def clique_functor(r: Rel) -> Rel:
    """Function between clique paths sending a clique ``X`` to its image."""
    if not is_morphism(r):
        raise PathMorphismError("the clique functor acts on co-bijective edge-preserving relations")
    dom_path, cod_path = Path.of(r.dom), Path.of(r.cod)
    cdom, ccod = clique_path(dom_path), clique_path(cod_path)
    index = {c: k for k, c in enumerate(ccod.graph.labels)}
    cols = r.cols
    images = []
    for clique in cdom.graph.labels:
        img = 0
        for v in clique:
            img |= cols[v]
        images.append(index[frozenset(bits(img))])
    return Rel.from_images(cdom.graph, ccod.graph, images)


# ---------------------------------------------------------------------------
# subfactor constructions against tangled morphisms

def _interval_mask(order: Sequence[int], a: int, b: int) -> int:
    i, j = sorted((order.index(a), order.index(b)))
    return mask_of(order[i:j + 1])


def _image_of_mask(t: Rel, mask: int) -> int:
    cols, out = t.cols, 0
    for v in bits(mask):
        out |= cols[v]
    return out


def _verified_subfactor(left: Rel, m_cols: Sequence[int], t: Rel) -> Rel:
    rows = [0] * left.dom.n
    for q, c in enumerate(m_cols):
        for y in bits(c):
            rows[y] |= 1 << q
    m = Rel(t.dom, left.dom, tuple(rows))
    if not is_morphism(m):
        raise ConstructionFailed("constructed subfactor is not a co-bijective edge-preserving relation")
    if not compose(left, m) <= t:
        raise ConstructionFailed("constructed subfactor violates the inclusion")
    return m


def _require_tangled(t: Rel) -> None:
    if not is_tangled(t):
        raise PathMorphismError("right-hand morphism is not tangled")


def _snake_zones(s: Rel, t: Rel) -> Rel:
    """Zone-based construction of ``m`` with ``s∘m ⊆ t`` (may fail when the middle run is one edge)."""
    if s.cod != t.cod:
        raise PathMorphismError("snake and tangled morphism need the same codomain")
    if not (is_function(s) and is_edge_injective(s)) or turning_number(s) != 2:
        raise PathMorphismError("first argument is not a snake")
    if not is_proper(s):
        raise PathMorphismError("improper snakes factor through hooks; subfactor the hooks instead")
    _require_tangled(t)
    s_order, q_order = path_order(s.dom), path_order(t.dom)
    svals = [s.function_values()[v] for v in s_order]
    (a0, b0), (a1, b1), (a2, b2) = _runs(svals)
    runs_pos = {"-": range(a0, b0 + 1), "0": range(a1, b1 + 1), "+": range(a2, b2 + 1)}
    run_vertices = {k: [s_order[i] for i in rng] for k, rng in runs_pos.items()}
    r_plus = svals[a1]   # value at S_0 ∩ S_-
    r_minus = svals[b1]  # value at S_0 ∩ S_+
    s0_image = mask_of(svals[i] for i in runs_pos["0"])

    tcols = t.cols
    at_plus = [q for q in q_order if tcols[q] == 1 << r_plus]
    at_minus = [q for q in q_order if tcols[q] == 1 << r_minus]
    anchors = at_plus + at_minus

    def covers(q: int, q2: int) -> bool:
        return s0_image & ~_image_of_mask(t, _interval_mask(q_order, q, q2)) == 0

    zone0 = {q for q in q_order if all(covers(q, q2) for q2 in anchors)}

    def half_open_free(q: int, q2: int) -> bool:
        seg = _interval_mask(q_order, q, q2) & ~(1 << q)
        return not any(v in zone0 for v in bits(seg))

    zone_plus = {q for q in q_order if any(half_open_free(q, q2) for q2 in at_plus)}
    zone_minus = {q for q in q_order if any(half_open_free(q, q2) for q2 in at_minus)}

    def pull(run: str, img: int) -> int:
        return mask_of(v for v in run_vertices[run] if s.cols[v] & img)

    s_minus_0 = 1 << run_vertices["0"][0]
    s_plus_0 = 1 << run_vertices["0"][-1]
    m_cols = []
    for q in t.dom.vertices:
        inm, in0, inp = q in zone_minus, q in zone0, q in zone_plus
        if inm and in0 and inp:
            m_cols.append(mask_of(run_vertices["0"]))
        elif inm and in0:
            m_cols.append(s_minus_0)
        elif inp and in0:
            m_cols.append(s_plus_0)
        elif inp:
            m_cols.append(pull("+", tcols[q]))
        elif inm:
            m_cols.append(pull("-", tcols[q]))
        elif in0:
            m_cols.append(pull("0", tcols[q]))
        else:
            raise ConstructionFailed(f"vertex {q} lies in none of the three zones")
    return _verified_subfactor(s, m_cols, t)


def _minimal_coinjective_window(t: Rel, target: int) -> tuple[int, int]:
    """Shortest (then leftmost) order interval whose singleton images cover ``target``."""
    order = path_order(t.dom)
    tcols = t.cols
    best = None
    n = len(order)
    for i in range(n):
        got = 0
        for j in range(i, n):
            c = tcols[order[j]]
            if c.bit_count() == 1 and c & target:
                got |= c
            if got == target:
                if best is None or j - i < best[1] - best[0]:
                    best = (i, j)
                break
    if best is None:
        raise PathMorphismError("no window of the domain covers the required vertices")
    return best


def _hook_windows(h: Rel, t: Rel) -> Rel:
    if h.cod != t.cod:
        raise PathMorphismError("hook and tangled morphism need the same codomain")
    if not (is_function(h) and is_edge_injective(h)) or turning_number(h) != 1:
        raise PathMorphismError("first argument is not a hook")
    if is_simple(h):
        raise PathMorphismError("hook is simple; use the simple-morphism subfactor")
    _require_tangled(t)
    h_order, q_order = path_order(h.dom), path_order(t.dom)
    hvals_full = h.function_values()
    hvals = [hvals_full[v] for v in h_order]
    (a0, b0), (a1, b1) = _runs(hvals)
    run_a = [h_order[i] for i in range(a0, b0 + 1)]
    run_b = [h_order[i] for i in range(a1, b1 + 1)]
    full = h.cod.full
    if mask_of(hvals_full[v] for v in run_a) == full:
        h_plus, h_minus = run_a, run_b
        turn_vertex = run_a[-1]
    else:
        h_plus, h_minus = run_b, run_a
        turn_vertex = run_b[0]
    e = hvals_full[turn_vertex]
    minus_vals = [hvals_full[v] for v in h_minus]
    r = minus_vals[0] if minus_vals[-1] == e else minus_vals[-1]
    minus_image = mask_of(minus_vals)

    i, j = _minimal_coinjective_window(t, minus_image)
    tcols = t.cols
    first, last = q_order[i], q_order[j]
    if tcols[first] == 1 << r:
        q, d = first, last
    else:
        q, d = last, first
    pos = {v: k for k, v in enumerate(q_order)}

    def between(x: int, a: int, b: int) -> bool:
        return min(pos[a], pos[b]) <= pos[x] <= max(pos[a], pos[b])

    choice = None
    for q2 in q_order:
        if not tcols[q2] >> r & 1:
            continue
        for d2 in q_order:
            if d2 != q2 and tcols[d2] >> e & 1 and between(d2, q, q2) and between(q2, d, d2):
                choice = (q2, d2)
                break
        if choice:
            break
    if choice is None:
        raise ConstructionFailed("tangled witnesses for the hook were not found")
    q2, d2 = choice
    minus_at = {hvals_full[v]: v for v in h_minus}
    plus_at = {hvals_full[v]: v for v in h_plus}
    near_d = _interval_mask(q_order, d, d2) & ~(1 << d2)
    m_cols = []
    for p in t.dom.vertices:
        if p == q2:
            m_cols.append(1 << minus_at[r])
        elif p == d2:
            m_cols.append(1 << minus_at[e])
        elif near_d >> p & 1:
            m_cols.append(mask_of(minus_at[y] for y in bits(tcols[p]) if y in minus_at))
        else:
            m_cols.append(mask_of(plus_at[y] for y in bits(tcols[p])))
    return _verified_subfactor(h, m_cols, t)


def _simple_split(p: Rel) -> tuple[int, ...] | None:
    """Vertices ``v`` with ``p`` a bijective function off ``v``."""
    cols = p.cols
    out = []
    for v in p.dom.vertices:
        rest = [c for x, c in enumerate(cols) if x != v]
        if all(c.bit_count() == 1 for c in rest) and mask_of(c.bit_length() - 1 for c in rest) == p.cod.full \
                and len(rest) == p.cod.n:
            out.append(v)
    return tuple(out)


def _proper_simple_merge(p: Rel, t: Rel) -> Rel:
    if p.cod != t.cod:
        raise PathMorphismError("simple morphism and tangled morphism need the same codomain")
    if not is_morphism(p) or not is_simple(p) or not is_proper(p):
        raise PathMorphismError("first argument is not a proper simple morphism")
    _require_tangled(t)
    ends = {v for v in p.dom.vertices if p.dom.order(v) <= 1}
    candidates = [v for v in _simple_split(p) if v not in ends
                  and _image_of_mask(p, p.dom.rows[v]).bit_count() == 2]
    if not candidates:
        raise PathMorphismError("simple morphism has no interior merge vertex")
    v = candidates[0]
    edge = _image_of_mask(p, p.dom.rows[v])
    m_cols = []
    for q, c in enumerate(t.cols):
        if c == edge:
            m_cols.append(1 << v)
        else:
            m_cols.append(preimage(p, c) & ~(1 << v))
    return _verified_subfactor(p, m_cols, t)


def _improper_simple_fold(p: Rel, t2: Rel) -> Rel:
    if p.cod != t2.cod:
        raise PathMorphismError("simple morphism and target need the same codomain")
    if not is_morphism(p) or not is_simple(p) or is_proper(p):
        raise PathMorphismError("first argument is not an improper simple morphism")
    if p.cod.n < 2:
        raise PathMorphismError("codomain needs at least one edge")
    ends = [v for v in p.dom.vertices if p.dom.order(v) <= 1]
    splits = set(_simple_split(p))
    e = next((v for v in ends if v in splits), None)
    if e is None:
        raise PathMorphismError("no end of the domain can be split off")
    s_vertex = next(w for w in bits(p.dom.rows[e]) if w != e)
    r = p.cols[s_vertex].bit_length() - 1
    other = next(w for w in bits(p.cod.rows[r]) if w != r)
    edge = (1 << r) | (1 << other)
    q_order = path_order(t2.dom)
    i, j = _minimal_coinjective_window(t2, edge)
    tcols = t2.cols
    q_e = q_order[i] if tcols[q_order[i]] == 1 << r else q_order[j]
    interior = q_order[i + 1:j]
    if len(interior) < 2:
        raise ConstructionFailed("target is not a composite of two edge-witnessing morphisms")
    q_e_inner = interior[0] if q_e == q_order[i] else interior[-1]
    interior_set = set(interior)
    m_cols = []
    for q in t2.dom.vertices:
        if q == q_e_inner:
            m_cols.append(1 << e)
        elif q in interior_set:
            m_cols.append(1 << s_vertex)
        else:
            m_cols.append(preimage(p, tcols[q]) & ~(1 << e))
    return _verified_subfactor(p, m_cols, t2)


@dataclass(frozen=True)
class Subfactor:
    """A relation ``m`` with ``left∘m ⊆ target`` and how it was obtained.

    ``method`` is ``"construction"`` when the explicit zone/window recipe
    succeeded and ``"search"`` when the exact lifting search was needed.
    """

    m: Rel
    method: str


def _with_fallback(build, left: Rel, t: Rel, allow_search: bool) -> Subfactor:
    try:
        return Subfactor(build(left, t), "construction")
    except ConstructionFailed:
        if not allow_search:
            raise
    m = find_lift(left, t)
    if m is None:
        raise ConstructionFailed("no relation m with left∘m ⊆ target exists")
    return Subfactor(m, "search")


def snake_subfactor_detailed(s: Rel, t: Rel, allow_search: bool = True) -> Subfactor:
    return _with_fallback(_snake_zones, s, t, allow_search)


def hook_subfactor_detailed(h: Rel, t: Rel, allow_search: bool = True) -> Subfactor:
    return _with_fallback(_hook_windows, h, t, allow_search)


def proper_simple_subfactor_detailed(p: Rel, t: Rel, allow_search: bool = True) -> Subfactor:
    return _with_fallback(_proper_simple_merge, p, t, allow_search)


def improper_simple_subfactor_detailed(p: Rel, t2: Rel, allow_search: bool = True) -> Subfactor:
    """``t2`` is expected to be a composite of two edge-witnessing morphisms."""
    return _with_fallback(_improper_simple_fold, p, t2, allow_search)


def snake_subfactor(s: Rel, t: Rel, allow_search: bool = True) -> Rel:
    """``m`` with ``s∘m ⊆ t`` for a snake ``s`` and tangled ``t``."""
    return snake_subfactor_detailed(s, t, allow_search).m


def hook_subfactor(h: Rel, t: Rel, allow_search: bool = True) -> Rel:
    """``m`` with ``h∘m ⊆ t`` for a non-simple hook ``h`` and tangled ``t``."""
    return hook_subfactor_detailed(h, t, allow_search).m


def proper_simple_subfactor(p: Rel, t: Rel, allow_search: bool = True) -> Rel:
    return proper_simple_subfactor_detailed(p, t, allow_search).m


def improper_simple_subfactor(p: Rel, t2: Rel, allow_search: bool = True) -> Rel:
    return improper_simple_subfactor_detailed(p, t2, allow_search).m


SUBFACTOR_KINDS = ("snake", "hook", "proper-simple", "improper-simple")


def subfactor_kind(factor: Rel) -> str:
    """Which subfactor recipe applies to a prime factor."""
    if is_simple(factor):
        return "proper-simple" if is_proper(factor) else "improper-simple"
    tag = classify(factor).tag
    if tag is Tag.PROPER_SNAKE:
        return "snake"
    if tag is Tag.HOOK:
        return "hook"
    raise PathMorphismError(f"no subfactor recipe for {tag.value}")


def left_subfactor_detailed(factor: Rel, t: Rel, kind: str | None = None,
                            allow_search: bool = True) -> Subfactor:
    kind = kind or subfactor_kind(factor)
    builders = {
        "snake": snake_subfactor_detailed,
        "hook": hook_subfactor_detailed,
        "proper-simple": proper_simple_subfactor_detailed,
        "improper-simple": improper_simple_subfactor_detailed,
    }
    if kind not in builders:
        raise PathMorphismError(f"unknown subfactor kind {kind!r}")
    return builders[kind](factor, t, allow_search)


def left_subfactor(factor: Rel, t: Rel, kind: str | None = None) -> Rel:
    """Dispatch to the matching subfactor recipe for a prime factor."""
    return left_subfactor_detailed(factor, t, kind).m


# ---------------------------------------------------------------------------
# tangled morphism synthesis

@lru_cache(maxsize=None)
def _base_tangled(n: int) -> Rel:
    if n == 0:
        return Rel.identity(canonical_path(0))
    return Rel.from_images(canonical_path(2), canonical_path(1), [[0], [0, 1], [1]])


def _stutter(cols: list[int], rng: random.Random, count: int) -> list[int]:
    """Duplicate ``count`` randomly chosen vertices in place."""
    cols = list(cols)
    for _ in range(count):
        k = rng.randrange(len(cols))
        cols.insert(k, cols[k])
    return cols


def _tangled_cols(n: int, seed: int, stutter: bool) -> list[int]:
    if n <= 1:
        return list(_base_tangled(n).cols)
    rng = random.Random(f"build_tangled:{n}:{seed}")
    lower = _tangled_cols(n - 1, rng.getrandbits(64) if stutter else seed, stutter)
    middle = _tangled_cols(n - 2, rng.getrandbits(64) if stutter else seed, stutter)
    upper = _tangled_cols(n - 1, rng.getrandbits(64) if stutter else seed, stutter)
    # lower covers p_0..p_{n-1}, its last vertex sits over p_{n-1}
    # middle covers p_1..p_{n-1}, reversed so it starts over p_{n-1}
    # upper covers p_1..p_n and starts over p_1
    left = list(lower)
    mid = [c << 1 for c in reversed(middle)]
    right = [c << 1 for c in upper]
    left = _pad_towards(left, 1 << (n - 1), at_end=True)
    mid = _pad_towards(mid, 1 << (n - 1), at_end=False)
    mid = _pad_towards(mid, 1 << 1, at_end=True)
    right = _pad_towards(right, 1 << 1, at_end=False)
    glue_top = (1 << (n - 1)) | (1 << n)
    glue_bottom = 0b11
    cols = left + [glue_top] + mid + [glue_bottom] + right
    if stutter:
        cols = _stutter(cols, rng, rng.randrange(3))
    return cols


def _pad_towards(cols: list[int], want: int, at_end: bool) -> list[int]:
    """Append up to two vertices so the chosen end sits exactly over ``want``."""
    end = cols[-1] if at_end else cols[0]
    if end == want:
        return cols
    extra = [want] if end & want else [end | want, want]
    return cols + extra if at_end else list(reversed(extra)) + cols


def build_tangled(target: int | Graph, seed: int = 0, stutter: bool = True) -> Rel:
    """A tangled morphism onto ``P_n`` built by gluing smaller tangled pieces.

    The domain is assembled as lower piece, a glue vertex over the top
    edge, the reversed interior piece, a glue vertex over the bottom edge,
    and the upper piece.  The seed only drives optional duplication of a few
    vertices, which keeps every output tangled while varying its shape.
    """
    n = target if isinstance(target, int) else path_length(target)
    if n < 0:
        raise PathMorphismError("target length must be non-negative")
    from .limits import check_vertex_budget

    check_vertex_budget(_predicted_size(n), f"tangled morphism onto P_{n}")
    cols = _tangled_cols(n, seed, stutter)
    dom, cod = canonical_path(len(cols) - 1), canonical_path(n)
    rows = [0] * (n + 1)
    for x, c in enumerate(cols):
        for y in bits(c):
            rows[y] |= 1 << x
    out = Rel(dom, cod, tuple(rows))
    if not isinstance(target, int):
        out = compose(Rel.from_images(cod, target, list(path_order(target))), out)
    if not is_morphism(out) or not is_tangled(out):
        raise AssertionError("tangled synthesis produced an invalid relation")
    return out


def _predicted_size(n: int) -> int:
    sizes = [1, 3]
    while len(sizes) <= n:
        k = len(sizes)
        sizes.append(2 * sizes[k - 1] + sizes[k - 2] + 8)
    return sizes[n]


# ---------------------------------------------------------------------------
# exact lifting search

def find_lift(left: Rel, t: Rel, functions_only: bool = False) -> Rel | None:
    """Some morphism ``m`` with ``left∘m ⊆ t``, or ``None`` if there is none.

    ``left`` goes from a path ``S`` to ``R`` and ``t`` from a path ``Q`` to
    ``R``.  Walking along ``Q``, the image of ``m`` moves between
    neighbouring cliques of ``S`` and the singletons it has hit so far form
    an interval, so a dynamic programme over (clique, covered interval)
    decides the question exactly.
    """
    if left.cod != t.cod:
        raise PathMorphismError("both relations need the same codomain")
    s_order, q_order = path_order(left.dom), path_order(t.dom)
    if s_order is None or q_order is None:
        raise PathMorphismError("lifting is defined between paths")
    size = len(s_order)
    # cliques as (lo, hi) positions in the order of S
    cliques = [(i, i) for i in range(size)]
    if not functions_only:
        cliques += [(i, i + 1) for i in range(size - 1)]
    lcols = left.cols
    clique_image = {}
    for lo, hi in cliques:
        img = 0
        for k in range(lo, hi + 1):
            img |= lcols[s_order[k]]
        clique_image[lo, hi] = img
    tcols = t.cols
    allowed = [[c for c in cliques if clique_image[c] & ~tcols[q] == 0] for q in q_order]

    def step_ok(a, b) -> bool:
        return max(a[1], b[1]) - min(a[0], b[0]) <= 1

    def cover(state_cov, c):
        if c[0] != c[1]:
            return state_cov
        if state_cov is None:
            return (c[0], c[0])
        lo, hi = state_cov
        return (min(lo, c[0]), max(hi, c[0]))

    layers = []
    current = {}
    for c in allowed[0]:
        current[(c, cover(None, c))] = None
    layers.append(current)
    for k in range(1, len(q_order)):
        nxt = {}
        for (c, cov) in current:
            for c2 in allowed[k]:
                if step_ok(c, c2):
                    key = (c2, cover(cov, c2))
                    if key not in nxt:
                        nxt[key] = (c, cov)
        if not nxt:
            return None
        layers.append(nxt)
        current = nxt
    goal = next((key for key in current if key[1] == (0, size - 1)), None)
    if goal is None:
        return None
    chosen = [goal[0]]
    key = goal
    for k in range(len(q_order) - 1, 0, -1):
        key = layers[k][key]
        chosen.append(key[0])
    chosen.reverse()
    rows = [0] * left.dom.n
    for q, (lo, hi) in zip(q_order, chosen):
        for pos in range(lo, hi + 1):
            rows[s_order[pos]] |= 1 << q
    m = Rel(t.dom, left.dom, tuple(rows))
    assert is_morphism(m) and compose(left, m) <= t
    return m
