import random

import pytest
from hypothesis import given, settings, strategies as st

from pseudoarc_lab.graph_core import Graph, Path, canonical_path, path_order
from pseudoarc_lab.limits import ResourceLimitError
from pseudoarc_lab.path_morphisms import (
    InconclusiveSearch,
    PathMorphismError,
    Tag,
    build_tangled,
    canonicalize,
    classify,
    clique_functor,
    decompose_in_F,
    find_lift,
    from_values,
    is_prime_bruteforce,
    iter_morphisms,
    left_subfactor_detailed,
    make_hook,
    make_simple,
    make_snake,
    make_turn,
    membership_morphism,
    reversal,
    subfactor_kind,
    turning_number,
)
from pseudoarc_lab.relations import (
    Rel,
    check_morphism,
    compose,
    is_edge_witnessing,
    is_morphism,
    is_tangled,
)

from conftest import surjective_path_functions, walk_values


def test_constructors_have_their_shapes():
    assert classify(make_hook(1, 2)).tag is Tag.HOOK
    assert classify(make_hook(2, 2)).turning == 1
    snake = make_snake(2, 1, 2)
    assert classify(snake) == classify(from_values([0, 1, 2, 1, 2, 3], 3))
    assert classify(snake).tag is Tag.PROPER_SNAKE and turning_number(snake) == 2
    assert classify(make_turn()).tag is Tag.HOOK
    assert classify(make_simple(1, 0)).tag is Tag.SIMPLE
    assert classify(Rel.identity(canonical_path(3))).tag is Tag.ISOMORPHISM
    assert classify(reversal(3)).tag is Tag.ISOMORPHISM


def test_constructor_preconditions():
    with pytest.raises(PathMorphismError):
        make_hook(3, 2)
    with pytest.raises(PathMorphismError):
        make_snake(1, 1, 2)
    with pytest.raises(PathMorphismError):
        make_simple(2, 5)


def test_strict_simple_variant_is_not_a_morphism():
    assert is_morphism(make_simple(3, 1))
    assert not is_morphism(make_simple(3, 1, strict=True))


def test_simple_relation_formula():
    # codomain j relates to domain k when j = k <= m or j = k - 1 >= m
    r = make_simple(3, 1)
    expected = {(j, k) for j in range(4) for k in range(5) if (j == k <= 1) or (j == k - 1 >= 1)}
    assert set(r.pairs()) == expected


@given(surjective_path_functions(max_dom=6, edge_injective=True), st.data())
def test_turning_superadditive(f, data):
    rng = random.Random(data.draw(st.integers(0, 2**32)))
    c = f.cod.n - 1
    for _ in range(20):
        e = rng.randint(0, c)
        vals = walk_values(rng, c, e, (-1, 1)) if e else None
        if vals is not None:
            break
    else:
        return
    g = from_values(vals, e)
    assert turning_number(compose(g, f)) >= turning_number(g) + turning_number(f)


def test_turning_of_composite_examples():
    t = make_turn()
    assert turning_number(t) == 1
    tt = compose(t, from_values([0, 1, 2, 1, 0], 2))
    assert turning_number(tt) >= 2


@given(surjective_path_functions(max_dom=8))
def test_decomposition_recomposes_into_primes(f):
    fac = decompose_in_F(f)
    assert fac.recompose() == f
    assert set(fac.tags) <= {Tag.SIMPLE, Tag.HOOK, Tag.PROPER_SNAKE}
    for factor, tag in zip(fac.factors, fac.tags):
        assert is_morphism(factor)


def test_decomposition_exhaustive_small():
    for d in range(7):
        for c in range(d + 1):
            for f in iter_morphisms(d, c, functions_only=True):
                fac = decompose_in_F(f)
                assert fac.recompose() == f
                assert set(fac.tags) <= {Tag.SIMPLE, Tag.HOOK, Tag.PROPER_SNAKE}


def test_decomposition_of_regressing_end_run():
    # a clique functor image whose last run folds back inside the previous run
    f = from_values([2, 1, 0, 1, 2, 3, 4, 3, 2, 3], 4)
    assert decompose_in_F(f).recompose() == f


def test_decomposition_rejects_relations():
    with pytest.raises(PathMorphismError):
        decompose_in_F(membership_morphism(Path.of(canonical_path(2))))


@pytest.mark.parametrize("factor", [make_hook(1, 2), make_hook(2, 3), make_snake(2, 1, 2), make_simple(2, 1)])
def test_primes_are_prime(factor):
    assert is_prime_bruteforce(factor)


def test_composites_are_not_prime():
    f = compose(make_turn(), from_values([0, 1, 2, 1, 0], 2))
    assert not is_prime_bruteforce(f)
    assert not is_prime_bruteforce(Rel.identity(canonical_path(2)))


def test_prime_bound_is_reported():
    f = from_values([0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1], 1)
    with pytest.raises(InconclusiveSearch):
        is_prime_bruteforce(f, bound=4)


@given(st.integers(0, 4))
def test_membership_morphism(n):
    p = Path.of(canonical_path(n))
    mem = membership_morphism(p)
    assert mem.dom.n == 2 * n + 1
    rep = check_morphism(mem)
    assert rep.co_bijective and rep.edge_preserving
    if n:
        assert is_edge_witnessing(mem)


@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_clique_functor_is_natural(d, c, data):
    morphisms = list(iter_morphisms(d + c, c)) if d + c <= 4 else []
    if not morphisms:
        return
    m = data.draw(st.sampled_from(morphisms))
    fm = clique_functor(m)
    mem_dom = membership_morphism(Path.of(m.dom))
    mem_cod = membership_morphism(Path.of(m.cod))
    assert compose(m, mem_dom) == compose(mem_cod, fm)


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_build_tangled_small_targets(n):
    t = build_tangled(n, seed=n)
    assert is_tangled(t) and is_morphism(t) and is_edge_witnessing(t)


def test_build_tangled_is_deterministic_and_seed_sensitive():
    assert build_tangled(3, seed=11) == build_tangled(3, seed=11)
    shapes = {build_tangled(3, seed=s).dom.n for s in range(10)}
    assert len(shapes) > 1


def test_build_tangled_onto_relabelled_path():
    g = Graph.from_edges(3, [(0, 2), (2, 1)])
    t = build_tangled(g, seed=1)
    assert t.cod == g and is_tangled(t)


def test_build_tangled_respects_size_cap(monkeypatch):
    monkeypatch.setenv("PSEUDOARC_LAB_MAX_VERTICES", "50")
    with pytest.raises(ResourceLimitError):
        build_tangled(5)


def _factor_targets(kind, t):
    if kind == "improper-simple":
        return compose(t, membership_morphism(Path.of(t.dom)))
    return t


@settings(max_examples=40)
@given(st.integers(1, 3), st.integers(0, 5), st.data())
def test_subfactor_recipes(c, seed, data):
    t = build_tangled(c, seed=seed)
    d = data.draw(st.integers(c + 1, min(c + 4, 7)))
    factors = []
    for f in iter_morphisms(d, c):
        try:
            kind = subfactor_kind(f)
        except PathMorphismError:
            continue
        if kind == "hook" and d == c + 1:
            continue
        factors.append((f, kind))
    if not factors:
        return
    f, kind = data.draw(st.sampled_from(factors))
    target = _factor_targets(kind, t)
    sub = left_subfactor_detailed(f, target, kind)
    assert is_morphism(sub.m)
    assert compose(f, sub.m) <= target


def test_snake_subfactor_needs_tangled_target():
    with pytest.raises(PathMorphismError):
        left_subfactor_detailed(make_snake(2, 1, 2), Rel.identity(canonical_path(3)), "snake")


def test_find_lift_agrees_with_enumeration():
    t = build_tangled(1, seed=0)
    for d in range(4):
        for left in iter_morphisms(d, 1):
            lift = find_lift(left, t)
            exists = any(compose(left, m) <= t for m in iter_morphisms(t.dom.n - 1, d))
            assert (lift is not None) == exists
            if lift is not None:
                assert is_morphism(lift) and compose(left, lift) <= t


def test_canonicalize_relabels_along_order():
    g = Graph.from_edges(3, [(2, 0), (0, 1)])
    r = Rel.from_images(g, canonical_path(1), [0, 1, 0])
    c = canonicalize(r)
    order = path_order(g)
    assert c.function_values() == tuple(r.function_values()[v] for v in order)
