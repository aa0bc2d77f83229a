"""Shared hypothesis strategies and brute-force oracles."""

from __future__ import annotations

import random

from hypothesis import settings, strategies as st

from pseudoarc_lab.graph_core import Graph, canonical_path
from pseudoarc_lab.path_morphisms import from_values
from pseudoarc_lab.relations import Rel

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@st.composite
def graphs(draw, max_n: int = 6):
    n = draw(st.integers(1, max_n))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=2 * n))
    return Graph.from_edges(n, [e for e in edges if e[0] != e[1]])


@st.composite
def relations(draw, dom: Graph | None = None, cod: Graph | None = None, max_n: int = 6):
    dom = dom if dom is not None else draw(graphs(max_n))
    cod = cod if cod is not None else draw(graphs(max_n))
    rows = tuple(draw(st.integers(0, dom.full)) for _ in cod.vertices)
    return Rel(dom, cod, rows)


def walk_values(rng: random.Random, dom_len: int, cod_len: int, steps=(-1, 0, 1)) -> list[int] | None:
    """A random walk on ``0..cod_len`` of ``dom_len + 1`` positions that visits every vertex."""
    for _ in range(200):
        v = rng.randrange(cod_len + 1)
        vals = [v]
        for _ in range(dom_len):
            opts = [v + s for s in steps if 0 <= v + s <= cod_len]
            v = rng.choice(opts)
            vals.append(v)
        if set(vals) == set(range(cod_len + 1)):
            return vals
    return None


@st.composite
def surjective_path_functions(draw, max_dom: int = 8, edge_injective: bool = False):
    """Surjective edge-preserving functions between canonical paths."""
    seed = draw(st.integers(0, 2**32))
    rng = random.Random(seed)
    while True:
        d = rng.randint(1, max_dom)
        c = rng.randint(0 if not edge_injective else 1, d)
        vals = walk_values(rng, d, c, (-1, 1) if edge_injective else (-1, 0, 1))
        if vals is not None:
            return from_values(vals, c)


def brute_compose(s: Rel, r: Rel) -> set:
    return {(z, x) for z in s.cod.vertices for x in r.dom.vertices
            if any(s.related(z, y) and r.related(y, x) for y in r.cod.vertices)}


def brute_demonic(s: Rel, r: Rel) -> set:
    out = set()
    for z in s.cod.vertices:
        for x in r.dom.vertices:
            img = {y for y in r.cod.vertices if r.related(y, x)}
            if img and all(s.related(z, y) for y in img):
                out.add((z, x))
    return out


def brute_codemonic(s: Rel, r: Rel) -> set:
    out = set()
    for z in s.cod.vertices:
        row = {y for y in s.dom.vertices if s.related(z, y)}
        for x in r.dom.vertices:
            if row and all(r.related(y, x) for y in row):
                out.add((z, x))
    return out


def path(n: int) -> Graph:
    return canonical_path(n)


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
