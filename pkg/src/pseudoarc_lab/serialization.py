"""JSON and DOT encodings of the library objects.

Every JSON document is a dict with a ``"kind"`` field.  Graphs are stored as
a vertex count plus an edge list, relations as ``[cod, dom]`` pairs together
with both graphs.  Vertex labels are presentation only and are not stored.

``dumps`` produces canonical text (sorted keys, no insignificant
whitespace), so byte equality of two dumps is equality of the objects and
``content_hash`` is stable across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

from .fraisse import (
    Absorption,
    BackAndForthCertificate,
    Digraph,
    EndMove,
    Join,
    PeelStep,
    TangledTower,
)
from .graph_core import Graph, Partition
from .path_morphisms import PrimeFactorization, Tag
from .relations import Rel
from .tower import Tower

FORMAT_VERSION = 1


class SerializationError(ValueError):
    """Malformed or unsupported JSON document."""


# ---------------------------------------------------------------------------
# encoders

def graph_to_json(g: Graph) -> dict:
    return {"kind": "graph", "vertices": g.n, "edges": [list(e) for e in g.edges()]}


def rel_to_json(r: Rel) -> dict:
    return {"kind": "relation", "dom": graph_to_json(r.dom), "cod": graph_to_json(r.cod),
            "pairs": [list(p) for p in sorted(r.pairs())]}


def _pairs(r: Rel) -> list:
    return [list(p) for p in sorted(r.pairs())]


def tower_to_json(t: Tower) -> dict:
    return {"kind": "tower", "levels": [graph_to_json(g) for g in t.levels],
            "bonds": [_pairs(b) for b in t.bonds],
            "require_edge_witnessing": t.require_edge_witnessing}


def to_json(obj: Any) -> dict:
    """Encode a supported object as a JSON-ready dict."""
    if isinstance(obj, Graph):
        return graph_to_json(obj)
    if isinstance(obj, Rel):
        return rel_to_json(obj)
    if isinstance(obj, TangledTower):
        return {"kind": "tangled_tower", "tower": tower_to_json(obj.tower),
                "tangle_witnesses": list(obj.tangle_witnesses), "seed": obj.seed,
                "depth": obj.depth}
    if isinstance(obj, Tower):
        return tower_to_json(obj)
    if isinstance(obj, Digraph):
        return {"kind": "digraph", "path": graph_to_json(obj.path), "pairs": _pairs(obj.rel)}
    if isinstance(obj, Partition):
        return {"kind": "partition", "base": graph_to_json(obj.base),
                "blocks": [sorted(b) for b in obj.blocks]}
    if isinstance(obj, EndMove):
        return {"kind": "end_move", "partition": to_json(obj.partition),
                "choices": [list(c) for c in obj.choices]}
    if isinstance(obj, Join):
        return {"kind": "join", "f": rel_to_json(obj.f), "g": rel_to_json(obj.g), "c": to_json(obj.c)}
    if isinstance(obj, PrimeFactorization):
        return {"kind": "factorization", "source": rel_to_json(obj.source),
                "factors": [rel_to_json(f) for f in obj.factors],
                "tags": [t.value for t in obj.tags],
                "isomorphism": None if obj.isomorphism is None else rel_to_json(obj.isomorphism)}
    if isinstance(obj, Absorption):
        return {"kind": "absorption", "level": obj.level, "rel": rel_to_json(obj.rel),
                "method": obj.method,
                "steps": [[s.factor_index, s.kind, s.level, s.method] for s in obj.steps]}
    if isinstance(obj, BackAndForthCertificate):
        return {"kind": "back_and_forth_certificate",
                "forward": [rel_to_json(r) for r in obj.forward],
                "backward": [rel_to_json(r) for r in obj.backward],
                "p_levels": list(obj.p_levels), "q_levels": list(obj.q_levels),
                "p_depth": obj.p_depth, "q_depth": obj.q_depth,
                "methods": list(obj.methods)}
    raise SerializationError(f"no JSON encoding for {type(obj).__name__}")


# ---------------------------------------------------------------------------
# decoders

def _need(doc: dict, kind: str) -> dict:
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        got = doc.get("kind") if isinstance(doc, dict) else type(doc).__name__
        raise SerializationError(f"expected a {kind!r} document, got {got!r}")
    return doc


def graph_from_json(doc: dict) -> Graph:
    _need(doc, "graph")
    try:
        return Graph.from_edges(int(doc["vertices"]), [tuple(e) for e in doc["edges"]])
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"bad graph document: {exc}") from exc


def _rel(dom: Graph, cod: Graph, pairs) -> Rel:
    try:
        return Rel.from_pairs(dom, cod, [tuple(p) for p in pairs])
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"bad relation pairs: {exc}") from exc


def rel_from_json(doc: dict) -> Rel:
    _need(doc, "relation")
    try:
        return _rel(graph_from_json(doc["dom"]), graph_from_json(doc["cod"]), doc["pairs"])
    except KeyError as exc:
        raise SerializationError(f"relation document lacks {exc}") from exc


def tower_from_json(doc: dict) -> Tower:
    _need(doc, "tower")
    levels = [graph_from_json(g) for g in doc["levels"]]
    if len(doc["bonds"]) != len(levels) - 1:
        raise SerializationError("need one bond between consecutive levels")
    bonds = [_rel(levels[k + 1], levels[k], pairs) for k, pairs in enumerate(doc["bonds"])]
    return Tower(tuple(levels), tuple(bonds), bool(doc.get("require_edge_witnessing", True)))


def pair_to_json(p: Tower | TangledTower, q: Tower | TangledTower) -> dict:
    """Bundle two towers so one file can accompany a back-and-forth certificate."""
    return {"kind": "tower_pair", "p": to_json(p), "q": to_json(q)}


def from_json(doc: dict) -> Any:
    """Decode any document produced by :func:`to_json`."""
    if not isinstance(doc, dict) or "kind" not in doc:
        raise SerializationError("document has no 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "graph":
            return graph_from_json(doc)
        if kind == "relation":
            return rel_from_json(doc)
        if kind == "tower":
            return tower_from_json(doc)
        if kind == "tangled_tower":
            return TangledTower(tower_from_json(doc["tower"]), tuple(doc["tangle_witnesses"]), doc.get("seed"))
        if kind == "digraph":
            path = graph_from_json(doc["path"])
            return Digraph(path, _rel(path, path, doc["pairs"]))
        if kind == "partition":
            return Partition(graph_from_json(doc["base"]), tuple(frozenset(b) for b in doc["blocks"]))
        if kind == "end_move":
            part = from_json(doc["partition"])
            return EndMove(part, part.blocks, tuple(tuple(c) for c in doc["choices"]))
        if kind == "join":
            return Join(rel_from_json(doc["f"]), rel_from_json(doc["g"]), from_json(doc["c"]))
        if kind == "factorization":
            iso = doc.get("isomorphism")
            return PrimeFactorization(rel_from_json(doc["source"]),
                                      tuple(rel_from_json(f) for f in doc["factors"]),
                                      tuple(Tag(t) for t in doc["tags"]),
                                      None if iso is None else rel_from_json(iso))
        if kind == "absorption":
            steps = tuple(PeelStep(int(a), str(b), int(c), str(d)) for a, b, c, d in doc.get("steps", []))
            return Absorption(int(doc["level"]), rel_from_json(doc["rel"]), doc["method"], steps)
        if kind == "tower_pair":
            return from_json(doc["p"]), from_json(doc["q"])
        if kind == "back_and_forth_certificate":
            return BackAndForthCertificate(
                tuple(rel_from_json(r) for r in doc["forward"]),
                tuple(rel_from_json(r) for r in doc["backward"]),
                tuple(doc["p_levels"]), tuple(doc["q_levels"]),
                int(doc["p_depth"]), int(doc["q_depth"]), tuple(doc.get("methods", ())))
    except KeyError as exc:
        raise SerializationError(f"{kind} document lacks {exc}") from exc
    except SerializationError:
        raise
    except (TypeError, ValueError) as exc:
        raise SerializationError(f"bad {kind} document: {exc}") from exc
    raise SerializationError(f"unknown kind {kind!r}")


# ---------------------------------------------------------------------------
# canonical text and hashing

def canonical_text(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def content_hash(doc: dict) -> str:
    """SHA-256 of the canonical text, ignoring any embedded ``"hash"`` field."""
    body = {k: v for k, v in doc.items() if k != "hash"}
    return hashlib.sha256(canonical_text(body).encode()).hexdigest()


def stamp(doc: dict) -> dict:
    """Copy of ``doc`` with its content hash and format version embedded."""
    body = {k: v for k, v in doc.items() if k != "hash"}
    body["format"] = FORMAT_VERSION
    body["hash"] = content_hash(body)
    return body


def verify_stamp(doc: dict) -> bool:
    return "hash" in doc and doc["hash"] == content_hash(doc)


def dumps(obj: Any) -> str:
    return canonical_text(to_json(obj))


def loads(text: str) -> Any:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SerializationError(f"not valid JSON: {exc}") from exc
    return from_json(doc)


# ---------------------------------------------------------------------------
# DOT export

def _dot_graph_edges(prefix: str, g: Graph, indent: str = "  ") -> list[str]:
    return [f'{indent}"{prefix}{a}" -- "{prefix}{b}" [dir=none];' for a, b in g.edges()]


def to_dot(obj: Any) -> str:
    """Graphviz text: layered for towers, bipartite for relations."""
    if isinstance(obj, TangledTower):
        obj = obj.tower
    if isinstance(obj, EndMove):
        obj = obj.partition
    if isinstance(obj, Join):
        obj = obj.c
    if isinstance(obj, Absorption):
        obj = obj.rel
    lines: list[str]
    if isinstance(obj, Graph):
        lines = ["graph G {"]
        lines += [f'  "v{v}";' for v in obj.vertices]
        lines += _dot_graph_edges("v", obj)
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(obj, Tower):
        lines = ["digraph Tower {", "  rankdir=TB;", "  edge [arrowhead=none];"]
        for k, g in enumerate(obj.levels):
            lines.append(f"  subgraph cluster_level{k} {{")
            lines.append(f'    label="level {k}"; rank=same;')
            lines += [f'    "L{k}_{v}";' for v in g.vertices]
            lines += [f'    "L{k}_{a}" -> "L{k}_{b}" [style=bold, constraint=false];' for a, b in g.edges()]
            lines.append("  }")
        for k, bond in enumerate(obj.bonds):
            for y, x in sorted(bond.pairs()):
                lines.append(f'  "L{k}_{y}" -> "L{k + 1}_{x}" [style=dashed];')
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(obj, Digraph):
        lines = ["digraph D {"]
        lines += [f'  "v{v}";' for v in obj.path.vertices]
        lines += [f'  "v{a}" -> "v{b}" [dir=none, style=bold];' for a, b in obj.path.edges()]
        lines += [f'  "v{x}" -> "v{y}" [color=blue];' for y, x in sorted(obj.rel.pairs())]
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(obj, Rel):
        lines = ["digraph R {", "  rankdir=LR;"]
        lines.append('  subgraph cluster_dom { label="domain";')
        lines += [f'    "d{x}";' for x in obj.dom.vertices]
        lines += [f'    "d{a}" -> "d{b}" [dir=none, style=dotted];' for a, b in obj.dom.edges()]
        lines.append("  }")
        lines.append('  subgraph cluster_cod { label="codomain";')
        lines += [f'    "c{y}";' for y in obj.cod.vertices]
        lines += [f'    "c{a}" -> "c{b}" [dir=none, style=dotted];' for a, b in obj.cod.edges()]
        lines.append("  }")
        lines += [f'  "d{x}" -> "c{y}";' for y, x in sorted(obj.pairs())]
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(obj, Partition):
        lines = ["graph P {"]
        for k, blk in enumerate(obj.blocks):
            lines.append(f'  subgraph cluster_block{k} {{ label="block {k}";')
            lines += [f'    "v{v}";' for v in sorted(blk)]
            lines.append("  }")
        lines += _dot_graph_edges("v", obj.base)
        lines.append("}")
        return "\n".join(lines) + "\n"
    if isinstance(obj, PrimeFactorization):
        # factors[0] is outermost: its codomain is the top of the chain
        chain = list(obj.factors) + ([obj.isomorphism] if obj.isomorphism is not None else [])
        lines = ["digraph F {", "  rankdir=TB;", "  edge [arrowhead=none];"]
        graphs = [chain[0].cod] + [f.dom for f in chain] if chain else [obj.source.cod]
        for k, g in enumerate(graphs):
            lines.append(f'  subgraph cluster_stage{k} {{ label="stage {k}"; rank=same;')
            lines += [f'    "S{k}_{v}";' for v in g.vertices]
            lines += [f'    "S{k}_{a}" -> "S{k}_{b}" [style=bold, constraint=false];' for a, b in g.edges()]
            lines.append("  }")
        for k, f in enumerate(chain):
            lines += [f'  "S{k}_{y}" -> "S{k + 1}_{x}" [style=dashed];' for y, x in sorted(f.pairs())]
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise SerializationError(f"no DOT rendering for {type(obj).__name__}")
