"""Command-line front end.

Objects live in a workspace directory as JSON files named by content hash.
Every command prints one JSON line on stdout.  Exit codes: 0 success or all
checks passed, 1 usage or parse error, 2 resource or depth limit, 3 failed
precondition or failed check.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path as FsPath
from typing import Any

from . import __version__
from .fraisse import (
    Absorption,
    BackAndForthCertificate,
    Digraph,
    EndMove,
    FraisseError,
    InsufficientDepth,
    Join,
    TangledTower,
    amalgamate_bruteforce,
    back_and_forth,
    digraph_join,
    end_move_detailed,
    generate_tangled_tower,
    is_bi_surjective,
    is_digraph_morphism,
    is_strictly_connected,
    random_strict_digraph,
    strictify,
    subabsorb,
    subfactorisability_bruteforce,
    _canonical_cols,
    _end_move_failures,
    _locate_level,
)
from .graph_core import GraphError, path_order
from .limits import ResourceLimitError
from .path_morphisms import (
    ConstructionFailed,
    PathMorphismError,
    PrimeFactorization,
    build_tangled,
    classify,
    decompose_in_F,
    is_prime_bruteforce,
    iter_morphisms,
    left_subfactor_detailed,
)
from .relations import Rel, RelationError, check_morphism, compose, is_morphism, is_tangled
from .rng import named_rng
from .serialization import (
    SerializationError,
    canonical_text,
    content_hash,
    from_json,
    pair_to_json,
    stamp,
    to_dot,
    to_json,
    verify_stamp,
)
from .tower import Tower, TowerError

EXIT_OK, EXIT_USAGE, EXIT_RESOURCE, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# workspace

@dataclass
class Workspace:
    root: FsPath

    @property
    def objects(self) -> FsPath:
        return self.root / "objects"

    def put(self, doc: dict) -> tuple[str, FsPath]:
        doc = stamp(doc)
        digest = doc["hash"]
        self.objects.mkdir(parents=True, exist_ok=True)
        path = self.objects / f"{digest}.json"
        path.write_text(canonical_text(doc) + "\n")
        return digest, path

    def log(self, entry: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        with open(self.root / "runlog.jsonl", "a") as fh:
            fh.write(canonical_text(entry) + "\n")

    def resolve(self, ref: str) -> FsPath:
        """A file path, or a (prefix of a) content hash stored in the workspace."""
        p = FsPath(ref)
        if p.exists():
            return p
        hits = sorted(self.objects.glob(f"{ref}*.json")) if self.objects.exists() else []
        if len(hits) == 1:
            return hits[0]
        if len(hits) > 1:
            raise UsageError(f"hash prefix {ref!r} is ambiguous")
        raise UsageError(f"no such object or file: {ref}")


def _load_doc(ws: Workspace, ref: str) -> dict:
    path = ws.resolve(ref)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SerializationError(f"cannot read {path}: {exc}") from exc
    if "hash" in doc and not verify_stamp(doc):
        raise SerializationError(f"{path}: embedded hash does not match the content")
    return doc


def _load(ws: Workspace, ref: str, *types) -> Any:
    obj = from_json(_load_doc(ws, ref))
    if types and not isinstance(obj, types):
        names = "/".join(t.__name__ for t in types)
        raise SerializationError(f"{ref}: expected {names}, got {type(obj).__name__}")
    return obj


def _emit(payload: dict) -> None:
    print(canonical_text(payload))


# ---------------------------------------------------------------------------
# verification shared by `check` and by `construct` before writing

def _tower_of(obj) -> Tower:
    return obj.tower if isinstance(obj, TangledTower) else obj


def verify(obj: Any, context: dict | None = None) -> dict:
    """Machine-readable report; key ``"pass"`` is the overall verdict."""
    context = context or {}
    if isinstance(obj, Rel):
        rep = check_morphism(obj).as_dict()
        rep["pass"] = rep["co_bijective"] and rep["edge_preserving"]
        return rep
    if isinstance(obj, TangledTower):
        comps = {f"{m}-{n}": is_tangled(obj.composite(m, n))
                 for m in range(obj.depth) for n in range(m + 1, obj.depth + 1)}
        return {"valid": True, "tangled_composites": comps, "pass": all(comps.values())}
    if isinstance(obj, Tower):
        return {"valid": True, "pass": True}
    if isinstance(obj, Digraph):
        strict = is_strictly_connected(obj.rel)
        return {"digraph": True, "strictly_connected": strict, "pass": True}
    if isinstance(obj, Join):
        checks = {
            "strictly_connected": is_strictly_connected(obj.c.rel),
            "bi_surjective": is_bi_surjective(obj.c.rel),
        }
        if "a" in context and "b" in context:
            checks["f_morphism"] = is_digraph_morphism(obj.f, obj.c, context["a"])
            checks["g_morphism"] = is_digraph_morphism(obj.g, obj.c, context["b"])
        return {"checks": checks, "pass": all(checks.values())}
    if isinstance(obj, EndMove):
        t = context.get("relation")
        if t is None:
            return {"pass": True, "note": "partition parsed; pass the source relation to re-check"}
        v = context["vertex"]
        order = path_order(t.dom)
        cols = _canonical_cols(t)
        pos = {x: i for i, x in enumerate(order)}
        blocks = [{pos[x] for x in blk} for blk in obj.blocks]
        fails = _end_move_failures(cols, len(path_order(t.cod)) - 1, pos[v], blocks)
        return {"failures": fails, "pass": not fails}
    if isinstance(obj, PrimeFactorization):
        exact = obj.recompose() == obj.source
        tags_ok = all(t.value in ("Simple", "Hook", "ProperSnake") for t in obj.tags)
        return {"recomposes": exact, "prime_tags": tags_ok, "pass": exact and tags_ok}
    if isinstance(obj, Absorption):
        t, m = context.get("tower"), context.get("morphism")
        if t is None or m is None:
            return {"pass": is_morphism(obj.rel), "note": "pass tower and morphism to re-check the inclusion"}
        tw = _tower_of(t)
        n = _locate_level(tw, m.cod, context.get("level"))
        ok = is_morphism(obj.rel) and compose(m, obj.rel) <= tw.composite(n, obj.level)
        return {"inclusion": ok, "pass": ok}
    if isinstance(obj, BackAndForthCertificate):
        p, q = context.get("p"), context.get("q")
        if p is None or q is None:
            raise UsageError("certificate checks need both tower files")
        checks = obj.checks(p, q)
        stamps_ok = obj.p_depth == _tower_of(p).depth and obj.q_depth == _tower_of(q).depth
        return {"checks": checks, "depth_stamps_match": stamps_ok,
                "pass": all(checks.values()) and stamps_ok}
    return {"pass": True, "note": f"no checks for {type(obj).__name__}"}


# ---------------------------------------------------------------------------
# commands

def cmd_gen(args, ws: Workspace) -> int:
    if args.kind == "tower":
        obj = generate_tangled_tower(args.depth, args.root, args.seed, stutter=not args.no_stutter)
    elif args.kind == "tangled":
        obj = build_tangled(args.target, seed=args.seed)
    elif args.kind == "digraph":
        obj = random_strict_digraph(args.path, args.seed)
    elif args.kind == "morphism":
        obj = _random_morphism(args.dom_len, args.cod_len, args.seed)
    else:  # pragma: no cover - argparse restricts the choices
        raise UsageError(f"unknown kind {args.kind}")
    return _store(ws, obj, args.log)


def _random_morphism(dom_len: int, cod_len: int, seed: int) -> Rel:
    """Uniform choice among all co-bijective edge-preserving relations ``P_dom -> P_cod``."""
    if dom_len > 7:
        raise ResourceLimitError("random morphisms enumerate all candidates; keep dom-len <= 7")
    pool = list(iter_morphisms(dom_len, cod_len))
    if not pool:
        raise FraisseError(f"no morphism from P_{dom_len} onto P_{cod_len}")
    return named_rng(seed, "gen-morphism", dom_len, cod_len).choice(pool)


def _store(ws: Workspace, obj: Any, log: dict, context: dict | None = None) -> int:
    report = verify(obj, context)
    if not report["pass"]:
        _emit({"error": "construction failed its own check", "report": report})
        return EXIT_PRECONDITION
    digest, path = ws.put(to_json(obj))
    ws.log(dict(log, hash=digest))
    _emit({"hash": digest, "path": str(path), "kind": to_json(obj)["kind"]})
    return EXIT_OK


def cmd_check(args, ws: Workspace) -> int:
    pred = args.predicate
    files = args.files
    if pred == "morphism":
        r = _load(ws, files[0], Rel)
        report = verify(r)
    elif pred == "tangled":
        r = _load(ws, files[0], Rel)
        report = {"tangled": is_morphism(r) and is_tangled(r)}
        report["pass"] = report["tangled"]
    elif pred == "prime":
        r = _load(ws, files[0], Rel)
        report = {"prime": is_prime_bruteforce(r, args.bound)}
        report["pass"] = report["prime"]
    elif pred == "tower":
        report = verify(_load(ws, files[0], Tower, TangledTower))
    elif pred == "digraph":
        report = verify(_load(ws, files[0], Digraph))
    elif pred == "certificate":
        if len(files) == 2:
            pair = _load(ws, files[1], tuple)
        elif len(files) == 3:
            pair = (_load(ws, files[1], Tower, TangledTower), _load(ws, files[2], Tower, TangledTower))
        else:
            raise UsageError("check certificate CERT PAIR  or  check certificate CERT P Q")
        cert = _load(ws, files[0], BackAndForthCertificate)
        report = verify(cert, {"p": pair[0], "q": pair[1]})
    elif pred == "end-move":
        if len(files) != 2 or args.vertex is None:
            raise UsageError("check end-move PARTITION RELATION --vertex V")
        report = verify(_load(ws, files[0], EndMove), {"relation": _load(ws, files[1], Rel),
                                                        "vertex": args.vertex})
    elif pred == "join":
        if len(files) != 3:
            raise UsageError("check join JOIN A B")
        report = verify(_load(ws, files[0], Join), {"a": _load(ws, files[1], Digraph),
                                                    "b": _load(ws, files[2], Digraph)})
    elif pred == "absorption":
        if len(files) != 3:
            raise UsageError("check absorption RESULT TOWER MORPHISM")
        report = verify(_load(ws, files[0], Absorption), {"tower": _load(ws, files[1], Tower, TangledTower),
                                                          "morphism": _load(ws, files[2], Rel)})
    elif pred == "factorization":
        report = verify(_load(ws, files[0], PrimeFactorization))
    else:  # pragma: no cover - argparse restricts the choices
        raise UsageError(f"unknown predicate {pred}")
    _emit(report)
    return EXIT_OK if report["pass"] else EXIT_PRECONDITION


def cmd_construct(args, ws: Workspace) -> int:
    verb, files = args.verb, args.files

    def need(k: int, usage: str) -> None:
        if len(files) != k:
            raise UsageError(f"construct {verb} {usage}")

    log = dict(args.log)
    if verb == "decompose":
        need(1, "REL")
        return _store(ws, decompose_in_F(_load(ws, files[0], Rel)), log)
    if verb == "subfactor":
        need(2, "FACTOR TARGET")
        sub = left_subfactor_detailed(_load(ws, files[0], Rel), _load(ws, files[1], Rel), args.kind)
        log["method"] = sub.method
        return _store(ws, sub.m, log)
    if verb == "subabsorb":
        need(2, "TOWER MORPHISM")
        tower = _load(ws, files[0], Tower, TangledTower)
        m = _load(ws, files[1], Rel)
        res = subabsorb(tower, m, args.level, args.strategy)
        return _store(ws, res, log, {"tower": tower, "morphism": m, "level": args.level})
    if verb == "back-and-forth":
        need(2, "P Q")
        p, q = _load(ws, files[0], Tower, TangledTower), _load(ws, files[1], Tower, TangledTower)
        try:
            cert = back_and_forth(p, q, args.rounds, args.strategy)
        except InsufficientDepth as exc:
            partial = getattr(exc, "partial", None)
            if partial is not None:
                digest, path = ws.put(to_json(partial))
                _emit({"error": str(exc), "partial": digest, "path": str(path)})
                return EXIT_RESOURCE
            raise
        return _store(ws, cert, log, {"p": p, "q": q})
    if verb == "end-move":
        need(1, "REL --vertex V")
        if args.vertex is None:
            raise UsageError("construct end-move needs --vertex")
        t = _load(ws, files[0], Rel)
        return _store(ws, end_move_detailed(t, args.vertex), log, {"relation": t, "vertex": args.vertex})
    if verb == "join":
        need(2, "A B")
        a, b = _load(ws, files[0], Digraph), _load(ws, files[1], Digraph)
        return _store(ws, digraph_join(a, b), log, {"a": a, "b": b})
    if verb == "strictify":
        need(1, "DIGRAPH")
        return _store(ws, strictify(_load(ws, files[0], Digraph)), log)
    if verb == "amalgamate":
        need(2, "F G")
        f, g = _load(ws, files[0], Rel), _load(ws, files[1], Rel)
        res = amalgamate_bruteforce(f, g, args.bound, end_preserving=args.end_preserving)
        if not res.found:
            _emit({"status": res.status, "explored": res.explored})
            return EXIT_RESOURCE if res.status == "inconclusive" else EXIT_PRECONDITION
        if compose(f, res.u) != compose(g, res.v) or not (is_morphism(res.u) and is_morphism(res.v)):
            _emit({"error": "amalgam failed its own check"})
            return EXIT_PRECONDITION
        digest_u, _ = ws.put(to_json(res.u))
        digest_v, _ = ws.put(to_json(res.v))
        ws.log(dict(log, u=digest_u, v=digest_v))
        _emit({"status": "found", "length": res.s.n - 1, "u": digest_u, "v": digest_v})
        return EXIT_OK
    if verb == "subfactorisability":
        need(1, "REL")
        src = _load(ws, files[0], Rel, Digraph)
        rel = src.rel if isinstance(src, Digraph) else src
        res = subfactorisability_bruteforce(rel, args.bound, covering=args.covering)
        if not res.found:
            _emit({"status": res.status})
            return EXIT_RESOURCE if res.status == "inconclusive" else EXIT_PRECONDITION
        digest_l, _ = ws.put(to_json(res.left))
        digest_r, _ = ws.put(to_json(res.right))
        ws.log(dict(log, left=digest_l, right=digest_r))
        _emit({"status": "found", "length": res.h.n - 1, "left": digest_l, "right": digest_r})
        return EXIT_OK
    raise UsageError(f"unknown construction {verb}")  # pragma: no cover


def cmd_export(args, ws: Workspace) -> int:
    doc = _load_doc(ws, args.file)
    obj = from_json(doc)
    if args.format == "json":
        out = canonical_text(pair_to_json(*obj) if isinstance(obj, tuple) else to_json(obj))
    elif isinstance(obj, tuple):
        raise UsageError("export dot takes one object; export the towers of a pair separately")
    else:
        out = to_dot(obj).rstrip("\n")
    if args.output:
        FsPath(args.output).write_text(out + "\n")
        _emit({"written": args.output})
    else:
        print(out)
    return EXIT_OK


def cmd_bundle(args, ws: Workspace) -> int:
    p = _load(ws, args.p, Tower, TangledTower)
    q = _load(ws, args.q, Tower, TangledTower)
    digest, path = ws.put(pair_to_json(p, q))
    ws.log(dict(args.log, hash=digest))
    _emit({"hash": digest, "path": str(path), "kind": "tower_pair"})
    return EXIT_OK


def cmd_classify(args, ws: Workspace) -> int:
    r = _load(ws, args.file, Rel)
    c = classify(r)
    _emit({"tag": c.tag.value, "turning": c.turning})
    return EXIT_OK


def cmd_hash(args, ws: Workspace) -> int:
    doc = _load_doc(ws, args.file)
    _emit({"hash": content_hash(doc), "stamped": "hash" in doc})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pseudoarc-lab", description="Finite path, tower and digraph constructions.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--workspace", default=".pseudoarc-lab", help="object store directory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an object")
    g.add_argument("kind", choices=["tower", "tangled", "digraph", "morphism"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--depth", type=int, default=2)
    g.add_argument("--root", type=int, default=1, help="edges of level 0 (at least 1)")
    g.add_argument("--no-stutter", action="store_true")
    g.add_argument("--target", type=int, default=1, help="codomain length for tangled")
    g.add_argument("--path", type=int, default=2, help="path length for digraph")
    g.add_argument("--dom-len", type=int, default=3)
    g.add_argument("--cod-len", type=int, default=1)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check", help="verify objects and print a JSON report")
    c.add_argument("predicate", choices=["morphism", "tangled", "prime", "tower", "digraph", "certificate",
                                         "end-move", "join", "absorption", "factorization"])
    c.add_argument("files", nargs="+")
    c.add_argument("--vertex", type=int)
    c.add_argument("--bound", type=int, default=8)
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("construct", help="run a construction and store its verified output")
    k.add_argument("verb", choices=["decompose", "subfactor", "subabsorb", "back-and-forth", "end-move",
                                    "join", "strictify", "amalgamate", "subfactorisability"])
    k.add_argument("files", nargs="+")
    k.add_argument("--rounds", type=int, default=1)
    k.add_argument("--vertex", type=int)
    k.add_argument("--level", type=int)
    k.add_argument("--kind", choices=["snake", "hook", "proper-simple", "improper-simple"])
    k.add_argument("--strategy", choices=["auto", "peel", "search"], default="auto")
    k.add_argument("--bound", type=int, default=12)
    k.add_argument("--end-preserving", action="store_true")
    k.add_argument("--covering", action="store_true")
    k.set_defaults(func=cmd_construct)

    e = sub.add_parser("export", help="print an object as DOT or canonical JSON")
    e.add_argument("format", choices=["dot", "json"])
    e.add_argument("file")
    e.add_argument("-o", "--output", help="write to this file instead of stdout")
    e.set_defaults(func=cmd_export)

    s = sub.add_parser("classify", help="classify a path morphism")
    s.add_argument("file")
    s.set_defaults(func=cmd_classify)

    b = sub.add_parser("bundle", help="store two towers as one tower_pair file")
    b.add_argument("p")
    b.add_argument("q")
    b.set_defaults(func=cmd_bundle)

    h = sub.add_parser("hash", help="print the content hash of an object file")
    h.add_argument("file")
    h.set_defaults(func=cmd_hash)
    return p


def _validate(args) -> None:
    if args.command == "gen" and args.kind == "tower" and args.root < 1:
        raise UsageError("--root must be at least 1: the root level needs an edge (e(P_0) >= 1)")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        args.log = {k: v for k, v in vars(args).items() if k not in ("func", "workspace")}
        return args.func(args, Workspace(FsPath(args.workspace)))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SerializationError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceLimitError, InsufficientDepth) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (FraisseError, PathMorphismError, ConstructionFailed, TowerError, RelationError, GraphError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
