"""Sweep every prime factor onto short paths against builder tangled morphisms.

Prints how many factors of each kind were handled by the explicit recipe and
how many needed the exact lifting search, plus any failures.
"""

from __future__ import annotations

import argparse
import time
from collections import Counter
from dataclasses import dataclass

from pseudoarc_lab.graph_core import Path
from pseudoarc_lab.path_morphisms import (
    PathMorphismError,
    build_tangled,
    iter_morphisms,
    left_subfactor_detailed,
    membership_morphism,
    subfactor_kind,
)
from pseudoarc_lab.relations import compose, is_morphism


@dataclass
class SweepConfig:
    max_cod: int = 3
    max_dom: int = 7
    seeds: int = 3
    stutter: bool = True


def sweep(cfg: SweepConfig) -> tuple[Counter, list]:
    counts: Counter = Counter()
    failures = []
    for c in range(1, cfg.max_cod + 1):
        for seed in range(cfg.seeds):
            t = build_tangled(c, seed=seed, stutter=cfg.stutter)
            t2 = compose(t, membership_morphism(Path.of(t.dom)))
            for d in range(c + 1, cfg.max_dom + 1):
                for f in iter_morphisms(d, c):
                    try:
                        kind = subfactor_kind(f)
                    except PathMorphismError:
                        continue
                    if kind == "hook" and d == c + 1:
                        continue
                    target = t2 if kind == "improper-simple" else t
                    try:
                        sub = left_subfactor_detailed(f, target, kind)
                    except PathMorphismError as exc:
                        failures.append((c, seed, f.cols, str(exc)))
                        continue
                    if not (is_morphism(sub.m) and compose(f, sub.m) <= target):
                        failures.append((c, seed, f.cols, "post-condition"))
                    counts[kind, sub.method] += 1
    return counts, failures


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-cod", type=int, default=3)
    ap.add_argument("--max-dom", type=int, default=7)
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--no-stutter", action="store_true")
    a = ap.parse_args()
    cfg = SweepConfig(a.max_cod, a.max_dom, a.seeds, not a.no_stutter)
    start = time.perf_counter()
    counts, failures = sweep(cfg)
    for (kind, method), n in sorted(counts.items()):
        print(f"{kind:16s} {method:13s} {n}")
    print(f"failures: {len(failures)}  time: {time.perf_counter() - start:.2f}s")
    for item in failures[:10]:
        print("  ", item)


if __name__ == "__main__":
    main()
