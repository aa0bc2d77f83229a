"""Domain sizes of builder tangled morphisms and what that means for tower depth."""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass

from pseudoarc_lab.limits import ResourceLimitError, max_vertices
from pseudoarc_lab.path_morphisms import _predicted_size, build_tangled


@dataclass
class SizeConfig:
    max_target: int = 5
    seed: int = 0


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-target", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    cfg = SizeConfig(a.max_target, a.seed)
    print(f"size guard: {max_vertices()} vertices")
    print("target  predicted  actual  seconds")
    for n in range(cfg.max_target + 1):
        start = time.perf_counter()
        try:
            t = build_tangled(n, seed=cfg.seed)
            actual = str(t.dom.n)
        except ResourceLimitError as exc:
            actual = f"refused ({exc})"
        print(f"P_{n:<5d} {_predicted_size(n):9d}  {actual:>6s}  {time.perf_counter() - start:.2f}")
    for n in (9, 10):
        print(f"predicted size onto P_{n}: {_predicted_size(n)} vertices")


if __name__ == "__main__":
    main()
