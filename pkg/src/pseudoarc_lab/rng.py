"""Named deterministic random streams derived from one 64-bit seed."""

from __future__ import annotations

import hashlib
import random

SEED_BITS = 64


def derive_seed(seed: int, *labels) -> int:
    """Mix ``seed`` with a path of labels into a fresh 64-bit seed.

    The mix is a keyed hash of the ``repr`` of the labels, so the result does
    not depend on the Python hash seed or on the platform.
    """
    payload = repr((int(seed),) + tuple(labels)).encode()
    digest = hashlib.blake2b(payload, digest_size=SEED_BITS // 8, person=b"pseudoarc-lab").digest()
    return int.from_bytes(digest, "big")


def named_rng(seed: int, *labels) -> random.Random:
    return random.Random(derive_seed(seed, *labels))
