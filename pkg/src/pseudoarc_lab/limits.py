"""Resource guards shared by the exhaustive searches and builders."""

from __future__ import annotations

import os

ENV_MAX_VERTICES = "PSEUDOARC_LAB_MAX_VERTICES"
DEFAULT_MAX_VERTICES = 4096


class ResourceLimitError(RuntimeError):
    """A construction would exceed the configured size guard."""


def max_vertices() -> int:
    raw = os.environ.get(ENV_MAX_VERTICES)
    if raw is None:
        return DEFAULT_MAX_VERTICES
    try:
        value = int(raw)
    except ValueError as exc:
        raise ResourceLimitError(f"{ENV_MAX_VERTICES} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ResourceLimitError(f"{ENV_MAX_VERTICES} must be positive")
    return value


def check_vertex_budget(size: int, what: str) -> None:
    cap = max_vertices()
    if size > cap:
        raise ResourceLimitError(f"{what} needs about {size} vertices, above the cap of {cap} "
                                 f"(set {ENV_MAX_VERTICES} to raise it)")
