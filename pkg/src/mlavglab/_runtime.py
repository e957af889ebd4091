"""Process-wide execution settings."""

from __future__ import annotations

import os

_threads = max(1, int(os.environ.get("MLAVGLAB_THREADS", "1")))


def threads() -> int:
    return _threads


def set_threads(n: int) -> None:
    global _threads
    if int(n) < 1:
        raise ValueError(f"thread count must be positive, got {n!r}")
    _threads = int(n)
