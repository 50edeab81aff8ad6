"""Small shared helpers: seed derivation and time-tick conversions."""

from __future__ import annotations

import hashlib
import math

# All schedule times are integer microsecond ticks.
TICKS_PER_SEC = 1_000_000


def derive_seed(root_seed: int, *parts) -> int:
    """Derive a stable child seed from a root seed and a key path.

    Stable across processes and platforms (no reliance on hash()).
    """
    h = hashlib.blake2s(digest_size=8)
    h.update(str(int(root_seed)).encode())
    for p in parts:
        h.update(b"/")
        h.update(str(p).encode())
    return int.from_bytes(h.digest(), "big") % (2**63)


def sec_to_ticks(t: float) -> int:
    """Convert seconds to integer microsecond ticks (nearest)."""
    return int(round(t * TICKS_PER_SEC))


def ticks_to_sec(t: int) -> float:
    return t / TICKS_PER_SEC


def ceil_ticks(t_sec: float) -> int:
    """Convert a duration in seconds to ticks, rounding up.

    A tiny relative guard absorbs float noise so that durations that are
    exact tick multiples do not round up by one spurious tick.
    """
    x = t_sec * TICKS_PER_SEC
    guard = 1e-9 * max(1.0, abs(x))
    return math.ceil(x - guard)


def floor_ticks(t_sec: float) -> int:
    """Convert a duration in seconds to ticks, rounding down (guarded)."""
    x = t_sec * TICKS_PER_SEC
    guard = 1e-9 * max(1.0, abs(x))
    return math.floor(x + guard)
