"""Counter-based deterministic random streams.

A draw is a pure function of ``(seed, stream, counter, attempt)``: the tuple is
serialized as canonical JSON and hashed with SHA-256, the first 8 bytes give a
64-bit word. Access order never matters, so block ``k`` of an extraction or
set ``n`` of a random family can be drawn independently and in parallel.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .errors import SpecError

U64 = 1 << 64


def hash64(*parts: Any) -> int:
    """Stable 64-bit hash of JSON-serializable *parts*."""
    serialized = json.dumps(list(parts), sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(serialized.encode()).digest()[:8], "big")


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < U64:
        raise SpecError(f"Seed must be an unsigned 64-bit integer, got {seed!r}")
    return seed


def sub_seed(seed: int, label: str, index: int) -> int:
    """Seed of the *index*-th sub-run, e.g. ``sub_seed(s, "epsilon", m)``."""
    return hash64("sub-seed", check_seed(seed), label, index)


@dataclass(frozen=True)
class RngStream:
    """Uniform integer draws keyed by a counter."""

    seed: int
    stream: str = "xi"

    def __post_init__(self) -> None:
        check_seed(self.seed)

    def draw_u64(self, counter: int, attempt: int = 0) -> int:
        return hash64(self.stream, self.seed, counter, attempt)

    def uniform_below(self, counter: int, n: int) -> int:
        """Exactly uniform on ``{0, ..., n-1}`` by rejection sampling."""
        if n < 1:
            raise SpecError(f"uniform_below needs n >= 1, got {n}")
        if n == 1:
            return 0
        limit = (U64 // n) * n
        attempt = 0
        while True:
            word = self.draw_u64(counter, attempt)
            if word < limit:
                return word % n
            attempt += 1

    def uniform_fraction(self, counter: int, bits: int = 53) -> Fraction:
        """A dyadic rational ``u / 2**bits`` with ``u`` uniform below ``2**bits``."""
        if not 1 <= bits <= 64:
            raise SpecError(f"bits must lie in [1, 64], got {bits}")
        return Fraction(self.draw_u64(counter) >> (64 - bits), 1 << bits)
