"""Deterministic 64-bit seed derivation for per-entity random streams.

Both the trial generator and the simulated scorer derive one independent
stream per entity (speaker, recording, utterance) from a global seed and the
entity's string key. Because each derived seed depends only on its own
arguments, results are independent of iteration order and parallelism.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 finalizer step over a 64-bit state."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, *keys: str) -> int:
    """Derive a 64-bit stream seed from a global seed and string keys.

    Absorbs each key's UTF-8 bytes (length-prefixed, 8 bytes per round)
    through the splitmix64 finalizer, so distinct key tuples get distinct
    streams and platform byte order never enters the result.
    """
    state = splitmix64(seed & _MASK64)
    for key in keys:
        data = key.encode("utf-8")
        state = splitmix64(state ^ len(data))
        for off in range(0, len(data), 8):
            chunk = int.from_bytes(data[off:off + 8], "little")
            state = splitmix64(state ^ chunk)
    return state
