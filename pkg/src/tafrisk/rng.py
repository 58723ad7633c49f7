"""Portable deterministic random numbers.

Cohort generation and seed derivation use splitmix64 and xoshiro256**
implemented here in plain integer arithmetic, so a reimplementation in any
language reproduces the same streams bit for bit.  Bulk randomness inside
model fitting (bootstrap draws, shuffles) runs on ``numpy.random.Generator``
seeded through :func:`derive_seed`; those streams are reproducible for a
fixed seed but are not part of the portable contract.

Conventions (all fixed so they can be restated in one paragraph):

* splitmix64 is the standard Steele/Lea/Flood mixer.
* xoshiro256** state is seeded with four consecutive splitmix64 outputs.
* ``random()`` is ``next_u64() >> 11`` times ``2**-53`` (53-bit double).
* ``below(n)`` is ``next_u64() % n``; the modulo bias is negligible for the
  small ``n`` used here and keeps the definition trivial to port.
* ``shuffle`` is a Fisher-Yates pass from the last index down, drawing
  ``below(i + 1)`` for position ``i``.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns (output, next_state)."""
    state = (state + _GOLDEN) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z, state


def derive_seed(master: int, *components: int) -> int:
    """Mix integer components into a master seed, one splitmix64 step each.

    Used as the documented seed-splitting function: the seed for run
    ``(config i, model j, fold f)`` is ``derive_seed(master, i, j, f)``.
    Deterministic, order-sensitive, and collision-resistant enough for a
    few thousand distinct component tuples.
    """
    state = int(master) & _MASK64
    out, state = splitmix64(state)
    for c in components:
        # int() first: numpy scalars cannot hold the 64-bit mask
        state ^= (int(c) & _MASK64) * 0xFF51AFD7ED558CCD & _MASK64
        out, state = splitmix64(state)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 seeding; the portable stream."""

    def __init__(self, seed: int):
        state = []
        s = seed & _MASK64
        for _ in range(4):
            v, s = splitmix64(s)
            state.append(v)
        self._s = state

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("below() needs n >= 1")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
