"""Portable seeded PRNG: xoshiro256** seeded through splitmix64.

Every random decision in the generator goes through this class so that a
seed reproduces the same graph on any platform and in any language that
implements the same two published algorithms.

Draw primitives (all consume whole 64-bit words):

* ``next_u64``  -- one xoshiro256** output.
* ``uniform``   -- one word, top 53 bits scaled to [0, 1).
* ``below(n)``  -- rejection sampling: draw words until ``w >= (2**64 - n) % n``,
  return ``w % n``. Unbiased; usually one word.
* ``bernoulli(p)`` -- ``uniform() < p``; p == 0 never fires, p == 1 always does.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """Return ``(new_state, output)`` for one splitmix64 step."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256:
    __slots__ = ("_s",)

    def __init__(self, seed: int):
        sm = seed & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & MASK64, 7) * 9) & MASK64
        t = (s[1] << 17) & MASK64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError(f"below() needs n >= 1, got {n}")
        threshold = ((1 << 64) - n) % n
        while True:
            w = self.next_u64()
            if w >= threshold:
                return w % n

    def randint(self, lo: int, hi: int) -> int:
        """Inclusive on both ends."""
        return lo + self.below(hi - lo + 1)

    def bernoulli(self, p: float) -> bool:
        return self.uniform() < p


def derive_seed(seed: int, stream: int) -> int:
    """Independent sub-seed for a numbered stream of a parent seed."""
    _, out = splitmix64((seed ^ ((stream * 0xD1B54A32D192ED03) & MASK64)) & MASK64)
    return out
