"""Deterministic 64-bit PRNG used for sampling and shuffling.

The generator is fixed here, not borrowed from ``random``, so that
shuffles and batch draws reproduce bit-for-bit across platforms and
interpreter versions:

* seeding: one round of SplitMix64 turns the user seed into the state
  (a zero state is replaced by the SplitMix64 increment constant);
* stream: xorshift64* (shifts 12/25/27, multiplier 2685821657736338717);
* ``randbelow(n)`` is ``next_u64() % n`` (modulo bias is irrelevant at
  the scales used here and the modulo form is trivially portable);
* ``shuffle`` is a backward Fisher-Yates;
* ``sample_indices(n, m)`` is a partial forward Fisher-Yates returning
  the first ``m`` slots, i.e. ``m`` distinct indices in draw order.
"""

MASK64 = (1 << 64) - 1


def splitmix64(seed: int) -> int:
    z = (seed + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class DeterministicRng:
    def __init__(self, seed: int):
        self._state = splitmix64(seed & MASK64)
        if self._state == 0:
            self._state = 0x9E3779B97F4A7C15

    def next_u64(self) -> int:
        x = self._state
        x ^= (x >> 12)
        x = (x ^ (x << 25)) & MASK64
        x ^= (x >> 27)
        self._state = x
        return (x * 2685821657736338717) & MASK64

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_u64() % n

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def sample_indices(self, n: int, m: int) -> list[int]:
        if not 0 <= m <= n:
            raise ValueError("need 0 <= m <= n")
        idx = list(range(n))
        for i in range(m):
            j = i + self.randbelow(n - i)
            idx[i], idx[j] = idx[j], idx[i]
        return idx[:m]
