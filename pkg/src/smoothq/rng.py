"""Deterministic random number generation.

All randomness in the package flows from a single 64-bit seed through
Philox, a counter-based generator (Random123 family, as shipped by numpy).
Independent substreams are obtained by keying the generator with the pair
``(seed, stream)``, so any consumer can be reproduced in isolation:

* data replication ``i`` uses ``stream = i``;
* cross-validation fold splits use ``stream = FOLD_STREAM_BASE + i``
  (high bit set, so fold streams never collide with data streams).

Permutations are generated by an explicit Fisher-Yates shuffle driven by
``Generator.integers`` rather than numpy's built-in ``permutation``, so the
stream of draws is fully specified and can be matched by another runtime
with a Philox implementation.
"""

import numpy as np

FOLD_STREAM_BASE = 1 << 63

_MASK64 = (1 << 64) - 1


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, stream), both reduced mod 2^64."""
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def fisher_yates(n: int, gen: np.random.Generator) -> np.ndarray:
    """Random permutation of range(n) via the classic swap-down shuffle.

    Draws exactly ``n - 1`` integers: at step i (from n-1 down to 1) the
    swap index is ``gen.integers(0, i + 1)``.
    """
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = int(gen.integers(0, i + 1))
        perm[i], perm[j] = perm[j], perm[i]
    return perm
