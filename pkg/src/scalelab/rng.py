"""Seeded, platform-reproducible random number generation.

All randomness in the package flows through :class:`SeededRng`, which wraps
a counter-based Philox bit generator and produces Gaussians via the inverse
CDF, so the same seed yields the same stream on every platform. A single
instance must not be shared between concurrent callers; derive independent
child seeds instead.
"""

from __future__ import annotations

import hashlib

import numpy as np
from scipy.special import ndtri


class SeededRng:
    """Deterministic random stream keyed by a 64-bit seed."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))

    def uniform(self, *shape: int) -> np.ndarray:
        """Uniform draws on (0, 1), open at both ends."""
        u = self._gen.random(shape if shape else None)
        # random() can return exactly 0.0; the inverse CDF needs (0, 1).
        return np.nextafter(u, 1.0) if np.ndim(u) else u

    def gaussian(self, rows: int, cols: int) -> np.ndarray:
        """i.i.d. standard normal matrix via inverse-CDF of Philox uniforms."""
        if rows < 1 or cols < 1:
            raise ValueError(f"matrix dims must be >= 1, got {rows}x{cols}")
        u = self._gen.random((rows, cols))
        return ndtri(np.nextafter(u, 1.0))

    def gaussian_vector(self, n: int) -> np.ndarray:
        return self.gaussian(1, n)[0]

    def choice_without_replacement(self, n: int, k: int) -> np.ndarray:
        """k distinct indices from range(n), order fixed by the stream."""
        if k > n:
            raise ValueError(f"cannot draw {k} from {n} without replacement")
        return self._gen.permutation(n)[:k]

    def child(self, *tags) -> "SeededRng":
        return SeededRng(derive_seed(self.seed, *tags))


def gaussian_matrix(rng: SeededRng, rows: int, cols: int) -> np.ndarray:
    """Standard-normal matrix; deterministic in the rng's seed."""
    return rng.gaussian(rows, cols)


def derive_seed(base_seed: int, *tags) -> int:
    """Stable 64-bit child seed from a base seed and hashable tags.

    Used by the sweep engine so grid cells get independent yet reproducible
    initializations.
    """
    msg = ":".join([str(int(base_seed))] + [str(t) for t in tags])
    digest = hashlib.blake2b(msg.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")
