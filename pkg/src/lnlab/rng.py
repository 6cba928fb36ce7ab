"""Deterministic random streams for the simulation lab.

Reproducibility contract:

* every stream is derived from a single 64-bit master seed,
* replica r of an ensemble uses ``derive_seed(master, r)``, where the
  splitting function is the r-th output of a splitmix64 sequence seeded
  with the master (closed form: ``mix64(master + (r+1) * GOLDEN)``),
* uniform doubles come from a Philox counter-based bit generator keyed
  by the derived seed,
* standard normals are produced by the polar Box-Muller transform on
  those uniforms.

Bitwise reproducibility is promised within this implementation only;
the generator/transform pipeline is documented so another implementation
can reproduce the draws statistically.
"""

from __future__ import annotations

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """splitmix64 finalizer: bijective 64-bit mixing function."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def splitmix64(seed: int, index: int) -> int:
    """index-th output of the splitmix64 sequence started at ``seed``.

    The splitmix64 state advances by the 64-bit golden-ratio constant per
    draw, so output ``index`` is available in closed form.
    """
    return mix64((seed + (index + 1) * GOLDEN) & _MASK64)


def derive_seed(master: int, replica: int) -> int:
    """Documented per-replica seed split: splitmix64(master, replica)."""
    return splitmix64(master, replica)


class GaussianStream:
    """Sequential stream of uniforms / standard normals / index draws.

    One stream per trajectory (or per audit, per estimator).  Consumption
    order is part of the reproducibility contract: callers must draw in a
    fixed order that depends only on their configuration.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK64
        self._gen = np.random.Generator(np.random.Philox(key=self.seed))
        self._cache = np.empty(0)
        self._pos = 0

    def uniforms(self, count: int) -> np.ndarray:
        """count uniform doubles in [0, 1)."""
        return self._gen.random(count)

    def _refill(self, need: int) -> None:
        out = []
        have = 0
        while have < need:
            block = max(2 * need, 256)
            u = self._gen.random((block, 2)) * 2.0 - 1.0
            s = u[:, 0] ** 2 + u[:, 1] ** 2
            ok = (s > 0.0) & (s < 1.0)
            u, s = u[ok], s[ok]
            factor = np.sqrt(-2.0 * np.log(s) / s)
            pair = u * factor[:, None]  # two normals per accepted point
            out.append(pair.reshape(-1))
            have += pair.size
        self._cache = np.concatenate(out)
        self._pos = 0

    def normals(self, count: int) -> np.ndarray:
        """count standard normal draws via the polar Box-Muller transform."""
        if self._pos + count > self._cache.size:
            head = self._cache[self._pos:].copy()
            self._refill(count - head.size)
            self._cache = np.concatenate([head, self._cache])
        out = self._cache[self._pos:self._pos + count].copy()
        self._pos += count
        return out

    def normal_matrix(self, *shape: int) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        return self.normals(n).reshape(shape)

    def subset(self, n: int, k: int) -> np.ndarray:
        """Uniform size-k subset of {0..n-1} without replacement, sorted.

        Partial Fisher-Yates shuffle; index i is floor(u * (n - i)) into the
        remaining pool (floor-on-double selection; bias is O(n * 2^-53)).
        """
        if not 1 <= k <= n:
            raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
        pool = np.arange(n)
        u = self.uniforms(k)
        for i in range(k):
            j = i + int(u[i] * (n - i))
            pool[i], pool[j] = pool[j], pool[i]
        out = pool[:k]
        out.sort()
        return out

    def ball_point(self, dim: int, radius: float) -> np.ndarray:
        """Uniform draw from the closed ball of given radius in R^dim."""
        z = self.normals(dim)
        norm = float(np.linalg.norm(z))
        while norm == 0.0:  # probability-zero guard
            z = self.normals(dim)
            norm = float(np.linalg.norm(z))
        r = radius * self.uniforms(1)[0] ** (1.0 / dim)
        return (r / norm) * z

    def unit_vector(self, dim: int) -> np.ndarray:
        z = self.normals(dim)
        norm = float(np.linalg.norm(z))
        while norm == 0.0:
            z = self.normals(dim)
            norm = float(np.linalg.norm(z))
        return z / norm
