"""Reproducible Brownian increments.

Each sample owns an independent Philox stream whose 128-bit key is
``(seed, sample)``; the counter then walks through ``(step, component)`` in
row-major order.  A sample's increments therefore never depend on how many
other samples were drawn, or in which order, or on which thread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseBlock", "standard_normals", "philox_key"]

_MASK64 = (1 << 64) - 1


def philox_key(seed: int, sample: int) -> int:
    if not 0 <= seed <= _MASK64 or not 0 <= sample <= _MASK64:
        raise ValueError("seed and sample index must fit in an unsigned 64-bit integer")
    return (seed << 64) | sample


def standard_normals(seed: int, sample: int, steps: int, dim_u: int) -> np.ndarray:
    """``(steps, dim_u)`` standard normal draws for one sample."""
    gen = np.random.Generator(np.random.Philox(key=philox_key(seed, sample)))
    return gen.standard_normal((steps, dim_u))


def standard_normals_batch(seed: int, samples: range, steps: int, dim_u: int) -> np.ndarray:
    out = np.empty((len(samples), steps, dim_u))
    for i, s in enumerate(samples):
        out[i] = standard_normals(seed, s, steps, dim_u)
    return out


@dataclass(frozen=True, eq=False)
class NoiseBlock:
    """Wiener increments on a grid: ``increments[m] = W(t_{m+1}) - W(t_m)``."""

    increments: np.ndarray
    seed: int | None = None
    sample: int | None = None

    @classmethod
    def draw(cls, seed: int, sample: int, steps: int, dt: float, dim_u: int) -> "NoiseBlock":
        z = standard_normals(seed, sample, steps, dim_u)
        return cls(z * np.sqrt(dt), seed, sample)

    @classmethod
    def zeros(cls, steps: int, dim_u: int) -> "NoiseBlock":
        return cls(np.zeros((steps, dim_u)))

    @property
    def steps(self) -> int:
        return self.increments.shape[0]

    def coarsen(self, factor: int) -> "NoiseBlock":
        """Sum consecutive groups of ``factor`` increments (same Brownian path, coarser grid)."""
        if self.steps % factor:
            raise ValueError(f"{self.steps} steps not divisible by {factor}")
        inc = self.increments.reshape(self.steps // factor, factor, -1).sum(axis=1)
        return NoiseBlock(inc, self.seed, self.sample)
