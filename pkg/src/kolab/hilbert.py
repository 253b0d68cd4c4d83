"""Diagonal spectral model of the state space.

Vectors are plain float arrays of eigenbasis coordinates; the generator ``A``
is stored through its eigenvalues, so ``exp(tA)`` and ``(eta - A)**r`` act
coordinate-wise and are exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["SpectralModel", "hs_norm"]


def hs_norm(op: np.ndarray) -> float:
    """Hilbert-Schmidt norm of an ``N x M`` matrix."""
    return float(np.sqrt(np.sum(np.asarray(op, dtype=float) ** 2)))


@dataclass(frozen=True)
class SpectralModel:
    eigenvalues: np.ndarray
    eta: float = 1.0
    horizon: float = 1.0
    dim_u: int | None = None
    label: str = field(default="explicit", compare=False)

    def __post_init__(self) -> None:
        lam = np.asarray(self.eigenvalues, dtype=float).reshape(-1)
        if lam.size < 1:
            raise ValueError("need at least one eigenvalue")
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite")
        if not np.all(self.eta - lam > 0):
            raise ValueError(f"eta={self.eta} must exceed every eigenvalue (max {lam.max()})")
        if not self.horizon > 0:
            raise ValueError("horizon T must be positive")
        lam.setflags(write=False)
        object.__setattr__(self, "eigenvalues", lam)
        if self.dim_u is None:
            object.__setattr__(self, "dim_u", lam.size)
        if self.dim_u < 1:
            raise ValueError("dim_u must be >= 1")

    @classmethod
    def laplacian(cls, n: int, eta: float = 1.0, horizon: float = 1.0,
                  dim_u: int | None = None) -> "SpectralModel":
        """Dirichlet Laplacian on (0, 1): ``lambda_n = -pi^2 n^2``."""
        lam = -(np.pi ** 2) * np.arange(1, n + 1, dtype=float) ** 2
        return cls(lam, eta=eta, horizon=horizon, dim_u=dim_u, label="laplacian")

    @property
    def dim_h(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def shifted(self) -> np.ndarray:
        """Spectrum of ``eta - A`` (strictly positive)."""
        return self.eta - self.eigenvalues

    def _vec(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim_h:
            raise ValueError(f"vector has dimension {v.shape[-1]}, model has {self.dim_h}")
        return v

    def semigroup_factors(self, t: float) -> np.ndarray:
        if t < 0:
            raise ValueError(f"semigroup time must be nonnegative, got {t}")
        return np.exp(t * self.eigenvalues)

    def semigroup_apply(self, t: float, v) -> np.ndarray:
        """``exp(tA) v``; works on any leading batch shape."""
        return self.semigroup_factors(t) * self._vec(v)

    def frac_power_apply(self, r: float, v) -> np.ndarray:
        """``(eta - A)**r v``."""
        return self.shifted ** r * self._vec(v)

    def norm_r(self, r: float, v) -> float:
        """Norm of ``v`` in the interpolation space ``H_r``."""
        return float(np.linalg.norm(self.frac_power_apply(r, v)))

    def chi(self, r: float) -> float:
        """``sup_{0<t<=T} t^r ||(eta-A)^r exp(tA)||``, maximized mode by mode."""
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"chi needs r in [0, 1], got {r}")
        T = self.horizon
        best = 0.0
        for lam, mu in zip(self.eigenvalues, self.shifted):
            if r == 0.0:
                val = 1.0 if lam <= 0 else math.exp(T * lam)
            else:
                # t^r mu^r e^{t lam} peaks at t = r/|lam| when lam < 0
                t = -r / lam if lam < 0 and -r / lam <= T else T
                val = (t * mu) ** r * math.exp(t * lam)
            best = max(best, val)
        return best

    def basis_vector(self, n: int) -> np.ndarray:
        """Eigenvector ``e_n`` (1-based)."""
        if not 1 <= n <= self.dim_h:
            raise ValueError(f"basis index {n} out of range 1..{self.dim_h}")
        e = np.zeros(self.dim_h)
        e[n - 1] = 1.0
        return e

    def rough_directions(self, k: int) -> list[np.ndarray]:
        """The ``k`` highest-index eigenvectors, roughest first."""
        if k > self.dim_h:
            raise ValueError("not enough modes for the requested rough directions")
        return [self.basis_vector(self.dim_h - i) for i in range(k)]

    def fingerprint(self) -> str:
        payload = json.dumps({
            "eigenvalues": [float(x).hex() for x in self.eigenvalues],
            "eta": float(self.eta).hex(), "T": float(self.horizon).hex(), "M": self.dim_u,
        }, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]
