"""Exponential-Euler simulation of the base process and its derivative processes.

For directions ``u_1..u_k`` the bundle carries one path per subset ``I`` of
``{1..k}`` (the empty subset is the base path).  All paths are driven by the
same Wiener increments.  One step reads

    X_{m+1} = e^{dt A} X_m + e^{(dt + eps) A} (dt * drift_I(X_m) + diff_I(X_m) dW_m)

where ``drift_I`` is ``F`` for the base path and, for ``I`` nonempty, the sum
over partitions of ``I`` of ``F^(#blocks)(X^0)`` applied to the block paths
(likewise ``diff_I`` with ``B``).  Derivative paths of size one start at their
direction, larger subsets start at zero.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .kernels import default_backend, get_simulator
from .kernels.tables import MAX_DIRECTIONS, mask_of
from .noise import NoiseBlock, standard_normals_batch

__all__ = [
    "CHUNK",
    "SimulationGrid",
    "DerivativeRequest",
    "TrajectoryBundle",
    "simulate_bundle",
    "couple_for_fd",
    "simulate_samples",
    "steps_to",
]

# samples per kernel call; fixed so results never depend on the worker count
CHUNK = 256


@dataclass(frozen=True)
class SimulationGrid:
    steps: int
    horizon: float = 1.0

    def __post_init__(self):
        if self.steps < 0 or (self.steps == 0 and self.horizon != 0):
            raise ValueError("a grid needs a positive step count (zero only for an empty horizon)")
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps if self.steps else 0.0

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


def steps_to(t: float, steps: int, horizon: float) -> int:
    """Step count used to reach ``t``: the nominal ``dt = horizon/steps`` rounded so ``t`` is hit exactly."""
    if t < 0 or t > horizon * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {horizon}]")
    if t == 0:
        return 0
    return max(1, math.ceil(t * steps / horizon - 1e-9))


@dataclass(frozen=True, eq=False)
class DerivativeRequest:
    x: np.ndarray
    directions: tuple = ()
    eps: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        dirs = tuple(np.asarray(u, dtype=float) for u in self.directions)
        object.__setattr__(self, "directions", dirs)
        if len(dirs) > MAX_DIRECTIONS:
            raise ValueError(f"at most {MAX_DIRECTIONS} directions, got {len(dirs)}")
        for u in dirs:
            if u.shape != self.x.shape:
                raise ValueError("direction shape does not match the base point")
        if self.eps < 0:
            raise ValueError("mollification eps must be nonnegative")

    @property
    def k(self) -> int:
        return len(self.directions)

    def initial_state(self) -> np.ndarray:
        """(2**k, N) initial values indexed by subset mask."""
        init = np.zeros((1 << self.k, self.x.size))
        init[0] = self.x
        for i, u in enumerate(self.directions):
            init[1 << i] = u
        return init


@dataclass(eq=False)
class TrajectoryBundle:
    times: np.ndarray
    paths: np.ndarray  # (len(times), 2**k, N), indexed by subset mask
    noise: NoiseBlock
    request: DerivativeRequest
    metadata: dict = field(default_factory=dict)

    @property
    def base(self) -> np.ndarray:
        return self.paths[:, 0]

    def path(self, subset: Sequence[int] = ()) -> np.ndarray:
        """Path for the subset of direction indices (1-based); ``()`` is the base."""
        if any(not 1 <= i <= self.request.k for i in subset):
            raise ValueError(f"subset {tuple(subset)} outside 1..{self.request.k}")
        return self.paths[:, mask_of(set(subset))]


def _check_dims(model, drift, diffusion, x):
    n = model.dim_h
    if x.shape != (n,):
        raise ValueError(f"base point has shape {x.shape}, model needs ({n},)")
    pack = diffusion.pack()
    if pack.const.shape != (n, model.dim_u):
        raise ValueError(f"diffusion maps into {pack.const.shape}, model needs ({n}, {model.dim_u})")
    if drift.pack().const.shape != (n,):
        raise ValueError("drift dimension does not match the model")


def simulate_bundle(model, drift, diffusion, request: DerivativeRequest, grid: SimulationGrid,
                    noise: NoiseBlock, backend: str | None = None) -> TrajectoryBundle:
    """Simulate one bundle on every grid point."""
    _check_dims(model, drift, diffusion, request.x)
    if noise.increments.shape != (grid.steps, model.dim_u):
        raise ValueError(f"noise shape {noise.increments.shape} does not fit grid ({grid.steps}, {model.dim_u})")
    sim = get_simulator(backend)
    rec = np.arange(grid.steps + 1)
    out = sim(model, drift, diffusion, request.k, request.initial_state()[None],
              noise.increments[None], grid.dt, request.eps, rec)
    meta = {"dt": grid.dt, "steps": grid.steps, "eps": request.eps,
            "mollifier": "exp((dt+eps)A) on step coefficients", "backend": backend or default_backend()}
    return TrajectoryBundle(grid.times, out[0], noise, request, meta)


def couple_for_fd(model, drift, diffusion, x, u, h: float, grid: SimulationGrid, noise: NoiseBlock,
                  eps: float = 0.0, backend: str | None = None):
    """Base paths from ``x + h u`` and ``x`` under the same noise."""
    if h <= 0:
        raise ValueError("h must be positive")
    x, u = np.asarray(x, float), np.asarray(u, float)
    plus = simulate_bundle(model, drift, diffusion, DerivativeRequest(x + h * u, (), eps), grid, noise, backend)
    base = simulate_bundle(model, drift, diffusion, DerivativeRequest(x, (), eps), grid, noise, backend)
    return plus.base, base.base


def simulate_samples(model, drift, diffusion, request: DerivativeRequest, t: float, steps: int, seed: int,
                     samples: int | range, record: Sequence[int] | None = None, jobs: int = 1,
                     backend: str | None = None) -> np.ndarray:
    """Monte Carlo bundles at time ``t``.

    The interval ``[0, t]`` is split into ``steps_to(t, steps, T)`` equal steps.
    Sample ``j`` draws its noise from ``(seed, j)``, so the output is
    independent of ``jobs``.  Returns ``(S, len(record), 2**k, N)``; by
    default only the final state is recorded.
    """
    _check_dims(model, drift, diffusion, request.x)
    n = steps_to(t, steps, model.horizon)
    dt = t / n if n else 0.0
    rec = np.array([n] if record is None else list(record), dtype=np.int64)
    idx = samples if isinstance(samples, range) else range(samples)
    sim = get_simulator(backend)
    init = request.initial_state()
    chunks = [idx[i:i + CHUNK] for i in range(0, len(idx), CHUNK)]

    def run(chunk):
        z = standard_normals_batch(seed, chunk, n, model.dim_u) * math.sqrt(dt)
        x0 = np.broadcast_to(init, (len(chunk),) + init.shape)
        return sim(model, drift, diffusion, request.k, x0, z, dt, request.eps, rec)

    if jobs <= 1 or len(chunks) == 1:
        parts = [run(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(run, chunks))
    return np.concatenate(parts, axis=0)
