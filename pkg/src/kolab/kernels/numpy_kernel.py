"""Pure-numpy exponential-Euler stepping, vectorized over samples.

This path calls the coefficient objects' own derivative evaluators, so it
is also the readable reference for the compiled kernel.
"""

from __future__ import annotations

import numpy as np

from .tables import mask_order, subset_partitions


def simulate(model, drift, diffusion, k, x_init, increments, dt, eps, record_steps):
    """Advance ``x_init`` (S, 2**k, N) through ``increments`` (S, steps, M).

    Returns the states at ``record_steps`` as an array (S, len(record_steps), 2**k, N).
    """
    S, nmask, N = x_init.shape
    steps = increments.shape[1]
    e_dt = model.semigroup_factors(dt)
    e_mol = model.semigroup_factors(dt + eps)
    table = subset_partitions(k)
    order = mask_order(k)
    out = np.empty((S, len(record_steps), nmask, N))
    X = np.array(x_init, dtype=float)
    r = 0
    if r < len(record_steps) and record_steps[r] == 0:
        out[:, r] = X
        r += 1
    for step in range(steps):
        dW = increments[:, step]
        base = X[:, 0]
        new = np.empty_like(X)
        rhs = drift.derivative(0, base) * dt
        rhs += np.einsum("sim,sm->si", diffusion.derivative(0, base), dW)
        new[:, 0] = e_dt * base + e_mol * rhs
        for a in order:
            rhs = np.zeros((S, N))
            for blocks in table[a]:
                args = [X[:, b] for b in blocks]
                m = len(blocks)
                rhs += dt * drift.derivative(m, base, args)
                rhs += np.einsum("sim,sm->si", diffusion.derivative(m, base, args), dW)
            new[:, a] = e_dt * X[:, a] + e_mol * rhs
        X = new
        if r < len(record_steps) and record_steps[r] == step + 1:
            out[:, r] = X
            r += 1
    return out
