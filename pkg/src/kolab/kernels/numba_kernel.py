"""Compiled exponential-Euler stepping over packed coefficient arrays.

Per-sample loops, so each sample's arithmetic is independent of the batch
it was simulated in.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from ..coefficients import MAX_ORDER
from .tables import flat_tables


@njit(cache=True, nogil=True)
def _dsin(m, z):
    r = m % 4
    if r == 0:
        return math.sin(z)
    if r == 1:
        return math.cos(z)
    if r == 2:
        return -math.sin(z)
    return -math.cos(z)


@njit(cache=True, nogil=True)
def _run(e_dt, e_mol, dt, x_init, inc, rec_steps, part_ptr, block_ptr, block_mask, max_blocks,
         f_const, f_lin, f_rc, f_rw, f_rd, f_nem, f_synth, f_proj, f_coef, f_kappa,
         b_const, b_lin, b_rc, b_rw, b_g, has_f_lin, has_b_lin, out):
    S, nmask, N = x_init.shape
    steps = inc.shape[1]
    M = inc.shape[2]
    Q = f_synth.shape[0]
    ncoef = f_coef.shape[1]
    nrec = rec_steps.shape[0]
    X = np.empty((nmask, N))
    Xn = np.empty((nmask, N))
    pwf = np.empty(nmask)
    pwb = np.empty(nmask)
    SX = np.zeros((nmask, Q))
    gd = np.zeros((max_blocks + 1, Q))
    GdW = np.zeros((N, N))
    cdW = np.empty(N)
    odW = np.empty(N)
    drift = np.empty(N)
    diff = np.empty(N)
    tmp = np.empty(Q)
    for s in range(S):
        for a in range(nmask):
            for i in range(N):
                X[a, i] = x_init[s, a, i]
        r = 0
        if r < nrec and rec_steps[r] == 0:
            for a in range(nmask):
                for i in range(N):
                    out[s, r, a, i] = X[a, i]
            r += 1
        for step in range(steps):
            for a in range(nmask):
                acc_f = 0.0
                acc_b = 0.0
                for i in range(N):
                    acc_f += f_rw[i] * X[a, i]
                    acc_b += b_rw[i] * X[a, i]
                pwf[a] = acc_f
                pwb[a] = acc_b
            if f_nem:
                for a in range(nmask):
                    for q in range(Q):
                        acc = 0.0
                        for i in range(N):
                            acc += f_synth[q, i] * X[a, i]
                        SX[a, q] = acc
                for q in range(Q):
                    z = SX[0, q]
                    damp = math.exp(-f_kappa * z * z)
                    for m in range(max_blocks + 1):
                        acc = 0.0
                        for c in range(ncoef - 1, -1, -1):
                            acc = acc * z + f_coef[m, c]
                        gd[m, q] = acc * damp
            for i in range(N):
                acc_c = 0.0
                acc_o = 0.0
                for l in range(M):
                    acc_c += b_const[i, l] * inc[s, step, l]
                    acc_o += b_g[i, l] * inc[s, step, l]
                cdW[i] = acc_c
                odW[i] = acc_o
                if has_b_lin:
                    for j in range(N):
                        acc = 0.0
                        for l in range(M):
                            acc += b_lin[i, j, l] * inc[s, step, l]
                        GdW[i, j] = acc
            for a in range(nmask):
                for i in range(N):
                    drift[i] = 0.0
                    diff[i] = 0.0
                if a == 0:
                    sf = f_rc * math.sin(pwf[0])
                    sb = b_rc * math.sin(pwb[0])
                    for i in range(N):
                        acc_f = f_const[i] + sf * f_rd[i]
                        acc_b = cdW[i] + sb * odW[i]
                        if has_f_lin:
                            for j in range(N):
                                acc_f += f_lin[i, j] * X[0, j]
                        if has_b_lin:
                            for j in range(N):
                                acc_b += GdW[i, j] * X[0, j]
                        drift[i] = acc_f
                        diff[i] = acc_b
                    if f_nem:
                        for i in range(N):
                            acc = 0.0
                            for q in range(Q):
                                acc += f_proj[i, q] * gd[0, q]
                            drift[i] += acc
                else:
                    for p in range(part_ptr[a], part_ptr[a + 1]):
                        b0 = block_ptr[p]
                        b1 = block_ptr[p + 1]
                        m = b1 - b0
                        prod_f = 1.0
                        prod_b = 1.0
                        for bi in range(b0, b1):
                            prod_f *= pwf[block_mask[bi]]
                            prod_b *= pwb[block_mask[bi]]
                        cf = f_rc * _dsin(m, pwf[0]) * prod_f
                        cb = b_rc * _dsin(m, pwb[0]) * prod_b
                        for i in range(N):
                            drift[i] += cf * f_rd[i]
                            diff[i] += cb * odW[i]
                        if m == 1 and (has_f_lin or has_b_lin):
                            bm = block_mask[b0]
                            for i in range(N):
                                acc_f = 0.0
                                acc_b = 0.0
                                for j in range(N):
                                    acc_f += f_lin[i, j] * X[bm, j]
                                    acc_b += GdW[i, j] * X[bm, j]
                                drift[i] += acc_f
                                diff[i] += acc_b
                        if f_nem:
                            for q in range(Q):
                                v = gd[m, q]
                                for bi in range(b0, b1):
                                    v *= SX[block_mask[bi], q]
                                tmp[q] = v
                            for i in range(N):
                                acc = 0.0
                                for q in range(Q):
                                    acc += f_proj[i, q] * tmp[q]
                                drift[i] += acc
                for i in range(N):
                    Xn[a, i] = e_dt[i] * X[a, i] + e_mol[i] * (dt * drift[i] + diff[i])
            for a in range(nmask):
                for i in range(N):
                    X[a, i] = Xn[a, i]
            if r < nrec and rec_steps[r] == step + 1:
                for a in range(nmask):
                    for i in range(N):
                        out[s, r, a, i] = X[a, i]
                r += 1


def simulate(model, drift, diffusion, k, x_init, increments, dt, eps, record_steps):
    """Same contract as :func:`kolab.kernels.numpy_kernel.simulate`."""
    fp = drift.pack()
    bp = diffusion.pack()
    part_ptr, block_ptr, block_mask = flat_tables(k)
    S, nmask, N = x_init.shape
    rec = np.asarray(record_steps, dtype=np.int64)
    out = np.empty((S, rec.size, nmask, N))
    _run(model.semigroup_factors(dt), model.semigroup_factors(dt + eps), float(dt),
         np.ascontiguousarray(x_init, dtype=float), np.ascontiguousarray(increments, dtype=float), rec,
         part_ptr, block_ptr, block_mask, min(k, MAX_ORDER),
         fp.const, np.ascontiguousarray(fp.lin), float(fp.ridge_scale), fp.ridge_w, fp.ridge_out,
         bool(fp.nem_on), np.ascontiguousarray(fp.nem_synth), np.ascontiguousarray(fp.nem_proj),
         fp.nem_coef, float(fp.nem_kappa),
         np.ascontiguousarray(bp.const), np.ascontiguousarray(bp.lin), float(bp.ridge_scale),
         bp.ridge_w, np.ascontiguousarray(bp.ridge_out), bool(fp.lin.any()), bool(bp.lin.any()), out)
    return out
