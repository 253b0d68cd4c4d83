"""Monte Carlo evaluation of the transition semigroup and its derivatives.

``P_t phi(x) = E[phi(X_t^x)]`` and, for directions ``u_1..u_k``,

    d^k/dx^k P_t phi(x)(u_1..u_k) = sum over partitions w of {1..k}
        E[ phi^(#w)(X_t) (X_t^{block_1}, ..., X_t^{block_#w}) ]

with ``X^{block}`` the derivative process for the directions in that block.
Every estimator here evaluates that sum sample by sample on a bundle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import HypothesisError
from .kernels import default_backend
from .kernels.tables import subset_partitions
from .sde_engine import DerivativeRequest, simulate_samples, steps_to

__all__ = [
    "Estimate",
    "ScanTable",
    "FDCrossCheck",
    "estimate_value",
    "estimate_derivative",
    "sample_integrands",
    "fd_cross_check",
    "regularity_scan",
    "lipschitz_scan",
    "mollified_scan",
    "check_delta",
    "ou_value",
    "ou_derivative",
    "is_ou_setting",
]

DEFAULT_STEPS = 256


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float
    samples: int
    metadata: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_samples(cls, values: np.ndarray, metadata: dict | None = None) -> "Estimate":
        """Mean and standard error with compensated sums in sample order."""
        values = np.asarray(values, dtype=float).reshape(-1)
        n = values.size
        if n < 1:
            raise ValueError("need at least one sample")
        mean = math.fsum(values) / n
        if n > 1:
            var = math.fsum((values - mean) ** 2) / (n - 1)
            stderr = math.sqrt(var / n)
        else:
            stderr = 0.0
        return cls(mean, stderr, n, dict(metadata or {}))


def _run_meta(model, t, steps, eps, seed, phi, backend):
    n = steps_to(t, steps, model.horizon)
    return {"t": t, "steps": n, "dt": t / n if n else 0.0, "eps": eps, "seed": seed,
            "model": model.fingerprint(), "backend": backend or default_backend(),
            "oracle_only": bool(getattr(phi, "oracle_only", False))}


def _check_common(k, t, model, samples):
    if not 0 <= k <= 4:
        raise ValueError(f"derivative order must be in 0..4, got {k}")
    if not 0 <= t <= model.horizon * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, T={model.horizon}]")
    if samples < 1:
        raise ValueError("samples must be positive")


def representation_terms(k: int, phi, states: np.ndarray) -> np.ndarray:
    """Per-sample partition sum from final states ``(S, 2**k, N)``."""
    base = states[:, 0]
    if k == 0:
        return np.asarray(phi.derivative(0, base), dtype=float)
    full = (1 << k) - 1
    total = np.zeros(states.shape[0])
    for blocks in subset_partitions(k)[full]:
        total = total + phi.derivative(len(blocks), base, [states[:, b] for b in blocks])
    return total


def sample_integrands(k, phi, model, drift, diffusion, t, x, dirs=(), samples=1000, eps=0.0, seed=0,
                      steps=DEFAULT_STEPS, jobs=1, backend=None) -> np.ndarray:
    """Per-sample values whose mean is the k-th derivative (``k=0``: the value)."""
    _check_common(k, t, model, samples)
    if len(dirs) != k:
        raise ValueError(f"order {k} needs {k} directions, got {len(dirs)}")
    req = DerivativeRequest(x, tuple(dirs), eps)
    states = simulate_samples(model, drift, diffusion, req, t, steps, seed, samples, jobs=jobs, backend=backend)
    return representation_terms(k, phi, states[:, -1])


def estimate_value(phi, model, drift, diffusion, t, x, samples=1000, eps=0.0, seed=0,
                   steps=DEFAULT_STEPS, jobs=1, backend=None) -> Estimate:
    vals = sample_integrands(0, phi, model, drift, diffusion, t, x, (), samples, eps, seed, steps, jobs, backend)
    return Estimate.from_samples(vals, _run_meta(model, t, steps, eps, seed, phi, backend) | {"k": 0})


def estimate_derivative(k, phi, model, drift, diffusion, t, x, dirs, samples=1000, eps=0.0, seed=0,
                        steps=DEFAULT_STEPS, jobs=1, backend=None) -> Estimate:
    if k < 1:
        raise ValueError("use estimate_value for k = 0")
    vals = sample_integrands(k, phi, model, drift, diffusion, t, x, dirs, samples, eps, seed, steps, jobs, backend)
    return Estimate.from_samples(vals, _run_meta(model, t, steps, eps, seed, phi, backend) | {"k": k})


# ----------------------------------------------------------------------------
# finite-difference cross-check


@dataclass(frozen=True)
class FDCrossCheck:
    representation: Estimate
    finite_difference: Estimate
    gap: float
    gap_stderr: float
    h: float


def fd_cross_check(k, phi, model, drift, diffusion, t, x, dirs, h, samples=1000, eps=0.0, seed=0,
                   steps=DEFAULT_STEPS, jobs=1, backend=None) -> FDCrossCheck:
    """Representation estimate against centered differences of the value, common random numbers.

    ``k=1``: ``(P(x+hu) - P(x-hu)) / 2h``.  ``k=2``: the centered mixed
    difference ``(P(++) - P(+-) - P(-+) + P(--)) / 4h^2``.  The gap standard
    error comes from the paired per-sample differences.
    """
    if k not in (1, 2):
        raise ValueError("fd_cross_check supports k in {1, 2}")
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, float)
    dirs = [np.asarray(u, float) for u in dirs]
    common = dict(samples=samples, eps=eps, seed=seed, steps=steps, jobs=jobs, backend=backend)

    def value_samples(point):
        return sample_integrands(0, phi, model, drift, diffusion, t, point, (), **common)

    rep = sample_integrands(k, phi, model, drift, diffusion, t, x, dirs, **common)
    if k == 1:
        fd = (value_samples(x + h * dirs[0]) - value_samples(x - h * dirs[0])) / (2 * h)
    else:
        u1, u2 = dirs
        fd = (value_samples(x + h * u1 + h * u2) - value_samples(x + h * u1 - h * u2)
              - value_samples(x - h * u1 + h * u2) + value_samples(x - h * u1 - h * u2)) / (4 * h * h)
    meta = _run_meta(model, t, steps, eps, seed, phi, backend) | {"k": k, "h": h}
    diff = Estimate.from_samples(fd - rep)
    return FDCrossCheck(Estimate.from_samples(rep, meta), Estimate.from_samples(fd, meta),
                        diff.value, diff.stderr, h)


# ----------------------------------------------------------------------------
# scans


def check_delta(delta: Sequence[float], k: int) -> tuple[float, ...]:
    delta = tuple(float(d) for d in delta)
    if len(delta) != k:
        raise HypothesisError(f"need one delta per direction: k={k}, got {len(delta)}")
    for d in delta:
        if not 0.0 <= d < 0.5:
            raise HypothesisError(f"each delta_i must lie in [0, 1/2); got {d} "
                                  "(hypothesis: delta_i in [0, 1/2), sum(delta) < 1/2)")
    if sum(delta) >= 0.5:
        raise HypothesisError(f"sum(delta) = {sum(delta)} >= 1/2 violates the admissibility "
                              "hypothesis sum(delta) < 1/2")
    return delta


def _check_lipschitz(k, fields):
    for name, f in fields:
        val = f.lip_seminorm(k)
        if not math.isfinite(val):
            raise HypothesisError(f"{name} ({f.family}) has infinite Lip^{k} seminorm; the Lipschitz "
                                  f"estimate needs |F|_Lip^{k} + |B|_Lip^{k} + |phi|_Lip^{k} < inf")


def _neg_norm_product(model, dirs, delta):
    return math.prod(model.norm_r(-d, u) for u, d in zip(dirs, delta))


def _ols_slope(t, y):
    t, y = np.asarray(t, float), np.asarray(y, float)
    ok = (t > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(t[ok]), np.log(y[ok]), 1)[0])


@dataclass
class ScanTable:
    rows: list[dict]
    summary: dict

    def column(self, name):
        return np.array([r[name] for r in self.rows], dtype=float)


def _prepare_scan(k, delta, model, dirs, t_grid):
    delta = check_delta(delta, k)
    dirs = model.rough_directions(k) if dirs is None else [np.asarray(u, float) for u in dirs]
    if len(dirs) != k:
        raise ValueError(f"need {k} directions")
    t_grid = sorted(float(t) for t in t_grid)
    if not t_grid or t_grid[0] <= 0:
        raise ValueError("scan times must be positive")
    return delta, dirs, t_grid


def regularity_scan(k, delta, phi, model, drift, diffusion, x, t_grid, dirs=None, samples=1000, eps=0.0,
                    seed=0, steps=DEFAULT_STEPS, jobs=1, backend=None) -> ScanTable:
    """Scaled derivative ratios ``t^{sum delta} |D^k P_t phi(x) u| / prod ||u_i||_{-delta_i}``.

    ``raw`` drops the time weight.  ``slope`` is the running log-log slope of
    ``raw`` against ``t``; the summary's ``blowup_exponent`` is minus that
    slope fitted over the smallest decade of the grid.
    """
    delta, dirs, t_grid = _prepare_scan(k, delta, model, dirs, t_grid)
    denom = _neg_norm_product(model, dirs, delta)
    rows = []
    for t in t_grid:
        est = estimate_derivative(k, phi, model, drift, diffusion, t, x, dirs, samples, eps, seed, steps,
                                  jobs, backend)
        raw = abs(est.value) / denom
        rows.append({"t": t, "eps": eps, "k": k, "delta": delta, "value": est.value, "stderr": est.stderr,
                     "samples": samples, "steps": est.metadata["steps"], "seed": seed,
                     "raw": raw, "ratio": t ** sum(delta) * raw})
        rows[-1]["slope"] = _ols_slope([r["t"] for r in rows], [r["raw"] for r in rows])
    ts = np.array(t_grid)
    first = ts <= ts[0] * 10 * (1 + 1e-9)
    raws = np.array([r["raw"] for r in rows])
    ratios = np.array([r["ratio"] for r in rows])
    summary = {"blowup_exponent": -_ols_slope(ts[first], raws[first]),
               "slope": _ols_slope(ts, raws), "max_ratio": float(np.max(ratios)),
               "oracle_only": bool(getattr(phi, "oracle_only", False))}
    return ScanTable(rows, summary)


def lipschitz_scan(k, delta, phi, model, drift, diffusion, x, y, t_grid, dirs=None, samples=1000, eps=0.0,
                   seed=0, steps=DEFAULT_STEPS, jobs=1, backend=None) -> ScanTable:
    """``t^{sum delta} |(D^k P_t phi(x) - D^k P_t phi(y)) u| / (||x-y|| prod ||u_i||_{-delta_i})``.

    Both base points share the noise, so the difference is estimated pathwise.
    """
    _check_lipschitz(k, [("drift", drift), ("diffusion", diffusion), ("observable", phi)])
    delta, dirs, t_grid = _prepare_scan(k, delta, model, dirs, t_grid)
    x, y = np.asarray(x, float), np.asarray(y, float)
    dist = float(np.linalg.norm(x - y))
    denom = _neg_norm_product(model, dirs, delta)
    common = dict(samples=samples, eps=eps, seed=seed, steps=steps, jobs=jobs, backend=backend)
    rows = []
    for t in t_grid:
        if dist == 0.0:
            est = Estimate(0.0, 0.0, samples)
            ratio = 0.0
        else:
            dx = sample_integrands(k, phi, model, drift, diffusion, t, x, dirs, **common)
            dy = sample_integrands(k, phi, model, drift, diffusion, t, y, dirs, **common)
            est = Estimate.from_samples(dx - dy)
            ratio = t ** sum(delta) * abs(est.value) / (dist * denom)
        rows.append({"t": t, "eps": eps, "k": k, "delta": delta, "value": est.value, "stderr": est.stderr,
                     "samples": samples, "steps": steps_to(t, steps, model.horizon), "seed": seed,
                     "ratio": ratio})
        rows[-1]["slope"] = _ols_slope([r["t"] for r in rows], [r["ratio"] for r in rows])
    return ScanTable(rows, {"max_ratio": max(r["ratio"] for r in rows), "distance": dist})


def mollified_scan(k, delta, phi, model, drift, diffusion, x, t_grid, eps_list, dirs=None, samples=1000,
                   seed=0, steps=DEFAULT_STEPS, jobs=1, backend=None) -> ScanTable:
    """Scaled derivative ratios for each mollification ``eps`` plus an ``eps=0`` baseline.

    Summary: per-eps grid maxima, their max/min spread, and the per-eps gap
    ``max_t |ratio_eps(t) - ratio_0(t)|`` (common random numbers).
    """
    eps_list = sorted({float(e) for e in eps_list} | {0.0}, reverse=True)
    if any(e < 0 or e > model.horizon for e in eps_list):
        raise ValueError("eps must lie in [0, T]")
    tables = {e: regularity_scan(k, delta, phi, model, drift, diffusion, x, t_grid, dirs, samples, e, seed,
                                 steps, jobs, backend) for e in eps_list}
    base = tables[0.0].column("ratio")
    rows, maxima, gaps = [], {}, {}
    for e in eps_list:
        tab = tables[e]
        rows.extend(tab.rows)
        maxima[e] = tab.summary["max_ratio"]
        gaps[e] = float(np.max(np.abs(tab.column("ratio") - base)))
    positive = [e for e in eps_list if e > 0]
    pos_max = [maxima[e] for e in positive]
    spread = max(pos_max) / min(pos_max) if pos_max and min(pos_max) > 0 else float("inf")
    seq = [gaps[e] for e in positive]  # descending eps
    monotone = all(a > b for a, b in zip(seq, seq[1:]))
    return ScanTable(rows, {"maxima": maxima, "gaps": gaps, "spread": spread, "gap_monotone": monotone})


# ----------------------------------------------------------------------------
# Ornstein-Uhlenbeck oracle (F = 0, constant B, phi = ||x||^2), exact for the discrete scheme


def is_ou_setting(drift, diffusion, phi) -> bool:
    return drift.family == "zero" and diffusion.family == "constant" and phi.family == "quadratic"


def ou_value(model, q, x, t, steps=DEFAULT_STEPS, eps=0.0) -> float:
    """``||e^{tA}x||^2 + sum_{j=1..n} ||e^{(j dt + eps)A} Q||_HS^2 dt`` on the scheme's grid."""
    n = steps_to(t, steps, model.horizon)
    mean = model.semigroup_apply(t, x)
    if n == 0:
        return float(mean @ mean)
    dt = t / n
    row_sq = np.sum(np.asarray(q, float) ** 2, axis=1)
    j = np.arange(1, n + 1)[:, None]
    var = math.fsum((np.exp(2 * (j * dt + eps) * model.eigenvalues[None, :]) * row_sq).ravel()) * dt
    return float(mean @ mean) + var


def ou_derivative(model, k, x, dirs, t) -> float:
    """``2<e^{tA}x, e^{tA}u>`` for ``k=1``, ``2<e^{tA}u_1, e^{tA}u_2>`` for ``k=2``, zero beyond."""
    if k == 1:
        return 2.0 * float(model.semigroup_apply(t, x) @ model.semigroup_apply(t, dirs[0]))
    if k == 2:
        return 2.0 * float(model.semigroup_apply(t, dirs[0]) @ model.semigroup_apply(t, dirs[1]))
    return 0.0
