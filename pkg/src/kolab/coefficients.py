"""Drift, diffusion and observable families with exact derivatives.

All evaluators are batched: ``x`` and each direction may carry leading
sample axes ``(..., N)``.  Drift derivatives return ``(..., N)``, diffusion
derivatives ``(..., N, M)`` and observables ``(...)``.

Norm conventions follow the usual ones for bounded-derivative classes:
``cb_seminorm(m) = sup_x ||f^(m)(x)||``, ``cb_norm(m) = ||f(0)|| + sum_{1..m}``
of the seminorms, ``lip_seminorm(m)`` is the global Lipschitz constant of
``f^(m)`` and ``lip_norm(m) = ||f(0)|| + sum_{0..m}`` of those.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .hilbert import hs_norm

__all__ = [
    "MAX_ORDER",
    "Field",
    "ZeroDrift",
    "LinearDrift",
    "SmoothBoundedDrift",
    "NemytskiiPoly",
    "ConstantDiffusion",
    "LinearDiffusion",
    "SmoothBoundedDiffusion",
    "LinearFunctional",
    "QuadraticNorm",
    "CosFunctional",
    "DriftPack",
    "DiffusionPack",
    "eval_derivative",
    "fd_consistency",
    "FDReport",
]

MAX_ORDER = 4
INF = math.inf


def sin_deriv(m: int, z):
    """m-th derivative of sin, exact phase cycling."""
    r = m % 4
    if r == 0:
        return np.sin(z)
    if r == 1:
        return np.cos(z)
    if r == 2:
        return -np.sin(z)
    return -np.cos(z)


def cos_deriv(m: int, z):
    return sin_deriv(m + 1, z)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _prod_dots(w, dirs):
    out = 1.0
    for u in dirs:
        out = out * _dot(np.asarray(u, dtype=float), w)
    return out


class DriftPack(NamedTuple):
    const: np.ndarray
    lin: np.ndarray
    ridge_scale: float
    ridge_w: np.ndarray
    ridge_out: np.ndarray
    nem_on: bool
    nem_synth: np.ndarray
    nem_proj: np.ndarray
    nem_coef: np.ndarray
    nem_kappa: float


class DiffusionPack(NamedTuple):
    const: np.ndarray
    lin: np.ndarray
    ridge_scale: float
    ridge_w: np.ndarray
    ridge_out: np.ndarray


class Field:
    """Common interface; subclasses implement ``_derivative`` and the norms."""

    kind = "field"
    max_order = MAX_ORDER
    oracle_only = False
    family = "field"

    def derivative(self, m: int, x, dirs: Sequence = ()):
        if not 0 <= m <= self.max_order:
            raise ValueError(f"{self.family}: derivative order {m} exceeds cap {self.max_order}")
        if len(dirs) != m:
            raise ValueError(f"order {m} needs {m} directions, got {len(dirs)}")
        return self._derivative(m, np.asarray(x, dtype=float), [np.asarray(u, dtype=float) for u in dirs])

    def __call__(self, x):
        return self.derivative(0, x)

    def _derivative(self, m, x, dirs):
        raise NotImplementedError

    def norm_at_zero(self) -> float:
        raise NotImplementedError

    def cb_seminorm(self, m: int) -> float:
        raise NotImplementedError

    def lip_seminorm(self, m: int) -> float:
        raise NotImplementedError

    def cb_norm(self, m: int) -> float:
        return self.norm_at_zero() + sum(self.cb_seminorm(j) for j in range(1, m + 1))

    def lip_norm(self, m: int) -> float:
        return self.norm_at_zero() + sum(self.lip_seminorm(j) for j in range(0, m + 1))

    def describe(self) -> dict:
        return {"family": self.family}


# ----------------------------------------------------------------------------
# drift fields F: H -> H


@dataclass(frozen=True, eq=False)
class ZeroDrift(Field):
    dim: int
    kind = "drift"
    family = "zero"

    def _derivative(self, m, x, dirs):
        return np.zeros_like(x)

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        return 0.0

    def lip_seminorm(self, m):
        return 0.0

    def pack(self) -> DriftPack:
        return _drift_pack(self.dim)


@dataclass(frozen=True, eq=False)
class LinearDrift(Field):
    """``F(x) = L x``."""

    matrix: np.ndarray
    kind = "drift"
    family = "linear"

    def __post_init__(self):
        object.__setattr__(self, "matrix", np.asarray(self.matrix, dtype=float))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def _derivative(self, m, x, dirs):
        if m == 0:
            return x @ self.matrix.T
        if m == 1:
            return dirs[0] @ self.matrix.T
        return np.zeros(np.broadcast_shapes(x.shape, *(u.shape for u in dirs)))

    def op_norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        if m == 0:
            return 0.0 if not self.matrix.any() else INF
        return self.op_norm() if m == 1 else 0.0

    def lip_seminorm(self, m):
        return self.op_norm() if m == 0 else 0.0

    def pack(self):
        p = _drift_pack(self.dim)
        return p._replace(lin=self.matrix.copy())


@dataclass(frozen=True, eq=False)
class SmoothBoundedDrift(Field):
    """``F(x) = c sin(<w, x>) d``; every derivative is bounded."""

    scale: float
    w: np.ndarray
    d: np.ndarray
    kind = "drift"
    family = "smooth_bounded"

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "d", np.asarray(self.d, dtype=float))

    @property
    def dim(self):
        return self.d.shape[0]

    def _derivative(self, m, x, dirs):
        s = self.scale * sin_deriv(m, _dot(x, self.w)) * _prod_dots(self.w, dirs)
        return np.asarray(s)[..., None] * self.d

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        nw = np.linalg.norm(self.w)
        if m == 0 and nw == 0:
            return 0.0
        return abs(self.scale) * nw ** m * np.linalg.norm(self.d)

    def lip_seminorm(self, m):
        return abs(self.scale) * np.linalg.norm(self.w) ** (m + 1) * np.linalg.norm(self.d)

    def pack(self):
        p = _drift_pack(self.dim)
        return p._replace(ridge_scale=float(self.scale), ridge_w=self.w.copy(), ridge_out=self.d.copy())


def _cubic_cutoff_polys(amplitude: float, kappa: float, orders: int) -> list[Polynomial]:
    # g(z) = -a z^3 exp(-kappa z^2); g^(m) = p_m(z) exp(-kappa z^2)
    polys = [Polynomial([0.0, 0.0, 0.0, -amplitude])]
    z = Polynomial([0.0, 1.0])
    for _ in range(orders):
        p = polys[-1]
        polys.append(p.deriv() - 2.0 * kappa * z * p)
    return polys


def _sup_abs_profile(p: Polynomial, q: Polynomial, kappa: float) -> float:
    """``sup_z |p(z) exp(-kappa z^2)|`` where ``q`` is the next derivative's polynomial."""
    coef = np.trim_zeros(p.coef, "b")
    if coef.size == 0:
        return 0.0
    if kappa == 0.0:
        return abs(coef[0]) if coef.size == 1 else INF
    candidates = [0.0] + [r.real for r in q.roots() if abs(r.imag) < 1e-9]
    return max(abs(p(z)) * math.exp(-kappa * z * z) for z in candidates)


@dataclass(frozen=True, eq=False)
class NemytskiiPoly(Field):
    """Pointwise damped cubic ``g(z) = -a z^3 exp(-z^2 / (2 r^2))`` in physical space.

    Coordinates are sine-series coefficients on (0, 1); ``g`` is applied at
    ``quad_points`` midpoints and projected back.  ``radius=inf`` drops the
    cutoff and leaves the bare cubic, whose low-order derivatives are unbounded.
    Norms are upper bounds from the synthesis/projection operator norms.
    """

    dim: int
    amplitude: float = 1.0
    radius: float = 2.0
    quad_points: int | None = None
    kind = "drift"
    family = "nemytskii"
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        q = self.quad_points or 4 * self.dim
        if q <= self.dim:
            raise ValueError("quad_points must exceed dim")
        object.__setattr__(self, "quad_points", q)
        xi = (np.arange(q) + 0.5) / q
        synth = np.sqrt(2.0) * np.sin(np.pi * np.outer(xi, np.arange(1, self.dim + 1)))
        self._cache["synth"] = synth
        self._cache["proj"] = synth.T / q
        kappa = 0.0 if math.isinf(self.radius) else 1.0 / (2.0 * self.radius ** 2)
        self._cache["kappa"] = kappa
        self._cache["polys"] = _cubic_cutoff_polys(self.amplitude, kappa, MAX_ORDER + 2)

    @property
    def kappa(self) -> float:
        return self._cache["kappa"]

    def profile(self, m: int, z):
        return self._cache["polys"][m](z) * np.exp(-self.kappa * np.square(z))

    def profile_sup(self, m: int) -> float:
        polys = self._cache["polys"]
        return _sup_abs_profile(polys[m], polys[m + 1], self.kappa)

    def _derivative(self, m, x, dirs):
        S, P = self._cache["synth"], self._cache["proj"]
        vals = self.profile(m, x @ S.T)
        for u in dirs:
            vals = vals * (u @ S.T)
        return vals @ P.T

    def _op_constants(self):
        S, P = self._cache["synth"], self._cache["proj"]
        return (np.linalg.norm(P, 2), np.linalg.norm(S, 2),
                float(np.max(np.linalg.norm(S, axis=1))))

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        p2, s2, sinf = self._op_constants()
        g = self.profile_sup(m)
        if math.isinf(g):
            return INF
        if m == 0:
            return p2 * math.sqrt(self.quad_points) * g
        return p2 * g * s2 * sinf ** (m - 1)

    def lip_seminorm(self, m):
        p2, s2, sinf = self._op_constants()
        g = self.profile_sup(m + 1)
        if math.isinf(g):
            return INF
        return p2 * g * s2 * sinf ** m

    def pack(self):
        p = _drift_pack(self.dim)
        coef = np.zeros((MAX_ORDER + 1, 8))
        for m in range(MAX_ORDER + 1):
            c = self._cache["polys"][m].coef
            coef[m, : c.size] = c
        return p._replace(nem_on=True, nem_synth=self._cache["synth"].copy(),
                          nem_proj=self._cache["proj"].copy(), nem_coef=coef, nem_kappa=self.kappa)

    def describe(self):
        return {"family": self.family, "amplitude": self.amplitude, "radius": self.radius}


def _drift_pack(n: int) -> DriftPack:
    return DriftPack(
        const=np.zeros(n), lin=np.zeros((n, n)), ridge_scale=0.0, ridge_w=np.zeros(n),
        ridge_out=np.zeros(n), nem_on=False, nem_synth=np.zeros((1, n)),
        nem_proj=np.zeros((n, 1)), nem_coef=np.zeros((MAX_ORDER + 1, 8)), nem_kappa=0.0,
    )


# ----------------------------------------------------------------------------
# diffusion fields B: H -> HS(U, H)


def _diffusion_pack(n: int, m: int) -> DiffusionPack:
    return DiffusionPack(const=np.zeros((n, m)), lin=np.zeros((n, n, m)), ridge_scale=0.0,
                         ridge_w=np.zeros(n), ridge_out=np.zeros((n, m)))


def _bshape(x, dirs, tail):
    return np.broadcast_shapes(x.shape, *(u.shape for u in dirs))[:-1] + tail


@dataclass(frozen=True, eq=False)
class ConstantDiffusion(Field):
    q: np.ndarray
    kind = "diffusion"
    family = "constant"

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))

    @property
    def dim(self):
        return self.q.shape[0]

    def _derivative(self, m, x, dirs):
        if m == 0:
            return np.broadcast_to(self.q, _bshape(x, dirs, self.q.shape)).copy()
        return np.zeros(_bshape(x, dirs, self.q.shape))

    def norm_at_zero(self):
        return hs_norm(self.q)

    def cb_seminorm(self, m):
        return hs_norm(self.q) if m == 0 else 0.0

    def lip_seminorm(self, m):
        return 0.0

    def pack(self):
        n, mu = self.q.shape
        return _diffusion_pack(n, mu)._replace(const=self.q.copy())


@dataclass(frozen=True, eq=False)
class LinearDiffusion(Field):
    """``B(x) = base + sum_j x_j G_j`` with ``coupling[:, j, :] = G_j``."""

    base: np.ndarray
    coupling: np.ndarray
    kind = "diffusion"
    family = "linear"

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "coupling", np.asarray(self.coupling, dtype=float))

    @property
    def dim(self):
        return self.base.shape[0]

    def _derivative(self, m, x, dirs):
        if m == 0:
            return self.base + np.einsum("...j,ijk->...ik", x, self.coupling)
        if m == 1:
            return np.einsum("...j,ijk->...ik", dirs[0], self.coupling)
        return np.zeros(_bshape(x, dirs, self.base.shape))

    def coupling_norm(self) -> float:
        n, _, mu = self.coupling.shape
        flat = self.coupling.transpose(0, 2, 1).reshape(n * mu, n)
        return float(np.linalg.norm(flat, 2))

    def norm_at_zero(self):
        return hs_norm(self.base)

    def cb_seminorm(self, m):
        if m == 0:
            return hs_norm(self.base) if not self.coupling.any() else INF
        return self.coupling_norm() if m == 1 else 0.0

    def lip_seminorm(self, m):
        return self.coupling_norm() if m == 0 else 0.0

    def pack(self):
        n, mu = self.base.shape
        return _diffusion_pack(n, mu)._replace(const=self.base.copy(), lin=self.coupling.copy())


@dataclass(frozen=True, eq=False)
class SmoothBoundedDiffusion(Field):
    """``B(x) = base + c sin(<w, x>) G``."""

    base: np.ndarray
    scale: float
    w: np.ndarray
    g: np.ndarray
    kind = "diffusion"
    family = "smooth_bounded"

    def __post_init__(self):
        for name in ("base", "w", "g"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))

    @property
    def dim(self):
        return self.base.shape[0]

    def _derivative(self, m, x, dirs):
        s = self.scale * sin_deriv(m, _dot(x, self.w)) * _prod_dots(self.w, dirs)
        out = np.asarray(s)[..., None, None] * self.g
        return out + self.base if m == 0 else out

    def norm_at_zero(self):
        return hs_norm(self.base)

    def cb_seminorm(self, m):
        if m == 0:
            # convex in sin(<w,x>) in [-1, 1]
            if not np.linalg.norm(self.w):
                return hs_norm(self.base)
            return max(hs_norm(self.base + self.scale * self.g), hs_norm(self.base - self.scale * self.g))
        return abs(self.scale) * np.linalg.norm(self.w) ** m * hs_norm(self.g)

    def lip_seminorm(self, m):
        return abs(self.scale) * np.linalg.norm(self.w) ** (m + 1) * hs_norm(self.g)

    def pack(self):
        n, mu = self.base.shape
        return _diffusion_pack(n, mu)._replace(
            const=self.base.copy(), ridge_scale=float(self.scale), ridge_w=self.w.copy(), ridge_out=self.g.copy())


# ----------------------------------------------------------------------------
# observables phi: H -> R


@dataclass(frozen=True, eq=False)
class LinearFunctional(Field):
    v: np.ndarray
    kind = "observable"
    family = "linear"

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def _derivative(self, m, x, dirs):
        if m == 0:
            return _dot(x, self.v)
        if m == 1:
            return _dot(dirs[0], self.v)
        return np.zeros(_bshape(x, dirs, ()))

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        if m == 0:
            return INF if self.v.any() else 0.0
        return float(np.linalg.norm(self.v)) if m == 1 else 0.0

    def lip_seminorm(self, m):
        return float(np.linalg.norm(self.v)) if m == 0 else 0.0


@dataclass(frozen=True, eq=False)
class QuadraticNorm(Field):
    """``phi(x) = ||x||^2``; unbounded first derivative, used as a closed-form oracle."""

    kind = "observable"
    family = "quadratic"
    oracle_only = True

    def _derivative(self, m, x, dirs):
        if m == 0:
            return _dot(x, x)
        if m == 1:
            return 2.0 * _dot(x, dirs[0])
        if m == 2:
            return 2.0 * _dot(dirs[0], dirs[1]) + 0.0 * _dot(x, x)
        return np.zeros(_bshape(x, dirs, ()))

    def norm_at_zero(self):
        return 0.0

    def cb_seminorm(self, m):
        return INF if m <= 1 else (2.0 if m == 2 else 0.0)

    def lip_seminorm(self, m):
        return INF if m == 0 else (2.0 if m == 1 else 0.0)


@dataclass(frozen=True, eq=False)
class CosFunctional(Field):
    v: np.ndarray
    kind = "observable"
    family = "cos"

    def __post_init__(self):
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))

    def _derivative(self, m, x, dirs):
        return cos_deriv(m, _dot(x, self.v)) * _prod_dots(self.v, dirs)

    def norm_at_zero(self):
        return 1.0

    def cb_seminorm(self, m):
        return float(np.linalg.norm(self.v)) ** m

    def lip_seminorm(self, m):
        return float(np.linalg.norm(self.v)) ** (m + 1)


# ----------------------------------------------------------------------------


def eval_derivative(f: Field, m: int, x, dirs: Sequence = ()):
    """``f^(m)(x)(dirs...)``."""
    return f.derivative(m, x, dirs)


@dataclass
class FDReport:
    slope: float
    errors: np.ndarray
    product_rule_errors: np.ndarray


def _loglog_slope(h, err) -> float:
    h, err = np.asarray(h, float), np.asarray(err, float)
    ok = err > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(h[ok]), np.log(err[ok]), 1)[0])


def fd_consistency(f: Field, m: int, x, dirs: Sequence, h_list: Sequence[float]) -> FDReport:
    """Check ``f^(m)`` against centered differences of ``f^(m-1)`` in the last direction.

    Also checks the product rule for ``Phi(v_1..v_m) = f^(m-1)(v_m)(v_1..v_{m-1})``
    with the base point in the last slot.  Returns the log-log error slope
    (NaN when every error is exactly zero).
    """
    if not 1 <= m <= 3:
        raise ValueError("fd_consistency supports orders 1..3")
    x = np.asarray(x, float)
    dirs = [np.asarray(u, float) for u in dirs]
    head, last = dirs[:-1], dirs[-1]
    exact = f.derivative(m, x, dirs)
    n = m - 1
    pert = [dirs[(i + 1) % m] for i in range(n)] + [last]

    def Phi(v):
        return f.derivative(n, v[-1], v[:-1])

    v0 = head + [x]
    formula = f.derivative(n + 1, x, head + [pert[-1]])
    for i in range(n):
        formula = formula + f.derivative(n, x, head[:i] + [pert[i]] + head[i + 1:])

    errs, prod_errs = [], []
    for h in h_list:
        fd = (f.derivative(n, x + h * last, head) - f.derivative(n, x - h * last, head)) / (2 * h)
        errs.append(float(np.linalg.norm(np.atleast_1d(fd - exact))))
        vp = [a + h * b for a, b in zip(v0, pert)]
        vm = [a - h * b for a, b in zip(v0, pert)]
        pfd = (Phi(vp) - Phi(vm)) / (2 * h)
        prod_errs.append(float(np.linalg.norm(np.atleast_1d(pfd - formula))))
    errs_arr = np.array(errs)
    return FDReport(_loglog_slope(h_list, errs_arr), errs_arr, np.array(prod_errs))
