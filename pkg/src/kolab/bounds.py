"""Explicit bound functions: Beta, generalized exponential, exponent offsets and Theta.

Infinite bounds are returned as ``math.inf``; they are legitimate values, not errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from scipy.special import betaln

from .errors import NumericalGuardError
from .partitions import Partition, enumerate_partitions

__all__ = [
    "ExponentSpec",
    "BoundInputs",
    "beta_fn",
    "gen_exp",
    "iota",
    "theta",
    "theta_bar",
    "assemble_rhs_bound",
    "assemble_lip_rhs_bound",
    "MAX_TERMS",
]

MAX_TERMS = 10_000


def beta_fn(x: float, y: float) -> float:
    """``int_0^1 t^(x-1) (1-t)^(y-1) dt`` through log-Gamma."""
    if x <= 0 or y <= 0:
        raise ValueError(f"Beta function needs positive arguments, got ({x}, {y})")
    return math.exp(betaln(x, y))


def gen_exp(a: float, b: float, x: float, tol: float = 1e-15) -> float:
    """``1 + sum_n x^n prod_{k<n} B(1-b, k(1-b) + 1-a)``.

    Summation stops once a term drops below ``tol`` after three consecutive
    term ratios below 1/2 (the ratios decrease in ``n``, so the tail is then
    bounded by the last term).  Raises ``NumericalGuardError`` after
    ``MAX_TERMS`` terms.
    """
    if not (a < 1 and b < 1):
        raise ValueError(f"generalized exponential needs a, b < 1, got ({a}, {b})")
    if x < 0:
        raise ValueError("argument must be nonnegative")
    if x == 0:
        return 1.0
    total = 1.0
    log_term = 0.0
    small_ratios = 0
    log_x = math.log(x)
    for k in range(MAX_TERMS):
        log_ratio = log_x + betaln(1 - b, k * (1 - b) + 1 - a)
        log_term += log_ratio
        if log_term > 700:
            raise NumericalGuardError(f"E_{{{a},{b}}}[{x}] overflows double precision")
        term = math.exp(log_term)
        total += term
        small_ratios = small_ratios + 1 if log_ratio < -math.log(2) else 0
        if small_ratios >= 3 and term < tol:
            return total
    raise NumericalGuardError(f"E_{{{a},{b}}}[{x}] did not converge within {MAX_TERMS} terms")


@dataclass(frozen=True)
class ExponentSpec:
    delta: tuple[float, ...]
    alpha: float = 0.0
    beta: float = 0.0
    subset: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(float(d) for d in self.delta))
        object.__setattr__(self, "subset", frozenset(self.subset))
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if not 0 <= self.beta < 0.5:
            raise ValueError("beta must lie in [0, 1/2)")

    @property
    def k(self) -> int:
        return len(self.delta)


def iota(spec: ExponentSpec) -> float:
    """``sum_{i in J, i<=k} delta_i - [#(J cap 1..k) >= 2] min(1 - alpha, 1/2 - beta)``."""
    inside = [i for i in spec.subset if 1 <= i <= spec.k]
    val = sum(spec.delta[i - 1] for i in sorted(inside))
    if len(inside) >= 2:
        val -= min(1 - spec.alpha, 0.5 - spec.beta)
    return val


@dataclass(frozen=True)
class BoundInputs:
    """Lipschitz-type constants and model quantities entering Theta."""

    L: float
    L_hat: float
    p: float
    T: float
    alpha: float
    beta: float
    chi_alpha: float
    chi_beta: float

    def __post_init__(self):
        if min(self.L, self.L_hat, self.T, self.chi_alpha, self.chi_beta) < 0:
            raise ValueError("bound inputs must be nonnegative")
        if self.p < 1:
            raise ValueError("moment order p must be >= 1")

    @classmethod
    def from_model(cls, model, L, L_hat, p=2.0, alpha=0.0, beta=0.0) -> "BoundInputs":
        return cls(L, L_hat, p, model.horizon, alpha, beta, model.chi(alpha), model.chi(beta))

    def with_constants(self, L, L_hat) -> "BoundInputs":
        return BoundInputs(L, L_hat, self.p, self.T, self.alpha, self.beta, self.chi_alpha, self.chi_beta)


def theta(lam: float, inputs: BoundInputs, tol: float = 1e-15) -> float:
    """Three-branch Theta: finite for ``lam < 1/2`` or ``L_hat = 0``, else ``inf``."""
    if lam >= 1:
        raise ValueError("Theta is defined for lambda < 1")
    a, b = inputs.alpha, inputs.beta
    if inputs.L_hat > 0 and lam < 0.5:
        drift = inputs.chi_alpha * inputs.L * math.sqrt(2.0) * inputs.T ** (1 - a) / math.sqrt(1 - a)
        noise = inputs.chi_beta * inputs.L_hat * math.sqrt(inputs.p * (inputs.p - 1) * inputs.T ** (1 - 2 * b))
        return math.sqrt(2.0) * math.sqrt(gen_exp(2 * lam, max(a, 2 * b), (drift + noise) ** 2, tol))
    if inputs.L_hat == 0:
        return gen_exp(lam, a, inputs.chi_alpha * inputs.L * inputs.T ** (1 - a), tol)
    return math.inf


def theta_bar(lam: float, inputs: BoundInputs, tol: float = 1e-15) -> float:
    """``max(Theta(L, L_hat), Theta(L, 0))``: the sup of Theta over ``[0,L] x [0,L_hat]``."""
    return max(theta(lam, inputs, tol), theta(lam, inputs.with_constants(inputs.L, 0.0), tol))


def _time_factor(T: float, count: int, alpha: float, beta: float) -> float:
    return max(T, 1.0) ** (count * min(1 - alpha, 0.5 - beta))


def _lookup(sups: Mapping, part: Partition, block: tuple[int, ...]) -> float:
    try:
        return float(sups[(part, block)])
    except KeyError:
        raise ValueError(f"missing block supremum for partition {part}, block {block}") from None


def assemble_rhs_bound(k: int, alpha: float, beta: float, T: float, phi_norm: float,
                       block_sups: Mapping[tuple[Partition, tuple[int, ...]], float]) -> float:
    """``|T v 1|^{floor(k/2) min(1-a, 1/2-b)} ||phi||_{C_b^k} sum_w prod_{I in w} sup_I``.

    ``block_sups[(w, I)]`` is the weighted moment supremum of the derivative
    process for block ``I`` (moment order ``#w``).
    """
    total = math.fsum(math.prod(_lookup(block_sups, w, I) for I in w.blocks) for w in enumerate_partitions(k))
    return _time_factor(T, k // 2, alpha, beta) * phi_norm * total


def assemble_lip_rhs_bound(k: int, alpha: float, beta: float, T: float, phi_lip_norm: float,
                           base_lip: Mapping[Partition, float],
                           block_sups: Mapping[tuple[Partition, tuple[int, ...]], float],
                           block_lip_sups: Mapping[tuple[Partition, tuple[int, ...]], float]) -> float:
    """Lipschitz analogue with exponent ``ceil(k/2)``.

    For each partition ``w``: ``base_lip[w] * prod_I sup_I + sum_I lip_I * prod_{J != I} sup_J``.
    """
    terms = []
    for w in enumerate_partitions(k):
        if w not in base_lip:
            raise ValueError(f"missing base Lipschitz supremum for partition {w}")
        sups = [_lookup(block_sups, w, I) for I in w.blocks]
        lips = [_lookup(block_lip_sups, w, I) for I in w.blocks]
        part = base_lip[w] * math.prod(sups)
        for i, lip in enumerate(lips):
            part += lip * math.prod(s for j, s in enumerate(sups) if j != i)
        terms.append(part)
    return _time_factor(T, -(-k // 2), alpha, beta) * phi_lip_norm * math.fsum(terms)


def bounds_table(model, lambdas: Sequence[float], Ls: Sequence[float], L_hats: Sequence[float],
                 p: float = 2.0, alpha: float = 0.0, beta: float = 0.0,
                 delta: Sequence[float] = ()) -> list[dict]:
    """Rows of Beta, E, iota, Theta and Theta-bar over a parameter grid.

    ``beta_fn`` is the first factor ``B(1-alpha, 1-lambda)`` of the series for
    ``E_{lambda,alpha}``, ``gen_exp`` is ``E_{lambda,alpha}[L]`` and ``iota``
    uses the full index set ``{1..k}`` of ``delta``.
    """
    full = ExponentSpec(tuple(delta), alpha, beta, frozenset(range(1, len(delta) + 1)))
    rows = []
    for lam in lambdas:
        for L in Ls:
            for Lh in L_hats:
                inp = BoundInputs.from_model(model, L, Lh, p, alpha, beta)
                rows.append({"lambda": lam, "L": L, "L_hat": Lh, "p": p, "alpha": alpha, "beta": beta,
                             "chi_alpha": inp.chi_alpha, "chi_beta": inp.chi_beta,
                             "beta_fn": beta_fn(1 - alpha, 1 - lam), "gen_exp": gen_exp(lam, alpha, L),
                             "iota": iota(full), "theta": theta(lam, inp), "theta_bar": theta_bar(lam, inp)})
    return rows
