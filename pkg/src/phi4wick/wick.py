"""Wick maps, Bell polynomials and the free commutative Hopf algebra S(R[X]).

The Wick map sends X^n to (mu^{-1} (x) id) Delta(X^n), i.e. the polynomial
whose expectation vanishes for n >= 1. When the cumulants are kappa(X^p) =
sigma_p Y (values in R[Y]) it reduces to the complete Bell polynomial
B_n(X, -sigma_2 Y, ..., -sigma_n Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

from .exact_algebra import (
    Functional,
    LinComb,
    Poly,
    X,
    Y,
    as_rational,
    compositions,
    exp_star,
    functional_inverse,
    multinomial,
    partitions,
)

__all__ = [
    "bell_symbols",
    "bell_complete",
    "bell_partial",
    "wick_map",
    "CumulantSpec",
    "wick_map_xy",
    "wick_map_xy_from_cumulants",
    "SymMonomial",
    "sym_monomial",
    "h_product",
    "coproduct_H",
    "takeuchi_antipode",
    "antipode_H",
    "mu_hat",
    "wick_map_free",
]


def bell_symbols(n: int, first: str = "X", rest: str = "Y") -> List[Poly]:
    """Formal arguments ``[X, Y2, ..., Yn]`` for the Bell polynomials."""
    return [Poly.var(first)] + [Poly.var(f"{rest}{p}") for p in range(2, n + 1)]


def _bell_term(n: int, mult: Mapping[int, int], args: Sequence) -> Poly:
    # n! prod_p (1/j_p!) (x_p/p!)^{j_p}
    coeff = Fraction(math.factorial(n))
    term = Poly.const(1)
    for p, j in mult.items():
        coeff /= math.factorial(j) * math.factorial(p) ** j
        term = term * Poly.coerce(args[p - 1]) ** j
    return term * coeff


def bell_complete(n: int, args: Sequence | None = None) -> Poly:
    """Complete exponential Bell polynomial B_n(x_1, ..., x_n).

    ``args[p-1]`` is the value substituted for x_p; with the default symbolic
    arguments this is ``B_n(X, Y2, ..., Yn)``. To get the Wick-map form
    B_n(X, -Y2, ...) pass the negated symbols.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if args is None:
        args = bell_symbols(n)
    if len(args) < n:
        raise ValueError(f"B_{n} needs {n} arguments, got {len(args)}")
    out = Poly()
    for mult in partitions(n):
        out = out + _bell_term(n, mult, args)
    return out


def bell_partial(n: int, k: int, args: Sequence | None = None) -> Poly:
    """Partial Bell polynomial B_{n,k}: the part of B_n with exactly k blocks."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got n={n}, k={k}")
    if args is None:
        args = bell_symbols(n - k + 1)
    out = Poly()
    for mult in partitions(n):
        if sum(mult.values()) == k:
            out = out + _bell_term(n, mult, args)
    return out


def wick_map(moments: Functional, n: int) -> Poly:
    """W(X^n) = sum_k C(n, k) mu^{-1}(X^k) X^{n-k} for a moment functional mu."""
    if n > moments.nmax:
        raise ValueError(f"n = {n} exceeds the truncation order {moments.nmax}")
    inv = functional_inverse(moments)
    out = Poly()
    for k in range(n + 1):
        out = out + Poly.coerce(inv[k]) * (math.comb(n, k)) * X ** (n - k)
    return out


@dataclass
class CumulantSpec:
    """Cumulants kappa(X) = 0 and kappa(X^p) = sigma_p Y for p >= 2.

    ``sigma`` maps p to a Fraction or a Poly; missing entries are zero.
    """

    sigma: Dict[int, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for p, s in self.sigma.items():
            if p < 2:
                raise ValueError("cumulant coefficients start at p = 2 (kappa(X) = 0)")
            s = s if isinstance(s, Poly) else as_rational(s)
            if s != 0:
                clean[int(p)] = s
        self.sigma = clean

    @classmethod
    def formal(cls, pmax: int, prefix: str = "sigma") -> "CumulantSpec":
        """Indeterminates sigma2, ..., sigma{pmax}."""
        return cls({p: Poly.var(f"{prefix}{p}") for p in range(2, pmax + 1)})

    def get(self, p: int):
        return self.sigma.get(p, Fraction(0))

    def cumulant_functional(self, nmax: int) -> Functional:
        """kappa as an R[Y]-valued functional truncated at ``nmax``."""
        vals = [Fraction(0), Fraction(0)] + [Poly.coerce(self.get(p)) * Y for p in range(2, nmax + 1)]
        return Functional(vals[: nmax + 1])


def wick_map_xy(spec: CumulantSpec, n: int) -> Poly:
    """W(X^n) = B_n(X, -sigma_2 Y, ..., -sigma_n Y) as a polynomial in X, Y."""
    args = [X] + [-(Poly.coerce(spec.get(p)) * Y) for p in range(2, n + 1)]
    return bell_complete(n, args)


def wick_map_xy_from_cumulants(spec: CumulantSpec, n: int) -> Poly:
    """Same map, computed as (mu^{-1} (x) id) Delta with mu = exp_*(kappa).

    Independent of the Bell-polynomial route; used to cross-check it.
    """
    mu = exp_star(spec.cumulant_functional(max(n, 1)))
    return wick_map(mu, n)


# ---------------------------------------------------------------------------
# Free commutative algebra H = S(R[X])
# ---------------------------------------------------------------------------

SymMonomial = Tuple[int, ...]
"""X^{k_1} ⊙ ... ⊙ X^{k_j} stored as the sorted tuple (k_1, ..., k_j); () is the unit."""


def sym_monomial(*powers: int) -> SymMonomial:
    if any(p < 1 for p in powers):
        raise ValueError("factors of a symmetric monomial are positive powers")
    return tuple(sorted(powers))


def h_product(a: SymMonomial, b: SymMonomial) -> SymMonomial:
    return tuple(sorted(a + b))


def _coproduct_generator(n: int) -> LinComb:
    # binomial coproduct; X^0 is the unit of H
    out = LinComb()
    for k in range(n + 1):
        left = (k,) if k else ()
        right = (n - k,) if n - k else ()
        out.add_term((left, right), math.comb(n, k))
    return out


def _tensor_mul(a, b):
    return (h_product(a[0], b[0]), h_product(a[1], b[1]))


def coproduct_H(m: SymMonomial) -> LinComb:
    """Delta_H on a ⊙-monomial: binomial on generators, extended multiplicatively."""
    out = LinComb.single(((), ()))
    for power in m:
        out = out.product(_coproduct_generator(power), _tensor_mul)
    return out


def takeuchi_antipode(n: int) -> LinComb:
    """S_H(X^n) = sum over compositions of (-1)^k n!/(n_1!...n_k!) X^{n_1} ⊙ ... ⊙ X^{n_k}."""
    if n < 1:
        raise ValueError("Takeuchi's formula is stated for generators X^n, n >= 1")
    out = LinComb()
    for comp in compositions(n):
        out.add_term(sym_monomial(*comp), (-1) ** len(comp) * multinomial(comp))
    return out


def antipode_H(m: SymMonomial) -> LinComb:
    out = LinComb.single(())
    for power in m:
        out = out.product(takeuchi_antipode(power), h_product)
    return out


def mu_hat(moments: Functional, element: LinComb | SymMonomial):
    """Multiplicative lift of a moment functional to H."""
    if isinstance(element, tuple):
        element = LinComb.single(element)
    acc = Fraction(0)
    for mono, c in element.items():
        val = c
        for power in mono:
            val = val * moments[power]
        acc = acc + val
    return acc


def wick_map_free(moments: Functional, n: int) -> Poly:
    """(mu_hat ∘ S_H (x) id) Delta_H (X^n), with the right leg read back in R[X]."""
    out = Poly()
    for (left, right), c in coproduct_H((n,) if n else ()).items():
        value = mu_hat(moments, antipode_H(left))
        power = sum(right)
        out = out + Poly.coerce(value) * c * X ** power
    return out
