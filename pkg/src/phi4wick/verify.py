"""End-to-end check that Wick renormalisation and BPHZ renormalisation agree.

For each n the polynomial X^n is pushed around two routes:

(i)  Wick map with counterterms σ_p = -g(Ã(P_M(Y_p))), then P (sum over
     connected pairings) to get a combination of graphs;
(ii) P first, then the renormalisation (g A ⊗ id) Δ_CK + Θ_F on graphs.

``g`` is a random rational character, so the two DiagramSums must agree as
exact identities. Three intermediate squares are reported as well: the
free-algebra square (Wick map from the antipode of S(R[X])), the multi-index
square (η∘Ŵ against the extended coproduct with formal values) and the
graph/multi-index square ((P_M ⊗ P_M) Δ̊_M = Δ̊_CK P_M).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from .errors import SizeLimitError
from .exact_algebra import LinComb, Poly, X, as_rational, exp_star
from .feynman import (
    Character,
    antipode_forest,
    coproduct_CK,
    forest_mul,
    random_character,
    twisted_antipode,
)
from .multiindex import (
    MultiIndex,
    coproduct_mi_closed,
    coproduct_mi_extended,
    eta,
    p_map,
    p_map_tensor,
    theta_m,
    y_generator,
    z,
)
from .wick import CumulantSpec, wick_map_free, wick_map_xy

__all__ = [
    "VERIFY_MAX_N",
    "VerifyReport",
    "sigma_from_character",
    "p_of_poly",
    "path_wick_first",
    "path_graphs_first",
    "left_square",
    "middle_square",
    "right_square",
    "verify_n",
    "verify",
    "perturb_first_coefficient",
]

VERIFY_MAX_N = 6

Mutation = Callable[[LinComb], LinComb]


@dataclass
class VerifyReport:
    n: int
    d: Fraction
    seed: int
    checks: Dict[str, bool] = field(default_factory=dict)
    diffs: Dict[str, List[str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": str(self.d),
            "seed": self.seed,
            "ok": self.ok,
            "checks": dict(self.checks),
            "diffs": {k: v for k, v in self.diffs.items() if v},
        }


def _describe_diff(a: LinComb, b: LinComb, limit: int = 10) -> List[str]:
    diff = a - b
    rows = []
    for key, c in sorted(diff.items(), key=lambda kv: str(kv[0]))[:limit]:
        rows.append(f"{c} * {key}")
    if len(diff) > limit:
        rows.append(f"... {len(diff) - limit} more")
    return rows


def sigma_from_character(g: Character, p: int, d) -> Fraction:
    """σ_p = -g(Ã(P_M(Y_p))); zero when the Y_p diagrams are convergent."""
    out = 0
    for f, c in p_map(y_generator(p)).items():
        out = out + c * g(twisted_antipode(f, d))
    return -out


def p_of_poly(poly: Poly) -> LinComb:
    """P on R[X, Y]: X^a Y^b goes to P_M(z4^a z2^b), the connected pairings."""
    out = LinComb()
    for mono, c in poly.items():
        powers = dict(mono)
        extra = set(powers) - {"X", "Y"}
        if extra:
            raise ValueError(f"P expects a polynomial in X and Y only, found {sorted(extra)}")
        a, b = powers.get("X", 0), powers.get("Y", 0)
        if a == 0 and b == 0:
            out.add_term((), c)
            continue
        out += p_map(z(4, a) * z(2, b)).scale(c)
    return out


def path_wick_first(n: int, d, g: Character) -> LinComb:
    sigma = {p: sigma_from_character(g, p, d) for p in range(2, n + 1)}
    return p_of_poly(wick_map_xy(CumulantSpec(sigma), n))


def path_graphs_first(n: int, d, g: Character) -> LinComb:
    graphs = p_map(z(4, n))
    out = LinComb()
    for (left, right), c in coproduct_CK(graphs, d).items():
        out.add_term(right, c * g(antipode_forest(left, d)))
    # Θ_F(P_M(z4^n)) = P_M(Θ_M(z4^n)) with the character values inserted
    sigma_n = sigma_from_character(g, n, d) if n >= 2 else Fraction(0)
    a_n = g(antipode_forest(graphs, d))
    out += p_map(theta_m(n, sigma_n, a_n))
    return out


def left_square(n: int) -> tuple:
    """Wick map from μ̂ S_H on S(R[X]) against the Bell form, formal σ_p."""
    spec = CumulantSpec.formal(max(n, 2))
    mu = exp_star(spec.cumulant_functional(max(n, 1)))
    lhs = wick_map_free(mu, n)
    rhs = wick_map_xy(spec, n)
    return lhs == rhs, [] if lhs == rhs else [f"free: {lhs}", f"bell: {rhs}"]


def _formal_values(pmax: int):
    # one symbol per divergent-family multi-index; Π_M A_M is multiplicative on forests
    values = {}
    for p in range(2, pmax + 1):
        values[z(3, 2) * z(4, p - 2)] = Poly.var(f"b{p}")
        if p >= 3:
            values[z(2) * z(4, p - 1)] = Poly.var(f"a{p}")
    return values


def _formal_eval(values, forest) -> Poly:
    out = Poly.const(1)
    for m in forest:
        out = out * values[m]
    return out


def _mutated(t: LinComb, mutation: Optional[Mutation]) -> LinComb:
    return mutation(t) if mutation else t


def middle_square(n: int, mutation: Optional[Mutation] = None) -> tuple:
    """η∘Ŵ(X^n) = ((Π_M A_M ⊗ id) Δ⁺_M + Θ_M)(z4^n) with formal Π_M A_M values."""
    values = _formal_values(max(n - 1, 2))
    u = {}
    for p in range(2, max(n, 2) + 1):
        if p <= n - 1:
            u[p] = sum((_formal_eval(values, f) * c for f, c in y_generator(p).items()), Poly())
        else:
            u[p] = Poly.var(f"u{p}")
    spec = CumulantSpec({p: -u[p] for p in range(2, n + 1)})
    lhs = eta(wick_map_xy(spec, n))
    v = Poly.var("v")
    rhs = LinComb()
    rhs.add_term((), v)
    rhs.add_term((z(4, n),), 1)
    if n >= 2:
        for (left, right), c in _mutated(coproduct_mi_extended(n), mutation).items():
            rhs.add_term((right,), _formal_eval(values, left) * c)
    sigma_n = -u[n] if n >= 2 else Poly()
    rhs += theta_m(n, sigma_n, v)
    ok = lhs == rhs
    return ok, [] if ok else _describe_diff(lhs, rhs)


def right_square(n: int, d, mutation: Optional[Mutation] = None) -> tuple:
    """(P_M ⊗ P_M) Δ̊_M(z4^n) = Δ̊_CK(P_M(z4^n)), divergent left legs only."""
    lhs = p_map_tensor(_mutated(coproduct_mi_closed(n, d), mutation)) if n >= 2 else LinComb()
    rhs = coproduct_CK(p_map(z(4, n)), d, reduced=True)
    ok = lhs == rhs
    return ok, [] if ok else _describe_diff(lhs, rhs)


def verify_n(n: int, d, seed: int, mutation: Optional[Mutation] = None) -> VerifyReport:
    d = as_rational(d)
    if n > VERIFY_MAX_N:
        raise SizeLimitError(f"verification is limited to n <= {VERIFY_MAX_N}")
    g = random_character(seed)
    rep = VerifyReport(n, d, seed)
    one = path_wick_first(n, d, g)
    two = path_graphs_first(n, d, g)
    rep.checks["paths"] = one == two
    rep.diffs["paths"] = [] if one == two else _describe_diff(one, two)
    for name, (ok, diff) in (
        ("left_square", left_square(n)),
        ("middle_square", middle_square(n, mutation)),
        ("right_square", right_square(n, d, mutation)),
    ):
        rep.checks[name] = ok
        rep.diffs[name] = diff
    return rep


def verify(nmax: int, d, seed: int = 0, mutation: Optional[Mutation] = None) -> List[VerifyReport]:
    if nmax > VERIFY_MAX_N:
        raise SizeLimitError(f"verification is limited to n <= {VERIFY_MAX_N}")
    return [verify_n(n, d, seed, mutation) for n in range(1, nmax + 1)]


def perturb_first_coefficient(delta=1, index: int = 0) -> Mutation:
    """Mutation adding ``delta`` to the index-th term (sorted order) of a coproduct table."""

    def mutate(t: LinComb) -> LinComb:
        if not t:
            return t
        keys = sorted(t.keys())
        out = t.copy()
        out.add_term(keys[index % len(keys)], delta)
        return out

    return mutate
