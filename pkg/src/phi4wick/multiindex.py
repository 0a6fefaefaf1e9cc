"""Multi-indices z^β = ∏ z_k^{β(k)}, their forests and coproducts.

A multi-index records how many vertices of each arity a Feynman graph has.
The map P_M sends a multi-index to the symmetry-weighted sum of all connected
graphs with that vertex content; the coproduct on multi-indices mirrors the
extraction-contraction coproduct on graphs. Forests of multi-indices are sorted
tuples (the empty tuple is the unit 1_M), sums over forests are LinCombs, and
tensor sums are keyed by ``(left forest, right multi-index)``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Tuple

from .errors import DomainError, SizeLimitError
from .exact_algebra import LinComb, Poly, as_rational, partitions
from .feynman import (
    MultiGraph,
    automorphism_count,
    enumerate_connected_graphs,
    forest_mul,
)

__all__ = [
    "MultiIndex",
    "MIForest",
    "z",
    "mi_forest",
    "counting_map",
    "degree_mi",
    "symmetry_mi",
    "is_populated",
    "p_map",
    "p_map_tensor",
    "y_generator",
    "d_operator",
    "Thresholds",
    "thresholds",
    "critical_dims",
    "subdivergence_classes",
    "coproduct_mi_general",
    "coproduct_mi_closed",
    "coproduct_mi_extended",
    "theta_m",
    "eta",
    "misum_to_json",
    "mi_tensor_to_json",
    "format_tensor",
]

GENERAL_ORACLE_MAX_N = 8


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Monomial z^β; ``beta`` is the sorted tuple of (k, β(k)) with β(k) > 0."""

    beta: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        clean = tuple(sorted((int(k), int(c)) for k, c in self.beta if c))
        if any(c < 0 for _, c in clean):
            raise ValueError("multi-index exponents must be non-negative")
        if len({k for k, _ in clean}) != len(clean):
            raise ValueError("repeated arity in multi-index")
        object.__setattr__(self, "beta", clean)

    @classmethod
    def from_counts(cls, counts: Mapping[int, int]) -> "MultiIndex":
        return cls(tuple(counts.items()))

    @classmethod
    def from_arities(cls, arities: Iterable[int]) -> "MultiIndex":
        return cls.from_counts(Counter(arities))

    def counts(self) -> Dict[int, int]:
        return dict(self.beta)

    def __getitem__(self, k: int) -> int:
        return dict(self.beta).get(k, 0)

    def __mul__(self, other: "MultiIndex") -> "MultiIndex":
        c = Counter(self.counts())
        c.update(other.counts())
        return MultiIndex.from_counts(c)

    def __pow__(self, e: int) -> "MultiIndex":
        return MultiIndex(tuple((k, c * e) for k, c in self.beta))

    @property
    def size(self) -> int:
        """|z^β|, the number of vertices."""
        return sum(c for _, c in self.beta)

    @property
    def total_arity(self) -> int:
        return sum(k * c for k, c in self.beta)

    def arities(self) -> List[int]:
        return [k for k, c in self.beta for _ in range(c)]

    def is_unit(self) -> bool:
        return not self.beta

    def to_json(self) -> dict:
        return {"beta": {str(k): c for k, c in self.beta}}

    @classmethod
    def from_json(cls, data) -> "MultiIndex":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_counts({int(k): int(v) for k, v in data["beta"].items()})

    def __str__(self):
        if not self.beta:
            return "1"
        return " ".join(f"z{k}" if c == 1 else f"z{k}^{c}" for k, c in self.beta)

    def __repr__(self):
        return f"MultiIndex({self})"


MIForest = Tuple[MultiIndex, ...]


def z(k: int, power: int = 1) -> MultiIndex:
    return MultiIndex(((k, power),))


def mi_forest(*parts: MultiIndex) -> MIForest:
    return tuple(sorted(parts))


Z2, Z3, Z4 = z(2), z(3), z(4)


def _forest_str(f: MIForest) -> str:
    return "·".join(f"({m})" for m in f) if f else "1"


# ---------------------------------------------------------------------------
# basic maps
# ---------------------------------------------------------------------------


def counting_map(g):
    """Φ(Γ) = ∏_v z_{arity(v)}; on forests returns the forest of images."""
    if isinstance(g, MultiGraph):
        return MultiIndex.from_arities(g.arities())
    return mi_forest(*(counting_map(h) for h in g))


def degree_mi(x, d) -> Fraction:
    """deg z^β = d(|β| - 1) - (d-2)/2 Σ k β(k); additive over forests."""
    d = as_rational(d)
    if isinstance(x, MultiIndex):
        return d * (x.size - 1) - (d - 2) * Fraction(x.total_arity, 2)
    return sum((degree_mi(m, d) for m in x), Fraction(0))


def symmetry_mi(x) -> int:
    """S_M(z^β) = ∏ β(k)! (k!)^β(k); for forests ∏ r_i! S_M(z^{β_i})^{r_i}."""
    if isinstance(x, MultiIndex):
        out = 1
        for k, c in x.beta:
            out *= math.factorial(c) * math.factorial(k) ** c
        return out
    out = 1
    for m, r in Counter(x).items():
        out *= math.factorial(r) * symmetry_mi(m) ** r
    return out


def is_populated(m: MultiIndex) -> bool:
    """True when some connected loop-free multigraph has vertex content z^β.

    A degree sequence with all entries >= 1 is realised by a connected
    loop-free multigraph iff the sum is even, the largest entry is at most
    half the sum, and there are enough edges to connect: sum/2 >= |V| - 1.
    """
    ar = m.arities()
    if len(ar) < 2 or min(ar) < 1:
        return False
    total = sum(ar)
    return total % 2 == 0 and 2 * max(ar) <= total and total // 2 >= len(ar) - 1


def p_map(x) -> LinComb:
    """P_M(z^β) = Σ_{Φ(Γ)=z^β} S_M(z^β)/S_F(Γ) Γ, extended to forests and sums."""
    if isinstance(x, MultiIndex):
        out = LinComb()
        if x.is_unit():
            return LinComb.single(())
        s = symmetry_mi(x)
        for g in enumerate_connected_graphs(x.arities()):
            out.add_term((g,), Fraction(s, automorphism_count(g)))
        return out
    if isinstance(x, LinComb):
        out = LinComb()
        for f, c in x.items():
            out += p_map(f).scale(c)
        return out
    out = LinComb.single(())
    for m in x:
        out = out.product(p_map(m), forest_mul)
    return out


def p_map_tensor(t: LinComb) -> LinComb:
    """(P_M ⊗ P_M) on a tensor sum keyed by (left forest, right multi-index or forest)."""
    out = LinComb()
    for (left, right), c in t.items():
        pl = p_map(left)
        pr = p_map(right)
        for fl, cl in pl.items():
            for fr, cr in pr.items():
                out.add_term((fl, fr), c * cl * cr)
    return out


def y_generator(p: int) -> LinComb:
    """Y_2 = 16 z3², Y_p = 6p z2 z4^{p-1} + 8p(p-1) z3² z4^{p-2} for p >= 3."""
    if p < 2:
        raise DomainError(f"Y_p is defined for p >= 2, got {p}")
    if p == 2:
        return LinComb.single((z(3, 2),), 16)
    out = LinComb()
    out.add_term((Z2 * z(4, p - 1),), 6 * p)
    out.add_term((z(3, 2) * z(4, p - 2),), 8 * p * (p - 1))
    return out


def d_operator(x, max_index: int | None = None) -> LinComb:
    """D = Σ_k z_{k+1} ∂_{z_k} on monomials (or LinCombs of monomials).

    With ``max_index`` set, terms containing z_k for k > max_index are dropped.
    """
    src = LinComb.single(x) if isinstance(x, MultiIndex) else x
    out = LinComb()
    for m, c in src.items():
        counts = m.counts()
        for k, e in counts.items():
            if max_index is not None and k + 1 > max_index:
                continue
            new = Counter(counts)
            new[k] -= 1
            new[k + 1] += 1
            out.add_term(MultiIndex.from_counts(new), c * e)
    return out


# ---------------------------------------------------------------------------
# thresholds and divergent families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Thresholds:
    d: Fraction
    n_star_e: int
    n_star_m: int


def _check_d(d) -> Fraction:
    d = as_rational(d)
    if d >= 4:
        raise DomainError("the model has finitely many divergences only for d < 4")
    return d


def thresholds(d) -> Thresholds:
    """n*_e(d) = floor(d/(4-d)) and n*_m(d) = floor(2/(4-d))."""
    d = _check_d(d)
    return Thresholds(d, math.floor(d / (4 - d)), math.floor(2 / (4 - d)))


def critical_dims(n: int) -> Tuple[Fraction, Fraction]:
    """(d*_e(n), d*_m(n)) = (4n/(n+1), 4 - 2/n)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return Fraction(4 * n, n + 1), 4 - Fraction(2, n)


def _family(p: int) -> List[MultiIndex]:
    out = [z(3, 2) * z(4, p - 2)]
    if p >= 3:
        out.append(Z2 * z(4, p - 1))
    return out


def subdivergence_classes(d, max_vertices: int | None = None) -> List[MultiIndex]:
    """Divergent members of the families z3² z4^{p-2} (p >= 2) and z2 z4^{p-1} (p >= 3).

    Both members at level p have degree p(4-d) - 2, so they diverge exactly
    for p <= n*_m(d). Ordered by p, then z3²-type before z2-type.
    """
    top = thresholds(d).n_star_m
    if max_vertices is not None:
        top = min(top, max_vertices)
    out = []
    for p in range(2, top + 1):
        out.extend(_family(p))
    return out


# ---------------------------------------------------------------------------
# coproducts on z4^n
# ---------------------------------------------------------------------------


def _as_power_of_z4(beta) -> int:
    if isinstance(beta, int):
        return beta
    if isinstance(beta, MultiIndex) and set(beta.counts()) <= {4}:
        return beta[4]
    raise DomainError("coproduct formulas are implemented for z4^n only")


def _derivative_coefficient(alpha: MultiIndex, ks: Iterable[int]) -> Tuple[int, MultiIndex]:
    # ∏ ∂_{z_k} z^α = coeff · z^{α - Σ e_k}
    counts = Counter(alpha.counts())
    coeff = 1
    for k in ks:
        if counts[k] <= 0:
            return 0, MultiIndex()
        coeff *= counts[k]
        counts[k] -= 1
    return coeff, MultiIndex.from_counts(counts)


def _pure_z4_table(member: MultiIndex, n: int, kmax: int) -> List[Tuple[int, int, Fraction]]:
    """Nonzero [z4^q] D^k z^β for 0 <= k <= kmax, q <= n."""
    entries = []
    poly = LinComb.single(member)
    for k in range(kmax + 1):
        if k:
            poly = d_operator(poly)
        for mono, c in poly.items():
            counts = mono.counts()
            if set(counts) == {4} and counts[4] <= n:
                entries.append((k, counts[4], c))
    return entries


def coproduct_mi_general(beta, d, kmax: int = 6) -> LinComb:
    """Reduced coproduct of z4^n from the inner-product formula for E.

    Left legs are restricted up front to forests of divergent family members.
    For each forest, every choice of (k_i, β̂_i) with non-zero
    [z^{β̂_i}] D^{k_i} z^{β_i} is summed, α̂ is fixed by β̂_1 + ... + α̂ = β,
    and α is the unique populated multi-index with ∏∂_{z_{k_i}} z^α ∝ z^{α̂}.
    Slow; intended as an oracle for the closed forms.
    """
    n = _as_power_of_z4(beta)
    if n > GENERAL_ORACLE_MAX_N:
        raise SizeLimitError(f"general coproduct oracle limited to n <= {GENERAL_ORACLE_MAX_N}")
    d = _check_d(d)
    target = z(4, n)
    s_beta = symmetry_mi(target)
    members = subdivergence_classes(d, max_vertices=n)
    tables = {m: _pure_z4_table(m, n, kmax) for m in members}
    for m, entries in tables.items():
        for k, q, _ in entries:
            # only D² can turn z2/z3 factors into z4 while keeping the vertex count
            assert k == 2 and q == m.size, f"unexpected contribution k={k}, q={q} for {m}"
    members = [m for m in members if tables[m]]
    out = LinComb()
    for size in range(1, n // 2 + 1):
        for combo in itertools.combinations_with_replacement(members, size):
            if sum(min(q for _, q, _ in tables[m]) for m in combo) > n:
                continue
            left = mi_forest(*combo)
            s_left = symmetry_mi(left)
            for choice in itertools.product(*(tables[m] for m in combo)):
                s = sum(q for _, q, _ in choice)
                if s > n:
                    continue
                ks = [k for k, _, _ in choice]
                alpha_hat = z(4, n - s)
                alpha = alpha_hat
                for k in ks:
                    alpha = alpha * z(k)
                if not is_populated(alpha):
                    continue
                dcoef, rest = _derivative_coefficient(alpha, ks)
                if dcoef == 0 or rest != alpha_hat:
                    continue
                prod_c = Fraction(1)
                for _, _, c in choice:
                    prod_c *= c
                e = Fraction(s_beta, s_left * symmetry_mi(alpha)) * dcoef * prod_c
                out.add_term((left, alpha), e)
    return out


def _j_vectors(n: int, k: int, max_part: int):
    for parts in partitions(n, max_part):
        if sum(parts.values()) == k:
            yield parts


def _closed(n: int, pmax: int, kmin: int, d) -> LinComb:
    if n < 2:
        raise DomainError("n must be >= 2")
    if d is not None:
        pmax = min(pmax, thresholds(d).n_star_m)
    ys = {p: y_generator(p) for p in range(2, max(pmax, 2) + 1)}
    out = LinComb()
    for k in range(kmin, n):
        for j in _j_vectors(n, k, max(pmax, 1)):
            if any(p > 1 and p > pmax for p in j):
                continue
            left = LinComb.single(())
            scale = Fraction(math.factorial(n))
            for p, jp in j.items():
                if p == 1:
                    scale /= math.factorial(jp)
                    continue
                scale /= math.factorial(jp) * math.factorial(p) ** jp
                for _ in range(jp):
                    left = left.product(ys[p], forest_mul)
            j1 = j.get(1, 0)
            right = z(2, k - j1) * z(4, j1)
            for f, c in left.items():
                out.add_term((f, right), c * scale)
    return out


def coproduct_mi_closed(n: int, d=None, kmin: int = 2) -> LinComb:
    """Closed form of the reduced coproduct of z4^n (subdivergences with p <= n-2).

    n! Σ_k Σ_j ∏_{p>=2} (1/j_p!)(Y_p/p!)^{·j_p} ⊗ (1/j_1!) z2^{k-j_1} z4^{j_1},
    with j_1 + ... = k and j_1 + 2 j_2 + ... = n. Passing ``d`` keeps only the
    divergent Y_p (p <= n*_m(d)). ``kmin=1`` gives the same result.
    """
    return _closed(n, n - 2, kmin, d)


def coproduct_mi_extended(n: int, d=None, kmin: int = 1) -> LinComb:
    """Extended closed form: as above but with p running up to n-1."""
    return _closed(n, n - 1, kmin, d)


# ---------------------------------------------------------------------------
# boundary map and the X, Y identification
# ---------------------------------------------------------------------------


def theta_m(n: int, sigma, a_value) -> LinComb:
    """Θ_M(z4^n) = -σ_n z2 - a 1_M, where a stands for Π_M A_M(z4^n)."""
    out = LinComb()
    out.add_term((Z2,), -sigma if isinstance(sigma, Poly) else -as_rational(sigma))
    out.add_term((), -a_value if isinstance(a_value, Poly) else -as_rational(a_value))
    return out


def eta(p: Poly, x_var: str = "X", y_var: str = "Y") -> LinComb:
    """η(X^a Y^b) = z4^a z2^b, a single multi-index; other symbols stay in the coefficient."""
    out = LinComb()
    for mono, c in p.items():
        powers = dict(mono)
        a = powers.pop(x_var, 0)
        b = powers.pop(y_var, 0)
        key = (z(4, a) * z(2, b),) if a or b else ()
        coeff = Poly.monomial(powers, c) if powers else c
        out.add_term(key, coeff)
    return out


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def misum_to_json(s: LinComb) -> list:
    return [
        {"coefficient": str(c), "forest": [m.to_json() for m in f]}
        for f, c in sorted(s.items(), key=lambda kv: kv[0])
    ]


def mi_tensor_to_json(t: LinComb) -> list:
    rows = []
    for (left, right), c in sorted(t.items(), key=lambda kv: kv[0]):
        rows.append({"coefficient": str(c), "left": [m.to_json() for m in left], "right": right.to_json()})
    return rows


def format_tensor(t: LinComb) -> str:
    """Human-readable rendering of a (forest ⊗ multi-index) sum."""
    parts = []
    for (left, right), c in sorted(t.items(), key=lambda kv: kv[0]):
        parts.append(f"{c} {_forest_str(left)} ⊗ {right}")
    return " + ".join(parts) if parts else "0"
