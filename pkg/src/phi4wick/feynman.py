"""Vacuum Feynman multigraphs and the extraction-contraction Hopf algebra.

Graphs are loop-free multigraphs stored in canonical form: the edge
multiplicities of the upper triangle, read column by column
((0,1), (0,2), (1,2), (0,3), ...), minimised lexicographically over all vertex
relabellings that respect a colour-refinement partition. Forests are sorted
tuples of graphs (the empty tuple is the unit), and linear combinations of
forests are :class:`~phi4wick.exact_algebra.LinComb` objects keyed by forests.
"""

from __future__ import annotations

import itertools
import json
import math
import random
import threading
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

from .errors import SizeLimitError
from .exact_algebra import LinComb, as_rational

__all__ = [
    "MAX_VERTICES",
    "MultiGraph",
    "Forest",
    "forest",
    "forest_mul",
    "tensor_mul",
    "diagram_sum",
    "degree",
    "is_divergent",
    "canonical_form",
    "automorphism_count",
    "vertex_automorphisms",
    "enumerate_connected_graphs",
    "matchings_oracle",
    "divergent_subgraphs",
    "coproduct_CK",
    "antipode",
    "antipode_forest",
    "twisted_antipode",
    "Character",
    "random_character",
    "bphz_valuation",
    "GRAPH_REGISTRY",
    "parse_graph",
    "diagram_sum_to_json",
    "diagram_sum_from_json",
    "tensor_sum_to_json",
]

MAX_VERTICES = 10


def _pair_index(i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return j * (j - 1) // 2 + i


def _n_pairs(n: int) -> int:
    return n * (n - 1) // 2


def _matrix(n: int, mult: Sequence[int]) -> List[List[int]]:
    a = [[0] * n for _ in range(n)]
    for j in range(1, n):
        for i in range(j):
            m = mult[_pair_index(i, j)]
            a[i][j] = a[j][i] = m
    return a


def _refine_colours(a: List[List[int]]) -> List[int]:
    """Colour refinement starting from vertex arity; colours are canonical ranks."""
    n = len(a)
    colours = [sum(row) for row in a]
    while True:
        sigs = [
            (colours[v], tuple(sorted((colours[u], a[v][u]) for u in range(n) if a[v][u])))
            for v in range(n)
        ]
        ranks = {s: r for r, s in enumerate(sorted(set(sigs)))}
        new = [ranks[s] for s in sigs]
        if len(set(new)) == len(set(colours)):
            return new
        colours = new


@lru_cache(maxsize=None)
def _canonicalize(n: int, mult: Tuple[int, ...]) -> Tuple[Tuple[int, ...], int]:
    """Return (canonical multiplicity tuple, number of vertex automorphisms)."""
    if n > MAX_VERTICES:
        raise SizeLimitError(f"canonical form limited to {MAX_VERTICES} vertices, got {n}")
    if n <= 1:
        return (), 1
    a = _matrix(n, mult)
    colours = _refine_colours(a)
    slot_colour = sorted(colours)
    best: List[Tuple[int, ...]] | None = None
    count = 0
    perm = [0] * n
    used = [False] * n
    cols: List[Tuple[int, ...]] = []

    def dfs(p: int):
        nonlocal best, count
        if p == n:
            if best is None or cols < best:
                best = list(cols)
                count = 1
            elif cols == best:
                count += 1
            return
        for v in range(n):
            if used[v] or colours[v] != slot_colour[p]:
                continue
            col = tuple(a[perm[i]][v] for i in range(p))
            cols.append(col)
            if best is None or cols <= best[: p + 1]:
                perm[p] = v
                used[v] = True
                dfs(p + 1)
                used[v] = False
            cols.pop()

    dfs(0)
    flat = tuple(x for col in best for x in col)
    return flat, count


@dataclass(frozen=True, order=True)
class MultiGraph:
    """Loop-free multigraph in canonical form.

    ``mult`` lists edge multiplicities of the pairs (0,1), (0,2), (1,2), (0,3),
    ... Construction always canonicalises, so equal graphs compare equal.
    """

    n: int
    mult: Tuple[int, ...]

    def __post_init__(self):
        mult = tuple(int(m) for m in self.mult)
        if len(mult) != _n_pairs(self.n):
            raise ValueError(f"expected {_n_pairs(self.n)} multiplicities for {self.n} vertices")
        if any(m < 0 for m in mult):
            raise ValueError("edge multiplicities must be non-negative")
        canon, _ = _canonicalize(self.n, mult)
        object.__setattr__(self, "mult", canon)

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "MultiGraph":
        """Build from ``[i, j]`` or ``[i, j, multiplicity]`` entries (0-based)."""
        mult = [0] * _n_pairs(n)
        for e in edges:
            i, j = int(e[0]), int(e[1])
            m = int(e[2]) if len(e) > 2 else 1
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for {n} vertices")
            mult[_pair_index(i, j)] += m
        return cls(n, tuple(mult))

    @classmethod
    def from_matrix(cls, a: Sequence[Sequence[int]]) -> "MultiGraph":
        n = len(a)
        for i in range(n):
            if a[i][i]:
                raise ValueError("self-loops are not allowed")
            for j in range(n):
                if a[i][j] != a[j][i]:
                    raise ValueError("multiplicity matrix must be symmetric")
        return cls(n, tuple(a[i][j] for j in range(1, n) for i in range(j)))

    # structure ---------------------------------------------------------------
    def matrix(self) -> List[List[int]]:
        return _matrix(self.n, self.mult)

    def edges(self) -> List[Tuple[int, int, int]]:
        return [
            (i, j, self.mult[_pair_index(i, j)])
            for j in range(1, self.n)
            for i in range(j)
            if self.mult[_pair_index(i, j)]
        ]

    @property
    def n_edges(self) -> int:
        return sum(self.mult)

    @property
    def loops(self) -> int:
        return self.n_edges - self.n + 1

    def arities(self) -> List[int]:
        return [sum(row) for row in self.matrix()]

    def arity_multiset(self) -> Tuple[int, ...]:
        return tuple(sorted(self.arities()))

    def is_connected(self) -> bool:
        return _is_connected(self.matrix())

    def vertex_automorphisms(self) -> int:
        return _canonicalize(self.n, self.mult)[1]

    def to_json(self) -> dict:
        return {"vertices": self.n, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_json(cls, data: Mapping | str) -> "MultiGraph":
        if isinstance(data, str):
            data = json.loads(data)
        return cls.from_edges(int(data["vertices"]), data["edges"])

    def __repr__(self):
        name = _REVERSE_REGISTRY.get(self)
        if name:
            return f"MultiGraph<{name}>"
        return f"MultiGraph({self.n}, {self.edges()})"


def _is_connected(a: List[List[int]], vertices: Sequence[int] | None = None) -> bool:
    vs = list(range(len(a))) if vertices is None else list(vertices)
    if len(vs) <= 1:
        return True
    allowed = set(vs)
    seen = {vs[0]}
    stack = [vs[0]]
    while stack:
        v = stack.pop()
        for u in allowed:
            if u not in seen and a[v][u]:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(vs)


def _components(a: List[List[int]]) -> List[List[int]]:
    n = len(a)
    left = set(range(n))
    comps = []
    while left:
        v = min(left)
        seen = {v}
        stack = [v]
        while stack:
            x = stack.pop()
            for u in range(n):
                if a[x][u] and u not in seen:
                    seen.add(u)
                    stack.append(u)
        comps.append(sorted(seen))
        left -= seen
    return comps


def _induced(a: List[List[int]], vertices: Sequence[int]) -> MultiGraph:
    vs = list(vertices)
    k = len(vs)
    mult = tuple(a[vs[i]][vs[j]] for j in range(1, k) for i in range(j))
    return MultiGraph(k, mult)


# ---------------------------------------------------------------------------
# forests and linear combinations
# ---------------------------------------------------------------------------

Forest = Tuple[MultiGraph, ...]


def forest(*graphs: MultiGraph) -> Forest:
    return tuple(sorted(graphs))


def forest_mul(a: Forest, b: Forest) -> Forest:
    return tuple(sorted(a + b))


def tensor_mul(a, b):
    return (forest_mul(a[0], b[0]), forest_mul(a[1], b[1]))


def diagram_sum(*terms) -> LinComb:
    """``diagram_sum((coeff, graph_or_forest), ...)`` as a LinComb over forests."""
    out = LinComb()
    for c, g in terms:
        out.add_term(g if isinstance(g, tuple) else (g,), c)
    return out


def degree(obj, d) -> Fraction:
    """deg = d(|V| - 1) - (d - 2)|E|, additive over forests (empty forest -> 0)."""
    d = as_rational(d)
    if isinstance(obj, MultiGraph):
        return d * (obj.n - 1) - (d - 2) * obj.n_edges
    return sum((degree(g, d) for g in obj), Fraction(0))


def is_divergent(g: MultiGraph, d) -> bool:
    return degree(g, d) <= 0


def canonical_form(g: MultiGraph) -> MultiGraph:
    """Graphs are canonical on construction; provided for symmetry with the API."""
    return MultiGraph(g.n, g.mult)


def vertex_automorphisms(g: MultiGraph) -> int:
    return g.vertex_automorphisms()


def automorphism_count(g: MultiGraph) -> int:
    """|Aut(G)|: vertex automorphisms times the factorials of parallel-edge bundles."""
    out = g.vertex_automorphisms()
    for m in g.mult:
        out *= math.factorial(m)
    return out


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _enumerate(arities: Tuple[int, ...]) -> Tuple[MultiGraph, ...]:
    n = len(arities)
    if n > MAX_VERTICES:
        raise SizeLimitError(f"enumeration limited to {MAX_VERTICES} vertices, got {n}")
    if n == 0 or sum(arities) % 2:
        return ()
    found = set()
    rem = list(arities)
    a = [[0] * n for _ in range(n)]

    def fill_row(i: int):
        if i == n - 1:
            if rem[i] == 0 and _is_connected(a):
                found.add(MultiGraph.from_matrix(a))
            return
        if rem[i] > sum(rem[i + 1:]):
            return
        yield_from_row(i, i + 1)

    def yield_from_row(i: int, j: int):
        if j == n:
            if rem[i] == 0:
                fill_row(i + 1)
            return
        top = min(rem[i], rem[j])
        for m in range(top, -1, -1):
            a[i][j] = a[j][i] = m
            rem[i] -= m
            rem[j] -= m
            yield_from_row(i, j + 1)
            rem[i] += m
            rem[j] += m
        a[i][j] = a[j][i] = 0

    fill_row(0)
    return tuple(sorted(found))


def enumerate_connected_graphs(arities: Iterable[int]) -> List[MultiGraph]:
    """All connected loop-free multigraphs with the given vertex arities, one per
    isomorphism class, sorted by canonical key. Odd total arity gives []."""
    return list(_enumerate(tuple(sorted(int(k) for k in arities))))


# ---------------------------------------------------------------------------
# Wick pairings: the brute-force oracle
# ---------------------------------------------------------------------------

MATCHING_LEG_BOUND = 20


def matchings_oracle(n_x: int, n_y: int = 0, connected: bool = True) -> LinComb:
    """Sum over pairwise matchings of the legs of X^n_x Y^n_y.

    X vertices carry 4 labelled legs, Y vertices 2. Matchings pairing two legs
    of the same vertex are discarded. With ``connected=True`` only connected
    graphs are kept (this is P(X^n Y^m)); otherwise every matching contributes
    its forest of components (the full Wick expansion of E[X^n Y^m]).
    """
    legs = [v for v in range(n_x) for _ in range(4)] + [
        v for v in range(n_x, n_x + n_y) for _ in range(2)
    ]
    if len(legs) > MATCHING_LEG_BOUND:
        raise SizeLimitError(f"brute-force matching limited to {MATCHING_LEG_BOUND} legs")
    n = n_x + n_y
    out = LinComb()
    if not legs or len(legs) % 2:
        return out
    counts: Counter = Counter()
    mat = [0] * _n_pairs(n)

    def rec(free: List[int]):
        if not free:
            counts[tuple(mat)] += 1
            return
        va = legs[free[0]]
        for idx in range(1, len(free)):
            vb = legs[free[idx]]
            if va == vb:
                continue
            key = _pair_index(va, vb)
            mat[key] += 1
            rec(free[1:idx] + free[idx + 1:])
            mat[key] -= 1

    rec(list(range(len(legs))))
    for raw, c in counts.items():
        a = _matrix(n, raw)
        comps = _components(a)
        if connected:
            if len(comps) == 1:
                out.add_term((MultiGraph(n, raw),), c)
        else:
            out.add_term(forest(*(_induced(a, comp) for comp in comps)), c)
    return out


# ---------------------------------------------------------------------------
# Connes-Kreimer extraction-contraction coproduct
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _candidates(g: MultiGraph, d: Fraction) -> Tuple[Tuple[frozenset, MultiGraph], ...]:
    """Connected induced subgraphs on 2 <= |S| < n vertices with degree <= 0."""
    a = g.matrix()
    out = []
    for size in range(2, g.n):
        for vs in itertools.combinations(range(g.n), size):
            if not _is_connected(a, vs):
                continue
            sub = _induced(a, vs)
            if degree(sub, d) <= 0:
                out.append((frozenset(vs), sub))
    return tuple(out)


def divergent_subgraphs(g: MultiGraph, d) -> List[Tuple[frozenset, MultiGraph]]:
    """Proper full divergent connected subgraphs as (vertex set, subgraph)."""
    return list(_candidates(g, as_rational(d)))


def _disjoint_families(cands) -> Iterator[Tuple[int, ...]]:
    def rec(start: int, used: frozenset, chosen: Tuple[int, ...]):
        for i in range(start, len(cands)):
            vs = cands[i][0]
            if vs & used:
                continue
            picked = chosen + (i,)
            yield picked
            yield from rec(i + 1, used | vs, picked)

    yield from rec(0, frozenset(), ())


def _contract(g: MultiGraph, parts: Sequence[frozenset]) -> MultiGraph:
    a = g.matrix()
    label = {}
    nxt = 0
    for part in parts:
        for v in part:
            label[v] = nxt
        nxt += 1
    for v in range(g.n):
        if v not in label:
            label[v] = nxt
            nxt += 1
    mult = [0] * _n_pairs(nxt)
    for i, j, m in g.edges():
        li, lj = label[i], label[j]
        if li == lj:
            continue
        mult[_pair_index(li, lj)] += m
    return MultiGraph(nxt, tuple(mult))


@lru_cache(maxsize=None)
def _reduced_coproduct_terms(g: MultiGraph, d: Fraction) -> Tuple[Tuple[Forest, Forest], ...]:
    cands = _candidates(g, d)
    terms = []
    for family in _disjoint_families(cands):
        parts = [cands[i][0] for i in family]
        left = forest(*(cands[i][1] for i in family))
        right = (_contract(g, parts),)
        terms.append((left, right))
    return tuple(terms)


def _coproduct_graph(g: MultiGraph, d: Fraction, reduced: bool) -> LinComb:
    out = LinComb()
    for key in _reduced_coproduct_terms(g, d):
        out.add_term(key, 1)
    if not reduced:
        out.add_term(((g,), ()), 1)
        out.add_term(((), (g,)), 1)
    return out


def coproduct_CK(x, d, reduced: bool = False) -> LinComb:
    """Extraction-contraction coproduct restricted to divergent left legs.

    ``x`` may be a graph, a forest, or a LinComb of forests. Components of an
    extracted subforest are vertex-disjoint, connected, full (induced)
    subgraphs of degree <= 0; each is contracted to a single vertex. Output
    keys are ``(left forest, right forest)``. ``reduced=True`` drops the
    boundary terms Γ⊗1 and 1⊗Γ.
    """
    d = as_rational(d)
    if isinstance(x, MultiGraph):
        return _coproduct_graph(x, d, reduced)
    if isinstance(x, tuple):
        full = LinComb.single(((), ()))
        for g in x:
            full = full.product(_coproduct_graph(g, d, False), tensor_mul)
        if reduced:
            full.add_term((x, ()), -1)
            full.add_term(((), x), -1)
        return full
    out = LinComb()
    for f, c in x.items():
        out += coproduct_CK(f, d, reduced).scale(c)
    return out


_antipode_lock = threading.Lock()
_antipode_memo: Dict[Tuple[MultiGraph, Fraction], Tuple] = {}


def antipode(g: MultiGraph, d) -> LinComb:
    """A(Γ) = -Γ - sum over divergent subforests of A(Γ̄)·(Γ/Γ̄), memoised."""
    d = as_rational(d)
    key = (g, d)
    with _antipode_lock:
        cached = _antipode_memo.get(key)
    if cached is not None:
        return LinComb(cached)
    out = LinComb.single((g,), -1)
    for left, right in _reduced_coproduct_terms(g, d):
        out += antipode_forest(left, d).product(LinComb.single(right), forest_mul).scale(-1)
    with _antipode_lock:
        _antipode_memo[key] = tuple(out.items())
    return out


def antipode_forest(f, d) -> LinComb:
    """Multiplicative extension of the antipode; f may be a graph, forest or LinComb."""
    if isinstance(f, MultiGraph):
        return antipode(f, d)
    if isinstance(f, LinComb):
        out = LinComb()
        for k, c in f.items():
            out += antipode_forest(k, d).scale(c)
        return out
    out = LinComb.single(())
    for g in f:
        out = out.product(antipode(g, d), forest_mul)
    return out


def twisted_antipode(g, d) -> LinComb:
    """A(Γ) on divergent graphs, 0 on convergent ones; multiplicative on forests."""
    if isinstance(g, MultiGraph):
        return antipode(g, d) if degree(g, d) <= 0 else LinComb()
    out = LinComb.single(())
    for h in g:
        out = out.product(twisted_antipode(h, d), forest_mul)
    return out


# ---------------------------------------------------------------------------
# characters
# ---------------------------------------------------------------------------


class Character:
    """Multiplicative map on forests, given by its values on connected graphs.

    ``values`` is a mapping or a callable ``graph -> value``; values can be
    Fractions (exact) or floats (numeric valuations). Evaluation on a forest
    multiplies component values; on a LinComb it is extended linearly.
    """

    def __init__(self, values: Mapping[MultiGraph, object] | Callable[[MultiGraph], object]):
        self._fn = values if callable(values) else values.__getitem__
        self._cache: Dict[MultiGraph, object] = {}
        self._lock = threading.Lock()

    def value(self, g: MultiGraph):
        with self._lock:
            if g in self._cache:
                return self._cache[g]
        v = self._fn(g)
        with self._lock:
            self._cache[g] = v
        return v

    def __call__(self, x):
        if isinstance(x, MultiGraph):
            return self.value(x)
        if isinstance(x, LinComb):
            acc = 0
            for f, c in x.items():
                acc = acc + c * self(f)
            return acc
        out = 1
        for g in x:
            out = out * self.value(g)
        return out

    def of_antipode(self, g: MultiGraph, d):
        return self(antipode(g, d))

    def of_twisted_antipode(self, g: MultiGraph, d):
        return self(twisted_antipode(g, d))


def random_character(seed: int, max_numerator: int = 40, max_denominator: int = 12) -> Character:
    """Random non-zero rational values, a deterministic function of (seed, graph)."""

    def value(g: MultiGraph) -> Fraction:
        rng = random.Random(f"{seed}|{g.n}|{g.mult}")
        num = 0
        while num == 0:
            num = rng.randint(-max_numerator, max_numerator)
        return Fraction(num, rng.randint(1, max_denominator))

    return Character(value)


def bphz_valuation(g: Character, gamma, d):
    """(g∘Ã ⊗ g) Δ_CK(Γ): zero on divergent graphs, -g(A(Γ)) on convergent ones."""
    d = as_rational(d)
    if isinstance(gamma, tuple) and not gamma:
        return 1
    if isinstance(gamma, tuple):
        out = 1
        for h in gamma:
            out = out * bphz_valuation(g, h, d)
        return out
    acc = 0
    for (left, right), c in coproduct_CK(gamma, d).items():
        acc = acc + c * g(twisted_antipode(left, d)) * g(right)
    return acc


# ---------------------------------------------------------------------------
# registry and serialisation
# ---------------------------------------------------------------------------

GRAPH_REGISTRY: Dict[str, MultiGraph] = {
    "doubleedge": MultiGraph.from_edges(2, [(0, 1, 2)]),
    "sunset": MultiGraph.from_edges(2, [(0, 1, 3)]),
    "fourfold": MultiGraph.from_edges(2, [(0, 1, 4)]),
    "triangle": MultiGraph.from_edges(3, [(0, 1, 2), (1, 2, 2), (0, 2, 2)]),
    "sunset_plus": MultiGraph.from_edges(3, [(0, 1, 3), (0, 2, 1), (1, 2, 1)]),
    "two_two_one": MultiGraph.from_edges(3, [(0, 1, 1), (0, 2, 2), (1, 2, 2)]),
    "necklace": MultiGraph.from_edges(4, [(0, 1, 3), (1, 2, 1), (2, 3, 3), (0, 3, 1)]),
}
_REVERSE_REGISTRY = {g: name for name, g in GRAPH_REGISTRY.items()}


def parse_graph(spec: str) -> MultiGraph:
    """A registry name (``sunset``, ``doubleedge``, ...) or inline graph JSON."""
    spec = spec.strip()
    if spec in GRAPH_REGISTRY:
        return GRAPH_REGISTRY[spec]
    if spec.startswith("{"):
        return MultiGraph.from_json(spec)
    raise ValueError(f"unknown graph {spec!r}; known: {', '.join(sorted(GRAPH_REGISTRY))}")


def _coeff_json(c):
    return str(c)


def diagram_sum_to_json(s: LinComb) -> list:
    rows = sorted(s.items(), key=lambda kv: kv[0])
    return [{"coefficient": _coeff_json(c), "forest": [g.to_json() for g in f]} for f, c in rows]


def diagram_sum_from_json(data: list) -> LinComb:
    out = LinComb()
    for row in data:
        out.add_term(forest(*(MultiGraph.from_json(g) for g in row["forest"])), as_rational(row["coefficient"]))
    return out


def tensor_sum_to_json(s: LinComb) -> list:
    rows = sorted(s.items(), key=lambda kv: kv[0])
    return [
        {
            "coefficient": _coeff_json(c),
            "left": [g.to_json() for g in left],
            "right": [g.to_json() for g in right],
        }
        for (left, right), c in rows
    ]
