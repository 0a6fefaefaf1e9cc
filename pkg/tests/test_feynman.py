import itertools
import json
import random
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phi4wick.errors import SizeLimitError
from phi4wick.exact_algebra import LinComb
from phi4wick.feynman import (
    GRAPH_REGISTRY,
    MultiGraph,
    antipode,
    antipode_forest,
    automorphism_count,
    bphz_valuation,
    coproduct_CK,
    degree,
    diagram_sum_from_json,
    diagram_sum_to_json,
    enumerate_connected_graphs,
    forest,
    forest_mul,
    is_divergent,
    matchings_oracle,
    parse_graph,
    random_character,
    tensor_mul,
    twisted_antipode,
)
from phi4wick.multiindex import MultiIndex, coproduct_mi_closed, counting_map, p_map, p_map_tensor, symmetry_mi, z

F = Fraction
DE = GRAPH_REGISTRY["doubleedge"]
SUNSET = GRAPH_REGISTRY["sunset"]
FOUR = GRAPH_REGISTRY["fourfold"]
SUNSET_PLUS = GRAPH_REGISTRY["sunset_plus"]


def small_graphs(max_vertices=5):
    out = []
    for n in range(2, max_vertices + 1):
        for ar in itertools.combinations_with_replacement([2, 3, 4], n):
            if sum(ar) % 2 == 0:
                out.extend(enumerate_connected_graphs(ar))
    return out


GRAPHS = small_graphs()


def relabel(g, perm):
    return MultiGraph.from_edges(g.n, [(perm[i], perm[j], m) for i, j, m in g.edges()])


def z4_support(nmax=5):
    out = set()
    for n in range(2, nmax + 1):
        for f in p_map(z(4, n)).keys():
            out.update(f)
    return sorted(out)


# -- degree and symmetry ------------------------------------------------------


def test_degree_examples():
    assert degree(SUNSET, 3) == 0
    assert degree(SUNSET, F(7, 2)) == 6 - 7
    assert degree(FOUR, F(5, 2)) == 8 - 3 * F(5, 2)
    assert degree((), 3) == 0
    assert degree(forest(SUNSET, DE), 3) == degree(SUNSET, 3) + degree(DE, 3)


def test_automorphism_examples():
    assert automorphism_count(DE) == 4
    assert automorphism_count(SUNSET) == 12
    assert automorphism_count(FOUR) == 48
    assert automorphism_count(SUNSET_PLUS) == 12


def test_enumeration_examples():
    assert enumerate_connected_graphs([3, 3]) == [SUNSET]
    assert enumerate_connected_graphs([2, 2]) == [DE]
    assert enumerate_connected_graphs([3, 4]) == []


def brute_force_classes(arities):
    n = len(arities)
    pairs = list(itertools.combinations(range(n), 2))
    found = set()
    for ms in itertools.product(range(max(arities) + 1), repeat=len(pairs)):
        deg = [0] * n
        for (i, j), m in zip(pairs, ms):
            deg[i] += m
            deg[j] += m
        if deg == list(arities):
            g = MultiGraph.from_edges(n, [(i, j, m) for (i, j), m in zip(pairs, ms) if m])
            if g.is_connected():
                found.add(g)
    return found


@pytest.mark.parametrize("arities", [(3, 3, 4, 4), (2, 4, 4), (2, 3, 3, 4), (4, 4, 4, 4), (2, 2, 4, 4)])
def test_enumeration_against_brute_force(arities):
    # z3^2 z4^2 has five classes (the three drawn for it in the subdivergence table are not all of them)
    graphs = enumerate_connected_graphs(arities)
    assert len(graphs) == len(set(graphs))
    assert set(graphs) == brute_force_classes(arities)
    if arities == (3, 3, 4, 4):
        assert len(graphs) == 5


def test_enumeration_is_deterministic_and_connected():
    a = enumerate_connected_graphs([4, 4, 4, 4])
    assert a == enumerate_connected_graphs([4, 4, 4, 4])
    assert len(a) == 3
    for g in a:
        assert g.is_connected() and g.arity_multiset() == (4, 4, 4, 4)


def test_vertex_bound():
    with pytest.raises(SizeLimitError):
        MultiGraph.from_edges(11, [(i, i + 1) for i in range(10)])


def test_self_loops_rejected():
    with pytest.raises(ValueError):
        MultiGraph.from_edges(2, [(0, 0)])


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(GRAPHS), st.randoms(use_true_random=False))
def test_relabelling_invariance(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    h = relabel(g, perm)
    assert h == g
    assert automorphism_count(h) == automorphism_count(g)
    assert coproduct_CK(h, 3) == coproduct_CK(g, 3)
    assert antipode(h, F(7, 2)) == antipode(g, F(7, 2))


def test_automorphisms_against_brute_force():
    for g in GRAPHS:
        if g.n > 4:
            continue
        a = g.matrix()
        count = sum(
            all(a[p[i]][p[j]] == a[i][j] for i in range(g.n) for j in range(g.n))
            for p in itertools.permutations(range(g.n))
        )
        assert g.vertex_automorphisms() == count


# -- matchings -------------------------------------------------------------------


def test_matching_examples():
    assert matchings_oracle(2)[(FOUR,)] == 24
    assert matchings_oracle(0, 2)[(DE,)] == 2
    assert matchings_oracle(1, 1) == LinComb()


def test_matching_size_bound():
    with pytest.raises(SizeLimitError):
        matchings_oracle(5, 1)


@pytest.mark.parametrize("nx,ny", [(2, 0), (3, 0), (4, 0), (1, 2), (2, 1), (2, 2), (3, 1), (0, 3), (1, 4)])
def test_matchings_equal_symmetry_ratio(nx, ny):
    counts = {4: nx, 2: ny}
    beta = MultiIndex.from_counts({k: v for k, v in counts.items() if v})
    expected = p_map(beta)
    assert matchings_oracle(nx, ny) == expected
    for f in expected.keys():
        (g,) = f
        assert expected[f] == F(symmetry_mi(counting_map(g)), automorphism_count(g))


def test_full_matching_sum_counts_all_pairings():
    total = matchings_oracle(2, 1, connected=False)
    # 10 legs, excluding same-vertex pairs
    brute = 0
    legs = [0] * 4 + [1] * 4 + [2] * 2

    def rec(free):
        nonlocal brute
        if not free:
            brute += 1
            return
        for k in range(1, len(free)):
            if legs[free[0]] != legs[free[k]]:
                rec(free[1:k] + free[k + 1:])

    rec(list(range(10)))
    assert sum(c for _, c in total.items()) == brute


# -- coproduct ---------------------------------------------------------------------


def test_sunset_has_no_reduced_coproduct():
    assert coproduct_CK(SUNSET, 3, reduced=True) == LinComb()
    assert coproduct_CK(SUNSET, 3) == LinComb({((SUNSET,), ()): 1, ((), (SUNSET,)): 1})


def test_n4_leading_graph_extracts_one_or_two_sunsets():
    lead = MultiGraph.from_edges(4, [(0, 1, 3), (1, 2, 1), (2, 3, 3), (0, 3, 1)])
    red = coproduct_CK(lead, 3, reduced=True)
    # the two single extractions give the same quotient
    assert sorted((len(left), c) for (left, _), c in red.items()) == [(1, 2), (2, 1)]
    for left, _ in red.keys():
        assert all(h == SUNSET for h in left)


def test_pm_pm_coproduct_z4_4():
    lhs = p_map_tensor(coproduct_mi_closed(4, 3))
    rhs = coproduct_CK(p_map(z(4, 4)), 3, reduced=True)
    assert lhs == rhs
    c = 2**11 * 3**3
    expected = LinComb({((SUNSET, SUNSET), (DE,)): c, ((SUNSET,), (SUNSET_PLUS,)): 2 * c})
    assert lhs == expected


def _iterate(g, d, left_first):
    out = LinComb()
    for (left, right), c in coproduct_CK(g, d).items():
        inner = coproduct_CK(left if left_first else right, d)
        for (a, b), c2 in inner.items():
            key = (a, b, right) if left_first else (left, a, b)
            out.add_term(key, c * c2)
    return out


def _project(s, d):
    # keep terms whose middle leg is divergent componentwise, or whose last leg is the unit
    return LinComb({k: c for k, c in s.items() if k[2] == () or all(is_divergent(h, d) for h in k[1])})


def test_coassociativity_at_three():
    for g in GRAPHS:
        assert _iterate(g, 3, True) == _iterate(g, 3, False)


def test_coassociativity_at_seven_halves():
    d = F(7, 2)
    for g in GRAPHS:
        assert _project(_iterate(g, d, True), d) == _project(_iterate(g, d, False), d)


def test_coproduct_is_multiplicative_on_forests():
    f = forest(SUNSET, DE)
    expected = coproduct_CK(SUNSET, 3).product(coproduct_CK(DE, 3), tensor_mul)
    assert coproduct_CK(f, 3) == expected


def test_contraction_preserves_edges_between_survivors():
    lead = MultiGraph.from_edges(4, [(0, 1, 3), (1, 2, 1), (2, 3, 3), (0, 3, 1)])
    for (left, right), _ in coproduct_CK(lead, 3, reduced=True).items():
        (q,) = right
        assert q.n_edges == lead.n_edges - sum(h.n_edges for h in left)


# -- antipode and BPHZ ---------------------------------------------------------------


def test_antipode_examples():
    assert antipode_forest((), 3) == LinComb.single(())
    assert antipode(SUNSET, 3) == LinComb.single((SUNSET,), -1)
    assert twisted_antipode(DE, F(5, 2)) == LinComb()


@pytest.mark.parametrize("d", [F(3), F(7, 2)])
def test_antipode_property(d):
    for g in GRAPHS:
        full = LinComb()
        twisted = LinComb()
        for (left, right), c in coproduct_CK(g, d).items():
            full += antipode_forest(left, d).product(LinComb.single(right), forest_mul).scale(c)
            twisted += twisted_antipode(left, d).product(LinComb.single(right), forest_mul).scale(c)
        assert full == LinComb()
        if is_divergent(g, d):
            assert twisted == LinComb()


@pytest.mark.parametrize("d", [F(3), F(18, 5)])
def test_bphz_nullity_with_random_characters(d):
    support = z4_support(5)
    for seed in range(10):
        g = random_character(seed)
        assert bphz_valuation(g, (), d) == 1
        for gamma in support:
            val = bphz_valuation(g, gamma, d)
            if is_divergent(gamma, d):
                assert val == 0
            else:
                assert val == -g(antipode(gamma, d))


def test_character_is_multiplicative_and_linear():
    g = random_character(7)
    assert g(forest(SUNSET, DE)) == g(SUNSET) * g(DE)
    assert g(()) == 1
    assert g(LinComb({(SUNSET,): 2, (DE,): 3})) == 2 * g(SUNSET) + 3 * g(DE)
    assert random_character(7)(SUNSET) == g(SUNSET)


def test_concurrent_antipodes_match_sequential():
    d = F(18, 5)
    graphs = z4_support(5)
    seq = [antipode(g, d) for g in graphs]
    with ThreadPoolExecutor(max_workers=8) as pool:
        par = list(pool.map(lambda g: antipode(g, d), graphs))
    assert par == seq


# -- serialisation --------------------------------------------------------------------


def test_graph_json_roundtrip():
    for g in GRAPHS[:40]:
        assert MultiGraph.from_json(json.dumps(g.to_json())) == g


def test_diagram_sum_json_roundtrip():
    s = p_map(z(4, 4))
    data = json.loads(json.dumps(diagram_sum_to_json(s)))
    assert diagram_sum_from_json(data) == s


def test_parse_graph():
    assert parse_graph("sunset") == SUNSET
    assert parse_graph('{"vertices": 2, "edges": [[0, 1, 2]]}') == DE
    with pytest.raises(ValueError):
        parse_graph("nonsense")


def test_random_character_is_seed_deterministic():
    values = [random_character(3)(g) for g in GRAPHS[:10]]
    assert values == [random_character(3)(g) for g in GRAPHS[:10]]
    assert all(v != 0 for v in values)
    assert random.Random(0).random() == random.Random(0).random()
