import itertools
import json
import math
from fractions import Fraction

import pytest

from phi4wick.errors import DomainError
from phi4wick.exact_algebra import LinComb, Poly, partitions
from phi4wick.feynman import (
    GRAPH_REGISTRY,
    Character,
    coproduct_CK,
    degree,
    enumerate_connected_graphs,
    forest_mul,
    twisted_antipode,
)
from phi4wick.multiindex import (
    MultiIndex,
    coproduct_mi_closed,
    coproduct_mi_extended,
    coproduct_mi_general,
    counting_map,
    critical_dims,
    d_operator,
    degree_mi,
    eta,
    is_populated,
    mi_forest,
    mi_tensor_to_json,
    p_map,
    p_map_tensor,
    subdivergence_classes,
    symmetry_mi,
    theta_m,
    thresholds,
    y_generator,
    z,
)
from phi4wick.wick import CumulantSpec, wick_map_xy

F = Fraction
DE = GRAPH_REGISTRY["doubleedge"]
SUNSET = GRAPH_REGISTRY["sunset"]
SUNSET_PLUS = GRAPH_REGISTRY["sunset_plus"]


def formal_character():
    return Character(lambda g: Poly.var(f"g{g.n}_{'_'.join(map(str, g.mult))}"))


def all_indices(max_vertices):
    for n in range(2, max_vertices + 1):
        for ar in itertools.combinations_with_replacement([2, 3, 4], n):
            yield MultiIndex.from_arities(ar)


def tensor(*terms):
    out = LinComb()
    for c, left, right in terms:
        out.add_term((mi_forest(*left), right), c)
    return out


# -- basic maps ------------------------------------------------------------------


def test_counting_map_examples():
    assert counting_map(SUNSET) == z(3, 2)
    assert counting_map(SUNSET_PLUS) == z(2) * z(4, 2)
    assert counting_map((SUNSET, DE)) == mi_forest(z(3, 2), z(2, 2))


def test_counting_map_preserves_degree():
    for beta in all_indices(5):
        for g in enumerate_connected_graphs(beta.arities()):
            assert counting_map(g) == beta
            for d in (F(3), F(7, 2), F(5, 2)):
                assert degree_mi(beta, d) == degree(g, d)


def test_symmetry_examples():
    for n in range(1, 7):
        assert symmetry_mi(z(4, n)) == math.factorial(n) * 24**n
    assert symmetry_mi(z(3, 2)) == 72
    assert symmetry_mi(mi_forest(z(3, 2), z(3, 2))) == 2 * 72**2
    assert degree_mi(z(3, 2) * z(4), 3) == 10 - 9


def test_p_map_fixtures():
    assert p_map(z(2, 2)) == LinComb.single((DE,), 2)
    assert p_map(z(3, 2)) == LinComb.single((SUNSET,), 6)
    assert p_map(z(2) * z(4, 2)) == LinComb.single((SUNSET_PLUS,), 192)
    assert p_map(z(2) * z(4)) == LinComb()
    assert p_map(z(4, 2))[(GRAPH_REGISTRY["fourfold"],)] == 24


def test_p_map_is_homogeneous():
    for beta in all_indices(5):
        for f in p_map(beta).keys():
            assert counting_map(f[0]) == beta


def test_populatedness_matches_enumeration():
    for beta in all_indices(6):
        assert is_populated(beta) == bool(enumerate_connected_graphs(beta.arities()))


# -- generators and D -------------------------------------------------------------


def test_y_generator():
    assert y_generator(2) == LinComb.single((z(3, 2),), 16)
    assert y_generator(3) == LinComb({(z(2) * z(4, 2),): 18, (z(3, 2) * z(4),): 48})
    with pytest.raises(DomainError):
        y_generator(1)


def test_y_generator_terms_diverge_at_critical_dimension():
    for p in range(2, 8):
        dm = critical_dims(p)[1]
        for (m,), _ in y_generator(p).items():
            assert degree_mi(m, dm) <= 0
            assert degree_mi(m, dm - F(1, 100)) > 0


def test_d_operator():
    assert d_operator(z(2)) == LinComb.single(z(3))
    for p in range(2, 7):
        once = d_operator(z(3, 2) * z(4, p - 2), max_index=4)
        assert d_operator(once, max_index=4)[z(4, p)] == 2
    for p in range(2, 7):
        twice = d_operator(d_operator(z(2) * z(4, p - 1), max_index=4), max_index=4)
        assert twice[z(4, p)] == 1


# -- thresholds ---------------------------------------------------------------------


def test_thresholds():
    t = thresholds(3)
    assert (t.n_star_e, t.n_star_m) == (3, 2)
    assert thresholds(F(18, 5)).n_star_m == 5
    with pytest.raises(DomainError):
        thresholds(4)


def test_critical_dimension_sequence():
    seq = [critical_dims(n)[0] for n in range(1, 9)]
    assert seq == [2, F(8, 3), 3, F(16, 5), F(10, 3), F(24, 7), F(7, 2), F(32, 9)]
    for n in range(1, 8):
        assert critical_dims(n)[1] == critical_dims(2 * n - 1)[0]


def test_subdivergence_classes():
    assert subdivergence_classes(3) == [z(3, 2)]
    expected = {z(3, 2), z(3, 2) * z(4), z(2) * z(4, 2), z(3, 2) * z(4, 2), z(2) * z(4, 3)}
    assert set(subdivergence_classes(F(7, 2))) == expected
    # deg z3^2 = 6 - 2d > 0 at d = 2, so nothing diverges there
    assert subdivergence_classes(2) == []
    with pytest.raises(DomainError):
        subdivergence_classes(4)


def test_subdivergence_classes_match_degree_scan():
    for d in (F(3), F(10, 3), F(7, 2), F(18, 5), F(37, 10)):
        scan = {
            beta
            for beta in all_indices(10)
            if degree_mi(beta, d) <= 0 and beta[4] < beta.size and is_populated(beta)
        }
        assert scan == set(subdivergence_classes(d))


# -- coproducts ----------------------------------------------------------------------


def test_coproduct_z4_4():
    expected = tensor((24 * 32, [z(3, 2), z(3, 2)], z(2, 2)), (24 * 4, [z(3, 2)], z(2) * z(4, 2)))
    assert coproduct_mi_closed(4, 3) == expected
    assert coproduct_mi_general(z(4, 4), 3) == expected


def test_coproduct_z4_5_layout():
    y2, y3 = y_generator(2), y_generator(3)

    def term(c, left, right):
        return LinComb({(f, right): c * v for f, v in left.items()})

    expected = (
        term(10, y2.product(y3, forest_mul), z(2, 2))
        + term(10, y3, z(2) * z(4, 2))
        + term(15, y2.product(y2, forest_mul), z(2, 2) * z(4))
        + term(10, y2, z(2) * z(4, 3))
    )
    assert coproduct_mi_closed(5) == expected
    assert coproduct_mi_closed(5, F(18, 5)) == expected


@pytest.mark.parametrize("d", [F(3), F(10, 3), F(7, 2), F(18, 5)])
def test_closed_form_matches_general_oracle(d):
    for n in range(2, 7):
        assert coproduct_mi_closed(n, d) == coproduct_mi_general(z(4, n), d)


def test_small_n_coproducts_are_empty_below_three():
    for n in (2, 3):
        assert coproduct_mi_closed(n, F(5, 2)) == LinComb()
        assert coproduct_mi_general(z(4, n), F(29, 10)) == LinComb()


def test_kmin_does_not_change_closed_form():
    for n in range(2, 7):
        assert coproduct_mi_closed(n, kmin=1) == coproduct_mi_closed(n)


def test_extended_difference():
    for n in range(3, 7):
        diff = coproduct_mi_extended(n) - coproduct_mi_closed(n)
        expected = LinComb({(f, z(2) * z(4)): n * c for f, c in y_generator(n - 1).items()})
        assert diff == expected


@pytest.mark.parametrize("d", [F(3), F(18, 5)])
def test_upper_square(d):
    for n in range(2, 6):
        lhs = p_map_tensor(coproduct_mi_closed(n, d))
        rhs = coproduct_CK(p_map(z(4, n)), d, reduced=True)
        assert lhs == rhs


def test_upper_square_quoted_coefficient():
    lhs = p_map_tensor(coproduct_mi_closed(4, 3))
    assert lhs[((SUNSET, SUNSET), (DE,))] == 2**11 * 3**3
    assert lhs[((SUNSET,), (SUNSET_PLUS,))] == 2**12 * 3**3


def _character_side(t, d, g):
    out = LinComb()
    for (left, right), c in t.items():
        value = g(twisted_antipode(p_map(left), d))
        for f, cr in p_map(right).items():
            out.add_term(f, value * c * cr)
    return out


def _twisted_on_sum(s, d):
    out = LinComb()
    for f, c in s.items():
        out += twisted_antipode(f, d).scale(c)
    return out


def test_extended_coproduct_is_neutral():
    g = formal_character()
    d = F(37, 10)
    for n in range(3, 7):
        a = _character_side(coproduct_mi_extended(n, d), d, g)
        b = _character_side(coproduct_mi_closed(n, d), d, g)
        assert a == b


def test_sigma_is_linear_in_y():
    g = formal_character()
    d = F(18, 5)
    for p in range(2, 6):
        expanded = sum(
            (c * g(_twisted_on_sum(p_map(m[0]), d)) for m, c in y_generator(p).items()),
            Poly(),
        )
        assert g(_twisted_on_sum(p_map(y_generator(p)), d)) == expanded


# -- theta and eta ----------------------------------------------------------------------


def test_theta_m_is_two_terms():
    s, a = Poly.var("s"), Poly.var("a")
    t = theta_m(4, s, a)
    assert t == LinComb({(z(2),): -s, (): -a})


def test_eta_examples():
    x, y = Poly.var("X"), Poly.var("Y")
    assert eta(x**2 * y) == LinComb.single((z(4, 2) * z(2),))
    assert eta(Poly.const(3)) == LinComb.single((), 3)


def test_eta_of_wick_matches_sum_formula():
    spec = CumulantSpec.formal(6)
    for n in range(1, 7):
        expected = LinComb()
        for k in range(n + 1):
            for j in partitions(n):
                if sum(j.values()) != k:
                    continue
                coeff = Poly.const(math.factorial(n))
                for p, jp in j.items():
                    if p == 1:
                        continue
                    coeff = coeff * (-Poly.var(f"sigma{p}") / math.factorial(p)) ** jp / math.factorial(jp)
                j1 = j.get(1, 0)
                coeff = coeff / math.factorial(j1)
                key = z(2, k - j1) * z(4, j1)
                expected.add_term((key,), coeff)
        assert eta(wick_map_xy(spec, n)) == expected


# -- serialisation --------------------------------------------------------------------------


def test_multi_index_json():
    m = z(3, 2) * z(4)
    assert m.to_json() == {"beta": {"3": 2, "4": 1}}
    assert MultiIndex.from_json(json.dumps(m.to_json())) == m
    rows = mi_tensor_to_json(coproduct_mi_closed(4, 3))
    assert {r["coefficient"] for r in rows} == {"768", "96"}
    assert str(z(3, 2) * z(4)) == "z3^2 z4"
