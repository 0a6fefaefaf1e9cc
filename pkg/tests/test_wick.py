import math
from fractions import Fraction

from hypothesis import given, settings
from hypothesis import strategies as st

from phi4wick.exact_algebra import Functional, LinComb, Poly, X, Y, functional_inverse
from phi4wick.wick import (
    CumulantSpec,
    antipode_H,
    bell_complete,
    bell_partial,
    bell_symbols,
    coproduct_H,
    h_product,
    mu_hat,
    sym_monomial,
    takeuchi_antipode,
    wick_map,
    wick_map_free,
    wick_map_xy,
    wick_map_xy_from_cumulants,
)
from strategies import l1_functionals, rationals

F = Fraction
x, y2, y3, y4, y5 = bell_symbols(5)


def hermite(n, c):
    # probabilists' Hermite with variance c: sum_m (-c/2)^m n!/(m!(n-2m)!) X^{n-2m}
    out = Poly()
    for m in range(n // 2 + 1):
        coeff = F(math.factorial(n), math.factorial(m) * math.factorial(n - 2 * m)) * (-F(c) / 2) ** m
        out = out + coeff * X ** (n - 2 * m)
    return out


def gaussian(c, nmax):
    vals = []
    for k in range(nmax + 1):
        vals.append(F(0) if k % 2 else math.prod(range(k - 1, 0, -2)) * F(c) ** (k // 2))
    return Functional(vals)


def set_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def test_bell_small_cases():
    assert bell_complete(0) == 1
    assert bell_complete(1) == x
    assert bell_complete(2, [X, -Poly.var("Y2")]) == X**2 - Poly.var("Y2")


def test_bell_five_fixture():
    expected = y5 + 5 * y4 * x + 10 * y2 * y3 + 10 * y3 * x**2 + 15 * y2**2 * x + 10 * y2 * x**3 + x**5
    assert bell_complete(5) == expected


def test_partial_bell_fixture():
    assert bell_partial(5, 3) == 15 * x * y2**2 + 10 * x**2 * y3
    for n in range(1, 7):
        assert bell_partial(n, n) == x**n


@settings(max_examples=10, deadline=None)
@given(st.lists(rationals, min_size=10, max_size=10))
def test_bell_decomposes_into_partial(args):
    for n in range(1, 11):
        assert bell_complete(n, args) == sum((bell_partial(n, k, args) for k in range(1, n + 1)), Poly())


def test_partial_bell_counts_set_partitions():
    for n in range(1, 9):
        counts = [0] * (n + 1)
        for part in set_partitions(list(range(n))):
            counts[len(part)] += 1
        for k in range(1, n + 1):
            assert bell_partial(n, k, [1] * n) == counts[k]


def test_wick_gaussian_is_hermite():
    c = F(5, 3)
    mu = gaussian(c, 8)
    assert wick_map(mu, 0) == 1
    assert wick_map(mu, 2) == X**2 - c
    assert wick_map(mu, 3) == X**3 - 3 * c * X
    assert wick_map(mu, 4) == X**4 - 6 * c * X**2 + 3 * c**2
    for n in range(9):
        assert wick_map(mu, n) == hermite(n, c)


@settings(max_examples=20, deadline=None)
@given(l1_functionals)
def test_wick_orthogonality(mu):
    for n in range(1, 9):
        w = wick_map(mu, n)
        assert sum((c * mu[dict(m).get("X", 0)] for m, c in w.items()), F(0)) == 0


@settings(max_examples=15, deadline=None)
@given(l1_functionals)
def test_generating_function_identity(mu):
    # sum_k t^k/k! W(X^k) times E[e^{tX}] = e^{tX}, coefficientwise in t
    ws = [wick_map(mu, k) for k in range(9)]
    for n in range(9):
        acc = Poly()
        for k in range(n + 1):
            acc = acc + ws[k] * (F(mu[n - k]) / (math.factorial(k) * math.factorial(n - k)))
        assert acc == X**n / math.factorial(n)


def test_wick_xy_examples():
    assert wick_map_xy(CumulantSpec({}), 5) == X**5
    spec = CumulantSpec.formal(4)
    s2, s3 = Poly.var("sigma2"), Poly.var("sigma3")
    w = wick_map_xy(spec, 4)
    assert w.coeff({"sigma2": 2, "Y": 2}) == 3
    assert w.coeff({"sigma2": 1, "Y": 1, "X": 2}) == -6
    assert w.coeff({"sigma3": 1, "Y": 1, "X": 1}) == -4
    assert w.coeff({"sigma4": 1, "Y": 1}) == -1
    assert w.coeff({"X": 4}) == 1
    assert s2 * s3 != 0


def test_bell_route_matches_cumulant_route():
    spec = CumulantSpec.formal(7)
    for n in range(8):
        assert wick_map_xy(spec, n) == wick_map_xy_from_cumulants(spec, n)


def test_wick_series_is_exponential():
    # sum_n (-a)^n/n! W(X^n) = exp(-aX - beta Y), beta = sum_n (-a)^n sigma_n/n!, up to a^7
    nmax = 7
    spec = CumulantSpec({2: F(1, 3), 3: F(-2), 4: F(5, 7), 5: 1, 6: F(1, 2), 7: 3})
    a = Poly.var("a")
    lhs = Poly()
    for n in range(nmax + 1):
        lhs = lhs + wick_map_xy(spec, n) * (-a) ** n / math.factorial(n)
    beta = sum((spec.get(n) * (-a) ** n / math.factorial(n) for n in range(2, nmax + 1)), Poly())
    u = -a * X - beta * Y
    rhs, term = Poly.const(1), Poly.const(1)
    for j in range(1, nmax + 1):
        term = (term * u).truncate("a", nmax) / j
        rhs = rhs + term
    assert lhs.truncate("a", nmax) == rhs.truncate("a", nmax)


def test_takeuchi_small_cases():
    assert takeuchi_antipode(1) == LinComb({(1,): -1})
    assert takeuchi_antipode(2) == LinComb({(2,): -1, (1, 1): 2})


def test_antipode_property_on_H():
    # m(S ⊗ id)Δ = ε on X^n, n >= 1
    for n in range(1, 7):
        acc = LinComb()
        for (left, right), c in coproduct_H((n,)).items():
            acc += antipode_H(left).product(LinComb.single(right), h_product).scale(c)
        assert acc == LinComb()


def test_h_coproduct_is_multiplicative():
    def tmul(a, b):
        return (h_product(a[0], b[0]), h_product(a[1], b[1]))

    for i, j in [(1, 2), (2, 2), (1, 3)]:
        lhs = coproduct_H(sym_monomial(i, j))
        assert lhs == coproduct_H((i,)).product(coproduct_H((j,)), tmul)


@settings(max_examples=20, deadline=None)
@given(l1_functionals)
def test_free_square(mu):
    inv = functional_inverse(mu)
    for n in range(1, 9):
        assert mu_hat(mu, takeuchi_antipode(n)) == inv[n]
    for n in range(9):
        assert wick_map_free(mu, n) == wick_map(mu, n)
