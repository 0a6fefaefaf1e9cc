"""Wick polynomials from moments, cumulants and Bell polynomials.

Walks through the one-variable picture: a moment functional μ, its
convolution inverse, the Wick map W(X^n) = (μ⁻¹ ⊗ id)ΔX^n, and the two ways
of writing it (Bell polynomials in the cumulants, or the antipode of the free
commutative algebra).
"""

from fractions import Fraction

from phi4wick.exact_algebra import Functional, functional_inverse, log_star
from phi4wick.wick import (
    CumulantSpec,
    bell_complete,
    bell_partial,
    mu_hat,
    takeuchi_antipode,
    wick_map,
    wick_map_free,
    wick_map_xy,
)


def gaussian_moments(c, nmax=8):
    out = []
    for k in range(nmax + 1):
        dbl = 1
        for j in range(k - 1, 0, -2):
            dbl *= j
        out.append(Fraction(0) if k % 2 else dbl * Fraction(c) ** (k // 2))
    return Functional(out)


print("Complete Bell polynomial B_5 in X, Y2, ..., Y5:")
print("  ", bell_complete(5))
print("Partial Bell polynomial B_{5,3}:")
print("  ", bell_partial(5, 3))

# Gaussian moments: cumulants vanish beyond order 2, Wick powers are Hermite
mu = gaussian_moments(1)
print("\nGaussian with unit variance, cumulants:", [str(k) for k in log_star(mu)])
for n in range(1, 6):
    print(f"  W(X^{n}) = {wick_map(mu, n)}")

# a non-Gaussian law with a few rational moments
mu = Functional([1, 0, Fraction(2), Fraction(1, 3), Fraction(14), 0, 0, 0, 0])
inv = functional_inverse(mu)
print("\nA non-Gaussian functional and its convolution inverse:")
print("  mu     =", [str(v) for v in mu])
print("  mu^-1  =", [str(v) for v in inv])
print("Takeuchi's antipode, evaluated with mu, reproduces the inverse:")
for n in range(1, 6):
    print(f"  n={n}: mu_hat(S(X^{n})) = {mu_hat(mu, takeuchi_antipode(n))}")
print("and the free-algebra route gives the same Wick polynomials:")
for n in (3, 4):
    print(f"  W(X^{n}) = {wick_map_free(mu, n)}   (direct: {wick_map(mu, n)})")

# R[Y]-valued version: kappa(X^p) = sigma_p Y
print("\nWith formal cumulants kappa(X^p) = sigma_p Y the Wick map is a Bell polynomial:")
spec = CumulantSpec.formal(4)
print("  W(X^4) =", wick_map_xy(spec, 4))
