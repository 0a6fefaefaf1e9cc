"""Wick renormalisation against BPHZ renormalisation.

Picks a random rational character g on graphs, defines counterterms
σ_p = -g(Ã(P_M(Y_p))), and pushes X^n around both sides of the square:
Wick map first and then the sum over pairings, or pairings first and then
the BPHZ recursion. The two diagram sums agree exactly.
"""

from fractions import Fraction

from phi4wick.feynman import bphz_valuation, is_divergent, random_character
from phi4wick.multiindex import p_map, z
from phi4wick.verify import path_graphs_first, path_wick_first, sigma_from_character, verify

d = Fraction(18, 5)
g = random_character(seed=11)

print(f"d = {d}; counterterms from a random character:")
for p in range(2, 6):
    print(f"  sigma_{p} = {sigma_from_character(g, p, d)}")

n = 4
one = path_wick_first(n, d, g)
two = path_graphs_first(n, d, g)
print(f"\nX^{n}: Wick route has {len(one)} graph terms, BPHZ route {len(two)}; equal: {one == two}")
for (graph,), c in sorted(one.items())[:4]:
    print(f"  {c} * {graph}")

print("\nThe renormalised character vanishes on every divergent graph of P(X^5):")
for (graph,) in sorted(p_map(z(4, 5)).keys()):
    if is_divergent(graph, d):
        print(f"  {graph}: {bphz_valuation(g, graph, d)}")

print("\nFull check, n <= 5, three seeds:")
for seed in range(3):
    reports = verify(5, d, seed)
    print(f"  seed {seed}:", " ".join(f"n={r.n}:{'ok' if r.ok else 'FAIL'}" for r in reports))
