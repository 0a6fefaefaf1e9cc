"""Vacuum graphs, multi-indices and the two coproducts.

Enumerates the connected graphs behind P(X^4), shows how the counting map
sends them to multi-indices, and compares the reduced extraction-contraction
coproduct on graphs with the closed-form multi-index coproduct.
"""

from fractions import Fraction

from phi4wick.feynman import automorphism_count, coproduct_CK, degree, divergent_subgraphs
from phi4wick.multiindex import (
    coproduct_mi_closed,
    coproduct_mi_general,
    counting_map,
    format_tensor,
    p_map,
    p_map_tensor,
    subdivergence_classes,
    thresholds,
    z,
)

d = Fraction(3)
print(f"Working at d = {d}: n*_e = {thresholds(d).n_star_e}, n*_m = {thresholds(d).n_star_m}")
print("Divergent subdiagram classes:", [str(m) for m in subdivergence_classes(d)])

print("\nConnected pairings of four quartic vertices, P(X^4):")
for (g,), c in sorted(p_map(z(4, 4)).items()):
    subs = divergent_subgraphs(g, d)
    print(f"  {str(c):>6} x {g}  |Aut| = {automorphism_count(g)}, deg = {degree(g, d)}, divergent subgraphs: {len(subs)}")

print("\nClosed-form reduced coproduct of z4^4:")
print("  ", format_tensor(coproduct_mi_closed(4, d)))

lhs = p_map_tensor(coproduct_mi_closed(4, d))
rhs = coproduct_CK(p_map(z(4, 4)), d, reduced=True)
print("Mapped to graphs, it matches the coproduct of P(X^4):", lhs == rhs)
for (left, right), c in sorted(rhs.items()):
    print(f"   {c} * {left} (x) {right}")

# one dimension higher more subdivergences appear
d = Fraction(18, 5)
print(f"\nAt d = {d} (n*_m = {thresholds(d).n_star_m}) the z4^5 table reads")
table = coproduct_mi_closed(5, d)
print("  ", format_tensor(table))
print("E-coefficient oracle agrees:", table == coproduct_mi_general(z(4, 5), d))
print("Counting map on the support of P(X^5):", sorted({str(counting_map(f[0])) for f in p_map(z(4, 5))}))
