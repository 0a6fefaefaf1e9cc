"""Shared hypothesis strategies."""

from fractions import Fraction

from hypothesis import strategies as st

from phi4wick.exact_algebra import Functional

rationals = st.builds(
    Fraction,
    st.integers(min_value=-30, max_value=30),
    st.integers(min_value=1, max_value=9),
)


def functionals(nmax=8, first=None):
    """Random truncated functionals; ``first`` pins the value at 1."""
    tail = st.lists(rationals, min_size=nmax, max_size=nmax)
    if first is None:
        return st.builds(lambda a, t: Functional([a] + t), rationals, tail)
    return tail.map(lambda t: Functional([Fraction(first)] + t))


l1_functionals = functionals(first=1)
l0_functionals = functionals(first=0)
