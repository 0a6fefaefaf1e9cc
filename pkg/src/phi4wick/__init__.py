"""Exact Wick renormalisation, Feynman-graph Hopf algebras and multi-indices for
the Φ⁴ measure with fractional-dimension propagators.

Submodules:
    exact_algebra: rationals, polynomials, convolution algebra on R[X].
    wick: Bell polynomials, Wick maps, the free algebra S(R[X]).
    feynman: vacuum multigraphs, extraction-contraction coproduct, antipodes.
    multiindex: multi-indices, P_M, closed-form coproducts.
    valuation: numeric Green functions, diagram values, counterterms.
    verify: exact end-to-end consistency checks.
"""

from .errors import (
    AliasingError,
    DomainError,
    NotInvertibleError,
    Phi4WickError,
    SizeLimitError,
    TruncationMismatchError,
)

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "DomainError",
    "NotInvertibleError",
    "Phi4WickError",
    "SizeLimitError",
    "TruncationMismatchError",
    "__version__",
]
