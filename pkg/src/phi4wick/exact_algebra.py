"""Exact rational algebra: sparse polynomials, linear combinations, and the
convolution algebra of truncated linear functionals on R[X].

Everything here works with :class:`fractions.Fraction` scalars. Functionals may
also take values in the polynomial ring :class:`Poly`, which is how
algebra-valued moments (values in R[Y], or in a ring of formal symbols) are
represented.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Callable, Dict, Hashable, Iterable, Iterator, Mapping, Tuple, Union

from .errors import DomainError, NotInvertibleError, TruncationMismatchError

__all__ = [
    "as_rational",
    "compositions",
    "partitions",
    "multinomial",
    "Poly",
    "X",
    "Y",
    "LinComb",
    "Functional",
    "PowerSeries",
    "counit",
    "convolve",
    "convolution_power",
    "functional_inverse",
    "neumann_inverse",
    "exp_star",
    "log_star",
    "lambda_transform",
    "inverse_lambda",
    "rational_to_str",
    "rational_from_str",
]

DEFAULT_NMAX = 8


def as_rational(x) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Strings like ``"18/5"`` or ``"3.5"`` are parsed exactly; floats go through
    their shortest repr so that ``3.9`` becomes ``39/10`` rather than the
    binary expansion.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        return Fraction(x.strip().replace("−", "-"))
    raise TypeError(f"cannot interpret {x!r} as a rational number")


def rational_to_str(q: Fraction) -> str:
    return str(Fraction(q))


def rational_from_str(s: str) -> Fraction:
    return as_rational(s)


def compositions(n: int) -> Iterator[Tuple[int, ...]]:
    """Ordered tuples of positive integers summing to ``n`` (none for n = 0)."""
    if n <= 0:
        return
    yield (n,)
    for first in range(1, n):
        for rest in compositions(n - first):
            yield (first,) + rest


def partitions(n: int, max_part: int | None = None) -> Iterator[Dict[int, int]]:
    """Integer partitions of ``n`` as multiplicity maps ``{part: count}``.

    ``partitions(0)`` yields the empty partition once.
    """
    if max_part is None:
        max_part = n
    if n == 0:
        yield {}
        return
    for part in range(min(n, max_part), 0, -1):
        for rest in partitions(n - part, part):
            out = dict(rest)
            out[part] = out.get(part, 0) + 1
            yield out


def multinomial(parts: Iterable[int]) -> int:
    parts = list(parts)
    out = math.factorial(sum(parts))
    for p in parts:
        out //= math.factorial(p)
    return out


# ---------------------------------------------------------------------------
# Sparse multivariate polynomials
# ---------------------------------------------------------------------------

Monomial = Tuple[Tuple[str, int], ...]


def _mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    exps = dict(a)
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items()))


class Poly:
    """Polynomial with Fraction coefficients in named commuting variables.

    Monomials are stored as sorted tuples of ``(name, exponent)``; zero
    coefficients are never stored. Instances are treated as immutable.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        if terms:
            for mono, c in terms.items():
                c = Fraction(c)
                if c != 0:
                    clean[tuple(sorted((v, e) for v, e in mono if e))] = c
        self._terms: Dict[Monomial, Fraction] = clean
        self._hash = None

    @classmethod
    def _raw(cls, terms: Dict[Monomial, Fraction]) -> "Poly":
        # terms already normalised by an internal operation; only zeros are dropped
        out = cls.__new__(cls)
        out._terms = {m: c for m, c in terms.items() if c}
        out._hash = None
        return out

    # construction -----------------------------------------------------------
    @classmethod
    def var(cls, name: str) -> "Poly":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(): as_rational(c) if not isinstance(c, Fraction) else c})

    @classmethod
    def monomial(cls, powers: Mapping[str, int], coeff=1) -> "Poly":
        return cls({tuple(sorted(powers.items())): as_rational(coeff)})

    @staticmethod
    def coerce(x) -> "Poly":
        if isinstance(x, Poly):
            return x
        return Poly.const(x)

    # inspection -------------------------------------------------------------
    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(m == () for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((), Fraction(0))

    def coeff(self, powers: Mapping[str, int] | Monomial = ()) -> Fraction:
        if isinstance(powers, Mapping):
            powers = tuple(sorted((v, e) for v, e in powers.items() if e))
        return self._terms.get(tuple(powers), Fraction(0))

    def variables(self) -> set:
        return {v for m in self._terms for v, _ in m}

    def degree(self, var: str) -> int:
        return max((dict(m).get(var, 0) for m in self._terms), default=0)

    def truncate(self, var: str, max_degree: int) -> "Poly":
        """Drop every term whose degree in ``var`` exceeds ``max_degree``."""
        return Poly({m: c for m, c in self._terms.items() if dict(m).get(var, 0) <= max_degree})

    def collect(self, var: str) -> Dict[int, "Poly"]:
        """Split into ``{power of var: coefficient polynomial}``."""
        out: Dict[int, Dict[Monomial, Fraction]] = {}
        for m, c in self._terms.items():
            e = dict(m).get(var, 0)
            rest = tuple((v, k) for v, k in m if v != var)
            out.setdefault(e, {})[rest] = c
        return {e: Poly(t) for e, t in out.items()}

    # arithmetic -------------------------------------------------------------
    def __add__(self, other):
        other = Poly.coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, 0) + c
        return Poly._raw(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly._raw({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-Poly.coerce(other))

    def __rsub__(self, other):
        return Poly.coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Poly):
            c = as_rational(other)
            return Poly._raw({m: v * c for m, v in self._terms.items()})
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, 0) + c1 * c2
        return Poly._raw(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self * (1 / as_rational(other))

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not polynomial")
        out = Poly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def subs(self, values: Mapping[str, object]) -> "Poly":
        """Substitute variables by scalars or polynomials."""
        out = Poly()
        for m, c in self._terms.items():
            term = Poly.const(c)
            keep = []
            for v, e in m:
                if v in values:
                    term = term * (Poly.coerce(values[v]) ** e)
                else:
                    keep.append((v, e))
            out = out + term * Poly({tuple(keep): Fraction(1)})
        return out

    # comparison -------------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Poly):
            return self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self._terms == ({(): Fraction(other)} if other != 0 else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # rendering --------------------------------------------------------------
    def _sorted_items(self):
        def key(item):
            m, _ = item
            return (-sum(e for _, e in m), m)

        return sorted(self._terms.items(), key=key)

    def __repr__(self):
        return f"Poly({str(self)!r})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for m, c in self._sorted_items():
            mono = "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")

    def to_latex(self) -> str:
        if not self._terms:
            return "0"
        out = ""
        for m, c in self._sorted_items():
            mono = " ".join(_latex_var(v) + (f"^{{{e}}}" if e != 1 else "") for v, e in m)
            sign = "-" if c < 0 else "+"
            a = abs(c)
            if a.denominator == 1:
                num = "" if (a == 1 and mono) else str(a.numerator)
            else:
                num = rf"\frac{{{a.numerator}}}{{{a.denominator}}}"
            body = f"{num} {mono}".strip()
            out += f" {sign} {body}"
        out = out.strip()
        return out[2:] if out.startswith("+ ") else "-" + out[2:]

    def to_json(self) -> list:
        return [
            {"coefficient": str(c), "powers": {v: e for v, e in m}}
            for m, c in self._sorted_items()
        ]

    @classmethod
    def from_json(cls, data: list) -> "Poly":
        return cls(
            {tuple(sorted(t["powers"].items())): as_rational(t["coefficient"]) for t in data}
        )


def _latex_var(name: str) -> str:
    head = name.rstrip("0123456789")
    tail = name[len(head):]
    if head == "sigma":
        head = r"\sigma"
    return f"{head}_{{{tail}}}" if tail else head


X = Poly.var("X")
Y = Poly.var("Y")

Scalar = Union[Fraction, Poly]


def _is_zero(c) -> bool:
    return c == 0


# ---------------------------------------------------------------------------
# Linear combinations over arbitrary hashable keys
# ---------------------------------------------------------------------------


class LinComb:
    """Finite linear combination ``sum c_k * k`` with exact coefficients.

    Keys are any hashable objects (forests of graphs, multi-index forests,
    tensor pairs, ...). Coefficients are Fractions or :class:`Poly`.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Hashable, Scalar] | Iterable[Tuple[Hashable, Scalar]] | None = None):
        self._terms: Dict[Hashable, Scalar] = {}
        if terms is None:
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        for k, c in items:
            self._add(k, c)

    def _add(self, key, c):
        if not isinstance(c, Poly):
            c = as_rational(c)
        new = self._terms.get(key, 0) + c
        if _is_zero(new):
            self._terms.pop(key, None)
        else:
            self._terms[key] = new

    @classmethod
    def single(cls, key, coeff=1) -> "LinComb":
        return cls({key: coeff})

    def items(self):
        return self._terms.items()

    def keys(self):
        return self._terms.keys()

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def __getitem__(self, key):
        return self._terms.get(key, Fraction(0))

    def coefficient(self, key):
        return self[key]

    def __add__(self, other: "LinComb") -> "LinComb":
        out = self.copy()
        for k, c in other.items():
            out._add(k, c)
        return out

    def __iadd__(self, other):
        for k, c in other.items():
            self._add(k, c)
        return self

    def add_term(self, key, coeff) -> None:
        self._add(key, coeff)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "LinComb":
        if not isinstance(c, Poly):
            c = as_rational(c)
        return type(self)((k, v * c) for k, v in self._terms.items())

    def __mul__(self, c):
        if isinstance(c, LinComb):
            return NotImplemented
        return self.scale(c)

    __rmul__ = __mul__

    def copy(self):
        out = type(self)()
        out._terms = dict(self._terms)
        return out

    def map_coefficients(self, fn: Callable[[Scalar], Scalar]) -> "LinComb":
        return type(self)((k, fn(c)) for k, c in self._terms.items())

    def map_keys(self, fn: Callable[[Hashable], Hashable]) -> "LinComb":
        return type(self)((fn(k), c) for k, c in self._terms.items())

    def product(self, other: "LinComb", keymul: Callable[[Hashable, Hashable], Hashable]) -> "LinComb":
        out = type(self)()
        for k1, c1 in self._terms.items():
            for k2, c2 in other._terms.items():
                out._add(keymul(k1, k2), c1 * c2)
        return out

    def __eq__(self, other):
        if isinstance(other, LinComb):
            return self._terms == other._terms
        if other == 0:
            return not self._terms
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        inner = ", ".join(f"{k!r}: {c}" for k, c in list(self._terms.items())[:6])
        more = ", ..." if len(self._terms) > 6 else ""
        return f"{type(self).__name__}({{{inner}{more}}})"


# ---------------------------------------------------------------------------
# Truncated functionals and power series
# ---------------------------------------------------------------------------


class Functional:
    """Linear map on R[X] known on the basis X^0 .. X^nmax.

    ``values[n]`` is the image of ``X^n``. Values are Fractions or Polys.
    """

    __slots__ = ("values",)

    def __init__(self, values: Iterable):
        vals = tuple(v if isinstance(v, Poly) else as_rational(v) for v in values)
        if not vals:
            raise ValueError("a functional needs at least the value at X^0")
        self.values = vals

    @property
    def nmax(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, n):
        return self.values[n]

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def in_L1(self) -> bool:
        return self.values[0] == 1

    def in_L0(self) -> bool:
        return self.values[0] == 0

    def __add__(self, other: "Functional") -> "Functional":
        _check_orders(self, other)
        return Functional(a + b for a, b in zip(self.values, other.values))

    def __sub__(self, other: "Functional") -> "Functional":
        _check_orders(self, other)
        return Functional(a - b for a, b in zip(self.values, other.values))

    def __neg__(self):
        return Functional(-a for a in self.values)

    def scale(self, c) -> "Functional":
        return Functional(a * c for a in self.values)

    def __eq__(self, other):
        if not isinstance(other, Functional):
            return NotImplemented
        return self.values == other.values

    __hash__ = None

    def __repr__(self):
        return "Functional([" + ", ".join(str(v) for v in self.values) + "])"

    def to_json(self) -> str:
        return json.dumps([_value_to_json(v) for v in self.values])

    @classmethod
    def from_json(cls, text: str) -> "Functional":
        return cls(_value_from_json(v) for v in json.loads(text))


def _value_to_json(v):
    if isinstance(v, Poly):
        return v.to_json()
    return rational_to_str(v)


def _value_from_json(v):
    if isinstance(v, list):
        return Poly.from_json(v)
    return rational_from_str(v)


class PowerSeries:
    """Truncated power series ``sum coeffs[n] t^n`` for n = 0 .. nmax."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable):
        self.coeffs = tuple(c if isinstance(c, Poly) else as_rational(c) for c in coeffs)

    @property
    def nmax(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        if self.nmax != other.nmax:
            raise TruncationMismatchError(f"orders {self.nmax} and {other.nmax} differ")
        n = self.nmax
        return PowerSeries(
            sum((self.coeffs[k] * other.coeffs[j - k] for k in range(j + 1)), Fraction(0))
            for j in range(n + 1)
        )

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        if self.nmax != other.nmax:
            raise TruncationMismatchError(f"orders {self.nmax} and {other.nmax} differ")
        return PowerSeries(a + b for a, b in zip(self.coeffs, other.coeffs))

    def __eq__(self, other):
        if not isinstance(other, PowerSeries):
            return NotImplemented
        return self.coeffs == other.coeffs

    __hash__ = None

    def __repr__(self):
        return "PowerSeries([" + ", ".join(str(c) for c in self.coeffs) + "])"

    def to_json(self) -> str:
        return json.dumps([_value_to_json(c) for c in self.coeffs])

    @classmethod
    def from_json(cls, text: str) -> "PowerSeries":
        return cls(_value_from_json(v) for v in json.loads(text))


def _check_orders(*fs):
    orders = {f.nmax for f in fs}
    if len(orders) > 1:
        raise TruncationMismatchError(f"truncation orders differ: {sorted(orders)}")


def counit(nmax: int = DEFAULT_NMAX) -> Functional:
    """The convolution unit: 1 at X^0, zero elsewhere."""
    return Functional([1] + [0] * nmax)


def convolve(phi: Functional, psi: Functional) -> Functional:
    """(phi * psi)(X^n) = sum_k C(n, k) phi(X^k) psi(X^(n-k))."""
    _check_orders(phi, psi)
    out = []
    for n in range(phi.nmax + 1):
        acc = Fraction(0)
        for k in range(n + 1):
            acc = acc + math.comb(n, k) * (phi[k] * psi[n - k])
        out.append(acc)
    return Functional(out)


def convolution_power(phi: Functional, k: int) -> Functional:
    out = counit(phi.nmax)
    for _ in range(k):
        out = convolve(out, phi)
    return out


def _composition_sum(phi: Functional, n: int, weight: Callable[[int], Fraction]):
    """sum over compositions (n_1..n_k) of n of weight(k) * n!/prod n_i! * prod phi(X^{n_i})."""
    acc = Fraction(0)
    for comp in compositions(n):
        term = Fraction(multinomial(comp)) * weight(len(comp))
        for part in comp:
            term = term * phi[part]
        acc = acc + term
    return acc


def functional_inverse(phi: Functional) -> Functional:
    """Convolution inverse of ``phi`` in L1, via the explicit composition sum."""
    if not phi.in_L1():
        raise NotInvertibleError("phi(1) must equal 1 to invert under convolution")
    out = [Fraction(1)]
    for n in range(1, phi.nmax + 1):
        out.append(_composition_sum(phi, n, lambda k: Fraction((-1) ** k)))
    return Functional(out)


def neumann_inverse(phi: Functional) -> Functional:
    """Inverse as the Neumann series sum_k (eps - phi)^{*k}, summed to k = nmax."""
    if not phi.in_L1():
        raise NotInvertibleError("phi(1) must equal 1 to invert under convolution")
    eps = counit(phi.nmax)
    diff = eps - phi
    out = eps
    power = eps
    for _ in range(phi.nmax):
        power = convolve(power, diff)
        out = out + power
    return out


def exp_star(phi: Functional) -> Functional:
    """Convolution exponential, defined on functionals vanishing at 1."""
    if not phi.in_L0():
        raise DomainError("exp_star needs phi(1) = 0")
    out = [Fraction(1)]
    for n in range(1, phi.nmax + 1):
        out.append(_composition_sum(phi, n, lambda k: Fraction(1, math.factorial(k))))
    return Functional(out)


def log_star(psi: Functional) -> Functional:
    """Convolution logarithm, defined on functionals equal to 1 at 1."""
    if not psi.in_L1():
        raise DomainError("log_star needs psi(1) = 1")
    out = [Fraction(0)]
    for n in range(1, psi.nmax + 1):
        out.append(_composition_sum(psi, n, lambda k: Fraction((-1) ** (k + 1), k)))
    return Functional(out)


def lambda_transform(phi: Functional) -> PowerSeries:
    """Exponential generating series: coefficient of t^n is phi(X^n)/n!."""
    return PowerSeries(v * Fraction(1, math.factorial(n)) for n, v in enumerate(phi.values))


def inverse_lambda(series: PowerSeries) -> Functional:
    return Functional(c * math.factorial(n) for n, c in enumerate(series.coeffs))
