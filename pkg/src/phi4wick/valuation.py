"""Numeric valuations on the three-dimensional torus.

The truncated Green function keeps Fourier modes k in Z³ with ‖k‖₁ <= N and
weights them by (4π²‖k‖₂² + m²)^(-s), where s = (7-d)/4 by default. A diagram
is valued by integrating the product of Green functions along its edges over
all vertex positions. Two independent backends are provided:

* ``pi_xspace`` tabulates G on an M³ grid and integrates with the uniform
  rule, using FFT correlations. The rule is exact for trigonometric
  polynomials whose frequencies do not alias, so M is chosen from the vertex
  arities.
* ``pi_momentum`` sums the same integral in Fourier space over independent
  loop momenta.

Counterterms and the renormalised expansion of log Z evaluate the exact
antipode expressions of the diagram layer on the numeric character.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.fft

from .errors import AliasingError, SizeLimitError
from .exact_algebra import LinComb, as_rational
from .feynman import Character, MultiGraph, antipode, degree
from .multiindex import p_map, thresholds, y_generator, z

__all__ = [
    "ValuationConfig",
    "GreenTable",
    "thread_count",
    "propagator",
    "l1_ball",
    "alias_free_grid",
    "green_truncated",
    "parseval_double_edge",
    "pi_xspace",
    "pi_momentum",
    "numeric_character",
    "sigma_numeric",
    "beta_series",
    "gamma_series",
    "logz_expansion",
    "CountertermReport",
    "counterterm_report",
    "scaling_series",
    "loglog_slope",
    "log_fit",
    "scaling_csv",
]

XSPACE_MAX_VERTICES = 4
MOMENTUM_MAX_LOOPS = 3


def thread_count() -> int:
    """Worker threads allowed by RENORM_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("RENORM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class ValuationConfig:
    """Parameters of the truncated propagator.

    Attributes:
        d: dimension parameter in (2, 4); enters only through s and the
            exact degree used by the antipode.
        m: mass.
        N: Fourier cutoff.
        s: propagator exponent, (7 - d)/4 when left as None.
        grid_size: quadrature grid M per axis; None picks an alias-free size
            per graph.
        cutoff_norm: "l1" (default) or "linf" for the retained mode set.
    """

    d: float = 3.0
    m: float = 1.0
    N: int = 4
    s: Optional[float] = None
    grid_size: Optional[int] = None
    cutoff_norm: str = "l1"

    def __post_init__(self):
        if not 2 < float(self.d) < 4:
            raise ValueError(f"d must lie in (2, 4), got {self.d}")
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if self.N < 0:
            raise ValueError("cutoff N must be non-negative")
        if self.cutoff_norm not in ("l1", "linf"):
            raise ValueError("cutoff_norm must be 'l1' or 'linf'")
        if self.exponent <= 0:
            raise ValueError("propagator exponent must be positive")
        if self.grid_size is not None and self.grid_size < 2 * self.N + 1:
            raise AliasingError(f"grid size {self.grid_size} cannot resolve modes up to N = {self.N}")

    @property
    def exponent(self) -> float:
        return (7 - float(self.d)) / 4 if self.s is None else float(self.s)

    @property
    def d_exact(self) -> Fraction:
        return as_rational(self.d)

    def with_N(self, N: int) -> "ValuationConfig":
        return ValuationConfig(self.d, self.m, N, self.s, None, self.cutoff_norm)


def propagator(k: np.ndarray, cfg: ValuationConfig) -> np.ndarray:
    """(4π²‖k‖₂² + m²)^(-s) for integer vectors k of shape (..., 3)."""
    k2 = np.sum(np.asarray(k, dtype=float) ** 2, axis=-1)
    return (4 * math.pi**2 * k2 + cfg.m**2) ** (-cfg.exponent)


@lru_cache(maxsize=64)
def _ball(N: int, norm: str) -> np.ndarray:
    r = np.arange(-N, N + 1)
    g = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    size = np.abs(g).sum(axis=1) if norm == "l1" else np.abs(g).max(axis=1)
    out = g[size <= N]
    out.setflags(write=False)
    return out


def l1_ball(N: int, norm: str = "l1") -> np.ndarray:
    """Integer vectors with ‖k‖ <= N, shape (P, 3), in lexicographic order."""
    return _ball(N, norm)


def alias_free_grid(N: int, arities: Sequence[int] = (2, 2)) -> int:
    """Smallest odd M with M > N·a for every integrated vertex of arity a.

    One vertex (the one of largest arity) is pinned by translation invariance,
    so the bound uses the largest arity among the remaining ones.
    """
    ar = sorted(arities)
    a = ar[-2] if len(ar) >= 2 else 2
    M = max(2 * N + 1, N * a + 1)
    return M if M % 2 else M + 1


@dataclass(frozen=True)
class GreenTable:
    """G_{d,N} tabulated on the grid x = j/M, j in {0, ..., M-1}³."""

    values: np.ndarray
    M: int
    N: int

    def __post_init__(self):
        self.values.setflags(write=False)


@lru_cache(maxsize=32)
def _green(d: float, m: float, N: int, s: float, M: int, norm: str) -> GreenTable:
    cfg = ValuationConfig(d, m, N, s, None, norm)
    ks = l1_ball(N, norm)
    hat = np.zeros((M, M, M))
    hat[tuple((ks % M).T)] = propagator(ks, cfg)
    vals = np.real(scipy.fft.ifftn(hat, workers=thread_count())) * M**3
    return GreenTable(np.ascontiguousarray(vals), M, N)


def green_truncated(cfg: ValuationConfig, M: Optional[int] = None) -> GreenTable:
    """G(x) = Σ_{‖k‖ <= N} cos(2πk·x)(4π²‖k‖₂² + m²)^(-s) on an M³ grid."""
    M = M or cfg.grid_size or (2 * cfg.N + 1)
    if M < 2 * cfg.N + 1:
        raise AliasingError(f"grid size {M} cannot resolve modes up to N = {cfg.N}")
    return _green(float(cfg.d), float(cfg.m), cfg.N, cfg.exponent, M, cfg.cutoff_norm)


def parseval_double_edge(cfg: ValuationConfig) -> float:
    """Σ_k prop(k)², the exact value of the double edge."""
    p = propagator(l1_ball(cfg.N, cfg.cutoff_norm), cfg)
    return float(np.sum(p * p))


# ---------------------------------------------------------------------------
# x-space quadrature
# ---------------------------------------------------------------------------


def _pinned_order(g: MultiGraph) -> List[int]:
    # largest arity first so the pinned vertex is the one that would alias most
    ar = g.arities()
    return sorted(range(g.n), key=lambda v: -ar[v])


def _corr(a: np.ndarray, b: np.ndarray, workers: int) -> np.ndarray:
    """(a ⊛ b)(x) = mean_y a(y) b(x - y) on the periodic grid (batched over leading axes)."""
    axes = (-3, -2, -1)
    fa = scipy.fft.rfftn(a, axes=axes, workers=workers)
    fb = scipy.fft.rfftn(b, axes=axes, workers=workers)
    M = a.shape[-1]
    return scipy.fft.irfftn(fa * fb, s=(M, M, M), axes=axes, workers=workers) / M**3


def pi_xspace(g, cfg: ValuationConfig, M: Optional[int] = None) -> float:
    """Uniform-grid quadrature of ∫ ∏_e G(x_{e+} - x_{e-}) dx over (T³)^V.

    Forests are valued multiplicatively. Graphs with more than four vertices
    raise SizeLimitError.
    """
    if isinstance(g, tuple):
        out = 1.0
        for h in g:
            out *= pi_xspace(h, cfg, M)
        return out
    if g.n == 1:
        return 1.0
    if g.n > XSPACE_MAX_VERTICES:
        raise SizeLimitError(f"x-space quadrature supports at most {XSPACE_MAX_VERTICES} vertices")
    M = M or cfg.grid_size or alias_free_grid(cfg.N, g.arities())
    G = green_truncated(cfg, M).values
    a = g.matrix()
    order = _pinned_order(g)
    f = {}
    for i in range(g.n):
        for j in range(i + 1, g.n):
            m = a[order[i]][order[j]]
            f[i, j] = G**m if m else None
    workers = thread_count()

    def ff(i, j):
        v = f[min(i, j), max(i, j)]
        return 1.0 if v is None else v

    if g.n == 2:
        return float(np.mean(ff(0, 1)))
    if g.n == 3:
        # ∫ f01(x1) f02(x2) f12(x1 - x2)
        inner = _corr(np.broadcast_to(ff(0, 2), G.shape), np.broadcast_to(ff(1, 2), G.shape), workers)
        return float(np.mean(np.broadcast_to(ff(0, 1), G.shape) * inner))
    return _xspace_four(ff, G.shape, M, workers)


def _xspace_four(ff, shape, M: int, workers: int, batch: int = 64) -> float:
    # ∫ f01(x1) f02(x2) f03(x3) f12(x1-x2) f13(x1-x3) f23(x2-x3), x0 pinned at 0
    full = lambda i, j: np.broadcast_to(ff(i, j), shape)
    f01, f02, f03 = full(0, 1), full(0, 2), full(0, 3)
    f12, f13, f23 = full(1, 2), full(1, 3), full(2, 3)
    fhat23 = scipy.fft.rfftn(f23, workers=workers)
    idx = np.array(np.unravel_index(np.arange(M**3), shape)).T
    chunks = [idx[i:i + batch] for i in range(0, len(idx), batch)]

    def shifted(arr, shifts):
        # arr(x - x1) as a function of x, for each x1 in shifts (arr is even)
        out = np.empty((len(shifts),) + shape)
        for b, (i, j, k) in enumerate(shifts):
            out[b] = np.roll(arr, (i, j, k), axis=(0, 1, 2))
        return out

    def work(chunk):
        h2 = f02 * shifted(f12, chunk)
        h3 = f03 * shifted(f13, chunk)
        conv = scipy.fft.irfftn(scipy.fft.rfftn(h3, axes=(1, 2, 3)) * fhat23, s=shape, axes=(1, 2, 3)) / M**3
        s_x1 = np.mean(h2 * conv, axis=(1, 2, 3))
        return s_x1 * f01[tuple(chunk.T)]

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, chunks))
    else:
        parts = [work(c) for c in chunks]
    return float(np.sum(np.concatenate(parts)) / M**3)


# ---------------------------------------------------------------------------
# momentum space
# ---------------------------------------------------------------------------


def _cycle_basis(g: MultiGraph) -> np.ndarray:
    """Signed incidence of each expanded edge with the fundamental cycles, shape (E, L)."""
    edges = [(i, j) for i, j, m in g.edges() for _ in range(m)]
    parent = {0: None}
    tree = set()
    order = [0]
    adj = {v: [] for v in range(g.n)}
    for idx, (i, j) in enumerate(edges):
        adj[i].append((j, idx))
        adj[j].append((i, idx))
    while order:
        v = order.pop()
        for u, idx in adj[v]:
            if u not in parent:
                parent[u] = (v, idx)
                tree.add(idx)
                order.append(u)
    chords = [idx for idx in range(len(edges)) if idx not in tree]
    coeff = np.zeros((len(edges), len(chords)), dtype=int)

    def path_to_root(v):
        out = []
        while parent[v] is not None:
            u, idx = parent[v]
            out.append((idx, u, v))
            v = u
        return out

    for c, idx in enumerate(chords):
        i, j = edges[idx]
        coeff[idx, c] = 1
        # the chord carries ℓ from i to j; the tree path returns it from j to i
        for tidx, u, v in path_to_root(j):
            # edge u -> v (towards j) traversed v -> u
            a, b = edges[tidx]
            coeff[tidx, c] += 1 if (a, b) == (v, u) else -1
        for tidx, u, v in path_to_root(i):
            a, b = edges[tidx]
            coeff[tidx, c] += 1 if (a, b) == (u, v) else -1
    return coeff


def pi_momentum(g, cfg: ValuationConfig) -> float:
    """Σ over loop momenta of ∏_e prop(k_e)·1{‖k_e‖ <= N} (at most three loops)."""
    if isinstance(g, tuple):
        out = 1.0
        for h in g:
            out *= pi_momentum(h, cfg)
        return out
    if g.n == 1:
        return 1.0
    L = g.loops
    if L > MOMENTUM_MAX_LOOPS:
        raise SizeLimitError(f"momentum sums support at most {MOMENTUM_MAX_LOOPS} loops, got {L}")
    coeff = _cycle_basis(g)
    ks = l1_ball(cfg.N, cfg.cutoff_norm)
    R = L * cfg.N
    r = np.arange(-R, R + 1)
    grid = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1)
    norm = np.abs(grid).sum(-1) if cfg.cutoff_norm == "l1" else np.abs(grid).max(-1)
    table = np.where(norm <= cfg.N, propagator(grid, cfg), 0.0)

    def value(kvec):
        return table[kvec[..., 0] + R, kvec[..., 1] + R, kvec[..., 2] + R]

    if L == 0:
        return 1.0
    if L == 1:
        mom = coeff[:, 0][:, None, None] * ks[None]
        return float(np.sum(np.prod(value(mom), axis=0)))
    # vectorise the last two loops, iterate over the rest
    pair = (ks[:, None, :], ks[None, :, :])
    last2 = coeff[:, -2:]
    base = last2[:, 0, None, None, None] * pair[0] + last2[:, 1, None, None, None] * pair[1]
    outer = list(np.ndindex(*([len(ks)] * (L - 2))))

    def work(ix):
        shift = np.zeros((coeff.shape[0], 3), dtype=int)
        for c, i in enumerate(ix):
            shift += coeff[:, c, None] * ks[i]
        mom = base + shift[:, None, None, :]
        return float(np.sum(np.prod(value(mom), axis=0)))

    workers = thread_count()
    if workers > 1 and len(outer) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, outer))
    else:
        parts = [work(ix) for ix in outer]
    return float(math.fsum(parts))


def numeric_character(cfg: ValuationConfig, backend: str = "auto") -> Character:
    """Π_N as a Character: x-space for <= 4 vertices, else momentum space for <= 3 loops."""

    def value(g: MultiGraph) -> float:
        if backend == "momentum":
            return pi_momentum(g, cfg)
        if backend == "xspace" or g.n <= XSPACE_MAX_VERTICES:
            return pi_xspace(g, cfg)
        if g.loops <= MOMENTUM_MAX_LOOPS:
            return pi_momentum(g, cfg)
        raise SizeLimitError(f"no numeric backend for {g.n} vertices and {g.loops} loops")

    return Character(value)


# ---------------------------------------------------------------------------
# counterterms
# ---------------------------------------------------------------------------


def _antipode_sum(x: LinComb, d: Fraction) -> LinComb:
    out = LinComb()
    for f, c in x.items():
        (g,) = f
        out += antipode(g, d).scale(c)
    return out


def _value_or_gap(char: Character, expr: LinComb):
    try:
        return char(expr), None
    except SizeLimitError as exc:
        return None, str(exc)


def sigma_numeric(n: int, cfg: ValuationConfig, char: Character | None = None) -> float:
    """σ_n(N) = -Π_N A(P_M(Y_n)) for 2 <= n <= n*_m(d); zero above the threshold."""
    d = cfg.d_exact
    if n < 2:
        raise ValueError("σ_n is defined for n >= 2")
    if n > thresholds(d).n_star_m:
        return 0.0
    char = char or numeric_character(cfg)
    return -char(_antipode_sum(p_map(y_generator(n)), d))


def gamma_term(n: int, cfg: ValuationConfig, char: Character | None = None) -> float:
    """Π_N A(P(X^n))."""
    char = char or numeric_character(cfg)
    return char(_antipode_sum(p_map(z(4, n)), cfg.d_exact))


@dataclass
class CountertermReport:
    """Mass and energy counterterms at one cutoff.

    ``sigma`` and ``gamma_terms`` map n to a float, or to None when the
    diagrams at that order exceed the numeric backends (listed in ``gaps``).
    """

    d: float
    alpha: float
    N: int
    m: float
    s: float
    n_star_e: int
    n_star_m: int
    sigma: Dict[int, Optional[float]] = field(default_factory=dict)
    beta: float = 0.0
    gamma_terms: Dict[int, Optional[float]] = field(default_factory=dict)
    gamma: float = 0.0
    gaps: List[str] = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def complete(self) -> bool:
        return not self.gaps

    def to_json(self) -> str:
        data = asdict(self)
        data["sigma"] = {str(k): v for k, v in self.sigma.items()}
        data["gamma_terms"] = {str(k): v for k, v in self.gamma_terms.items()}
        data["complete"] = self.complete
        return json.dumps(data, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "CountertermReport":
        data = json.loads(text)
        data.pop("complete", None)
        data["sigma"] = {int(k): v for k, v in data["sigma"].items()}
        data["gamma_terms"] = {int(k): v for k, v in data["gamma_terms"].items()}
        return cls(**data)


def _too_large(n_vertices: int) -> Optional[str]:
    # the top diagrams of Y_n and P(X^n) have n vertices and at least n loops
    if n_vertices > XSPACE_MAX_VERTICES:
        return f"diagrams with {n_vertices} vertices exceed the numeric backends"
    return None


def beta_series(cfg: ValuationConfig, alpha: float, char: Character | None = None):
    """β = Σ_{n=2}^{n*_m(d)} (-α)^n/n! σ_n(N); returns (β, σ table, gaps)."""
    char = char or numeric_character(cfg)
    th = thresholds(cfg.d_exact)
    sigma, gaps, beta = {}, [], 0.0
    for n in range(2, th.n_star_m + 1):
        gap = _too_large(n)
        if not gap:
            val, gap = _value_or_gap(char, _antipode_sum(p_map(y_generator(n)), cfg.d_exact))
        if gap:
            sigma[n] = None
            gaps.append(f"sigma_{n}: {gap}")
            continue
        sigma[n] = -val
        beta += (-alpha) ** n / math.factorial(n) * sigma[n]
    return beta, sigma, gaps


def gamma_series(cfg: ValuationConfig, alpha: float, char: Character | None = None):
    """γ = -Σ_{n=2}^{n*_e(d)} (-α)^n/n! Π_N A(P(X^n)); returns (γ, term table, gaps)."""
    char = char or numeric_character(cfg)
    th = thresholds(cfg.d_exact)
    terms, gaps, gamma = {}, [], 0.0
    for n in range(2, th.n_star_e + 1):
        gap = _too_large(n)
        if not gap:
            val, gap = _value_or_gap(char, _antipode_sum(p_map(z(4, n)), cfg.d_exact))
        if gap:
            terms[n] = None
            gaps.append(f"gamma_{n}: {gap}")
            continue
        terms[n] = val
        gamma -= (-alpha) ** n / math.factorial(n) * val
    return gamma, terms, gaps


def counterterm_report(cfg: ValuationConfig, alpha: float) -> CountertermReport:
    t0 = time.perf_counter()
    char = numeric_character(cfg)
    th = thresholds(cfg.d_exact)
    beta, sigma, gaps_b = beta_series(cfg, alpha, char)
    gamma, terms, gaps_g = gamma_series(cfg, alpha, char)
    return CountertermReport(
        d=float(cfg.d),
        alpha=float(alpha),
        N=cfg.N,
        m=cfg.m,
        s=cfg.exponent,
        n_star_e=th.n_star_e,
        n_star_m=th.n_star_m,
        sigma=sigma,
        beta=beta,
        gamma_terms=terms,
        gamma=gamma,
        gaps=gaps_b + gaps_g,
        runtime_s=time.perf_counter() - t0,
    )


def logz_expansion(cfg: ValuationConfig, alpha: float, nmax: int, stability: bool = True) -> List[dict]:
    """Per-order terms of the renormalised log Z expansion.

    Orders n <= n*_e(d) are cancelled exactly by the counterterms and reported
    as 0. Higher orders give -(-α)^n/n! Π_N A(P(X^n)); with ``stability`` the
    same term is recomputed at cutoff 2N and the relative change reported.
    """
    th = thresholds(cfg.d_exact)
    char = numeric_character(cfg)
    char2 = numeric_character(cfg.with_N(2 * cfg.N)) if stability else None
    rows = []
    for n in range(1, nmax + 1):
        row = {"n": n, "cancelled": n <= th.n_star_e, "value": 0.0, "value_2N": None, "relative_change": None, "gap": None}
        if n >= 2 and not row["cancelled"] and alpha != 0 and _too_large(n):
            row["gap"] = _too_large(n)
            row["value"] = None
        elif n >= 2 and not row["cancelled"] and alpha != 0:
            expr = _antipode_sum(p_map(z(4, n)), cfg.d_exact)
            weight = -((-alpha) ** n) / math.factorial(n)
            val, gap = _value_or_gap(char, expr)
            if gap:
                row["gap"] = gap
                row["value"] = None
            else:
                row["value"] = weight * val
                if char2 is not None:
                    val2, gap2 = _value_or_gap(char2, expr)
                    if gap2 is None:
                        row["value_2N"] = weight * val2
                        denom = max(abs(row["value"]), 1e-300)
                        row["relative_change"] = abs(row["value_2N"] - row["value"]) / denom
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# scaling probes
# ---------------------------------------------------------------------------


def scaling_series(g: MultiGraph, cfg: ValuationConfig, Ns: Sequence[int]) -> List[tuple]:
    """[(N, Π_N(Γ))] using the x-space backend."""
    return [(N, pi_xspace(g, cfg.with_N(N))) for N in Ns]


def loglog_slope(Ns: Sequence[float], values: Sequence[float]) -> float:
    """Least-squares slope of log |value| against log N."""
    slope, _ = np.polyfit(np.log(np.asarray(Ns, float)), np.log(np.abs(np.asarray(values, float))), 1)
    return float(slope)


def log_fit(Ns: Sequence[float], values: Sequence[float]):
    """Fit value ≈ a + b log N; returns (b, R²)."""
    x = np.log(np.asarray(Ns, float))
    y = np.asarray(values, float)
    b, a = np.polyfit(x, y, 1)
    resid = y - (a + b * x)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(b), r2


def scaling_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "value"])
    for N, v in rows:
        w.writerow([N, repr(float(v))])
    return buf.getvalue()
