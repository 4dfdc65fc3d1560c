"""The Fourier symbol of the linear part and everything derived from it.

With angular wavenumbers ``k = 2 pi xi`` the symbol reads

    l(xi) = |k|^4 - c^2 k_1^2 + 1,

and on the strip the x2-mode ``n2`` contributes ``k_2 = pi n2 / d2``.  We
write ``m = k_2^2`` throughout.  All outputs are :class:`Interval` values.

The wave speed ``c`` is taken as an exact decimal (``1.2`` means 6/5), the
half-widths ``d1, d2`` as exact binary floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InvalidSplit, RadicandNotPositive
from .interval import Interval, as_interval, isum, parse_decimal, pi_enclosure
from .sequences import CoeffSeq, IndexBox

__all__ = [
    "SymbolParams",
    "DecayConstants",
    "c_interval",
    "symbol_l",
    "symbol_l_n2",
    "symbol_on_box",
    "min_l_n2",
    "kappa1",
    "essential_floor",
    "l2_norm_inv_l_n2",
    "kappa2",
    "kappa2_tail",
    "decay_constants",
    "inf_decay_rate",
    "e_sequence",
    "c_of_d1",
]

PI = pi_enclosure()


def c_interval(c):
    """Enclosure of the decimal value written as ``c``."""
    if isinstance(c, Interval):
        return c
    if isinstance(c, Fraction):
        return parse_decimal(c)
    return parse_decimal(repr(float(c)) if isinstance(c, float) else str(c))


@dataclass(frozen=True)
class SymbolParams:
    """Wave speed, strip half-width and an optional spectral shift."""

    c: float
    d2: float
    delta0: float = 0.0

    def __post_init__(self):
        if not (0 < float(self.c) < math.sqrt(2)):
            raise ValueError("the wave speed must lie in (0, sqrt 2)")
        if not self.d2 > 0:
            raise ValueError("d2 must be positive")
        floor = essential_floor(self.c)
        if self.delta0 < 0 or self.delta0 >= floor.lo:
            raise ValueError("delta0 must lie in [0, 1 - c^4/4)")

    @property
    def c_iv(self):
        return c_interval(self.c)

    def shifted(self, delta0):
        return SymbolParams(self.c, self.d2, delta0)


@dataclass(frozen=True)
class DecayConstants:
    """|f_n2(x)| <= C exp(-a |x|), with oscillation rate b."""

    a: Interval
    b: Interval
    C: Interval


def _k2sq(d2, n2):
    """m = (pi n2 / d2)^2 as an interval (n2 may be an array)."""
    return (PI * Interval.point(np.asarray(n2, dtype=float)) / Interval.point(float(d2))).square()


def _l_of(X, m, c2):
    """(X + m)^2 - c^2 X + 1 for interval X, m."""
    return (X + m).square() - c2 * X + 1.0


def symbol_l(params, xi):
    """l(xi) for a point xi = (xi1, xi2)."""
    c2 = params.c_iv.square()
    k1 = 2.0 * PI * as_interval(xi[0])
    k2 = 2.0 * PI * as_interval(xi[1])
    X = k1.square()
    return _l_of(X, k2.square(), c2)


def symbol_l_n2(params, n2, xi1):
    if n2 < 0:
        raise ValueError("n2 must be nonnegative")
    c2 = params.c_iv.square()
    X = (2.0 * PI * as_interval(xi1)).square()
    return _l_of(X, _k2sq(params.d2, n2), c2)


def symbol_on_box(c, d1, d2, box, delta0=0.0):
    """l at the lattice points (pi n1/d1, pi n2/d2), n in box, minus delta0."""
    c2 = c_interval(c).square()
    X = (PI * Interval.point(np.arange(box.n1_max + 1.0)) / Interval.point(float(d1))).square()
    m = (PI * Interval.point(np.arange(box.n2_max + 1.0)) / Interval.point(float(d2))).square()
    out = _l_of(X.reshape(-1, 1), m.reshape(1, -1), c2)
    if delta0:
        out = out - as_interval(delta0)
    return out


def _min_l_from_m(m, c):
    """Minimum over X >= 0 of (X + m)^2 - c^2 X + 1."""
    c_iv = c_interval(c)
    c2 = c_iv.square()
    inner = c2 * m + 1.0 - c2.square() / 4.0
    outer = m.square() + 1.0
    half = c2 / 2.0
    lo_m, hi_m = np.asarray(m._lo), np.asarray(m._hi)
    below = hi_m <= np.asarray(half._lo)
    above = lo_m > np.asarray(half._hi)
    lo = np.where(below, np.asarray(inner._lo),
                  np.where(above, np.asarray(outer._lo),
                           np.minimum(np.asarray(inner._lo), np.asarray(outer._lo))))
    hi = np.where(below, np.asarray(inner._hi),
                  np.where(above, np.asarray(outer._hi),
                           np.maximum(np.asarray(inner._hi), np.asarray(outer._hi))))
    return Interval._raw(lo, hi)


def min_l_n2(params, n2):
    """min over xi1 of l_n2(xi1).

    With m = (pi n2/d2)^2 the minimum is c^2 m + 1 - c^4/4 when
    m <= c^2/2 and m^2 + 1 otherwise; near the threshold the hull of both
    branches is returned.
    """
    if np.any(np.asarray(n2) < 0):
        raise ValueError("n2 must be nonnegative")
    return _min_l_from_m(_k2sq(params.d2, n2), params.c)


def essential_floor(c):
    """1 - c^4/4."""
    c2 = c_interval(c).square()
    return 1.0 - c2.square() / 4.0


def kappa1(params_or_c):
    c = params_or_c.c if isinstance(params_or_c, SymbolParams) else params_or_c
    return 1.0 / essential_floor(c)


# -- the L^2 norms of 1/l_n2 -----------------------------------------------------

def _l_range_on(X_lo, X_hi, m, c):
    """Enclosure of (X+m)^2 - c^2 X + 1 for X in [X_lo, X_hi] (arrays)."""
    c2 = c_interval(c).square()
    Xa = Interval._raw(X_lo, X_lo)
    Xb = Interval._raw(X_hi, X_hi)
    la = _l_of(Xa, m, c2)
    lb = _l_of(Xb, m, c2)
    hi = np.maximum(np.asarray(la._hi), np.asarray(lb._hi))
    lo = np.minimum(np.asarray(la._lo), np.asarray(lb._lo))
    # interior vertex at X* = c^2/2 - m
    vertex = c2 / 2.0 - m
    inside = (np.asarray(vertex._hi) >= X_lo) & (np.asarray(vertex._lo) <= X_hi)
    if np.any(inside):
        vmin = (c2 * m + 1.0 - c2.square() / 4.0)
        lo = np.where(inside, np.minimum(lo, np.asarray(vmin._lo) * np.ones_like(lo)), lo)
    return lo, hi


def l2_norm_inv_l_n2(params, n2, xi_cut=2.0, pieces=4000):
    """Enclosure of ||1/l_n2||^2 in L^2(R) (integral over xi1 in R).

    [0, Xi] is split into ``pieces`` cells, each bounded by the exact range
    of the quadratic-in-X symbol; beyond Xi (chosen with (2 pi Xi)^2 >= 2c^2)
    l_n2 >= (2 pi xi)^4 / 2, giving the tail 4 / (7 (2 pi)^8 Xi^7).
    """
    c_hi = params.c_iv.hi
    xi_cut = max(float(xi_cut), math.sqrt(2.0) * c_hi / (2 * math.pi) * (1 + 1e-12))
    edges = np.linspace(0.0, xi_cut, pieces + 1)
    e = Interval.point(edges)
    X = (2.0 * PI * e).square()
    Xlo = np.asarray(X._lo)[:-1]
    Xhi = np.asarray(X._hi)[1:]
    m = _k2sq(params.d2, n2)
    lo, hi = _l_range_on(Xlo, Xhi, m, params.c)
    if params.delta0:
        lo = np.nextafter(lo - params.delta0, -np.inf)
        hi = np.nextafter(hi - params.delta0, np.inf)
    if np.any(lo <= 0):
        raise RadicandNotPositive("symbol not verified positive on the quadrature grid")
    L = Interval._raw(np.nextafter(lo, -np.inf), np.nextafter(hi, np.inf))
    inv2 = (1.0 / L).square()
    h = Interval.point(edges[1:]) - Interval.point(edges[:-1])
    body = isum(inv2 * h)
    Xi = Interval.point(xi_cut)
    tail_hi = (4.0 / (7.0 * (2.0 * PI).pow_k(8) * Xi.pow_k(7))).hi
    total = Interval._raw(2.0 * body.lo, np.nextafter(2.0 * body.hi, np.inf))
    return total + Interval(0.0, 2.0 * tail_hi * (1 + 1e-15) + 1e-300)


def kappa2_tail(d2, N):
    """5 (2 d2)^7 / (48 (2 pi)^7 N^6): bounds sum_{n2 > N} ||1/l_n2||^2."""
    d = Interval.point(float(d2))
    return 5.0 * (2.0 * d).pow_k(7) / (48.0 * (2.0 * PI).pow_k(7) * Interval.point(float(N)).pow_k(6))


def kappa2(params, n2_split, xi_cut=2.0, pieces=4000):
    """Enclosure of (||1/l_0||^2 + 2 sum_{n2>=1} ||1/l_n2||^2)^(1/2).

    Modes up to ``n2_split`` are integrated; the rest use the closed-form
    tail, which needs ``n2_split > d2 c / pi``.
    """
    c_hi = params.c_iv.hi
    if not n2_split > params.d2 * c_hi / math.pi:
        raise InvalidSplit(f"n2_split={n2_split} must exceed d2 c / pi = {params.d2 * c_hi / math.pi:.6g}")
    total = l2_norm_inv_l_n2(params, 0, xi_cut, pieces)
    for n2 in range(1, n2_split + 1):
        total = total + 2.0 * l2_norm_inv_l_n2(params, n2, xi_cut, pieces)
    tail = kappa2_tail(params.d2, n2_split)
    total = total + Interval(0.0, (2.0 * tail).hi)
    return total.sqrt()


# -- decay of the fundamental solutions -----------------------------------------

def _decay_from_m(m, c, delta0):
    c_iv = c_interval(c)
    c2 = c_iv.square()
    dl = as_interval(delta0)
    D = 4.0 * (1.0 + c2 * m - dl) - c2.square()
    mod2 = m.square() + 1.0 - dl
    if np.any(np.asarray(D._lo) <= 0) or np.any(np.asarray(mod2._lo) <= 0):
        raise RadicandNotPositive("discriminant not verified positive")
    inner = c2 - 2.0 * m + 2.0 * mod2.sqrt()
    if np.any(np.asarray(inner._lo) <= 0):
        raise RadicandNotPositive("inner radicand not verified positive")
    b = 0.5 * inner.sqrt()
    sD = D.sqrt()
    a = sD / (4.0 * b)
    C = 1.0 / (mod2.sqrt().sqrt() * sD)
    return DecayConstants(a, b, C)


def decay_constants(params, n2):
    """Decay data of f_n2, the inverse transform of 1/(l_n2 - delta0).

    The poles of 1/(l_n2 - delta0) in the complex k-plane are +-b + i a
    (and conjugates), which gives

        a = sqrt(D) / (4 b),  b = sqrt(c^2 - 2m + 2 sqrt(m^2 + 1 - delta0)) / 2,
        C = 1 / ((m^2 + 1 - delta0)^(1/4) sqrt(D)),

    with D = 4 (1 + c^2 m - delta0) - c^4 and a^2 + b^2 = sqrt(m^2 + 1 - delta0).
    """
    return _decay_from_m(_k2sq(params.d2, n2), params.c, params.delta0)


def inf_decay_rate(params, scan_extra=64):
    """inf over n2 of a_n2, certified.

    a_n2 increases with m: b shrinks (since m < sqrt(m^2 + 1 - delta0)) while
    D grows.  The scan over the first modes double-checks this in intervals
    and the infimum is therefore a_0.
    """
    n_max = int(math.ceil(2 * params.d2 * params.c_iv.hi / math.pi)) + scan_extra
    dc = decay_constants(params, np.arange(n_max + 1))
    a = dc.a
    diffs = a[1:] - a[:-1]
    if not np.all(np.asarray(diffs._lo) > 0):
        raise RadicandNotPositive("a_n2 not verified increasing on the scan range")
    return a[0]


def e_sequence(params, box, d1):
    """The sequence E_n = C_n2^2 (-1)^n1 (1 - e^{-4 a d1}) / (d1 (4 a^2 + k1^2)).

    Row n2 holds the cosine coefficients on (-d1, d1) of
    ``x -> C_n2^2 exp(-2 a d1) cosh(2 a x) / a`` (a = a_n2, k1 = pi n1/d1).
    The data of the shifted operator are used when ``params.delta0 > 0``.
    """
    dc = decay_constants(params, np.arange(box.n2_max + 1))
    a = dc.a.reshape(1, -1)
    C2 = dc.C.square().reshape(1, -1)
    d1i = Interval.point(float(d1))
    k1 = (PI * Interval.point(np.arange(box.n1_max + 1.0)) / d1i).reshape(-1, 1)
    sign = np.where(np.arange(box.n1_max + 1) % 2 == 0, 1.0, -1.0).reshape(-1, 1)
    num = C2 * (1.0 - (-4.0 * a * d1i).exp())
    den = d1i * (4.0 * a.square() + k1.square())
    E = (num / den) * sign
    return CoeffSeq(box, E, float(d1), float(params.d2))


def c_of_d1(params, d1):
    """4 d1 + 4 e^{-a d1} / (a (1 - e^{-3 a d1 / 2})) + 2 / (a (1 - e^{-2 a d1})), a = inf a_n2."""
    a = inf_decay_rate(params)
    d = Interval.point(float(d1))
    return (4.0 * d + 4.0 * (-a * d).exp() / (a * (1.0 - (-1.5 * a * d).exp()))
            + 2.0 / (a * (1.0 - (-2.0 * a * d).exp())))
