"""Rigorous bounds for the Newton-Kantorovich argument.

Notation: U is the approximate solution on the box N0, W = e^U (enclosed by
:mod:`sbwave.aliasing`), V = W - e0, V^N = pi^N V, B^N the numerical
inverse of the block I + M_{V^N} L^-1 on I_N, and the approximate inverse is
A = L^-1 (B^N + pi_N).  All returned quantities are :class:`Interval`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aliasing import EnclosedSeq, tail_l1, tail_l2
from .errors import UnboundedInterval
from .interval import Interval, as_interval, isum, matmul
from .operators import mult_matrix, sector_alpha, weighted_norm_bound
from .sequences import CoeffSeq, IndexBox, alpha_array, convolve, lp_norm, project
from .symbols import (
    PI,
    SymbolParams,
    c_interval,
    c_of_d1,
    decay_constants,
    e_sequence,
    essential_floor,
    inf_decay_rate,
    kappa1,
    min_l_n2,
    symbol_on_box,
)

__all__ = [
    "BoundSet",
    "RadiiResult",
    "to_interval_block",
    "v_from_w",
    "y0_bound",
    "min_l_outside",
    "z1N_bound",
    "collapsed_e",
    "zu_inner_product",
    "zu_bound",
    "z1_total",
    "z2_coeff",
    "radii_check",
    "poly_values",
]


@dataclass
class BoundSet:
    Y0: Interval
    Z1: Interval
    Z2_coeff: Interval
    kappa2: Interval
    norm_BN: Interval
    parts: dict = field(default_factory=dict)


@dataclass
class RadiiResult:
    r_min: Interval
    r_max: Interval
    success: bool
    failed_condition: str = None
    detail: str = ""


def _nonneg(x):
    x = as_interval(x)
    return Interval._raw(np.maximum(x._lo, 0.0), np.maximum(x._hi, 0.0))


def _check(x, what):
    if not as_interval(x).is_finite():
        raise UnboundedInterval(f"{what} is unbounded")
    return x


def to_interval_block(B):
    data = B.data if hasattr(B, "data") else B
    return as_interval(np.asarray(data) if not isinstance(data, Interval) else data)


def v_from_w(W):
    """V = W - e0 on the head box of an enclosure."""
    head = W.head
    e0 = np.zeros(head.box.shape)
    e0[0, 0] = 1.0
    return head.with_data(head.data - Interval.point(e0))


# -- Y0 ----------------------------------------------------------------------------

def y0_bound(Ubar, BN, W, c, N):
    """sqrt(2 d1) (||B^N pi^N F||^2 + ||(pi^H - pi^N) F||^2 + tail)^(1/2).

    F = (L - 1) U + W - e0 is enclosed on the head box H of ``W``; beyond H
    only W contributes and its squared l^2 mass is bounded by the envelope.
    """
    H = W.box
    U = Ubar.to_interval().resize(H)
    lH = symbol_on_box(c, U.d1, U.d2, H)
    F = (lH - 1.0) * U.data + v_from_w(W).data
    Fseq = U.with_data(F)
    FN = Fseq.resize(N).data.ravel()
    BF = matmul(to_interval_block(BN), FN.reshape(-1, 1)).ravel()
    BFseq = CoeffSeq.from_flat(N, BF, U.d1, U.d2)
    head_in = lp_norm(BFseq, 2).square()
    outside = lp_norm(project(Fseq, N, "outside"), 2).square()
    tail = tail_l2(W, H)
    total = head_in + outside + Interval(0.0, tail.hi)
    return _check((2.0 * Interval.point(float(U.d1))).sqrt() * total.sqrt_nonneg(), "Y0")


# -- Z1 ----------------------------------------------------------------------------

def min_l_outside(c, d1, d2, N):
    """Lower bound of l(pi n1/d1, pi n2/d2) over n outside the box N.

    l grows with m = k2^2, so n1 > N1 is worst at n2 = 0, where l is
    X^2 - c^2 X + 1 (X = k1^2): increasing once X >= c^2/2, otherwise
    bounded by 1 - c^4/4.  For n2 > N2 the continuous minimum over k1 at
    n2 = N2 + 1 applies.
    """
    c2 = c_interval(c).square()
    X = (PI * float(N.n1_max + 1) / Interval.point(float(d1))).square()
    if X.lo >= (c2 / 2.0).hi:
        row = X.square() - c2 * X + 1.0
    else:
        row = essential_floor(c)
    col = min_l_n2(SymbolParams(c, d2), N.n2_max + 1)
    return Interval._raw(min(row.lo, col.lo), min(row.hi, col.hi))


def z1N_bound(VN, BN, c, N):
    """Z1 of the periodic block, including the pi_N remainder.

    T1 = pi^N - B^N pi^N (I + M L^-1) pi^2N (rows I_N, columns I_2N),
    T2 = (pi^2N - pi^N) M L^-1 pi^N, and
    Z1 = sqrt(||T1||^2 + ||T2||^2 + ||V^N||_1^2 / min_out l^2).
    """
    N2 = N.scale(2)
    M = mult_matrix(VN, N2, N2)
    l2N = symbol_on_box(c, VN.d1, VN.d2, N2).ravel()
    ML = M / l2N.reshape(1, -1)
    inside = _inside_mask(N2, N)
    idx_in = np.flatnonzero(inside)
    idx_out = np.flatnonzero(~inside)
    B = to_interval_block(BN)
    # rows of (I + M L^-1) belonging to I_N, all columns of I_2N
    A_rows = ML[idx_in, :]
    eye = np.zeros((len(idx_in), N2.size))
    eye[np.arange(len(idx_in)), idx_in] = 1.0
    A_rows = A_rows + Interval.point(eye)
    T1 = Interval.point(eye) - matmul(B, A_rows)
    T2 = ML[idx_out, :][:, idx_in]
    alpha2N = sector_alpha(N2)
    alphaN = alpha2N[idx_in]
    nT1 = weighted_norm_bound(T1, alphaN, alpha2N)
    nT2 = weighted_norm_bound(T2, alpha2N[idx_out], alphaN)
    lmin = min_l_outside(c, VN.d1, VN.d2, N)
    if lmin.lo <= 0:
        raise UnboundedInterval("symbol not verified positive outside the box")
    tail = lp_norm(VN, 1) / lmin
    z1n = (nT1.square() + nT2.square()).sqrt_nonneg()
    Z1 = (z1n.square() + tail.square()).sqrt_nonneg()
    return _check(Z1, "Z1"), {"Z1N": z1n, "T1": nT1, "T2": nT2, "min_l_out": lmin}


def _inside_mask(big, small):
    n1 = np.repeat(np.arange(big.n1_max + 1), big.n2_max + 1)
    n2 = np.tile(np.arange(big.n2_max + 1), big.n1_max + 1)
    return (n1 <= small.n1_max) & (n2 <= small.n2_max)


# -- Zu ----------------------------------------------------------------------------

def collapsed_e(params, n1_max, d1, K=None):
    """E'_n1 = sum over n2 in Z of E_{n1,|n2|}, with a rigorous tail.

    The kernel multiplying sum_j |v_j(x)|^2 in the unbounded-domain estimate
    is sum_{n2 in Z} C_n2^2 e^{-2 a d1} cosh(2 a x) / a; E' holds its cosine
    coefficients.  For n2 > K each entry obeys
    |E| <= (c^2 + 1/m) / (16 c^4 m^3 d1), m = (pi n2 / d2)^2, and
    sum_{n2 > K} m^-3 <= (d2/pi)^6 / (5 K^5).
    """
    d2 = params.d2
    if K is None:
        K = max(64, int(4 * d2))
    box = IndexBox(n1_max, K)
    E = e_sequence(params, box, d1)
    w = np.ones(K + 1) * 2.0
    w[0] = 1.0
    Ep = (E.data * w.reshape(1, -1)).sum(axis=1)
    c2 = c_interval(params.c).square()
    mK = (PI * float(K + 1) / Interval.point(float(d2))).square()
    per = (c2 + 1.0 / mK) / (16.0 * c2.square() * Interval.point(float(d1)))
    tail = 2.0 * per * (Interval.point(float(d2)) / PI).pow_k(6) / (5.0 * Interval.point(float(K)).pow_k(5))
    t = tail.hi
    return Ep + Interval(-t, t)


def zu_inner_product(VN, Ep):
    """(V^N, V^N * E') = sum_m1 alpha(m1) E'_m1 (V^N * V^N)_(m1, 0)."""
    VV = convolve(VN.to_interval(), VN.to_interval())
    row = VV.data[:, 0]
    n = min(len(row), len(Ep))
    a = np.ones(n) * 2.0
    a[0] = 1.0
    return isum(row[:n] * Ep[:n] * a)


def zu_bound(VN, params, d1, norm_BN, K=None):
    """Zu = max(1, ||B^N||) sqrt(Zu1^2 + Zu2^2).

    Zu1^2 <= 2 d1 (V^N, V^N * E') and
    Zu2^2 <= Zu1^2 + C(d1) e^{-2 a d1} (V^N, V^N * E'), a = inf a_n2.
    """
    Ep = collapsed_e(params, 2 * VN.box.n1_max, d1, K)
    ip = _nonneg(zu_inner_product(VN, Ep))
    d = Interval.point(float(d1))
    zu1_sq = 2.0 * d * ip
    a = inf_decay_rate(params)
    zu2_sq = zu1_sq + c_of_d1(params, d1) * (-2.0 * a * d).exp() * ip
    nB = Interval.point(max(1.0, as_interval(norm_BN).hi))
    Zu = nB * (zu1_sq + zu2_sq).sqrt_nonneg()
    return _check(Zu, "Zu"), {"Zu1": zu1_sq.sqrt_nonneg(), "Zu2": zu2_sq.sqrt_nonneg(), "inner": ip}


def z1_total(z1N, zu, tail_l1_V, norm_BN, c):
    """Z1 + Zu + max(1, ||B^N||) kappa1 ||V - V^N||_1."""
    nB = Interval.point(max(1.0, as_interval(norm_BN).hi))
    return as_interval(z1N) + as_interval(zu) + nB * kappa1(c) * as_interval(tail_l1_V)


# -- Z2 ----------------------------------------------------------------------------

def z2_coeff(W, BN, c, N, K):
    """kappa1 max(1, ||(B^N + pi_N) M_W||).

    ||B^N pi^N M_W|| <= ||B^N pi^N M_{W^K}|| + ||B^N|| ||W - W^K||_1 and
    ||pi_N M_W|| <= ||W||_1; the two row blocks combine in quadrature.
    The smaller of that and max(1, ||B^N||) ||W||_1 is used.
    """
    WK = W.head.resize(K)
    cols = N + K
    M = mult_matrix(WK, N, cols)
    B = to_interval_block(BN)
    BM = matmul(B, M)
    alphaN = sector_alpha(N)
    nBM = weighted_norm_bound(BM, alphaN, sector_alpha(cols))
    nB = weighted_norm_bound(B, alphaN, alphaN)
    rest = lp_norm(project(W.head, K, "outside"), 1) + Interval(0.0, tail_l1(W, W.box).hi)
    top = nBM + nB * rest
    w1 = W.l1_norm()
    inner = (top.square() + Interval.point(w1.hi).square()).sqrt_nonneg()
    # B is block diagonal (B^N, identity), so ||B M_W|| <= max(1, ||B^N||) ||W||_1 too
    coarse = Interval.point(max(1.0, nB.hi)) * Interval.point(w1.hi)
    m = Interval.point(max(1.0, min(inner.hi, coarse.hi)))
    return _check(kappa1(c) * m, "Z2"), {"BM_W": nBM, "W_l1": w1, "W_minus_WK": rest}


# -- radii polynomial ----------------------------------------------------------------

def poly_values(bounds, r):
    """Interval values of the two conditions at radii r (array).

    p(r) = 1/2 Z2c (e^{k2 r} - 1) r - (1 - Z1) r + Y0 and
    q(r) = Z1 + Z2c (e^{k2 r} - 1).
    """
    r = Interval.point(np.asarray(r, dtype=float))
    growth = (bounds.kappa2 * r).exp() - 1.0
    p = 0.5 * bounds.Z2_coeff * growth * r - (1.0 - bounds.Z1) * r + bounds.Y0
    q = bounds.Z1 + bounds.Z2_coeff * growth
    return p, q


def _ok(bounds, r):
    p, q = poly_values(bounds, r)
    return (np.asarray(p._hi) < 0) & (np.asarray(q._hi) < 1)


def _bisect(bounds, good, bad, rel=2.0**-20):
    """Shrink [good, bad] (in either order) until relative width <= rel."""
    while abs(bad - good) > rel * min(abs(good), abs(bad)):
        mid = math.sqrt(good * bad) if good > 0 and bad > 0 else 0.5 * (good + bad)
        if mid in (good, bad):
            break
        if _ok(bounds, [mid])[0]:
            good = mid
        else:
            bad = mid
    return good


def radii_check(bounds, r_hi=1.0, samples=400):
    """Locate the validated radii interval [r_min, r_max]."""
    Z1 = as_interval(bounds.Z1)
    Y0 = as_interval(bounds.Y0)
    nan = Interval.point(0.0)
    if not (Z1.is_finite() and Y0.is_finite() and as_interval(bounds.Z2_coeff).is_finite()):
        return RadiiResult(nan, nan, False, "unbounded", "a bound is not finite")
    if Z1.hi >= 1:
        return RadiiResult(nan, nan, False, "contraction", f"Z1 upper bound {Z1.hi:.6g} >= 1")
    r_lo = max(Y0.hi, 1e-300)
    if r_lo >= r_hi:
        return RadiiResult(nan, nan, False, "quadratic", "Y0 exceeds the search window")
    grid = np.geomspace(r_lo, r_hi, samples)
    ok = _ok(bounds, grid)
    if not np.any(ok):
        p, q = poly_values(bounds, grid)
        which = "contraction" if np.all(np.asarray(q._hi) >= 1) else "quadratic"
        return RadiiResult(nan, nan, False, which,
                           f"no radius in [{r_lo:.3e}, {r_hi:.3e}] verifies both conditions")
    first = int(np.argmax(ok))
    last = len(ok) - 1 - int(np.argmax(ok[::-1]))
    r_min = grid[first] if first == 0 else _bisect(bounds, grid[first], grid[first - 1])
    r_max = grid[last] if last == len(grid) - 1 else _bisect(bounds, grid[last], grid[last + 1])
    if not _ok(bounds, [r_min])[0]:
        return RadiiResult(nan, nan, False, "quadratic", "re-check at r_min failed")
    return RadiiResult(Interval.point(r_min), Interval.point(r_max), True, None, "")
