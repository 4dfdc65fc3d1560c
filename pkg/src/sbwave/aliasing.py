"""Rigorous enclosure of the cosine coefficients of exp(u).

The coefficients of exp(u) are obtained from a discrete cosine transform on
the grid x_j = j d / Nfft, j = 0..Nfft (one half period; the full period
carries 2 Nfft points).  The discrete coefficient of index n equals the
sum of the true coefficients over the alias class n + 2 k Nfft, so a decay
envelope

    |(e^U)_n| <= C nu1^-n1 nu2^-n2                                    (*)

bounds the aliasing error.  In 1D the aliases of n contribute at most
C (nu^n + nu^-n) q / (1 - q) with q = nu^(-2 Nfft); in 2D

    eps_n = nu1^-n1 T2 + nu2^-n2 T1 + T1 T2,   Ti = (nui^ni + nui^-ni) qi / (1 - qi).

The amplitude C in (*) is the supremum of |exp(u)| on the distinguished
boundary Im z_i = +-rho_i, rho_i = d_i ln(nu_i) / pi, where the Fourier
coefficients of an analytic periodic function decay like nu^-n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .errors import UnboundedInterval
from .interval import Interval, as_interval, matmul, pi_enclosure
from .sequences import CoeffSeq, IndexBox, alpha_vector, lp_norm

__all__ = [
    "AnalyticityParams",
    "EnclosedSeq",
    "amplitude_C",
    "epsilon_n",
    "epsilon_array",
    "rigorous_exp",
    "tail_l1",
    "tail_l2",
    "envelope_sums",
    "FFT_GAMMA",
]

PI = pi_enclosure()
FFT_GAMMA = 10.0  # constant in the float-transform roundoff model
_U = 2.0**-53


@dataclass(frozen=True)
class AnalyticityParams:
    nu1: float
    nu2: float
    NFFT: tuple
    C: Interval = None

    def __post_init__(self):
        if not (self.nu1 > 1 and self.nu2 > 1):
            raise ValueError("decay bases must exceed 1")
        n1, n2 = self.NFFT
        for n in (n1, n2):
            if n < 2 or n & (n - 1):
                raise ValueError("NFFT entries must be powers of two")

    def with_C(self, C):
        return AnalyticityParams(self.nu1, self.nu2, tuple(self.NFFT), as_interval(C))


@dataclass(frozen=True, eq=False)
class EnclosedSeq:
    """Head enclosure on ``head.box`` plus the envelope (*) valid for every n."""

    head: CoeffSeq
    C: Interval
    nu1: float
    nu2: float
    mode: str = "strict"

    @property
    def box(self):
        return self.head.box

    def l1_norm(self):
        """||.||_1 from the head plus the envelope outside the head box."""
        return lp_norm(self.head, 1) + Interval(0.0, tail_l1(self, self.box).hi)

    def l2_norm(self):
        return (lp_norm(self.head, 2).square() + Interval(0.0, tail_l2(self, self.box).hi)).sqrt_nonneg()


def _nu(x):
    return as_interval(x) if isinstance(x, Interval) else Interval.point(float(x))


def _nu_powers(nu, n_max, sign):
    """nu^(sign * n) for n = 0..n_max as an interval vector."""
    nu_i = _nu(nu)
    base = nu_i if sign > 0 else 1.0 / nu_i
    out = [Interval.point(1.0)]
    for _ in range(n_max):
        out.append(out[-1] * base)
    lo = np.array([float(o.lo) for o in out])
    hi = np.array([float(o.hi) for o in out])
    return Interval._raw(lo, hi)


def _cosh_table(nu, n_max):
    return (_nu_powers(nu, n_max, 1) + _nu_powers(nu, n_max, -1)) / 2.0


def _sinh_table(nu, n_max):
    return (_nu_powers(nu, n_max, 1) - _nu_powers(nu, n_max, -1)) / 2.0


def _trig_tables(n_max, Nf):
    """cos and sin of pi n j / Nf for j = 0..Nf, n = 0..n_max (exact index reduction)."""
    r = np.arange(2 * Nf, dtype=float)
    ang = PI * Interval.point(r) / Interval.point(float(Nf))
    ctab, stab = ang.cos(), ang.sin()
    # exact special values
    clo, chi = np.array(ctab._lo), np.array(ctab._hi)
    slo, shi = np.array(stab._lo), np.array(stab._hi)
    for rr, cv, sv in ((0, 1.0, 0.0), (Nf // 2, 0.0, 1.0), (Nf, -1.0, 0.0), (3 * Nf // 2, 0.0, -1.0)):
        if Nf % 2 == 0 or rr in (0, Nf):
            clo[rr] = chi[rr] = cv
            slo[rr] = shi[rr] = sv
    j = np.arange(Nf + 1)
    n = np.arange(n_max + 1)
    idx = np.outer(j, n) % (2 * Nf)
    return Interval._raw(clo[idx], chi[idx]), Interval._raw(slo[idx], shi[idx])


def amplitude_C(Ubar, nu, method="strip", grid=None):
    """A constant C with |(e^U)_n| <= C nu1^-n1 nu2^-n2 for every n.

    ``method="norm"`` returns exp(sum alpha_n |U_n| nu1^n1 nu2^n2), a valid
    but crude bound.  ``method="strip"`` (default) bounds sup Re u on the
    distinguished boundary of the polystrip directly: with y = (+-rho1,
    +-rho2),

        Re u(x + i y) = sum alpha U [c1 c2 ch1 ch2 -+ s1 s2 sh1 sh2],

    evaluated in intervals on a grid over [0,d1] x [0,d2] (both signs cover
    the reflections) plus the bilinear-interpolation error
    (h1^2 S11 + h2^2 S22) / 8 with S_ii bounding the second derivatives.
    """
    nu1, nu2 = nu
    U = Ubar.to_interval()
    N1, N2 = U.box.n1_max, U.box.n2_max
    if method == "norm":
        w = np.outer(alpha_vector(N1), alpha_vector(N2))
        p1 = _nu_powers(nu1, N1, 1).reshape(-1, 1)
        p2 = _nu_powers(nu2, N2, 1).reshape(1, -1)
        s = (abs(U.data) * w * p1 * p2).sum()
        if not math.isfinite(s.hi) or s.hi > 700:
            raise OverflowError("weighted norm too large for exp")
        return s.exp()
    if method != "strip":
        raise ValueError("method must be 'norm' or 'strip'")
    g1, g2 = grid or (max(2 * N1, 64), max(2 * N2, 64))
    g1 = 1 << int(math.ceil(math.log2(g1)))
    g2 = 1 << int(math.ceil(math.log2(g2)))
    c1, s1 = _trig_tables(N1, g1)
    c2, s2 = _trig_tables(N2, g2)
    a1 = Interval.point(alpha_vector(N1))
    a2 = Interval.point(alpha_vector(N2))
    ch1, sh1 = _cosh_table(nu1, N1), _sinh_table(nu1, N1)
    ch2, sh2 = _cosh_table(nu2, N2), _sinh_table(nu2, N2)
    Ac1 = c1 * (a1 * ch1).reshape(1, -1)
    As1 = s1 * (a1 * sh1).reshape(1, -1)
    Ac2 = c2 * (a2 * ch2).reshape(1, -1)
    As2 = s2 * (a2 * sh2).reshape(1, -1)
    P = matmul(matmul(Ac1, U.data), Ac2.T)
    Q = matmul(matmul(As1, U.data), As2.T)
    top = max((P + Q).max_hi(), (P - Q).max_hi())
    # curvature allowance between grid nodes
    k1 = PI * Interval.point(np.arange(N1 + 1.0)) / Interval.point(float(Ubar.d1))
    k2 = PI * Interval.point(np.arange(N2 + 1.0)) / Interval.point(float(Ubar.d2))
    mag = abs(U.data) * np.outer(alpha_vector(N1), alpha_vector(N2))
    chsh = (ch1.reshape(-1, 1) * ch2.reshape(1, -1) + sh1.reshape(-1, 1) * sh2.reshape(1, -1))
    S11 = (mag * chsh * k1.square().reshape(-1, 1)).sum()
    S22 = (mag * chsh * k2.square().reshape(1, -1)).sum()
    h1 = Interval.point(float(Ubar.d1)) / Interval.point(float(g1))
    h2 = Interval.point(float(Ubar.d2)) / Interval.point(float(g2))
    bump = (h1.square() * S11 + h2.square() * S22) / 8.0
    sup = Interval.point(top) + Interval(0.0, bump.hi)
    sup_hi = Interval.point(sup.hi)
    if sup_hi.hi > 700:
        raise OverflowError("exponent bound too large")
    return Interval.point(sup_hi.exp().hi)


def _q(nu, Nf):
    return _nu_powers(nu, 1, -1)[1].pow_k(2 * Nf)


def epsilon_n(apar, n, form="sharp"):
    """Aliasing factor eps_n (multiply by C for the coefficient error).

    ``form="sharp"`` is the alias-class sum stated in the module docstring;
    ``form="literal"`` is the looser closed form
    2 nu^n (q1 + q2) / ((1 - q1)(1 - q2)).
    """
    n1, n2 = n
    return epsilon_array(apar, IndexBox(n1, n2), form)[n1, n2]


def epsilon_array(apar, box, form="sharp"):
    N1, N2 = apar.NFFT
    q1, q2 = _q(apar.nu1, N1), _q(apar.nu2, N2)
    up1 = _nu_powers(apar.nu1, box.n1_max, 1).reshape(-1, 1)
    up2 = _nu_powers(apar.nu2, box.n2_max, 1).reshape(1, -1)
    if form == "literal":
        return 2.0 * up1 * up2 * (q1 + q2) / ((1.0 - q1) * (1.0 - q2))
    if form != "sharp":
        raise ValueError("form must be 'sharp' or 'literal'")
    dn1 = _nu_powers(apar.nu1, box.n1_max, -1).reshape(-1, 1)
    dn2 = _nu_powers(apar.nu2, box.n2_max, -1).reshape(1, -1)
    T1 = (up1 + dn1) * q1 / (1.0 - q1)
    T2 = (up2 + dn2) * q2 / (1.0 - q2)
    return dn1 * T2 + dn2 * T1 + T1 * T2


def _weights(Nf):
    w = np.ones(Nf + 1)
    w[0] = w[-1] = 0.5
    return w


def _exp_strict(U, Nf1, Nf2, H):
    """Interval DCT-I round trip: values, exp, coefficients."""
    N1, N2 = U.box.n1_max, U.box.n2_max
    nmax1 = max(N1, H.n1_max)
    nmax2 = max(N2, H.n2_max)
    c1, _ = _trig_tables(nmax1, Nf1)
    c2, _ = _trig_tables(nmax2, Nf2)
    A1 = c1[:, : N1 + 1] * Interval.point(alpha_vector(N1)).reshape(1, -1)
    A2 = c2[:, : N2 + 1] * Interval.point(alpha_vector(N2)).reshape(1, -1)
    vals = matmul(matmul(A1, U.data), A2.T)
    ev = vals.exp()
    W1 = (c1[:, : H.n1_max + 1] * Interval.point(_weights(Nf1)).reshape(-1, 1)).T / float(Nf1)
    W2 = (c2[:, : H.n2_max + 1] * Interval.point(_weights(Nf2)).reshape(-1, 1)).T / float(Nf2)
    return matmul(matmul(W1, ev), W2.T)


def _exp_fft(U, Nf1, Nf2, H):
    """Float DCT-I round trip with an a-priori roundoff allowance."""
    mid = np.asarray(U.data.mid)
    rad = np.asarray(U.data.rad)
    pad = np.zeros((Nf1 + 1, Nf2 + 1))
    pad[: mid.shape[0], : mid.shape[1]] = mid
    vals = sfft.dct(sfft.dct(pad, type=1, axis=0), type=1, axis=1)
    levels = math.log2(2 * Nf1) + math.log2(2 * Nf2)
    w = np.outer(alpha_vector(mid.shape[0] - 1), alpha_vector(mid.shape[1] - 1))
    norm1 = float(np.sum(w * (np.abs(mid) + rad)))
    dv = FFT_GAMMA * levels * _U * norm1 + float(np.sum(w * rad))
    ev = np.exp(vals)
    emax = float(np.max(ev)) * math.exp(dv)
    de = emax * (math.expm1(dv) + FFT_GAMMA * _U)
    coef = sfft.dct(sfft.dct(ev, type=1, axis=0), type=1, axis=1) / (4.0 * Nf1 * Nf2)
    dc = de + FFT_GAMMA * levels * _U * emax
    coef = coef[: H.n1_max + 1, : H.n2_max + 1]
    err = dc * (1 + 1e-6)
    return Interval._raw(np.nextafter(coef - err, -np.inf), np.nextafter(coef + err, np.inf))


def rigorous_exp(Ubar, apar, head_box=None, mode="strict", C=None, eps_form="sharp"):
    """Enclosure of the coefficients of exp(u) on ``head_box`` plus the envelope.

    ``head_box`` defaults to the box of ``Ubar``; it may extend up to
    ``NFFT - 1`` in each direction.  ``mode="strict"`` runs both transforms
    in interval arithmetic, ``mode="fft"`` uses float DCTs with the roundoff
    allowance ``FFT_GAMMA * log2(n) * u * ||values||``.
    """
    U = Ubar.to_interval()
    Nf1, Nf2 = apar.NFFT
    if Nf1 < 2 * (U.box.n1_max + 1) or Nf2 < 2 * (U.box.n2_max + 1):
        raise ValueError("NFFT must be at least twice the coefficient box")
    H = head_box or U.box
    if H.n1_max >= Nf1 or H.n2_max >= Nf2:
        raise ValueError("head box must stay below NFFT")
    if C is None:
        C = apar.C if apar.C is not None else amplitude_C(U, (apar.nu1, apar.nu2))
    C = as_interval(C)
    if mode == "strict":
        coef = _exp_strict(U, Nf1, Nf2, H)
    elif mode == "fft":
        coef = _exp_fft(U, Nf1, Nf2, H)
    else:
        raise ValueError("mode must be 'strict' or 'fft'")
    eps = epsilon_array(apar, H, eps_form)
    err = (C * eps).hi
    head = coef + Interval._raw(-err, err)
    if not head.is_finite():
        raise UnboundedInterval("exponential enclosure is unbounded")
    return EnclosedSeq(CoeffSeq(H, head, U.d1, U.d2), C, apar.nu1, apar.nu2, mode)


def envelope_sums(nu1, nu2, box, power=1):
    """(S1, T1, S2, T2) with S = sum_n alpha nu^-pn, T = the part n > box."""
    out = []
    for nu, b in ((nu1, box.n1_max), (nu2, box.n2_max)):
        r = _nu_powers(nu, 1, -1)[1].pow_k(power)
        S = (1.0 + r) / (1.0 - r)
        T = 2.0 * r.pow_k(b + 1) / (1.0 - r)
        out.extend([S, T])
    return out


def tail_l1(enc, outside):
    """sum over n outside the box of alpha_n C nu^-n."""
    S1, T1, S2, T2 = envelope_sums(enc.nu1, enc.nu2, outside, 1)
    return enc.C * (T1 * S2 + (S1 - T1) * T2)


def tail_l2(enc, outside):
    """Squared l^2 tail: sum over n outside the box of alpha_n C^2 nu^-2n."""
    S1, T1, S2, T2 = envelope_sums(enc.nu1, enc.nu2, outside, 2)
    return enc.C.square() * (T1 * S2 + (S1 - T1) * T2)
