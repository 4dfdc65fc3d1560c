"""Eigenvalue enclosures for DF(u~) and the orbital-stability verdict.

The finite block of DF(U) in one symmetry sector (cosine or sine in x1) is
diagonalised numerically, P = D^(-1/2) Q D^(1/2), and the Gershgorin radii
eps_n = |lambda_n + t| rho are obtained from the constant stack Z11..Z14,
Zu1..Zu3, C1, C2.  Intervals lying in the window J = [lambda_min, delta0]
and disjoint from the others are counted.

Only perturbations even in x2 are covered: the cosine basis in x2 is the
setting of the whole construction.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .aliasing import EnclosedSeq, tail_l1
from .approximation import build_P, jacobian, kernel_basis, trace_matrix
from .bounds import collapsed_e, min_l_outside, v_from_w, zu_inner_product
from .errors import HypothesisFailed, SingularBlock
from .interval import Interval, as_interval, matmul
from .operators import mult_matrix, sector_alpha, sector_indices, weighted_norm_bound
from .sequences import CoeffSeq, IndexBox, alpha_array, convolve, inner_product, lp_norm, project
from .symbols import (
    SymbolParams,
    c_interval,
    c_of_d1,
    essential_floor,
    inf_decay_rate,
    kappa1,
    symbol_on_box,
)

__all__ = [
    "SpectralWindow",
    "GershgorinSet",
    "StabilityVerdict",
    "StabilityContext",
    "essential_spectrum_floor",
    "lambda_min_bound",
    "default_window",
    "gershgorin_enclosure",
    "count_negative",
    "inverse_norm_bound",
    "solve_wbar",
    "theta_enclosure",
    "classify",
    "refined_window",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SpectralWindow:
    """J = [lambda_min, delta0] together with the shift t > -lambda_min."""

    lambda_min: Interval
    delta0: Interval
    t: Interval

    def __post_init__(self):
        for name in ("lambda_min", "delta0", "t"):
            object.__setattr__(self, name, as_interval(getattr(self, name)))
        if not self.delta0.lo > 0:
            raise ValueError("delta0 must be positive")
        if not self.lambda_min.hi < self.delta0.lo:
            raise ValueError("lambda_min must lie below delta0")
        if not (self.t + self.lambda_min).lo > 0:
            raise ValueError("t must exceed -lambda_min")


@dataclass(frozen=True, eq=False)
class GershgorinSet:
    centers: Interval
    radii: Interval
    sector: str
    tail_floor: Interval
    constants: dict = field(default_factory=dict)

    def intervals(self):
        """Outward-rounded (lo, hi) pairs of [lambda_n - eps_n, lambda_n + eps_n]."""
        lo = np.atleast_1d((self.centers - self.radii).lo)
        hi = np.atleast_1d((self.centers + self.radii).hi)
        return list(zip(lo.tolist(), hi.tolist()))


@dataclass(frozen=True, eq=False)
class StabilityVerdict:
    n_negative: int
    zero_is_translation_mode: bool
    theta: Interval
    verdict: str


@dataclass(frozen=True, eq=False)
class StabilityContext:
    """What the spectral computation needs from a successful certificate."""

    U: CoeffSeq
    W: EnclosedSeq
    c: float
    N: IndexBox
    r0: float
    kappa2: Interval


def essential_spectrum_floor(c):
    """1 - c^4/4, the bottom of the essential spectrum."""
    return essential_floor(c)


def lambda_min_bound(W, kappa2, r0, c):
    """-e^{kappa2 r0} ||e^U||_1 - c^4/4."""
    c2 = c_interval(c).square()
    w1 = W.l1_norm() if isinstance(W, EnclosedSeq) else as_interval(W)
    return -((as_interval(kappa2) * float(r0)).exp() * w1) - c2.square() / 4.0


def default_window(c, lambda_min, delta0=None, t=None):
    """delta0 defaults to a quarter of the essential floor, t to 1 + |lambda_min|."""
    floor = essential_floor(c)
    if delta0 is None:
        delta0 = 0.25 * floor.lo
    if not 0 < delta0 < floor.lo:
        raise ValueError(f"delta0 must lie in (0, {floor.lo})")
    lm = as_interval(lambda_min)
    if t is None:
        t = 1.0 + abs(lm.lo)
    return SpectralWindow(lm, Interval.point(float(delta0)), Interval.point(float(t)))


def _diag(v):
    v = as_interval(v)
    n = v.shape[0]
    lo = np.zeros((n, n))
    hi = np.zeros((n, n))
    idx = np.arange(n)
    lo[idx, idx] = v._lo
    hi[idx, idx] = v._hi
    return Interval._raw(lo, hi)


def _hi(x):
    return Interval.point(as_interval(x).hi)


def _imax(*xs):
    return Interval.point(max(as_interval(x).hi for x in xs))


def _sector_values(A2d, box, sector):
    n1, n2 = sector_indices(box, sector)
    return A2d[n1, n2]


def _inverse_defect(P, X, alpha):
    """Norm bound of Delta = P^-1 - X from rho = ||I - X P||."""
    E = Interval.point(np.eye(P.shape[0])) - matmul(X, P)
    rho = weighted_norm_bound(E, alpha, alpha)
    if rho.hi >= 1:
        raise SingularBlock("numerical inverse of P not verified")
    nX = weighted_norm_bound(X, alpha, alpha)
    return _hi(rho * nX / (1.0 - rho))


def _zu_stability(VN, sp, d1, rest, g):
    """Zu1, Zu2 in the doubled form used for the spectral problem.

    Both the literal 4 d1 (V, V*E) and twice the square-root bound are
    computed and the larger kept; the part of V outside N enters through
    ||(L - mu)^-1|| <= 1/g.
    """
    Ep = collapsed_e(sp, 2 * VN.box.n1_max, d1)
    ip = zu_inner_product(VN, Ep)
    ip = Interval._raw(max(ip.lo, 0.0), max(ip.hi, 0.0))
    d = Interval.point(float(d1))
    a = inf_decay_rate(sp)
    extra = c_of_d1(sp, d1) * (-2.0 * a * d).exp() * ip
    zu1 = _imax(4.0 * d * ip, 2.0 * (2.0 * d * ip).sqrt_nonneg()) + 2.0 * rest / g
    zu2 = _imax(4.0 * d * ip + 2.0 * extra, 2.0 * (2.0 * d * ip + extra).sqrt_nonneg()) + 4.0 * rest / g
    return _hi(zu1), _hi(zu2)


def gershgorin_enclosure(ctx, window, sector="even"):
    """Gershgorin intervals of DF(u~) in one sector."""
    U = ctx.U.mid()
    N = ctx.N
    c = ctx.c
    d1, d2 = U.d1, U.d2
    W = ctx.W
    H = W.box
    N2 = N.scale(2)
    if not H.contains_box(N2):
        raise ValueError("the enclosure of exp(U) must cover twice the box N")
    V = v_from_w(W)
    VN = V.resize(N)
    rest = lp_norm(project(V, N, "outside"), 1) + Interval(0.0, tail_l1(W, H).hi)
    V1 = lp_norm(V, 1) + Interval(0.0, tail_l1(W, H).hi)

    pb = build_P(U, N, c, sector, V=V.mid())
    P, X, lam = pb.P.data, pb.Pinv.data, pb.S
    alpha = sector_alpha(N, sector)
    t, d0 = window.t, window.delta0
    g = essential_floor(c) - d0
    if g.lo <= 0:
        raise HypothesisFailed("window", "delta0 must stay below the essential floor")
    lamI = Interval.point(lam)
    st = lamI + t
    if np.min(st._lo) <= 0:
        raise HypothesisFailed("shift", "S + tI is not verified positive")
    inv_st = 1.0 / st
    n_inv = Interval.point(float(np.max(inv_st._hi)))
    delta = _inverse_defect(P, X, alpha)
    nP = weighted_norm_bound(P, alpha, alpha)

    lN = _sector_values(symbol_on_box(c, d1, d2, N), N, sector)
    M = mult_matrix(V, N, N, sector)
    LMP = matmul(M + _diag(lN), P)
    Rn = matmul(X, LMP) - Interval.point(np.diag(lam))
    nLMP = weighted_norm_bound(LMP, alpha, alpha)
    Z13 = weighted_norm_bound(inv_st.reshape(-1, 1) * Rn, alpha, alpha) + n_inv * delta * nLMP
    lshift = lN - d0
    Kmat = inv_st.reshape(-1, 1) * (Interval.point(X) * lshift.reshape(1, -1))
    K = weighted_norm_bound(Kmat, alpha, alpha) + n_inv * delta * Interval.point(float(np.max(abs(lshift)._hi)))

    # coupling between I_N and its complement, through V^N plus the rest
    n1, n2 = sector_indices(N2, sector)
    inside = (n1 <= N.n1_max) & (n2 <= N.n2_max)
    alpha2 = sector_alpha(N2, sector)
    lmin_out = min_l_outside(c, d1, d2, N)
    gap = lmin_out - d0
    if gap.lo <= 0:
        raise HypothesisFailed("window", "symbol outside the box not above delta0")
    l2 = _sector_values(symbol_on_box(c, d1, d2, N2), N2, sector)[~inside] - d0
    M_out_in = mult_matrix(VN, N2, N, sector)[np.flatnonzero(~inside), :]
    A11 = (1.0 / l2).reshape(-1, 1) * matmul(M_out_in, P)
    Z11 = (weighted_norm_bound(A11, alpha2[~inside], alpha) + nP * rest / gap) / g
    Z12 = V1 / (gap * g)
    M_in_out = mult_matrix(VN, N, N2, sector)[:, np.flatnonzero(~inside)]
    B14 = inv_st.reshape(-1, 1) * Interval.point(X)
    Z14 = (weighted_norm_bound(matmul(B14, M_in_out), alpha, alpha2[~inside])
           + weighted_norm_bound(B14, alpha, alpha) * rest + n_inv * delta * V1)

    sp = SymbolParams(c, d2, float(d0.hi))
    Zu1, Zu2 = _zu_stability(VN, sp, d1, rest, g)
    Zu3 = K * Zu2

    r0 = float(ctx.r0)
    k2 = as_interval(ctx.kappa2)
    fac = ((k2 * r0).exp() - 1.0) / r0 if r0 > 0 else k2
    w1 = W.l1_norm()
    C1 = w1 / g * fac
    C2 = w1 * K / g * fac
    c1r0 = C1 * r0
    if c1r0.hi >= 1:
        raise HypothesisFailed("C1r0", f"C1 r0 = {c1r0.hi:.6g} is not below 1")
    beta1 = (Zu1 + c1r0) / (1.0 - c1r0)
    sq = (1.0 + beta1.square()).sqrt_nonneg()
    den = 1.0 - Z12 - Zu2 - sq * c1r0
    if den.lo <= 0:
        raise HypothesisFailed("beta-denominator", f"1 - Z12 - Zu2 - ... = {den.lo:.6g} is not positive")
    beta2 = (Z11 + (Zu2 + sq * c1r0) * nP) / den
    q = (Z11 + Zu2 * nP) / (1.0 - Z12 - Zu2)
    rho_q = Z13 + Z14 * q + Zu3 * (nP + q)
    rho_inf = Z13 + Z14 * beta2 + (Zu3 + C2 * r0 * sq) * (nP + beta2)
    rho = _imax(rho_q, rho_inf)
    radii = Interval.point((abs(lamI + t) * rho)._hi)
    if rho.hi < 1:
        tail_floor = Interval.point((lmin_out * (1.0 - rho) - t * rho).lo)
    else:
        tail_floor = Interval.point(-np.inf)
    constants = {
        "Z11": Z11, "Z12": Z12, "Z13": Z13, "Z14": Z14, "Zu1": Zu1, "Zu2": Zu2, "Zu3": Zu3,
        "C1": C1, "C2": C2, "beta1": beta1, "beta2": beta2, "rho": rho, "norm_P": nP,
        "inverse_defect": delta, "K": K,
    }
    return GershgorinSet(lamI, radii, sector, tail_floor, constants)


def _components(gs):
    items = sorted(gs.intervals())
    items.append((gs.tail_floor.lo, np.inf))
    items.sort()
    comps = []
    for lo, hi in items:
        if comps and lo <= comps[-1][1]:
            comps[-1][1] = max(comps[-1][1], hi)
            comps[-1][2] += 1
        else:
            comps.append([lo, hi, 1])
    return comps


def count_negative(gs_even, gs_odd, window, nontrivial=True):
    """(n_negative, zero_mode); n_negative is None when the count is inconclusive.

    A connected group of intervals left of 0 and inside J counts with its
    size.  A single odd-sector interval containing 0, inside J and isolated,
    holds the translation eigenvalue (the kernel contains d/dx1 u~ whenever
    u~ is nonzero) and is not counted.
    """
    lam_min = window.lambda_min.hi
    d0 = window.delta0.lo
    n = 0
    zero_mode = False
    for gs in (gs_even, gs_odd):
        for lo, hi, k in _components(gs):
            if lo > 0:
                continue
            inside = lo >= lam_min and hi <= d0
            if hi < 0:
                if not inside:
                    return None, zero_mode
                n += k
            elif (gs.sector == "odd" and k == 1 and inside and nontrivial and not zero_mode):
                zero_mode = True
            else:
                return None, zero_mode
    return n, zero_mode


def refined_window(gs_list, window, margin=0.05):
    """Tighter lambda_min from a first pass (every eigenvalue below delta0 lies in the union).

    Returns None when no improvement is available.
    """
    lows = [lo for gs in gs_list for lo, _ in gs.intervals()] + [gs.tail_floor.lo for gs in gs_list]
    new = min(lows)
    if not math.isfinite(new) or new <= window.lambda_min.hi:
        return None
    new = min(new, 0.0) - margin
    if new <= window.lambda_min.hi or new >= window.delta0.lo:
        return None
    lm = Interval.point(new)
    return SpectralWindow(lm, window.delta0, Interval.point(-new + margin))


def inverse_norm_bound(gs_even, window):
    """||DF_e(u~)^-1|| <= 1 / min(delta0, dist(0, even intervals)); None if 0 is not excluded."""
    dist = window.delta0.lo
    for lo, hi, _ in _components(gs_even):
        if lo > dist:
            continue
        if lo <= 0 <= hi:
            return None
        dist = min(dist, lo if lo > 0 else -hi)
    return Interval.point((1.0 / Interval.point(dist)).hi)


def solve_wbar(Ubar, c, return_residual=False):
    """Least-squares solution of DF(U) W = -2c d^2U/dx1^2 inside Ker(T)."""
    U = Ubar.mid()
    box = U.box
    cf = float(c_interval(c).mid)
    rhs = (-2.0 * cf) * U.dx1_squared().data.ravel()
    if not np.any(rhs):
        Wb = CoeffSeq.zeros(box, U.d1, U.d2)
        return (Wb, 0.0) if return_residual else Wb
    T = trace_matrix(box, U.d1)
    Q = kernel_basis(T, box)
    sa = np.sqrt(alpha_array(box).ravel())
    J = jacobian(U, c, box)
    A = sa[:, None] * (J @ Q)
    z, *_ = np.linalg.lstsq(A, sa * rhs, rcond=None)
    w = Q @ z
    if not np.all(np.isfinite(w)):
        raise SingularBlock("linear solve for W failed")
    res = float(np.linalg.norm(sa * (J @ w - rhs)))
    log.debug("wbar residual %.3e", res)
    Wb = CoeffSeq(box, w.reshape(box.shape), U.d1, U.d2)
    return (Wb, res) if return_residual else Wb


def theta_enclosure(Ubar, Wbar, r0, invnorm_DF, c, W, kappa2):
    """theta in [theta0 - eps, theta0 + eps].

    Norms are L^2(Omega) norms: a function supported on Omega0 with
    coefficients F has norm sqrt(|Omega0|) ||F||_2, and the radius r0
    (measured with the x2-averaged norm) becomes sqrt(2 d2) r0.  The defect
    of the approximate w is d^2u/dx1^2 + DF(u) w / (2c).
    Returns (theta, parts).
    """
    box = Ubar.box.join(Wbar.box)
    U = Ubar.to_interval().resize(box)
    Wb = Wbar.to_interval().resize(box)
    d1, d2 = Interval.point(float(U.d1)), Interval.point(float(U.d2))
    ci = c_interval(c)
    c2 = ci.square()
    Om = 4.0 * d1 * d2
    sOm = Om.sqrt()
    r0 = float(r0)
    r0h = (2.0 * d2).sqrt() * r0
    inv2 = 1.0 / (2.0 - c2)
    D2U = U.dx1_squared()
    S = U + Wb.scale(2.0 * ci)
    theta0 = Om * inner_product(S, D2U)

    V = v_from_w(W)
    H = W.box
    K = IndexBox(min(2 * box.n1_max, H.n1_max), min(2 * box.n2_max, H.n2_max))
    VK = V.resize(K)
    rest_V = lp_norm(project(V, K, "outside"), 1) + Interval(0.0, tail_l1(W, H).hi)
    conv = convolve(VK, Wb)
    big = conv.box
    LW = Wb.resize(big).data * symbol_on_box(c, U.d1, U.d2, big)
    dseq = D2U.resize(big).data + (LW + conv.data) / (2.0 * ci)
    defect = sOm * (lp_norm(U.with_data(dseq, big), 2) + rest_V * lp_norm(Wb, 2) / (2.0 * ci))
    growth = (as_interval(kappa2) * r0).exp() - 1.0
    eW = W.l1_norm() * lp_norm(Wb, 1)
    eps0 = kappa1(c) * r0h + 4.0 * c2 * as_interval(invnorm_DF) * (
        defect + r0h * inv2 + growth * sOm * eW / (2.0 * ci))
    eps = sOm * lp_norm(S, 2) * inv2 * r0h + eps0 * (sOm * lp_norm(D2U, 2) + r0h * inv2)
    e = eps.hi
    theta = theta0 + Interval(-e, e)
    return theta, {"theta0": theta0, "eps": Interval.point(e), "eps0": eps0, "defect": defect}


def classify(n_negative, zero_mode, theta):
    """The verdict table.

    n = 0: stable.  theta > 0 and n = 1: stable.  theta > 0 and n even, or
    theta < 0 and n odd: unstable.  Anything else is inconclusive.
    """
    th = as_interval(theta) if theta is not None else None
    if n_negative is None:
        v = "inconclusive"
    elif n_negative == 0:
        v = "stable"
    elif th is None or not (th.lo > 0 or th.hi < 0):
        v = "inconclusive"
    elif th.lo > 0:
        v = "stable" if n_negative == 1 else ("unstable" if n_negative % 2 == 0 else "inconclusive")
    else:
        v = "unstable" if n_negative % 2 == 1 else "inconclusive"
    return StabilityVerdict(n_negative, bool(zero_mode), th, v)
