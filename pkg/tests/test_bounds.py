import math

import numpy as np
import pytest
from scipy import optimize, signal

from sbwave.aliasing import EnclosedSeq
from sbwave.bounds import (
    BoundSet,
    collapsed_e,
    min_l_outside,
    poly_values,
    radii_check,
    y0_bound,
    z1N_bound,
    z1_total,
    z2_coeff,
    zu_bound,
    zu_inner_product,
)
from sbwave.interval import Interval
from sbwave.operators import OperatorBlock
from sbwave.sequences import CoeffSeq, IndexBox
from sbwave.symbols import SymbolParams, decay_constants, kappa1, kappa2

from conftest import D1, D2, random_seq

SP = SymbolParams(1.2, D2)


def exact_e0(box=IndexBox(8, 8)):
    return EnclosedSeq(CoeffSeq.unit(D1, D2, box).to_interval(), Interval(1.0), 1e6, 1e6)


def identity_block(N):
    return OperatorBlock(N, N, np.eye(N.size))


def full_series(a):
    top = np.concatenate([a[:0:-1], a], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def test_bounds_vanish_at_the_trivial_state():
    N = IndexBox(4, 4)
    Z = CoeffSeq.zeros(N, D1, D2)
    W = exact_e0()
    assert y0_bound(Z, identity_block(N), W, 1.2, N).hi < 1e-12
    z1, parts = z1N_bound(Z, identity_block(N), 1.2, N)
    assert z1.hi < 1e-13 and parts["T1"].hi < 1e-13
    zu, _ = zu_bound(Z, SP, D1, Interval(1.0))
    assert zu.hi < 1e-100  # zero up to outward rounding


def test_z2_at_the_trivial_state():
    N = IndexBox(4, 4)
    z2, parts = z2_coeff(exact_e0(), identity_block(N), 1.2, N, IndexBox(4, 4))
    # M_W = I and B = I, so the coefficient is kappa1
    ref = 1 / (1 - 1.2**4 / 4)
    assert z2.lo <= ref * (1 + 1e-12) and ref * (1 - 1e-12) <= z2.hi
    assert parts["W_l1"].contains(1.0)


def test_z1_total_adds_its_parts():
    t = z1_total(Interval(0.1), Interval(0.02), Interval(1e-3), Interval(0.5), 1.2)
    ref = 0.12 + 1e-3 / (1 - 1.2**4 / 4)
    assert t.lo <= ref <= t.hi
    # ||B|| > 1 scales the tail term
    t2 = z1_total(Interval(0.1), Interval(0.02), Interval(1e-3), Interval(3.0), 1.2)
    assert t2.contains(0.12 + 3e-3 * kappa1(1.2).mid)


def test_zu_inner_product_brute_force(rng):
    V = random_seq(rng, IndexBox(3, 2), scale=0.2)
    Ep = collapsed_e(SP, 6, 30.0)
    ip = zu_inner_product(V, Ep)
    F = full_series(V.data)
    VV = signal.convolve2d(F, F)  # centred at (6, 4)
    ref = math.fsum((1 if m == 0 else 2) * Ep.mid[m] * VV[6 + m, 4] for m in range(7))
    assert ip.lo - 1e-15 <= ref <= ip.hi + 1e-15


def test_zu_dependence_on_the_domain(rng):
    # 2 d1 E'_0 = sum_n2 C^2 (1 - e^{-4 a d1}) / (2 a^2) grows towards a limit,
    # so for fixed coefficients Zu1 levels off; only the Zu2 excess decays
    V = random_seq(rng, IndexBox(3, 2), scale=0.05)
    runs = [zu_bound(V, SP, d1, Interval(1.0)) for d1 in (20.0, 40.0, 80.0)]
    zu = [r[0].hi for r in runs]
    excess = [r[1]["Zu2"].hi ** 2 - r[1]["Zu1"].lo ** 2 for r in runs]
    assert zu[0] < zu[1] < zu[2] < 1.2 * zu[0]
    assert excess[0] > excess[1] > excess[2] >= 0


def test_collapsed_e_zeroth_coefficient():
    d1 = 30.0
    Ep = collapsed_e(SP, 2, d1)
    ref = 0.0
    for n2 in range(0, 400):
        dc = decay_constants(SP, n2)
        a, C = dc.a.mid, dc.C.mid
        ref += (1 if n2 == 0 else 2) * C * C * -math.expm1(-4 * a * d1) / (4 * a * a * d1)
    assert Ep.lo[0] <= ref * (1 + 1e-12) and ref * (1 - 1e-12) <= Ep.hi[0]


def _widen(x, rng):
    x = x.to_interval() if hasattr(x, "to_interval") else x
    return x.with_data(x.data + Interval(-rng.uniform(0, 1e-6, x.box.shape), rng.uniform(0, 1e-6, x.box.shape)))


def test_bounds_monotone_under_widening(rng):
    N = IndexBox(3, 3)
    W0 = exact_e0()
    for _ in range(10):
        V = random_seq(rng, N, scale=0.05)
        Vw = _widen(V, rng)
        B = identity_block(N)
        assert z1N_bound(Vw, B, 1.2, N)[0].hi >= z1N_bound(V, B, 1.2, N)[0].hi
        assert zu_bound(Vw, SP, D1, Interval(1.0))[0].hi >= zu_bound(V, SP, D1, Interval(1.0))[0].hi
        U = CoeffSeq.zeros(N, D1, D2)
        Ww = EnclosedSeq(_widen(W0.head, rng), W0.C, W0.nu1, W0.nu2)
        assert y0_bound(U, B, Ww, 1.2, N).hi >= y0_bound(U, B, W0, 1.2, N).hi
        assert z2_coeff(Ww, B, 1.2, N, N)[0].hi >= z2_coeff(W0, B, 1.2, N, N)[0].hi


def test_min_l_outside_against_a_scan():
    c, d1, d2 = 1.2, math.pi / 0.06, math.pi / 0.24
    N = IndexBox(40, 40)
    n1 = np.arange(401).reshape(-1, 1)
    n2 = np.arange(401).reshape(1, -1)
    k1 = (np.pi * n1 / d1) ** 2
    k2 = (np.pi * n2 / d2) ** 2
    L = (k1 + k2) ** 2 - c * c * k1 + 1
    L[:41, :41] = np.inf
    b = min_l_outside(c, d1, d2, N)
    assert b.lo <= L.min()
    assert b.hi >= L.min() * 0.5  # not a vacuous bound


def test_radii_known_example():
    b = BoundSet(Interval(6.0005e-8), Interval(0.36608), Interval(22.7926), kappa2(SP, 26), Interval(1.0))
    res = radii_check(b)
    assert res.success
    k = kappa2(SP, 26).mid
    p = lambda r: 0.5 * 22.7926 * math.expm1(k * r) * r - (1 - 0.36608) * r + 6.0005e-8
    root = optimize.brentq(p, 1e-9, 1e-6, xtol=1e-20, rtol=1e-15)
    assert root <= res.r_min.hi <= root * (1 + 1e-5)
    assert res.r_min.hi == pytest.approx(9.4657e-8, rel=1e-4)
    pv, qv = poly_values(b, [res.r_min.hi])
    assert pv.hi[0] < 0 and qv.hi[0] < 1


def test_radii_failures():
    k = Interval(2.0)
    assert radii_check(BoundSet(Interval(1e-6), Interval(1.0), Interval(1.0), k, Interval(1.0))).failed_condition == "contraction"
    assert radii_check(BoundSet(Interval(0.95), Interval(0.1), Interval(0.01), k, Interval(1.0))).failed_condition == "quadratic"
    inf = Interval(0.0, math.inf)
    assert radii_check(BoundSet(inf, Interval(0.1), Interval(1.0), k, Interval(1.0))).failed_condition == "unbounded"
    ok = radii_check(BoundSet(Interval(0.0), Interval(0.1), Interval(1.0), k, Interval(1.0)))
    assert ok.success and ok.r_min.hi < 1e-200
