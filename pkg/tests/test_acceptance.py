"""Acceptance criteria 1-12, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary
(see conftest.py).  Run on its own with ``pytest tests/test_acceptance.py``.
"""

import functools
import json
import math
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from click.testing import CliRunner
from scipy import integrate

from sbwave.aliasing import AnalyticityParams, EnclosedSeq, rigorous_exp
from sbwave.certificate import iv_from_json
from sbwave.cli import main
from sbwave.interval import Interval
from sbwave.sequences import CoeffSeq, IndexBox, convolve, eval_grid, lp_norm, seq_exp
from sbwave.stability import (
    StabilityContext,
    classify,
    count_negative,
    default_window,
    gershgorin_enclosure,
    lambda_min_bound,
    theta_enclosure,
)
from sbwave.symbols import (
    SymbolParams,
    decay_constants,
    essential_floor,
    kappa1,
    kappa2_tail,
    min_l_n2,
)

from conftest import ACCEPTANCE_LINES, D1, D2, random_box, random_seq


def criterion(num, title, limit_s=None):
    """Record PASS/FAIL for criterion ``num``; enforce the runtime limit."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                detail = fn(*args, **kwargs)
                elapsed = time.perf_counter() - t0
                if limit_s is not None:
                    assert elapsed <= limit_s, f"took {elapsed:.1f}s, limit {limit_s}s"
            except BaseException as exc:
                msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
                line = f"criterion {num}: FAIL  {title} ({msg[:160]})"
                ACCEPTANCE_LINES.append(line)
                print(line)
                raise
            line = f"criterion {num}: PASS  {title} [{elapsed:.1f}s]" + (f" {detail}" if detail else "")
            ACCEPTANCE_LINES.append(line)
            print(line)

        return wrapper

    return deco


def _mp_in(iv_lo, iv_hi, value):
    return mpmath.mpf(float(iv_lo)) <= value <= mpmath.mpf(float(iv_hi))


# -- 1 ----------------------------------------------------------------------------

def _rand_iv(rng, n, lo=-10.0, hi=10.0, max_width=1.0):
    a = rng.uniform(lo, hi, n) * 10.0 ** rng.integers(-3, 2, n)
    w = rng.uniform(0, max_width, n) * rng.choice([0.0, 1e-12, 1.0], n)
    return Interval(a, a + w)


def _pick(rng, iv):
    lo, hi = np.asarray(iv.lo), np.asarray(iv.hi)
    t = rng.uniform(0, 1, lo.shape)
    x = lo + t * (hi - lo)
    # endpoints are the hardest points
    which = rng.integers(0, 4, lo.shape)
    x = np.where(which == 0, lo, np.where(which == 1, hi, x))
    return np.clip(x, lo, hi)


@criterion(1, "interval containment, 10^4 randomized checks", limit_s=10)
def test_c01_interval_containment():
    rng = np.random.default_rng(1)
    mpmath.mp.prec = 160
    n = 800
    checks = 0
    a = _rand_iv(rng, n)
    b = _rand_iv(rng, n)
    pos = Interval(np.abs(a.lo) + 1e-3, np.abs(a.lo) + 1e-3 + (a.hi - a.lo))
    bnz = Interval(np.abs(b.lo) + 0.5, np.abs(b.lo) + 0.5 + (b.hi - b.lo))
    small = Interval(np.clip(a.lo, -40, 40), np.clip(a.lo, -40, 40) + np.minimum(a.hi - a.lo, 1.0))
    cases = [
        ("add", a + b, (a, b), lambda x, y: x + y),
        ("sub", a - b, (a, b), lambda x, y: x - y),
        ("mul", a * b, (a, b), lambda x, y: x * y),
        ("div", a / bnz, (a, bnz), lambda x, y: x / y),
        ("sqrt", pos.sqrt(), (pos,), mpmath.sqrt),
        ("log", pos.log(), (pos,), mpmath.log),
        ("exp", small.exp(), (small,), mpmath.exp),
        ("cosh", small.cosh(), (small,), mpmath.cosh),
        ("sinh", small.sinh(), (small,), mpmath.sinh),
        ("cos", a.cos(), (a,), mpmath.cos),
        ("sin", a.sin(), (a,), mpmath.sin),
        ("square", a.square(), (a,), lambda x: x * x),
        ("pow5", (a / 4.0).pow_k(5), (a / 4.0,), lambda x: x**5),
    ]
    bad = []
    for name, res, args, f in cases:
        pts = [_pick(rng, x) for x in args]
        lo, hi = np.asarray(res.lo), np.asarray(res.hi)
        for i in range(n):
            val = f(*[mpmath.mpf(float(p[i])) for p in pts])
            checks += 1
            if not _mp_in(lo[i], hi[i], val):
                bad.append((name, i))
    assert checks >= 10_000
    assert not bad, f"containment violated: {bad[:5]}"
    return f"{checks} checks"


# -- 2 ----------------------------------------------------------------------------

def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def brute_terms(U, V):
    """For every output index, the exact products U_|m| V_|n-m| as (p, e) float pairs."""
    B1, B2 = U.box.n1_max, U.box.n2_max
    C1, C2 = V.box.n1_max, V.box.n2_max
    u, v = np.asarray(U.data), np.asarray(V.data)
    m1, m2 = np.meshgrid(np.arange(-B1, B1 + 1), np.arange(-B2, B2 + 1), indexing="ij")
    m1, m2 = m1.ravel(), m2.ravel()
    out = {}
    for n1 in range(B1 + C1 + 1):
        for n2 in range(B2 + C2 + 1):
            j1, j2 = np.abs(n1 - m1), np.abs(n2 - m2)
            ok = (j1 <= C1) & (j2 <= C2)
            p, e = _two_prod(u[np.abs(m1[ok]), np.abs(m2[ok])], v[j1[ok], j2[ok]])
            out[n1, n2] = list(p) + list(e)
    return out


@criterion(2, "reflected convolution vs brute-force Z^2 sum, 200 pairs", limit_s=30)
def test_c02_convolution_oracle():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(200):
        U = random_seq(rng, random_box(rng))
        V = random_seq(rng, random_box(rng))
        terms = brute_terms(U, V)
        exact = np.zeros((U.box + V.box).shape)
        for (i, j), t in terms.items():
            exact[i, j] = math.fsum(t)
        scale = max(np.max(np.abs(exact)), 1e-300)
        for method in ("direct", "fft"):
            got = convolve(U, V, method).data
            worst = max(worst, float(np.max(np.abs(got - exact))) / scale)
        enc = convolve(U.to_interval(), V.to_interval())
        lo, hi = np.asarray(enc.data.lo), np.asarray(enc.data.hi)
        for (i, j), t in terms.items():
            # sign of (exact sum - endpoint), computed exactly by fsum
            assert math.fsum(t + [-lo[i, j]]) >= 0 and math.fsum(t + [-hi[i, j]]) <= 0
    assert worst <= 1e-12, worst
    return f"max relative error {worst:.2e}"


# -- 3 ----------------------------------------------------------------------------

def _mp_eval(U, x):
    """u(x) from the coefficients, in mpmath."""
    x1, x2 = mpmath.mpf(float(x[0])), mpmath.mpf(float(x[1]))
    d1, d2 = mpmath.mpf(U.d1), mpmath.mpf(U.d2)
    total = mpmath.mpf(0)
    for n1 in range(U.box.n1_max + 1):
        for n2 in range(U.box.n2_max + 1):
            a = (2 if n1 else 1) * (2 if n2 else 1)
            total += a * mpmath.mpf(float(U.data[n1, n2])) * mpmath.cos(mpmath.pi * n1 * x1 / d1) \
                * mpmath.cos(mpmath.pi * n2 * x2 / d2)
    return total


@criterion(3, "Young's inequality and seq_exp pointwise consistency", limit_s=60)
def test_c03_young_and_seq_exp():
    rng = np.random.default_rng(3)
    for _ in range(200):
        U = random_seq(rng, random_box(rng)).to_interval()
        V = random_seq(rng, random_box(rng)).to_interval()
        UV = convolve(U, V)
        assert lp_norm(UV, 2).lo <= (lp_norm(U, 2) * lp_norm(V, 1)).hi
        assert lp_norm(UV, 1).lo <= (lp_norm(U, 1) * lp_norm(V, 1)).hi
    mpmath.mp.prec = 120
    worst = 0.0
    for trial in range(5):
        box = IndexBox(4, 3)
        U = random_seq(rng, box, scale=0.15)
        E = seq_exp(U)
        Ei = seq_exp(U.to_interval())
        xs = np.column_stack([rng.uniform(-D1, D1, 5), rng.uniform(-D2, D2, 5)])
        approx = eval_grid(E, xs)
        enc = eval_grid(Ei, xs)
        for k in range(5):
            exact = mpmath.exp(_mp_eval(U, xs[k]))
            assert _mp_in(enc.lo[k], enc.hi[k], exact)
            err = abs(float(approx[k]) - float(exact))
            worst = max(worst, err / (E.tail + 1e-13))
            assert err <= E.tail + 1e-13
    return f"25 points, worst error/tolerance {worst:.2f}"


# -- 4 ----------------------------------------------------------------------------

def _f_n2(c, d2, n2, x):
    m = (math.pi * n2 / d2) ** 2

    def inv_l(xi):
        X = (2 * math.pi * xi) ** 2
        return 1.0 / ((X + m) ** 2 - c * c * X + 1.0)

    v, err = integrate.quad(inv_l, 0, np.inf, weight="cos", wvar=2 * math.pi * x, epsabs=1e-13, limlst=200)
    return 2 * v, 2 * err


@criterion(4, "decay bound |f_n2(x)| <= C exp(-a|x|) against quadrature", limit_s=300)
def test_c04_decay_bound():
    sp = SymbolParams(1.2, D2)
    worst = 0.0
    for n2 in (0, 1, 3, 10):
        dc = decay_constants(sp, n2)
        for x in np.linspace(0.1, 20.0, 50):
            f, err = _f_n2(1.2, D2, n2, x)
            assert err <= 1e-8
            bound = float(dc.C.hi) * math.exp(-float(dc.a.lo) * x)
            assert abs(f) <= bound + err, (n2, x, f, bound)
            if abs(f) > 1e-9:
                worst = max(worst, abs(f) / bound)
    return f"max |f|/bound {worst:.3f}"


# -- 5 ----------------------------------------------------------------------------

def _grid_min_l(c, d2, n2):
    from scipy.optimize import minimize_scalar

    m = (math.pi * n2 / d2) ** 2
    l = lambda xi: ((2 * math.pi * xi) ** 2 + m) ** 2 - c * c * (2 * math.pi * xi) ** 2 + 1.0
    xs = np.linspace(0.0, 1.0, 20001)
    i = int(np.argmin(l(xs)))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    r = minimize_scalar(l, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return min(float(r.fun), float(l(xs[i])))


def _norm_inv_l_sq(c, d2, n2):
    m = (math.pi * n2 / d2) ** 2
    f = lambda xi: 1.0 / (((2 * math.pi * xi) ** 2 + m) ** 2 - c * c * (2 * math.pi * xi) ** 2 + 1.0) ** 2
    v, _ = integrate.quad(f, 0, np.inf, epsabs=1e-16, epsrel=1e-12)
    return 2 * v


@criterion(5, "min of l_n2 vs grid search; kappa2 tail dominates partial sums", limit_s=120)
def test_c05_min_l_and_tail():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(20):
        c = float(rng.uniform(0.2, 1.4))
        d2 = float(rng.uniform(2.0, 30.0))
        n2 = int(rng.integers(0, 12))
        got = min_l_n2(SymbolParams(c, d2), n2)
        ref = _grid_min_l(c, d2, n2)
        worst = max(worst, abs(float(got.mid) - ref))
        assert abs(float(got.mid) - ref) <= 1e-6, (c, d2, n2, got, ref)
    for N in (5, 10, 20):
        partial = math.fsum(_norm_inv_l_sq(1.2, D2, n) for n in range(N + 1, N + 101))
        assert partial <= kappa2_tail(D2, N).lo, (N, partial)
    return f"max |min - grid| {worst:.1e}"


# -- 6 ----------------------------------------------------------------------------

@criterion(6, "kappa1(1.2) and the essential floor 0.4816")
def test_c06_kappa1_and_floor():
    k1 = kappa1(1.2)
    exact = 1 / (1 - Fraction(5184, 10000))
    assert Fraction(k1.lo) <= exact <= Fraction(k1.hi)
    assert k1.width <= 1e-12
    assert abs(float(k1.mid) - 2.0764119601328903) < 1e-12
    fl = essential_floor(1.2)
    assert Fraction(fl.lo) <= Fraction(4816, 10000) <= Fraction(fl.hi)
    return f"kappa1 in [{k1.lo!r}, {k1.hi!r}]"


# -- 7 ----------------------------------------------------------------------------

@criterion(7, "aliasing cross-check: FFT enclosure vs power series, 50 draws", limit_s=300)
def test_c07_aliasing_cross_check():
    rng = np.random.default_rng(7)
    apar = AnalyticityParams(1.1, 1.1, (256, 256))
    for _ in range(50):
        box = IndexBox(int(rng.integers(0, 6)), int(rng.integers(0, 6)))
        U = random_seq(rng, box)
        target = rng.uniform(0.05, 2.0)
        U = U.scale(target / lp_norm(U, 1))
        assert lp_norm(U, 1) <= 2.0 + 1e-12
        enc = rigorous_exp(U, apar, head_box=box)
        ser = seq_exp(U.to_interval(), out_box=box)
        ser_f = seq_exp(U, out_box=box)
        lo = np.maximum(enc.head.data.lo, ser.data.lo)
        hi = np.minimum(enc.head.data.hi, ser.data.hi)
        assert np.all(lo <= hi), "enclosures do not intersect"
        assert np.all(enc.head.data.lo <= ser_f.data) and np.all(ser_f.data <= enc.head.data.hi)
    return "50 draws"


# -- 8 and 12 ---------------------------------------------------------------------

@criterion(8, "desk preset certifies with r <= 1e-2 within 20 min", limit_s=None)
def test_c08_desk_certification(desk_run):
    res = desk_run["result"]
    assert res.exit_code == 0, res.output
    cert = desk_run["cert"]
    assert cert.success and cert.failed_condition is None
    assert cert.verify_digest()
    r = iv_from_json(cert.radii["r_min"])
    assert r.hi <= 1e-2
    assert desk_run["elapsed"] <= 20 * 60
    b = cert.bounds
    return (f"r={r.hi:.3e} Y0={iv_from_json(b['Y0']).hi:.3e} Z1={iv_from_json(b['Z1']).hi:.4f} "
            f"Z2={iv_from_json(b['Z2_coeff']).hi:.3f} in {desk_run['elapsed']:.0f}s")


@criterion(12, "two single-threaded desk runs give byte-identical certificates")
def test_c12_determinism(desk_run, tmp_path):
    second = tmp_path / "cert2.json"
    res = CliRunner().invoke(main, ["certify", "--preset", "desk", "builtin:one_peak_desk", "-o", str(second)])
    assert res.exit_code == 0, res.output
    a = desk_run["path"].read_bytes()
    b = second.read_bytes()
    assert a == b
    return f"sha256 digest {json.loads(a)['digest'][:16]}"


# -- 9 ----------------------------------------------------------------------------

@criterion(9, "unperturbed point: no eigenvalue in J, verdict stable")
def test_c09_unperturbed_spectrum():
    U = CoeffSeq.zeros(IndexBox(8, 8), D1, D2)
    # exp(0) = e0 exactly: every other coefficient is 0 <= C nu^-n for any nu
    W = EnclosedSeq(CoeffSeq.unit(D1, D2, IndexBox(31, 31)).to_interval(), Interval(1.0), 1e6, 1e6)
    k2 = Interval(1.98, 2.0)
    ctx = StabilityContext(U, W, 1.2, IndexBox(4, 4), 0.0, k2)
    window = default_window(1.2, lambda_min_bound(W, k2, 0.0, 1.2))
    floor = essential_floor(1.2)
    sets = []
    for sector in ("even", "odd"):
        gs = gershgorin_enclosure(ctx, window, sector)
        for lo, hi in gs.intervals():
            assert lo > window.delta0.hi
            assert lo >= floor.lo * (1 - 1e-12)
        assert gs.tail_floor.lo > window.delta0.hi
        assert float(np.max(gs.radii.hi)) < 1e-10
        sets.append(gs)
    n, zero_mode = count_negative(*sets, window, nontrivial=False)
    assert (n, zero_mode) == (0, False)
    assert classify(n, zero_mode, None).verdict == "stable"
    return "both sectors empty in J"


# -- 10 ---------------------------------------------------------------------------

def _expected_verdict(n, sign):
    if n == 0:
        return "stable"
    if sign > 0 and n == 1:
        return "stable"
    if (sign > 0 and n % 2 == 0) or (sign < 0 and n % 2 == 1):
        return "unstable"
    return "inconclusive"


@criterion(10, "classify agrees with the verdict table on all 15 cells")
def test_c10_classify_table():
    thetas = {-1: Interval(-2.0, -1.0), 0: Interval(-1.0, 1.0), 1: Interval(1.0, 2.0)}
    cells = 0
    for n in range(5):
        for sign, th in thetas.items():
            got = classify(n, n > 0, th).verdict
            assert got == _expected_verdict(n, sign), (n, sign, got)
            cells += 1
    assert cells == 15
    return "15/15"


# -- 11 ---------------------------------------------------------------------------

@criterion(11, "theta0 vs brute-force sum; eps monotone in r0", limit_s=30)
def test_c11_theta_machinery():
    rng = np.random.default_rng(11)
    mpmath.mp.prec = 200
    c = 1.2
    worst = 0.0
    for _ in range(5):
        box = IndexBox(6, 5)
        U = random_seq(rng, box, scale=0.05)
        Wb = random_seq(rng, box, scale=0.5)
        W = rigorous_exp(U, AnalyticityParams(1.5, 1.5, (32, 32)), head_box=IndexBox(31, 31))
        theta, parts = theta_enclosure(U, Wb, 0.0, 2.0, c, W, Interval(2.0))
        cm = mpmath.mpf(6) / 5
        d1, d2 = mpmath.mpf(U.d1), mpmath.mpf(U.d2)
        total = mpmath.mpf(0)
        for n1 in range(box.n1_max + 1):
            for n2 in range(box.n2_max + 1):
                a = (2 if n1 else 1) * (2 if n2 else 1)
                u, w = mpmath.mpf(float(U.data[n1, n2])), mpmath.mpf(float(Wb.data[n1, n2]))
                total += a * (u + 2 * cm * w) * (-(n1 * mpmath.pi / d1) ** 2) * u
        ref = 4 * d1 * d2 * total
        th0 = parts["theta0"]
        assert _mp_in(th0.lo, th0.hi, ref)
        rel = abs(mpmath.mpf(float(th0.mid)) - ref) / abs(ref)
        worst = max(worst, float(rel))
        assert rel <= 1e-12
        eps = [theta_enclosure(U, Wb, r0, 2.0, c, W, Interval(2.0))[1]["eps"].hi
               for r0 in (0.0, 1e-9, 1e-7, 1e-5, 1e-3)]
        assert all(b >= a for a, b in zip(eps, eps[1:])), eps
    return f"max relative error {worst:.1e}"


if __name__ == "__main__":  # pragma: no cover
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
