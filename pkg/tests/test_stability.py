import numpy as np
import pytest

from sbwave.aliasing import EnclosedSeq
from sbwave.interval import Interval
from sbwave.sequences import CoeffSeq, IndexBox
from sbwave.stability import (
    GershgorinSet,
    SpectralWindow,
    classify,
    count_negative,
    default_window,
    essential_spectrum_floor,
    inverse_norm_bound,
    lambda_min_bound,
    refined_window,
    solve_wbar,
)

from conftest import D1, D2, random_seq

FLOOR = 1 - 1.2**4 / 4


def gs(pairs, sector="even", floor=FLOOR):
    lo = np.array([p[0] for p in pairs], dtype=float)
    hi = np.array([p[1] for p in pairs], dtype=float)
    centers = Interval(0.5 * (lo + hi))
    radii = Interval(0.5 * (hi - lo))
    return GershgorinSet(centers, radii, sector, Interval(floor))


WINDOW = SpectralWindow(Interval(-2.0), Interval(0.1), Interval(3.0))


def test_essential_floor():
    assert essential_spectrum_floor(1.2).contains(FLOOR)


def test_lambda_min_at_the_trivial_state():
    W = EnclosedSeq(CoeffSeq.unit(D1, D2).to_interval(), Interval(1.0), 1e6, 1e6)
    k2 = Interval(2.0)
    lm = lambda_min_bound(W, k2, 0.0, 1.2)
    assert lm.contains(-1 - 1.2**4 / 4)
    assert lambda_min_bound(W, k2, 1e-3, 1.2).hi < lm.lo


def test_default_window():
    w = default_window(1.2, Interval(-1.5))
    assert w.delta0.mid == pytest.approx(0.25 * FLOOR)
    assert w.t.mid == pytest.approx(2.5)
    with pytest.raises(ValueError):
        default_window(1.2, Interval(-1.5), delta0=0.9)
    with pytest.raises(ValueError):
        SpectralWindow(Interval(-1.0), Interval(0.1), Interval(0.5))
    with pytest.raises(ValueError):
        SpectralWindow(Interval(0.2), Interval(0.1), Interval(3.0))


def test_count_single_negative_and_translation_mode():
    even = gs([(-0.2, -0.1), (0.5, 0.6)])
    odd = gs([(-0.01, 0.01), (0.7, 0.8)], "odd")
    assert count_negative(even, odd, WINDOW) == (1, True)
    # the trivial state has no translation mode to excuse
    assert count_negative(even, odd, WINDOW, nontrivial=False)[0] is None


def test_count_groups_and_failures():
    odd = gs([(0.7, 0.8)], "odd")
    assert count_negative(gs([(-0.5, -0.3), (-0.35, -0.2)]), odd, WINDOW)[0] == 2
    assert count_negative(gs([(-0.05, 0.05)]), odd, WINDOW)[0] is None
    assert count_negative(gs([(-2.5, -1.8)]), odd, WINDOW)[0] is None
    # tail floor crossing zero makes the count impossible
    assert count_negative(gs([(0.5, 0.6)], floor=-0.01), odd, WINDOW)[0] is None
    assert count_negative(gs([(0.5, 0.6)]), odd, WINDOW) == (0, False)


def test_refined_window():
    sets = [gs([(-0.3, -0.2), (0.5, 0.6)]), gs([(-0.01, 0.01)], "odd")]
    w = refined_window(sets, WINDOW)
    assert w.lambda_min.mid == pytest.approx(-0.35)
    assert w.delta0.mid == WINDOW.delta0.mid
    assert refined_window([gs([(-2.0, -1.9)])], WINDOW) is None


def test_inverse_norm_bound():
    assert inverse_norm_bound(gs([(-0.3, -0.2), (0.5, 0.6)]), WINDOW).mid == pytest.approx(10.0)
    assert inverse_norm_bound(gs([(-0.3, -0.05)]), WINDOW).mid == pytest.approx(20.0)
    assert inverse_norm_bound(gs([(-0.01, 0.02)]), WINDOW) is None


def test_solve_wbar(rng):
    Z = CoeffSeq.zeros(IndexBox(4, 3), D1, D2)
    W, res = solve_wbar(Z, 1.2, return_residual=True)
    assert res == 0.0 and not np.any(W.data)
    U = random_seq(rng, IndexBox(6, 4), scale=0.05)
    W, res = solve_wbar(U, 1.2, return_residual=True)
    rhs = -2.4 * U.dx1_squared().data
    sa = np.sqrt(np.outer([1] + [2] * 6, [1] + [2] * 4))
    assert res < np.linalg.norm(sa * rhs)
    assert np.all(np.isfinite(W.data))


@pytest.mark.parametrize("n,theta,verdict", [
    (0, None, "stable"),
    (1, Interval(0.1, 1.0), "stable"),
    (2, Interval(0.1, 1.0), "unstable"),
    (1, Interval(-1.0, -0.1), "unstable"),
    (1, Interval(-0.1, 0.1), "inconclusive"),
    (None, Interval(1.0), "inconclusive"),
])
def test_classify(n, theta, verdict):
    assert classify(n, True, theta).verdict == verdict
