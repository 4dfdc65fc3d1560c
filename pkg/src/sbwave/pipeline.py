"""The approx -> certify -> stability pipeline, independent of the command line."""

from __future__ import annotations

import logging
import math
import platform
import time
from contextlib import contextmanager

import numpy as np
import scipy

from . import __version__
from .aliasing import AnalyticityParams, amplitude_C, rigorous_exp, tail_l1
from .approximation import build_BN, newton_solve, trace_matrix
from .bounds import (
    BoundSet,
    radii_check,
    v_from_w,
    y0_bound,
    z1_total,
    z1N_bound,
    z2_coeff,
    zu_bound,
)
from .certificate import Certificate, iv_from_json, iv_to_json
from .errors import SbwaveError
from .interval import Interval
from .operators import sector_alpha, weighted_norm_bound
from .sequences import lp_norm, project
from .stability import (
    StabilityContext,
    classify,
    count_negative,
    default_window,
    gershgorin_enclosure,
    inverse_norm_bound,
    lambda_min_bound,
    refined_window,
    solve_wbar,
    theta_enclosure,
)
from .symbols import SymbolParams, kappa2

__all__ = ["run_approx", "run_certify", "run_stability", "thread_limit", "default_kappa2_split"]

log = logging.getLogger(__name__)

# failures that end up inside a certificate instead of propagating
_RECORDED = (SbwaveError, ValueError, ZeroDivisionError, np.linalg.LinAlgError)


@contextmanager
def thread_limit(threads):
    """Cap BLAS threads; ``None`` leaves the library default."""
    if threads is None:
        yield
        return
    from threadpoolctl import threadpool_limits

    with threadpool_limits(limits=int(threads)):
        yield


def _toolchain(params, threads, wall):
    return {
        "sbwave": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "interval_mode": "float64 directed rounding (error-free transformations)",
        "exp_mode": params.exp_mode,
        "threads": threads,
        "wall_time_s": wall,
    }


def default_kappa2_split(params):
    """First n2 safely beyond d2 c / pi, where the quadrature tail applies."""
    return int(math.floor(params.d2 * params.c / math.pi)) + 21


def run_approx(params, guess, tol=None, max_iter=30):
    """Newton + trace projection; returns (U, info)."""
    U = guess.mid()
    if U.box.as_tuple() != params.box0.as_tuple():
        U = U.resize(params.box0)
    tol = params.newton_tol if tol is None else tol
    U, info = newton_solve(U, params.c, tol=tol, max_iter=max_iter, return_info=True)
    T = trace_matrix(U.box, U.d1)
    info.trace_defect = float(np.max(np.abs(T.data @ U.data.ravel())))
    return U, info


def _bounds_json(bs):
    out = {k: iv_to_json(v) for k, v in (("Y0", bs.Y0), ("Z1", bs.Z1), ("Z2_coeff", bs.Z2_coeff),
                                          ("kappa2", bs.kappa2), ("norm_BN", bs.norm_BN))}
    out["parts"] = {k: iv_to_json(v) for k, v in sorted(bs.parts.items())}
    return out


def _enclose_exp(params, U):
    apar = AnalyticityParams(params.nu1, params.nu2, params.NFFT)
    C = amplitude_C(U, (params.nu1, params.nu2))
    return rigorous_exp(U, apar, head_box=params.head_box, C=C, mode=params.exp_mode)


def _check_grid(params, U):
    if U.d1 != params.d1 or U.d2 != params.d2:
        raise SbwaveError(f"coefficient file is for d=({U.d1}, {U.d2}), config has d=({params.d1}, {params.d2})")


def run_certify(params, U, coeff_digest="", threads=None, deterministic=True):
    """Full bound suite and radii check; failures are recorded, not raised."""
    t0 = time.perf_counter()
    cert = Certificate(kind="existence", params=params.to_dict(), coeff_digest=coeff_digest, success=False)
    with thread_limit(1 if deterministic else threads):
        try:
            _check_grid(params, U)
            U = U.mid().resize(params.box0)
            N, N0, H = params.boxN, params.box0, params.head_box
            c = params.c
            W = _enclose_exp(params, U)
            V = v_from_w(W)
            VN = V.resize(N)
            BN = build_BN(U, N, c, V=V.mid().resize(N.scale(2)))
            BNi = Interval.point(BN.data)
            aN = sector_alpha(N)
            nB = weighted_norm_bound(BNi, aN, aN)
            log.info("|B^N| <= %.6g", nB.hi)
            Y0 = y0_bound(U, BNi, W, c, N)
            log.info("Y0 <= %.6g", Y0.hi)
            z1n, p1 = z1N_bound(VN, BNi, c, N)
            sp = SymbolParams(c, params.d2)
            zu, pu = zu_bound(VN, sp, params.d1, nB)
            v_rest = lp_norm(project(V, N, "outside"), 1) + Interval(0.0, tail_l1(W, H).hi)
            Z1 = z1_total(z1n, zu, v_rest, nB, c)
            log.info("Z1 <= %.6g", Z1.hi)
            Z2, p2 = z2_coeff(W, BNi, c, N, N0)
            split = params.kappa2_split or default_kappa2_split(params)
            k2 = kappa2(sp, split)
            parts = {"Z1_periodic": z1n, "Zu": zu, "V_minus_VN_l1": v_rest, "exp_C": W.C}
            parts.update({f"Z1_{k}": v for k, v in p1.items()})
            parts.update({f"Zu_{k}": v for k, v in pu.items()})
            parts.update({f"Z2_{k}": v for k, v in p2.items()})
            bs = BoundSet(Y0, Z1, Z2, k2, nB, parts)
            rr = radii_check(bs)
            cert.bounds = _bounds_json(bs)
            cert.radii = {"r_min": iv_to_json(rr.r_min), "r_max": iv_to_json(rr.r_max), "detail": rr.detail}
            cert.success = bool(rr.success)
            cert.failed_condition = rr.failed_condition
            cert.message = "certified" if rr.success else rr.detail
        except _RECORDED as exc:
            cert.success = False
            cert.failed_condition = getattr(exc, "which", None) or type(exc).__name__
            cert.message = str(exc)
    wall = None if deterministic else round(time.perf_counter() - t0, 3)
    cert.toolchain = _toolchain(params, 1 if deterministic else threads, wall)
    return cert.seal()


def _gs_json(gs):
    return {
        "sector": gs.sector,
        "centers": iv_to_json(gs.centers),
        "radii": iv_to_json(gs.radii),
        "tail_floor": iv_to_json(gs.tail_floor),
        "constants": {k: iv_to_json(v) for k, v in sorted(gs.constants.items())},
    }


def _window_json(w):
    return {"lambda_min": iv_to_json(w.lambda_min), "delta0": iv_to_json(w.delta0), "t": iv_to_json(w.t)}


def spectral_passes(ctx, window, max_passes=2):
    """Enclosures in both sectors, re-run with a tightened window while that helps."""
    history = []
    for _ in range(max_passes):
        gss = (gershgorin_enclosure(ctx, window, "even"), gershgorin_enclosure(ctx, window, "odd"))
        history.append((window, gss))
        nxt = refined_window(gss, window)
        if nxt is None:
            break
        window = nxt
    return history


def run_stability(params, U, cert, threads=None, deterministic=True, max_passes=2):
    """Append the spectral enclosure, theta and the verdict in a new certificate."""
    t0 = time.perf_counter()
    out = Certificate(kind="stability", params=params.to_dict(), coeff_digest=cert.coeff_digest,
                      success=False, parent_digest=cert.digest, bounds=cert.bounds, radii=cert.radii)
    with thread_limit(1 if deterministic else threads):
        try:
            if not cert.success:
                raise SbwaveError("the existence certificate is not successful")
            _check_grid(params, U)
            U = U.mid().resize(params.box0)
            r0 = iv_from_json(cert.radii["r_min"]).hi
            k2 = iv_from_json(cert.bounds["kappa2"])
            W = _enclose_exp(params, U)
            ctx = StabilityContext(U, W, params.c, params.boxN, r0, k2)
            lam_min = lambda_min_bound(W, k2, r0, params.c)
            window = default_window(params.c, lam_min, params.delta0, params.t)
            history = spectral_passes(ctx, window, max_passes)
            window, (gs_e, gs_o) = history[-1]
            nontrivial = bool(np.any(U.data != 0))
            n_neg, zero_mode = count_negative(gs_e, gs_o, window, nontrivial)
            theta = None
            theta_parts = {}
            inv = inverse_norm_bound(gs_e, window)
            if inv is not None and nontrivial:
                Wb = solve_wbar(U, params.c)
                theta, theta_parts = theta_enclosure(U, Wb, r0, inv, params.c, W, k2)
            verdict = classify(n_neg, zero_mode, theta)
            out.spectral = {
                "passes": [_window_json(w) for w, _ in history],
                "window": _window_json(window),
                "even": _gs_json(gs_e),
                "odd": _gs_json(gs_o),
                "inverse_norm_even": None if inv is None else iv_to_json(inv),
            }
            out.verdict = {
                "n_negative": verdict.n_negative,
                "zero_is_translation_mode": verdict.zero_is_translation_mode,
                "theta": None if theta is None else iv_to_json(theta),
                "theta_parts": {k: iv_to_json(v) for k, v in sorted(theta_parts.items())},
                "verdict": verdict.verdict,
            }
            out.success = verdict.verdict != "inconclusive"
            out.message = verdict.verdict
            if not out.success:
                out.failed_condition = "inconclusive"
        except _RECORDED as exc:
            out.success = False
            out.failed_condition = getattr(exc, "which", None) or type(exc).__name__
            out.message = str(exc)
            out.verdict = {"verdict": "inconclusive"}
    wall = None if deterministic else round(time.perf_counter() - t0, 3)
    out.toolchain = _toolchain(params, 1 if deterministic else threads, wall)
    return out.seal()
