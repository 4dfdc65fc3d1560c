"""Floating-point constructions: the approximate wave and the blocks built from it.

Nothing here is rigorous.  The objects produced (the coefficients U, the
block B^N, the eigenbasis P) are later promoted to intervals and every
property that matters is then verified with interval arithmetic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import linalg as sla

from .errors import EigSolverFailure, NoConvergence, SingularBlock, SingularGram
from .operators import OperatorBlock, mult_matrix, sector_alpha, sector_indices
from .sequences import CoeffSeq, IndexBox, alpha_array, alpha_vector
from .symbols import c_interval

__all__ = [
    "symbol_float",
    "exp_coeffs_float",
    "residual_F",
    "jacobian",
    "trace_matrix",
    "trace_project",
    "kernel_basis",
    "newton_solve",
    "NewtonInfo",
    "build_BN",
    "build_P",
    "PBlocks",
]

log = logging.getLogger(__name__)


def _pow2_at_least(n):
    return 1 << max(1, int(math.ceil(math.log2(max(n, 2)))))


def symbol_float(c, d1, d2, box, sector="even"):
    """l(pi n1/d1, pi n2/d2) on the box (flattened for a sector, else 2D)."""
    c = float(c_interval(c).mid)
    if sector is None:
        k1 = (np.pi * np.arange(box.n1_max + 1) / d1)[:, None]
        k2 = (np.pi * np.arange(box.n2_max + 1) / d2)[None, :]
    else:
        n1, n2 = sector_indices(box, sector)
        k1 = np.pi * n1 / d1
        k2 = np.pi * n2 / d2
    return (k1**2 + k2**2) ** 2 - c**2 * k1**2 + 1.0


def _values(U, grid):
    g1, g2 = grid
    pad = np.zeros((g1 + 1, g2 + 1))
    a = np.asarray(U.data)
    pad[: a.shape[0], : a.shape[1]] = a
    return sfft.dct(sfft.dct(pad, type=1, axis=0), type=1, axis=1)


def _coeffs(vals, box):
    g1, g2 = vals.shape[0] - 1, vals.shape[1] - 1
    coef = sfft.dct(sfft.dct(vals, type=1, axis=0), type=1, axis=1) / (4.0 * g1 * g2)
    out = np.zeros(box.shape)
    b1 = min(box.n1_max, g1 - 1) + 1
    b2 = min(box.n2_max, g2 - 1) + 1
    out[:b1, :b2] = coef[:b1, :b2]
    return out


def default_grid(*boxes):
    n1 = max(b.n1_max for b in boxes)
    n2 = max(b.n2_max for b in boxes)
    return (_pow2_at_least(2 * (n1 + 1)), _pow2_at_least(2 * (n2 + 1)))


def exp_coeffs_float(U, out_box=None, grid=None):
    """Coefficients of exp(u) on ``out_box`` from a DCT-I round trip."""
    out_box = out_box or U.box
    grid = grid or default_grid(U.box, out_box)
    return CoeffSeq(out_box, _coeffs(np.exp(_values(U, grid)), out_box), U.d1, U.d2)


def residual_F(U, c, out_box=None, grid=None):
    """F(U) = L U + exp(U) - U - e0 on ``out_box`` (float)."""
    U = U.mid()
    out_box = out_box or U.box
    E = exp_coeffs_float(U, out_box, grid).data
    Uo = U.resize(out_box).data
    r = symbol_float(c, U.d1, U.d2, out_box, None) * Uo + E - Uo
    r[0, 0] -= 1.0
    return CoeffSeq(out_box, r, U.d1, U.d2)


def jacobian(U, c, box=None, grid=None, sector="even"):
    """Matrix of DF(U) = L + M_V on ``box`` (V = exp(U) - e0)."""
    U = U.mid()
    box = box or U.box
    V = exp_coeffs_float(U, box.scale(2), grid)
    V = V.with_data(V.data - np.pad([[1.0]], ((0, V.box.n1_max), (0, V.box.n2_max))))
    M = mult_matrix(V, box, box, sector)
    return M + np.diag(symbol_float(c, U.d1, U.d2, box, sector))


def trace_matrix(N0, d1):
    """Rows (0, n2) evaluate u at x1 = d1, rows (2, n2) its second x1-derivative.

    Row (k, n2) has entry alpha(n1) (-1)^n1 (pi n1/d1)^k at column (n1, n2).
    Odd derivatives vanish at x1 = +-d1 by symmetry.
    """
    n1 = np.arange(N0.n1_max + 1)
    w = alpha_vector(N0.n1_max) * np.where(n1 % 2 == 0, 1.0, -1.0)
    rows = []
    for k in (0, 2):
        wk = w * (np.pi * n1 / d1) ** k
        for j in range(N0.n2_max + 1):
            r = np.zeros(N0.shape)
            r[:, j] = wk
            rows.append(r.ravel())
    return OperatorBlock(IndexBox(1, N0.n2_max), N0, np.array(rows))


def _proj_data(T, alpha):
    G = (T.data / alpha) @ T.data.T
    if np.linalg.cond(G) > 1e14:
        raise SingularGram("trace Gram matrix is numerically singular")
    return G


def trace_project(U, T):
    """Minimal alpha-norm correction of U into Ker(T)."""
    U = U.mid()
    alpha = alpha_array(U.box).ravel()
    G = _proj_data(T, alpha)
    u = U.data.ravel()
    y = np.linalg.solve(G, T.data @ u)
    out = u - (T.data.T @ y) / alpha
    return CoeffSeq(U.box, out.reshape(U.box.shape), U.d1, U.d2)


def kernel_basis(T, box):
    """Q with T Q = 0 and Q^T D Q = I (D = diag alpha)."""
    alpha = alpha_array(box).ravel()
    K = sla.null_space(T.data / np.sqrt(alpha)[None, :])
    return K / np.sqrt(alpha)[:, None]


@dataclass
class NewtonInfo:
    iterations: int
    residual: float
    trace_defect: float
    history: list


def newton_solve(U0, c, tol=1e-12, max_iter=30, grid=None, step_tol=1e-13, return_info=False):
    """Gauss-Newton on Ker(T).

    Iterates stay in the kernel of the trace matrix; each step solves the
    alpha-weighted least-squares problem min ||F(U) + J Q dz||.  The problem
    is overdetermined (the trace rows add constraints), so the iteration
    stops when the residual is below ``tol`` or the step stagnates below
    ``step_tol`` while the residual no longer decreases.
    """
    box = U0.box
    T = trace_matrix(box, U0.d1)
    U = trace_project(U0.mid(), T)
    Q = kernel_basis(T, box)
    sa = np.sqrt(alpha_array(box).ravel())
    history = []
    for it in range(max_iter + 1):
        F = residual_F(U, c, box, grid).data.ravel()
        res = float(np.linalg.norm(sa * F))
        history.append(res)
        if not math.isfinite(res):
            raise NoConvergence("Newton iteration diverged", best=U, residual=res)
        if res <= tol:
            break
        if it == max_iter:
            break
        J = jacobian(U, c, box, grid)
        A = sa[:, None] * (J @ Q)
        dz, *_ = np.linalg.lstsq(A, -sa * F, rcond=None)
        du = Q @ dz
        step = float(np.linalg.norm(sa * du))
        U = U.with_data(U.data + du.reshape(box.shape))
        log.debug("newton %d residual %.3e step %.3e", it, res, step)
        if step <= step_tol * max(1.0, float(np.linalg.norm(sa * U.data.ravel()))):
            F = residual_F(U, c, box, grid).data.ravel()
            history.append(float(np.linalg.norm(sa * F)))
            break
    else:  # pragma: no cover
        pass
    final = history[-1]
    converged = final <= tol or (len(history) >= 2 and abs(history[-1] - history[-2]) <= 1e-3 * history[-2] + tol)
    if not converged:
        raise NoConvergence(f"no convergence after {max_iter} iterations (residual {final:.3e})",
                            best=U, residual=final)
    U = trace_project(U, T)
    defect = float(np.max(np.abs(T.data @ U.data.ravel())))
    info = NewtonInfo(len(history) - 1, final, defect, history)
    return (U, info) if return_info else U


def build_BN(Ubar, N, c, V=None):
    """Numerical inverse of the block I + M_{V^N} L^-1 on I_N."""
    U = Ubar.mid()
    if V is None:
        V = exp_coeffs_float(U, N.scale(2))
        V = V.with_data(V.data - _e0(V.box))
    VN = V.resize(N)
    M = mult_matrix(VN, N, N)
    lN = symbol_float(c, U.d1, U.d2, N, "even")
    A = np.eye(N.size) + M / lN[None, :]
    try:
        B = np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise SingularBlock("finite block is singular") from exc
    if not np.all(np.isfinite(B)) or np.linalg.cond(A) > 1e13:
        raise SingularBlock("finite block is numerically singular")
    return OperatorBlock(N, N, B)


def _e0(box):
    z = np.zeros(box.shape)
    z[0, 0] = 1.0
    return z


@dataclass(frozen=True, eq=False)
class PBlocks:
    """Approximate eigenbasis of DF(U) on a finite sector block.

    ``P`` has alpha-normalised columns, ``Pinv`` is a numerical inverse,
    ``S`` the diagonal of Pinv DF P, ``R`` the rest.
    """

    P: OperatorBlock
    Pinv: OperatorBlock
    S: np.ndarray
    R: np.ndarray
    cond: float
    sector: str


def build_P(Ubar, N, c, sector="even", V=None):
    """Eigenvectors of the finite block of DF(U) in one symmetry sector.

    M_V is self-adjoint for the alpha inner product, so the similarity
    D^(1/2) (L + M_V) D^(-1/2) is symmetric and ``eigh`` applies.  With
    orthonormal Q, P = D^(-1/2) Q D^(1/2) has alpha-weighted norm one, as
    has its inverse D^(-1/2) Q^T D^(1/2), and P^-1 DF P is diagonal.
    """
    U = Ubar.mid()
    if V is None:
        V = exp_coeffs_float(U, N.scale(2))
        V = V.with_data(V.data - _e0(V.box))
    M = mult_matrix(V, N, N, sector)
    lN = symbol_float(c, U.d1, U.d2, N, sector)
    DF = M + np.diag(lN)
    alpha = sector_alpha(N, sector)
    s = np.sqrt(alpha)
    Sym = (s[:, None] * DF) / s[None, :]
    Sym = 0.5 * (Sym + Sym.T)
    try:
        lam, Qm = np.linalg.eigh(Sym)
    except np.linalg.LinAlgError as exc:
        raise EigSolverFailure(str(exc)) from exc
    P = (Qm / s[:, None]) * s[None, :]
    Pinv = (Qm.T / s[:, None]) * s[None, :]
    D = Pinv @ DF @ P
    S = np.diag(D).copy()
    R = D - np.diag(S)
    cond = float(np.linalg.cond(Qm))
    return PBlocks(OperatorBlock(N, N, P, sector), OperatorBlock(N, N, Pinv, sector), S, R, cond, sector)
