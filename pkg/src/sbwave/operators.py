"""Finite operator blocks on flattened index boxes and their rigorous norms.

An operator on cosine-cosine sequences is stored as a dense matrix acting
on the row-major flattening of an index box.  Norms are taken in the
alpha-weighted l^2 metric: for a block ``A`` from box ``Bc`` to box ``Br``

    ||A||_alpha = || D_r^(1/2) A D_c^(-1/2) ||_2 ,   D = diag(alpha).

The odd (sine in x1) sector uses indices n1 >= 1 with the same weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .interval import Interval, as_interval, matmul
from .sequences import IndexBox, alpha_vector

__all__ = [
    "OperatorBlock",
    "sector_alpha",
    "sector_indices",
    "mult_matrix",
    "weighted_norm_bound",
    "norm_bound_cheap",
    "sqrt_alpha",
]


def sector_indices(box, sector="even"):
    """Index pairs of the box in the given sector, row-major."""
    start = 1 if sector == "odd" else 0
    n1 = np.repeat(np.arange(start, box.n1_max + 1), box.n2_max + 1)
    n2 = np.tile(np.arange(box.n2_max + 1), box.n1_max + 1 - start)
    return n1, n2


def sector_alpha(box, sector="even"):
    n1, n2 = sector_indices(box, sector)
    return np.where(n1 > 0, 2.0, 1.0) * np.where(n2 > 0, 2.0, 1.0)


def sqrt_alpha(alpha):
    """Interval square roots of weights in {1, 2, 4}."""
    s2 = Interval(2.0).sqrt()
    lo = np.where(alpha == 2, s2.lo, np.sqrt(alpha))
    hi = np.where(alpha == 2, s2.hi, np.sqrt(alpha))
    return Interval._raw(lo, hi)


@dataclass(frozen=True, eq=False)
class OperatorBlock:
    rows_box: IndexBox
    cols_box: IndexBox
    data: object
    sector: str = "even"

    @property
    def is_interval(self):
        return isinstance(self.data, Interval)

    def row_alpha(self):
        return sector_alpha(self.rows_box, self.sector)

    def col_alpha(self):
        return sector_alpha(self.cols_box, self.sector)

    def norm_bound(self):
        return weighted_norm_bound(self.data, self.row_alpha(), self.col_alpha())


def mult_matrix(V, rows_box, cols_box, sector="even"):
    """Matrix of h -> V * h from ``cols_box`` to ``rows_box``.

    Even sector: M[n, m] = (alpha_m / 4) sum_{s in {+-1}^2} V(|n1 - s1 m1|, |n2 - s2 m2|).
    Odd sector (sine in x1, n1, m1 >= 1):
    M[n, m] = sum_{s1} s1 sum_{s2} (alpha(m2) / 2) V(|n1 - s1 m1|, |n2 - s2 m2|).
    Entries of V outside its box are zero.  ``V`` may hold intervals.
    """
    n1, n2 = sector_indices(rows_box, sector)
    m1, m2 = sector_indices(cols_box, sector)
    B1, B2 = V.box.n1_max, V.box.n2_max
    interval = V.is_interval
    if interval:
        vlo, vhi = np.asarray(V.data._lo), np.asarray(V.data._hi)
    else:
        vd = np.asarray(V.data)

    def gather(i1, i2):
        ok = (i1 <= B1) & (i2 <= B2)
        j1 = np.minimum(i1, B1)
        j2 = np.minimum(i2, B2)
        if interval:
            return (np.where(ok, vlo[j1, j2], 0.0), np.where(ok, vhi[j1, j2], 0.0))
        return np.where(ok, vd[j1, j2], 0.0)

    N1 = n1[:, None]
    N2 = n2[:, None]
    M1 = m1[None, :]
    M2 = m2[None, :]
    a2m = np.where(M2 > 0, 2.0, 1.0)
    terms = []
    for s1 in (1, -1):
        for s2 in (1, -1):
            g = gather(np.abs(N1 - s1 * M1), np.abs(N2 - s2 * M2))
            if sector == "even":
                w = np.where(M1 > 0, 2.0, 1.0) * a2m / 4.0
            else:
                w = s1 * a2m / 2.0
            terms.append((g, w))
    if interval:
        acc = None
        for (glo, ghi), w in terms:
            lo = np.where(w >= 0, glo * w, ghi * w)  # exact scalings by +-2^k
            hi = np.where(w >= 0, ghi * w, glo * w)
            t = Interval._raw(lo, hi)
            acc = t if acc is None else acc + t
        return acc
    return sum(g * w for g, w in terms)


def _scaled(A, row_alpha, col_alpha):
    """D_r^(1/2) A D_c^(-1/2) as an interval matrix."""
    A = as_interval(A)
    sr = sqrt_alpha(np.asarray(row_alpha)).reshape(-1, 1)
    sc = sqrt_alpha(np.asarray(col_alpha)).reshape(1, -1)
    return A * sr / sc


def norm_bound_cheap(B):
    """sqrt(||B||_1 ||B||_inf) for an interval matrix (upper bound)."""
    B = as_interval(B)
    n1 = abs(B).sum(axis=0).max_hi()
    ninf = abs(B).sum(axis=1).max_hi()
    return (Interval.point(n1) * Interval.point(ninf)).sqrt_nonneg().hi


def _sym_norm_bound(G):
    """Upper bound of ||G||_2 for an interval matrix G enclosing a symmetric one.

    A float eigendecomposition G ~ W diag(lam) W^T is verified a posteriori:
    ||G||_2 <= max|lam| ||W||_2^2 + ||G - W diag(lam) W^T||_2, with
    ||W||_2^2 <= 1 + ||W^T W - I||_2 and the small remainders bounded by
    sqrt(||.||_1 ||.||_inf).
    """
    Gm = np.asarray(G.mid)
    Gm = 0.5 * (Gm + Gm.T)
    lam, W = np.linalg.eigh(Gm)
    lam_max = float(np.max(np.abs(lam)))
    Wl = W * lam.reshape(1, -1)
    E = G - matmul(Wl, W.T)
    e = norm_bound_cheap(E)
    WtW = matmul(W.T, W) - Interval.point(np.eye(W.shape[1]))
    w = norm_bound_cheap(WtW)
    lam_i = Interval.point(lam_max) * (1.0 + 4 * 2.0**-53)
    bound = lam_i * (1.0 + Interval.point(w)) + Interval.point(e)
    return bound.hi


def weighted_norm_bound(A, row_alpha=None, col_alpha=None, method="auto"):
    """Rigorous upper bound of the alpha-weighted operator 2-norm of A.

    Returns the smaller of sqrt(||B||_1 ||B||_inf) and the verified
    eigenvalue bound of B^T B (or B B^T, whichever is smaller), where B is
    the diagonally rescaled matrix.
    """
    A = as_interval(A)
    if A.ndim != 2:
        raise ValueError("expected a matrix")
    r, c = A.shape
    if r == 0 or c == 0:
        return Interval.point(0.0)
    ra = np.ones(r) if row_alpha is None else np.asarray(row_alpha)
    ca = np.ones(c) if col_alpha is None else np.asarray(col_alpha)
    B = _scaled(A, ra, ca)
    cheap = norm_bound_cheap(B)
    if method == "cheap":
        return Interval.point(cheap)
    G = matmul(B.T, B) if c <= r else matmul(B, B.T)
    if not G.is_finite():
        return Interval.point(cheap)
    sq = _sym_norm_bound(G)
    tight = Interval.point(sq).sqrt_nonneg().hi
    return Interval.point(min(cheap, tight))
