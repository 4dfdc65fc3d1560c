"""Cosine-cosine coefficient sequences on the quarter lattice N0 x N0.

A :class:`CoeffSeq` with entries ``U[n1, n2]`` on the box ``0 <= n <= N``
represents

    u(x) = sum_n alpha_n U_n cos(pi n1 x1 / d1) cos(pi n2 x2 / d2)

with ``alpha_n = 1, 2, 4`` according to how many of ``n1, n2`` are nonzero.
The weights turn the quarter-lattice storage into the full two-sided Fourier
series of an even function, so the norms below are the l^p norms of the
full series and the convolution is that of the full series.

Entries are either float64 or :class:`~sbwave.interval.Interval` arrays.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import FileFormatError, NonConvergence, PointOutsideDomain
from .interval import Interval, as_interval, isum, _gamma

__all__ = [
    "IndexBox",
    "CoeffSeq",
    "alpha",
    "alpha_vector",
    "alpha_array",
    "lp_norm",
    "convolve",
    "seq_exp",
    "project",
    "eval_grid",
    "save_coeffs",
    "dump_coeffs",
    "load_coeffs",
    "inner_product",
]

EXP_TERM_CAP = 200


@dataclass(frozen=True)
class IndexBox:
    """The index set ``{0..n1_max} x {0..n2_max}``."""

    n1_max: int
    n2_max: int

    def __post_init__(self):
        if self.n1_max < 0 or self.n2_max < 0:
            raise ValueError("box extents must be nonnegative")

    @property
    def shape(self):
        return (self.n1_max + 1, self.n2_max + 1)

    @property
    def size(self):
        return (self.n1_max + 1) * (self.n2_max + 1)

    def __add__(self, other):
        return IndexBox(self.n1_max + other.n1_max, self.n2_max + other.n2_max)

    def scale(self, k):
        return IndexBox(self.n1_max * k, self.n2_max * k)

    def contains_box(self, other):
        return other.n1_max <= self.n1_max and other.n2_max <= self.n2_max

    def meet(self, other):
        return IndexBox(min(self.n1_max, other.n1_max), min(self.n2_max, other.n2_max))

    def join(self, other):
        return IndexBox(max(self.n1_max, other.n1_max), max(self.n2_max, other.n2_max))

    def indices(self):
        """Row-major list of index pairs."""
        return [(i, j) for i in range(self.n1_max + 1) for j in range(self.n2_max + 1)]

    def as_tuple(self):
        return (self.n1_max, self.n2_max)


def alpha(n):
    n1, n2 = n
    if n1 < 0 or n2 < 0:
        raise ValueError("alpha is defined on nonnegative indices")
    return (2 if n1 else 1) * (2 if n2 else 1)


def alpha_vector(n_max):
    a = np.full(n_max + 1, 2.0)
    a[0] = 1.0
    return a


def alpha_array(box):
    return np.outer(alpha_vector(box.n1_max), alpha_vector(box.n2_max))


def _is_interval(x):
    return isinstance(x, Interval)


@dataclass(frozen=True, eq=False)
class CoeffSeq:
    """Finite cosine-cosine coefficient sequence.

    ``data`` has shape ``box.shape``; entries outside the box are zero.
    ``tail`` is an l^1 bound for a remainder that is not stored (used by
    the float-mode exponential); it is 0 for ordinary sequences.
    """

    box: IndexBox
    data: object
    d1: float
    d2: float
    tail: float = field(default=0.0)

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("half-periods must be positive")
        data = self.data
        if not _is_interval(data):
            data = np.array(data, dtype=np.float64, copy=True)
            data.flags.writeable = False
            object.__setattr__(self, "data", data)
        if tuple(data.shape) != self.box.shape:
            raise ValueError(f"data shape {data.shape} does not match box {self.box.shape}")

    # construction helpers
    @classmethod
    def zeros(cls, box, d1, d2):
        return cls(box, np.zeros(box.shape), d1, d2)

    @classmethod
    def unit(cls, d1, d2, box=None):
        box = box or IndexBox(0, 0)
        z = np.zeros(box.shape)
        z[0, 0] = 1.0
        return cls(box, z, d1, d2)

    @classmethod
    def from_flat(cls, box, flat, d1, d2):
        if _is_interval(flat):
            return cls(box, flat.reshape(box.shape), d1, d2)
        return cls(box, np.asarray(flat).reshape(box.shape), d1, d2)

    @property
    def is_interval(self):
        return _is_interval(self.data)

    @property
    def kind(self):
        return "interval" if self.is_interval else "float"

    def flat(self):
        return self.data.reshape(self.box.size) if self.is_interval else self.data.ravel()

    def mid(self):
        """Float copy (midpoints for interval data)."""
        if self.is_interval:
            return CoeffSeq(self.box, np.asarray(self.data.mid), self.d1, self.d2)
        return self

    def to_interval(self):
        if self.is_interval:
            return self
        return CoeffSeq(self.box, Interval.point(self.data), self.d1, self.d2)

    def with_data(self, data, box=None):
        return CoeffSeq(box or self.box, data, self.d1, self.d2)

    def resize(self, box):
        """Zero-pad or truncate to ``box``."""
        if self.is_interval:
            lo = np.zeros(box.shape)
            hi = np.zeros(box.shape)
            m = self.box.meet(box)
            lo[: m.n1_max + 1, : m.n2_max + 1] = np.asarray(self.data._lo)[: m.n1_max + 1, : m.n2_max + 1]
            hi[: m.n1_max + 1, : m.n2_max + 1] = np.asarray(self.data._hi)[: m.n1_max + 1, : m.n2_max + 1]
            return CoeffSeq(box, Interval._raw(lo, hi), self.d1, self.d2)
        out = np.zeros(box.shape)
        m = self.box.meet(box)
        out[: m.n1_max + 1, : m.n2_max + 1] = self.data[: m.n1_max + 1, : m.n2_max + 1]
        return CoeffSeq(box, out, self.d1, self.d2)

    def _check_grid(self, other):
        if not (math.isclose(self.d1, other.d1, rel_tol=0, abs_tol=0)
                and math.isclose(self.d2, other.d2, rel_tol=0, abs_tol=0)):
            raise ValueError("sequences live on different domains")

    def __add__(self, other):
        self._check_grid(other)
        box = self.box.join(other.box)
        a, b = self.resize(box), other.resize(box)
        return CoeffSeq(box, a.data + b.data, self.d1, self.d2)

    def __sub__(self, other):
        self._check_grid(other)
        box = self.box.join(other.box)
        a, b = self.resize(box), other.resize(box)
        return CoeffSeq(box, a.data - b.data, self.d1, self.d2)

    def __neg__(self):
        return CoeffSeq(self.box, -self.data, self.d1, self.d2)

    def scale(self, s):
        if self.is_interval or _is_interval(s):
            return CoeffSeq(self.box, as_interval(self.data) * s, self.d1, self.d2)
        return CoeffSeq(self.box, self.data * s, self.d1, self.d2)

    def wavenumbers(self):
        """Angular wavenumbers (pi n1 / d1, pi n2 / d2) as float vectors."""
        return (np.pi * np.arange(self.box.n1_max + 1) / self.d1,
                np.pi * np.arange(self.box.n2_max + 1) / self.d2)

    def dx1_squared(self):
        """Coefficients of the second x1-derivative."""
        if self.is_interval:
            pi = Interval._raw(math.pi, np.nextafter(math.pi, np.inf))
            k = (pi * Interval.point(np.arange(self.box.n1_max + 1.0)) / Interval.point(self.d1)).square()
            return CoeffSeq(self.box, -(self.data * k.reshape(-1, 1)), self.d1, self.d2)
        k1, _ = self.wavenumbers()
        return CoeffSeq(self.box, -(k1**2)[:, None] * self.data, self.d1, self.d2)

    def __repr__(self):
        return f"CoeffSeq(box={self.box.as_tuple()}, kind={self.kind}, d=({self.d1}, {self.d2}))"


# -- norms ---------------------------------------------------------------------

def lp_norm(U, p=1):
    """The alpha-weighted l^p norm, p in {1, 2}."""
    if p not in (1, 2):
        raise ValueError("p must be 1 or 2")
    w = alpha_array(U.box)
    if U.is_interval:
        a = abs(U.data)
        if p == 1:
            s = isum(a * w)
            # the terms are nonnegative; the mid-rad sum may still dip below 0
            return Interval._raw(np.maximum(s._lo, 0.0), s._hi)
        return isum(a.square() * w).sqrt_nonneg()
    a = np.abs(U.data)
    if p == 1:
        return float(math.fsum((a * w).ravel()))
    return math.sqrt(math.fsum((a * a * w).ravel()))


def inner_product(U, V):
    """Alpha-weighted l^2 inner product (U, V)."""
    box = U.box.meet(V.box)
    a = U.resize(box).data
    b = V.resize(box).data
    w = alpha_array(box)
    if _is_interval(a) or _is_interval(b):
        return isum(as_interval(a) * as_interval(b) * w)
    return float(math.fsum((a * b * w).ravel()))


# -- convolution ---------------------------------------------------------------

def _reflect(a):
    """Even extension of a quarter-lattice array to the full centred grid."""
    a = np.asarray(a)
    top = np.concatenate([a[:0:-1], a], axis=0)
    return np.concatenate([top[:, :0:-1], top], axis=1)


def _conv_full(a, b, method):
    if method == "fft":
        return signal.fftconvolve(a, b, mode="full")
    return signal.convolve2d(a, b, mode="full")


def _quarter(full, box):
    c1 = (full.shape[0] - 1) // 2
    c2 = (full.shape[1] - 1) // 2
    return full[c1 : c1 + box.n1_max + 1, c2 : c2 + box.n2_max + 1]


def convolve(U, V, method="direct"):
    """Reflected convolution ``(U*V)_n = sum_m U_|m| V_|n-m|`` over Z^2.

    ``method="direct"`` is exact up to rounding and supports interval data
    (midpoint-radius with an a-priori rounding bound).  ``method="fft"`` is
    float-only and meant for Newton iterations.
    """
    U._check_grid(V)
    box = U.box + V.box
    if U.is_interval or V.is_interval:
        if method != "direct":
            raise ValueError("interval convolution uses the direct method only")
        ua, va = as_interval(U.data), as_interval(V.data)
        mu, ru = _reflect(ua.mid), _reflect(ua.rad)
        mv, rv = _reflect(va.mid), _reflect(va.rad)
        nterms = min(mu.size, mv.size)
        g = _gamma(nterms + 2)
        with np.errstate(over="ignore", invalid="ignore"):
            c = _conv_full(mu, mv, "direct")
            absprod = _conv_full(np.abs(mu), np.abs(mv), "direct")
            rad = np.zeros_like(c)
            if np.any(rv):
                rad = rad + _conv_full(np.abs(mu), rv, "direct")
            if np.any(ru):
                rad = rad + _conv_full(ru, np.abs(mv) + rv, "direct")
            total = np.nextafter((g * absprod + rad) * (1.0 + 2.0 * g) + nterms * 2.0**-1021, np.inf)
        c, total = _quarter(c, box), _quarter(total, box)
        lo = np.nextafter(c - total, -np.inf)
        hi = np.nextafter(c + total, np.inf)
        lo = np.where(np.isnan(lo), -np.inf, lo)
        hi = np.where(np.isnan(hi), np.inf, hi)
        return CoeffSeq(box, Interval._raw(lo, hi), U.d1, U.d2)
    full = _conv_full(_reflect(U.data), _reflect(V.data), method)
    return CoeffSeq(box, np.array(_quarter(full, box)), U.d1, U.d2)


# -- exponential ---------------------------------------------------------------

def _exp_terms(norm1, tol, cap):
    """Smallest K with norm1^(K+1) e^norm1 / (K+1)! <= tol."""
    log_e = norm1
    log_term = 0.0
    for k in range(cap + 1):
        # log of norm1^(k+1)/(k+1)!
        log_term += (math.log(norm1) if norm1 > 0 else -math.inf) - math.log(k + 1)
        if log_term + log_e <= math.log(tol):
            return k
    raise NonConvergence(f"exponential needs more than {cap} terms for l1 norm {norm1:.3g}")


def _exp_tail(norm1, K):
    """Upper bound (interval) of norm1^(K+1) e^norm1 / (K+1)!."""
    n = as_interval(norm1)
    fact = Interval.point(float(math.factorial(K + 1))) if K + 1 <= 170 else None
    if fact is None:
        return Interval.point(0.0)  # unreachable under the term cap for moderate norms
    return n.pow_k(K + 1) * n.exp() / fact


def seq_exp(U, tol=1e-14, out_box=None, cap=EXP_TERM_CAP):
    """Coefficients of exp(u) by the power series, truncated after K terms.

    The series remainder has l^1 norm at most ``|U|_1^(K+1) e^|U|_1/(K+1)!``
    with ``K`` the first index making this ``<= tol``.  Interval input
    yields interval output with the remainder inflated into every entry;
    float output carries it in ``tail``.  Entries outside ``out_box``
    (default: the full support ``K * box``) are dropped.
    """
    norm = lp_norm(U, 1)
    norm_hi = norm.hi if isinstance(norm, Interval) else norm * (1 + 1e-12)
    K = _exp_terms(norm_hi, tol, cap) if norm_hi > 0 else 0
    full = U.box.scale(max(K, 1))
    out = full if out_box is None else out_box

    def box_for(k):
        # entries of U^k needed for an exact U^K restricted to `out`
        need = out + U.box.scale(K - k)
        return U.box.scale(k).meet(need)

    e0 = CoeffSeq.unit(U.d1, U.d2)
    if U.is_interval:
        e0 = e0.to_interval()
    total = e0.resize(out)
    term = e0
    for k in range(1, K + 1):
        term = convolve(term, U).resize(box_for(k))
        if U.is_interval:
            term = term.scale(Interval.point(1.0) / Interval.point(float(k)))
        else:
            term = term.scale(1.0 / k)
        total = total + term.resize(out)
    total = total.resize(out)
    if U.is_interval:
        tail = _exp_tail(norm, K)
        t = tail.hi
        data = total.data + Interval(-t, t)
        return CoeffSeq(out, data, U.d1, U.d2)
    tail = _exp_tail(norm_hi, K).hi + 1e-15 * K * math.exp(norm_hi)
    return CoeffSeq(out, total.data, U.d1, U.d2, tail=tail)


# -- projections and evaluation ----------------------------------------------

def project(U, box, side="inside"):
    """pi^N (side="inside") or pi_N (side="outside") on U's own box."""
    mask = np.zeros(U.box.shape, dtype=bool)
    mask[: box.n1_max + 1, : box.n2_max + 1] = True
    if side == "outside":
        mask = ~mask
    elif side != "inside":
        raise ValueError("side must be 'inside' or 'outside'")
    if U.is_interval:
        zero = Interval.point(np.zeros(U.box.shape))
        from .interval import where
        return U.with_data(where(mask, U.data, zero))
    return U.with_data(np.where(mask, U.data, 0.0))


def eval_grid(U, xs, derivative=0):
    """Evaluate the represented function at points ``xs`` (shape (m, 2)).

    ``derivative=2`` evaluates the second x1-derivative instead.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=np.float64))
    if np.any(np.abs(xs[:, 0]) > U.d1) or np.any(np.abs(xs[:, 1]) > U.d2):
        raise PointOutsideDomain("evaluation point outside [-d1,d1] x [-d2,d2]")
    V = U.dx1_squared() if derivative == 2 else U
    w = alpha_array(V.box)
    n1 = np.arange(V.box.n1_max + 1)
    n2 = np.arange(V.box.n2_max + 1)
    if V.is_interval:
        pi = Interval._raw(math.pi, np.nextafter(math.pi, np.inf))
        out_lo, out_hi = [], []
        for x1, x2 in xs:
            c1 = (pi * Interval.point(n1 * 1.0) * Interval.point(x1) / Interval.point(V.d1)).cos()
            c2 = (pi * Interval.point(n2 * 1.0) * Interval.point(x2) / Interval.point(V.d2)).cos()
            terms = V.data * w * c1.reshape(-1, 1) * c2.reshape(1, -1)
            s = isum(terms)
            out_lo.append(s.lo)
            out_hi.append(s.hi)
        return Interval._raw(np.array(out_lo), np.array(out_hi))
    c1 = np.cos(np.pi * np.outer(xs[:, 0], n1) / V.d1)
    c2 = np.cos(np.pi * np.outer(xs[:, 1], n2) / V.d2)
    return np.einsum("pi,ij,pj->p", c1, V.data * w, c2)


# -- file format ---------------------------------------------------------------

FORMAT_TAG = "sbwave-coeffs/1"


def save_coeffs(path, U, c=None, extra=None):
    """Write U as text: a JSON header line then one entry per line.

    Floats are written with ``repr`` (shortest round-trip), intervals as two
    such numbers, so reading back is bit-exact.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_coeffs(U, c, extra))


def dump_coeffs(U, c=None, extra=None):
    """The text written by :func:`save_coeffs`."""
    header = {
        "format": FORMAT_TAG,
        "d1": repr(float(U.d1)),
        "d2": repr(float(U.d2)),
        "N0": list(U.box.as_tuple()),
        "kind": U.kind,
        "c": None if c is None else repr(float(c)),
    }
    if extra:
        header["extra"] = extra
    lines = [json.dumps(header, sort_keys=True)]
    if U.is_interval:
        lo = np.asarray(U.data._lo).ravel()
        hi = np.asarray(U.data._hi).ravel()
        lines.extend(f"{float(a)!r} {float(b)!r}" for a, b in zip(lo, hi))
    else:
        lines.extend(repr(float(v)) for v in U.data.ravel())
    return "\n".join(lines) + "\n"


def load_coeffs(path):
    """Read a coefficient file; returns ``(U, header)``."""
    try:
        with open(path, encoding="ascii") as fh:
            header = json.loads(fh.readline())
            body = [ln.split() for ln in fh if ln.strip()]
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read coefficient file {path}: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != FORMAT_TAG:
        raise FileFormatError(f"{path}: not a coefficient file")
    try:
        box = IndexBox(*header["N0"])
        d1, d2 = float(header["d1"]), float(header["d2"])
        if len(body) != box.size:
            raise FileFormatError(f"{path}: expected {box.size} entries, found {len(body)}")
        if header["kind"] == "interval":
            lo = np.array([float(r[0]) for r in body]).reshape(box.shape)
            hi = np.array([float(r[1]) for r in body]).reshape(box.shape)
            U = CoeffSeq(box, Interval(lo, hi), d1, d2)
        else:
            U = CoeffSeq(box, np.array([float(r[0]) for r in body]).reshape(box.shape), d1, d2)
    except (KeyError, ValueError, IndexError, TypeError) as exc:
        if isinstance(exc, FileFormatError):
            raise
        raise FileFormatError(f"{path}: malformed coefficient file ({exc})") from exc
    return U, header
