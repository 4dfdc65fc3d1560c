"""Closed floating-point intervals with outward rounding.

An :class:`Interval` stores its endpoints as read-only float64 numpy arrays,
so one object can hold a single number (0-d endpoints) or a whole vector or
matrix of intervals.  Every operation returns a new object.

Rounding strategy
-----------------
The machine works in round-to-nearest.  For sums, products, quotients and
square roots the exact rounding error is recovered with error-free
transformations (Knuth's TwoSum, Dekker's TwoProduct, and the exact
remainders of division and square root).  An endpoint is moved to the
neighbouring float only when that error points the wrong way, so exact
results stay exact: ``[1,1] + [2,2] == [3,3]``.  When the error term is not
trustworthy (overflow, results near the underflow range) the endpoint is
nudged unconditionally.

Elementary functions from numpy are faithful to a few units in the last
place but not correctly rounded; their results are widened by
``TRANSCENDENTAL_ULPS`` ulps on each side.

Matrix products use midpoint-radius arithmetic with the a-priori bound
``|fl(A B) - A B| <= gamma_n |A| |B|`` (valid for any summation order), so
large interval matrix products run at BLAS speed.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import DivisionByZeroInterval, DomainError, InvalidInterval

__all__ = [
    "Interval",
    "TRANSCENDENTAL_ULPS",
    "pi_enclosure",
    "parse_decimal",
    "matmul",
    "isum",
    "hull",
    "stack",
    "concatenate",
    "where",
    "as_interval",
]

TRANSCENDENTAL_ULPS = 8
_U = 2.0**-53
_TINY = 2.0**-960  # below this, Dekker's error term may be inexact
_SPLIT = 134217729.0  # 2**27 + 1
_INF = np.inf


def _arr(x):
    return np.asarray(x, dtype=np.float64)


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


# -- error-free transformations ------------------------------------------------

def _two_sum(a, b):
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def _split(a):
    t = _SPLIT * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _round(s, e, direction, unsure=None):
    """Bound ``s + e`` (exact) from below (direction -1) or above (+1).

    ``unsure`` marks entries where ``e`` cannot be trusted; those are
    nudged unconditionally.
    """
    with np.errstate(invalid="ignore"):
        bad = ~np.isfinite(e)
        if unsure is not None:
            bad = bad | unsure
        if direction < 0:
            move = (e < 0) | bad
            out = np.where(move, np.nextafter(s, -_INF), s)
            out = np.where(np.isnan(out), -_INF, out)
        else:
            move = (e > 0) | bad
            out = np.where(move, np.nextafter(s, _INF), s)
            out = np.where(np.isnan(out), _INF, out)
    return out


def _add_dir(a, b, direction):
    with np.errstate(over="ignore", invalid="ignore"):
        s, e = _two_sum(a, b)
        unsure = ~np.isfinite(s)
    return _round(s, e, direction, unsure)


def _mul_dir(a, b, direction):
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        p, e = _two_prod(a, b)
        ap = np.abs(p)
        unsure = (~np.isfinite(p)) | ((ap < _TINY) & (a != 0) & (b != 0))
        unsure = unsure | (np.maximum(np.abs(a), np.abs(b)) > 2.0**996)
        # 0 * inf is a saturation signal, not a number
        zero_inf = ((a == 0) & np.isinf(b)) | ((b == 0) & np.isinf(a))
    out = _round(p, e, direction, unsure)
    if np.any(zero_inf):
        out = np.where(zero_inf, -_INF if direction < 0 else _INF, out)
    return out


def _div_dir(a, b, direction):
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        q = a / b
        p, e = _two_prod(q, b)
        r = (a - p) - e
        # sign of (a/b - q) equals sign(r) * sign(b)
        err = r * np.sign(b)
        unsure = (~np.isfinite(q)) | (np.abs(q) < _TINY) | (np.abs(b) > 2.0**996)
        unsure = unsure | (np.abs(q) > 2.0**996)
        # q * b ~ a underflows, so the product error term is not exact
        unsure = unsure | ((np.abs(a) < _TINY) & (a != 0))
    return _round(q, err, direction, unsure)


def _sqrt_dir(x, direction):
    with np.errstate(invalid="ignore", under="ignore"):
        s = np.sqrt(x)
        p, e = _two_prod(s, s)
        r = (x - p) - e
        unsure = (~np.isfinite(s)) | (s < 2.0**-480) | (s > 2.0**500)
    out = _round(s, r, direction, unsure)
    if direction < 0:
        out = np.maximum(out, 0.0)
    return out


def _widen(v, ulps, direction):
    """Move ``v`` outward by ``ulps`` units in the last place."""
    with np.errstate(invalid="ignore", over="ignore"):
        step = ulps * np.spacing(np.abs(v))
        if direction < 0:
            out = np.nextafter(v - step, -_INF)
            out = np.where(np.isnan(out), -_INF, out)
        else:
            out = np.nextafter(v + step, _INF)
            out = np.where(np.isnan(out), _INF, out)
    return out


def _gamma(n):
    """Upper bound for gamma_n = n u / (1 - n u), padded for its own rounding."""
    n = max(int(n), 1)
    if n * _U >= 0.01:
        raise ValueError("dimension too large for the a-priori rounding bound")
    return 1.02 * n * _U / (1.0 - n * _U)


# -- the interval type -----------------------------------------------------------

class Interval:
    """A closed interval ``[lo, hi]`` (or an array of them)."""

    __slots__ = ("_lo", "_hi")
    __array_priority__ = 100.0

    def __init__(self, lo, hi=None):
        lo = _arr(lo)
        hi = lo if hi is None else _arr(hi)
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise InvalidInterval("interval endpoints must not be NaN")
        lo, hi = np.broadcast_arrays(lo, hi)
        if np.any(lo > hi):
            raise InvalidInterval("interval with lo > hi")
        self._lo = _frozen(lo)
        self._hi = _frozen(hi)

    @classmethod
    def _raw(cls, lo, hi):
        obj = object.__new__(cls)
        lo = _arr(lo)
        hi = _arr(hi)
        if lo.shape != hi.shape:
            lo, hi = np.broadcast_arrays(lo, hi)
        obj._lo = _frozen(lo)
        obj._hi = _frozen(hi)
        return obj

    @classmethod
    def point(cls, x):
        x = _arr(x)
        return cls._raw(x, x)

    @classmethod
    def parse(cls, text):
        return parse_decimal(text)

    # -- basic accessors
    @property
    def lo(self):
        return self._lo if self._lo.ndim else float(self._lo)

    @property
    def hi(self):
        return self._hi if self._hi.ndim else float(self._hi)

    @property
    def shape(self):
        return self._lo.shape

    @property
    def ndim(self):
        return self._lo.ndim

    @property
    def size(self):
        return self._lo.size

    def __len__(self):
        return len(self._lo)

    @property
    def mid(self):
        with np.errstate(over="ignore"):
            m = 0.5 * self._lo + 0.5 * self._hi
        m = np.where(np.isfinite(m), m, 0.0)
        return m if m.ndim else float(m)

    @property
    def rad(self):
        """Upper bound of the distance from ``mid`` to either endpoint."""
        m = _arr(self.mid)
        r = np.maximum(_add_dir(self._hi, -m, 1), _add_dir(m, -self._lo, 1))
        return r if r.ndim else float(r)

    @property
    def width(self):
        w = _add_dir(self._hi, -self._lo, 1)
        return w if w.ndim else float(w)

    def mag(self):
        """Upper bound of |x| over the interval."""
        m = np.maximum(np.abs(self._lo), np.abs(self._hi))
        return m if m.ndim else float(m)

    def mig(self):
        """Lower bound of |x| over the interval."""
        m = np.where((self._lo <= 0) & (self._hi >= 0), 0.0,
                     np.minimum(np.abs(self._lo), np.abs(self._hi)))
        return m if m.ndim else float(m)

    def is_finite(self):
        return bool(np.all(np.isfinite(self._lo)) and np.all(np.isfinite(self._hi)))

    def contains(self, x):
        """True where the real number(s) ``x`` lie inside (floats or Fractions)."""
        if isinstance(x, Interval):
            return (self._lo <= x._lo) & (x._hi <= self._hi)
        if isinstance(x, Fraction):
            lo, hi = float(self._lo), float(self._hi)
            ok_lo = lo == -_INF or Fraction(lo) <= x
            ok_hi = hi == _INF or x <= Fraction(hi)
            return ok_lo and ok_hi
        x = _arr(x)
        return (self._lo <= x) & (x <= self._hi)

    def subset(self, other):
        other = as_interval(other)
        return bool(np.all((other._lo <= self._lo) & (self._hi <= other._hi)))

    def overlaps(self, other):
        other = as_interval(other)
        return (self._lo <= other._hi) & (other._lo <= self._hi)

    def certainly_positive(self):
        return bool(np.all(self._lo > 0))

    def certainly_negative(self):
        return bool(np.all(self._hi < 0))

    def __repr__(self):
        if self.ndim == 0:
            return f"Interval({self.lo!r}, {self.hi!r})"
        return f"Interval(shape={self.shape})"

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return (self.shape == other.shape and np.array_equal(self._lo, other._lo)
                and np.array_equal(self._hi, other._hi))

    __hash__ = None

    def __bool__(self):
        raise TypeError("an Interval has no truth value; use certainly_* helpers")

    # -- array plumbing
    def __getitem__(self, key):
        return Interval._raw(self._lo[key], self._hi[key])

    def reshape(self, *shape):
        return Interval._raw(self._lo.reshape(*shape), self._hi.reshape(*shape))

    def ravel(self):
        return Interval._raw(self._lo.ravel(), self._hi.ravel())

    @property
    def T(self):
        return Interval._raw(self._lo.T, self._hi.T)

    def transpose(self, *axes):
        return Interval._raw(self._lo.transpose(*axes), self._hi.transpose(*axes))

    def broadcast_to(self, shape):
        return Interval._raw(np.broadcast_to(self._lo, shape), np.broadcast_to(self._hi, shape))

    def copy_with(self, key, value):
        """Return a copy with ``self[key]`` replaced by ``value``."""
        value = as_interval(value)
        lo = np.array(self._lo)
        hi = np.array(self._hi)
        lo[key] = value._lo
        hi[key] = value._hi
        return Interval._raw(lo, hi)

    def sum(self, axis=None):
        return isum(self, axis)

    def max_hi(self):
        return float(np.max(self._hi))

    def min_lo(self):
        return float(np.min(self._lo))

    # -- arithmetic
    def __neg__(self):
        return Interval._raw(-self._hi, -self._lo)

    def __pos__(self):
        return self

    def __add__(self, other):
        other = as_interval(other)
        return Interval._raw(_add_dir(self._lo, other._lo, -1), _add_dir(self._hi, other._hi, 1))

    __radd__ = __add__

    def __sub__(self, other):
        other = as_interval(other)
        return Interval._raw(_add_dir(self._lo, -other._hi, -1), _add_dir(self._hi, -other._lo, 1))

    def __rsub__(self, other):
        return as_interval(other) - self

    def __mul__(self, other):
        if isinstance(other, np.ndarray) and other.dtype == object:
            return NotImplemented
        other = as_interval(other)
        a, b, c, d = self._lo, self._hi, other._lo, other._hi
        if np.all(a == b) and np.all(c == d):
            return Interval._raw(_mul_dir(a, c, -1), _mul_dir(a, c, 1))
        lows = [_mul_dir(a, c, -1), _mul_dir(a, d, -1), _mul_dir(b, c, -1), _mul_dir(b, d, -1)]
        highs = [_mul_dir(a, c, 1), _mul_dir(a, d, 1), _mul_dir(b, c, 1), _mul_dir(b, d, 1)]
        lo = np.minimum(np.minimum(lows[0], lows[1]), np.minimum(lows[2], lows[3]))
        hi = np.maximum(np.maximum(highs[0], highs[1]), np.maximum(highs[2], highs[3]))
        return Interval._raw(lo, hi)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_interval(other)
        c, d = other._lo, other._hi
        if np.any((c <= 0) & (d >= 0)):
            raise DivisionByZeroInterval("divisor interval contains zero")
        a, b = self._lo, self._hi
        lows = [_div_dir(a, c, -1), _div_dir(a, d, -1), _div_dir(b, c, -1), _div_dir(b, d, -1)]
        highs = [_div_dir(a, c, 1), _div_dir(a, d, 1), _div_dir(b, c, 1), _div_dir(b, d, 1)]
        lo = np.minimum(np.minimum(lows[0], lows[1]), np.minimum(lows[2], lows[3]))
        hi = np.maximum(np.maximum(highs[0], highs[1]), np.maximum(highs[2], highs[3]))
        return Interval._raw(lo, hi)

    def __rtruediv__(self, other):
        return as_interval(other) / self

    def __abs__(self):
        lo = np.where((self._lo <= 0) & (self._hi >= 0), 0.0,
                      np.minimum(np.abs(self._lo), np.abs(self._hi)))
        hi = np.maximum(np.abs(self._lo), np.abs(self._hi))
        return Interval._raw(lo, hi)

    def __pow__(self, k):
        return self.pow_k(k)

    def square(self):
        a = abs(self)
        return Interval._raw(np.maximum(_mul_dir(a._lo, a._lo, -1), 0.0), _mul_dir(a._hi, a._hi, 1))

    def pow_k(self, k):
        """Integer power with sign handling for even and odd exponents."""
        if int(k) != k:
            raise DomainError("pow_k takes integer exponents only")
        k = int(k)
        if k < 0:
            return 1.0 / self.pow_k(-k)
        if k == 0:
            return Interval._raw(np.ones(self.shape), np.ones(self.shape))
        if k == 1:
            return self
        if k % 2 == 0:
            a = abs(self)
            return Interval._raw(_pow_nonneg(a._lo, k, -1), _pow_nonneg(a._hi, k, 1))
        lo = np.where(self._lo >= 0, _pow_nonneg(np.abs(self._lo), k, -1),
                      -_pow_nonneg(np.abs(self._lo), k, 1))
        hi = np.where(self._hi >= 0, _pow_nonneg(np.abs(self._hi), k, 1),
                      -_pow_nonneg(np.abs(self._hi), k, -1))
        return Interval._raw(lo, hi)

    # -- elementary functions
    def sqrt(self):
        if np.any(self._lo < 0):
            raise DomainError("sqrt of an interval reaching below zero")
        return Interval._raw(_sqrt_dir(self._lo, -1), _sqrt_dir(self._hi, 1))

    def sqrt_nonneg(self):
        """sqrt of a quantity known to be >= 0 (sums of squares, norms).

        Rounding allowances can push the lower endpoint of such a quantity
        slightly below zero; only the part in [0, inf) is kept.
        """
        if np.any(self._hi < 0):
            raise DomainError("sqrt of a negative interval")
        return Interval._raw(_sqrt_dir(np.maximum(self._lo, 0.0), -1), _sqrt_dir(self._hi, 1))

    def exp(self):
        with np.errstate(over="ignore", under="ignore"):
            lo = np.maximum(_widen(np.exp(self._lo), TRANSCENDENTAL_ULPS, -1), 0.0)
            hi = _widen(np.exp(self._hi), TRANSCENDENTAL_ULPS, 1)
        lo = np.where(self._lo == 0, 1.0, lo)
        hi = np.where(self._hi == 0, 1.0, hi)
        return Interval._raw(lo, hi)

    def log(self):
        if np.any(self._lo <= 0):
            raise DomainError("log of an interval reaching zero or below")
        with np.errstate(divide="ignore"):
            lo = _widen(np.log(self._lo), TRANSCENDENTAL_ULPS, -1)
            hi = _widen(np.log(self._hi), TRANSCENDENTAL_ULPS, 1)
        lo = np.where(self._lo == 1, 0.0, lo)
        hi = np.where(self._hi == 1, 0.0, hi)
        return Interval._raw(lo, hi)

    def cosh(self):
        with np.errstate(over="ignore"):
            clo = np.cosh(self._lo)
            chi = np.cosh(self._hi)
        top = _widen(np.maximum(clo, chi), TRANSCENDENTAL_ULPS, 1)
        straddle = (self._lo <= 0) & (self._hi >= 0)
        bottom = np.where(straddle, 1.0,
                          np.maximum(_widen(np.minimum(clo, chi), TRANSCENDENTAL_ULPS, -1), 1.0))
        top = np.where((self._lo == 0) & (self._hi == 0), 1.0, top)
        return Interval._raw(bottom, top)

    def sinh(self):
        with np.errstate(over="ignore"):
            lo = _widen(np.sinh(self._lo), TRANSCENDENTAL_ULPS, -1)
            hi = _widen(np.sinh(self._hi), TRANSCENDENTAL_ULPS, 1)
        lo = np.where(self._lo == 0, 0.0, lo)
        hi = np.where(self._hi == 0, 0.0, hi)
        return Interval._raw(lo, hi)

    def cos(self):
        return _trig(self, np.cos, 0.0)

    def sin(self):
        return _trig(self, np.sin, 0.5)

    def to_pair(self):
        """Both endpoints as shortest round-trip decimal strings."""
        if self.ndim:
            raise ValueError("to_pair is defined for scalar intervals")
        return [repr(float(self._lo)), repr(float(self._hi))]

    def endpoints(self):
        return self._lo, self._hi


def _pow_nonneg(x, k, direction):
    """Directed power of nonnegative floats by repeated squaring."""
    result = np.ones_like(x)
    base = x
    while True:
        if k & 1:
            result = _mul_dir(result, base, direction)
        k >>= 1
        if not k:
            return result
        base = _mul_dir(base, base, direction)


def _trig(x, fun, phase):
    """cos (phase 0) or sin (phase 1/2) of an interval.

    Extrema sit at ``(j + phase) * pi`` with value ``(-1)**j``; the index
    range is computed with a safety margin so that a critical point is never
    missed (missing one would lose containment, including an extra one only
    widens the result).
    """
    lo, hi = x._lo, x._hi
    with np.errstate(invalid="ignore"):
        flo = fun(lo)
        fhi = fun(hi)
        elo = np.minimum(_widen(flo, TRANSCENDENTAL_ULPS, -1), _widen(fhi, TRANSCENDENTAL_ULPS, -1))
        ehi = np.maximum(_widen(flo, TRANSCENDENTAL_ULPS, 1), _widen(fhi, TRANSCENDENTAL_ULPS, 1))
        # exact zero argument
        zero = (lo == 0) & (hi == 0)
        if phase == 0.0:
            elo = np.where(zero, 1.0, elo)
            ehi = np.where(zero, 1.0, ehi)
        else:
            elo = np.where(zero, 0.0, elo)
            ehi = np.where(zero, 0.0, ehi)
        tlo = lo / math.pi - phase
        thi = hi / math.pi - phase
        margin_lo = np.abs(tlo) * 8 * _U + 1e-300
        margin_hi = np.abs(thi) * 8 * _U + 1e-300
        jmin = np.ceil(tlo - margin_lo)
        jmax = np.floor(thi + margin_hi)
        wide = ~np.isfinite(lo) | ~np.isfinite(hi) | (hi - lo >= 6.2)
        has = jmax >= jmin
        has_even = has & ((np.mod(jmin, 2) == 0) | (jmax > jmin))
        has_odd = has & ((np.mod(jmin, 2) == 1) | (jmax > jmin))
        ehi = np.where(has_even & ~zero, 1.0, ehi)
        elo = np.where(has_odd & ~zero, -1.0, elo)
        elo = np.where(wide, -1.0, elo)
        ehi = np.where(wide, 1.0, ehi)
    return Interval._raw(np.maximum(elo, -1.0), np.minimum(ehi, 1.0))


# -- module-level helpers ------------------------------------------------------

def as_interval(x):
    if isinstance(x, Interval):
        return x
    if isinstance(x, Fraction):
        return parse_decimal(x)
    return Interval.point(x)


def pi_enclosure():
    """The two floats adjacent to pi."""
    return Interval._raw(math.pi, np.nextafter(math.pi, _INF))


def parse_decimal(text):
    """Outward-rounded enclosure of an exact decimal (or Fraction) value."""
    try:
        exact = text if isinstance(text, Fraction) else Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidInterval(f"cannot parse {text!r} as a decimal number") from exc
    f = float(exact)
    fe = Fraction(f) if math.isfinite(f) else None
    if fe is not None and fe == exact:
        return Interval._raw(f, f)
    if fe is not None and fe < exact:
        return Interval._raw(f, np.nextafter(f, _INF))
    return Interval._raw(np.nextafter(f, -_INF), f)


def hull(*items):
    items = [as_interval(i) for i in items]
    lo = items[0]._lo
    hi = items[0]._hi
    for it in items[1:]:
        lo = np.minimum(lo, it._lo)
        hi = np.maximum(hi, it._hi)
    return Interval._raw(lo, hi)


def stack(items, axis=0):
    items = [as_interval(i) for i in items]
    return Interval._raw(np.stack([i._lo for i in items], axis), np.stack([i._hi for i in items], axis))


def concatenate(items, axis=0):
    items = [as_interval(i) for i in items]
    return Interval._raw(np.concatenate([i._lo for i in items], axis),
                         np.concatenate([i._hi for i in items], axis))


def where(cond, a, b):
    a = as_interval(a)
    b = as_interval(b)
    return Interval._raw(np.where(cond, a._lo, b._lo), np.where(cond, a._hi, b._hi))


def _midrad(x):
    """Midpoint and upper-bounded radius as float arrays."""
    if isinstance(x, Interval):
        m = _arr(x.mid)
        return m, _arr(x.rad)
    m = _arr(x)
    return m, np.zeros_like(m)


def isum(x, axis=None):
    """Rigorous sum of interval entries along ``axis``."""
    x = as_interval(x)
    lo, hi = x._lo, x._hi
    n = lo.size if axis is None else lo.shape[axis]
    if n == 0:
        shape = () if axis is None else np.delete(np.array(lo.shape), axis)
        return Interval.point(np.zeros(shape))
    g = _gamma(n)
    with np.errstate(over="ignore", invalid="ignore"):
        slo = lo.sum(axis=axis)
        shi = hi.sum(axis=axis)
        elo = np.abs(lo).sum(axis=axis) * g
        ehi = np.abs(hi).sum(axis=axis) * g
        rlo = np.nextafter(slo - np.nextafter(elo, _INF), -_INF)
        rhi = np.nextafter(shi + np.nextafter(ehi, _INF), _INF)
    rlo = np.where(np.isnan(rlo), -_INF, rlo)
    rhi = np.where(np.isnan(rhi), _INF, rhi)
    return Interval._raw(rlo, rhi)


def matmul(a, b):
    """Rigorous enclosure of ``a @ b`` for interval or float operands.

    Midpoint-radius evaluation: with ``a = ma +/- ra`` and ``b = mb +/- rb``
    the exact product set lies in ``ma mb +/- (|ma| rb + ra (|mb| + rb))``;
    the floating-point error of each product is at most ``gamma_n`` times the
    product of absolute values.
    """
    ma, ra = _midrad(a)
    mb, rb = _midrad(b)
    inner = ma.shape[-1] if ma.ndim else 1
    g = _gamma(inner + 2)
    with np.errstate(over="ignore", invalid="ignore"):
        c = ma @ mb
        absprod = np.abs(ma) @ np.abs(mb)
        rad = np.zeros_like(c)
        if np.any(rb):
            rad = rad + np.abs(ma) @ rb
        if np.any(ra):
            rad = rad + ra @ (np.abs(mb) + rb)
        total = (g * absprod + rad) * (1.0 + 2.0 * g) + inner * 2.0**-1021
        total = np.nextafter(total, _INF)
        lo = np.nextafter(c - total, -_INF)
        hi = np.nextafter(c + total, _INF)
    lo = np.where(np.isnan(lo), -_INF, lo)
    hi = np.where(np.isnan(hi), _INF, hi)
    return Interval._raw(lo, hi)
