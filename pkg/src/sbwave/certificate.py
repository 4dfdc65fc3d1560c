"""JSON certificates.

Every interval is stored as ``[lo, hi]`` with shortest round-trip floats
(non-finite endpoints as the strings "inf", "-inf", "nan").  The digest is
the SHA-256 of the canonical JSON of everything except the digest itself
and the wall time, so two runs on the same inputs agree byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import FileFormatError
from .interval import Interval, as_interval

__all__ = ["Certificate", "iv_to_json", "iv_from_json", "file_digest", "write_atomic", "CERT_FORMAT"]

CERT_FORMAT = "sbwave-certificate/1"


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _unnum(x):
    return float(x) if isinstance(x, str) else x


def iv_to_json(x):
    """[lo, hi] for a scalar interval, a list of pairs for a vector."""
    x = as_interval(x)
    lo, hi = np.asarray(x._lo), np.asarray(x._hi)
    if lo.ndim == 0:
        return [_num(lo), _num(hi)]
    return [[_num(a), _num(b)] for a, b in zip(lo.ravel(), hi.ravel())]


def iv_from_json(v):
    if v and isinstance(v[0], list):
        lo = np.array([_unnum(a) for a, _ in v])
        hi = np.array([_unnum(b) for _, b in v])
        return Interval(lo, hi)
    return Interval(_unnum(v[0]), _unnum(v[1]))


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path, text):
    """Write through a temporary file so a failed run leaves nothing behind."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class Certificate:
    kind: str
    params: dict
    coeff_digest: str
    success: bool
    failed_condition: str = None
    message: str = ""
    bounds: dict = field(default_factory=dict)
    radii: dict = field(default_factory=dict)
    spectral: dict = None
    verdict: dict = None
    toolchain: dict = field(default_factory=dict)
    parent_digest: str = None
    digest: str = ""

    def _body(self):
        d = asdict(self)
        d.pop("digest")
        tc = dict(d["toolchain"])
        tc.pop("wall_time_s", None)
        d["toolchain"] = tc
        return d

    def compute_digest(self):
        text = json.dumps(self._body(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def seal(self):
        self.digest = self.compute_digest()
        return self

    def to_json(self):
        d = asdict(self)
        d["format"] = CERT_FORMAT
        return json.dumps(d, sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"certificate is not valid JSON: {exc}") from exc
        if not isinstance(d, dict) or d.pop("format", None) != CERT_FORMAT:
            raise FileFormatError("not a certificate file")
        try:
            return cls(**d)
        except TypeError as exc:
            raise FileFormatError(f"malformed certificate: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise FileFormatError(f"cannot read certificate {path}: {exc}") from exc
        return cls.from_json(text)

    def save(self, path):
        write_atomic(path, self.to_json())

    def verify_digest(self):
        return self.digest == self.compute_digest()
