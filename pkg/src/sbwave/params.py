"""Run configuration and the shipped presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

from .errors import ConfigError
from .sequences import IndexBox

__all__ = ["ProblemParams", "PRESETS", "load_config", "preset"]


@dataclass(frozen=True)
class ProblemParams:
    """Everything that defines one certification run.

    ``c`` is read as a decimal number; ``d1, d2`` are used as the exact
    binary floats given.  ``head`` is the box on which the coefficients of
    exp(u) are enclosed explicitly (defaults to N0); it may reach
    ``NFFT - 1``.
    """

    c: float
    d1: float
    d2: float
    N0: tuple
    N: tuple
    NFFT: tuple = (256, 256)
    nu1: float = 1.1
    nu2: float = 1.1
    head: tuple = None
    delta0: float = None
    t: float = None
    exp_mode: str = "strict"
    kappa2_split: int = None
    newton_tol: float = 1e-12
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.c < math.sqrt(2)):
            raise ConfigError("c must lie in (0, sqrt 2)")
        if self.d1 <= 0 or self.d2 <= 0:
            raise ConfigError("d1 and d2 must be positive")
        for name in ("N0", "N", "NFFT"):
            v = getattr(self, name)
            if len(v) != 2 or min(v) < 0:
                raise ConfigError(f"{name} must be a pair of nonnegative integers")
            object.__setattr__(self, name, (int(v[0]), int(v[1])))
        if self.head is not None:
            object.__setattr__(self, "head", (int(self.head[0]), int(self.head[1])))
        if self.N[0] > self.N0[0] or self.N[1] > self.N0[1]:
            raise ConfigError("N must not exceed N0")
        if self.exp_mode not in ("strict", "fft"):
            raise ConfigError("exp_mode must be 'strict' or 'fft'")

    @property
    def box0(self):
        return IndexBox(*self.N0)

    @property
    def boxN(self):
        return IndexBox(*self.N)

    @property
    def head_box(self):
        return IndexBox(*(self.head or self.N0))

    def to_dict(self):
        d = asdict(self)
        for k in ("N0", "N", "NFFT", "head"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def updated(self, **kw):
        return replace(self, **kw)


PRESETS = {
    # reduced one-peak configuration; runs on a laptop.  The wave needs about
    # 60 cosine modes in x1 but only 20 in x2, hence the shape of N.
    "desk": dict(
        c=1.2, d1=math.pi / 0.12, d2=math.pi / 0.24, N0=(60, 40), N=(60, 20),
        NFFT=(256, 256), nu1=1.1, nu2=1.1, head=(255, 255),
    ),
    # small smoke-test problem around the zero solution
    "trivial": dict(
        c=1.2, d1=math.pi / 0.12, d2=math.pi / 0.24, N0=(8, 8), N=(4, 4),
        NFFT=(32, 32), nu1=2.0, nu2=2.0, head=(31, 31),
    ),
    # full-size one-peak configuration (expensive)
    "one-peak-full": dict(
        c=1.2, d1=math.pi / 0.06, d2=math.pi / 0.24, N0=(150, 80), N=(40, 40),
        NFFT=(512, 512), nu1=1.1, nu2=1.1,
    ),
}


def preset(name):
    try:
        return ProblemParams(**PRESETS[name])
    except KeyError as exc:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from exc


def load_config(path):
    """Read a JSON config; ``{"preset": name, ...}`` overrides a preset."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    base = {}
    if "preset" in raw:
        name = raw.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}")
        base = dict(PRESETS[name])
    base.update(raw)
    return ProblemParams.from_dict(base)
