"""Strictly increasing parametric warping functions.

Each transform maps observation space to a latent space and carries an
analytic inverse, derivative, and log-Jacobian.  Transforms compose
left-to-right: in a chain name like ``L-SA`` the affine map is applied
first, then the sinh-arcsinh map, and parameter vectors concatenate in the
same order.  (Model-name conventions never state this; it is fixed here so
configurations are unambiguous.)

Families group a transform kind with the box its parameters are
marginalized or optimized over.
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import DomainError, InvalidParams, RangeError

# switch point below which the power branch of the Box-Cox map would
# catastrophically cancel; the log branch is its limit
_BOXCOX_LOG_EPS = 1e-8


def _asfloat(y):
    arr = np.asarray(y, dtype=float)
    return arr, arr.ndim == 0


def _unwrap(arr, scalar):
    return float(arr) if scalar else arr


class Transform:
    """Base class; subclasses provide forward/inverse/derivative."""

    def forward(self, y):
        raise NotImplementedError

    def inverse(self, z):
        raise NotImplementedError

    def derivative(self, y):
        raise NotImplementedError

    def log_jacobian(self, y):
        """Sum of log derivatives over the entries of ``y``."""
        d = self.derivative(np.asarray(y, dtype=float))
        return float(np.sum(np.log(d)))

    @property
    def params(self):
        raise NotImplementedError

    def with_params(self, params):
        raise NotImplementedError

    @property
    def n_params(self):
        return len(self.params)


@dataclass(frozen=True)
class Affine(Transform):
    """y -> a + b y with b > 0."""

    a: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidParams(f"affine slope must be positive, got {self.b!r}")

    def forward(self, y):
        y, scalar = _asfloat(y)
        return _unwrap(self.a + self.b * y, scalar)

    def inverse(self, z):
        z, scalar = _asfloat(z)
        return _unwrap((z - self.a) / self.b, scalar)

    def derivative(self, y):
        y, scalar = _asfloat(y)
        return _unwrap(np.full_like(y, self.b), scalar)

    def log_jacobian(self, y):
        return float(np.asarray(y).size * math.log(self.b))

    @property
    def params(self):
        return (self.a, self.b)

    def with_params(self, params):
        return Affine(float(params[0]), float(params[1]))


IDENTITY = Affine(0.0, 1.0)


@dataclass(frozen=True)
class ArcSinh(Transform):
    """y -> a + b asinh((y - c) / d) with b, d > 0."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        if not (self.b > 0 and self.d > 0):
            raise InvalidParams(
                f"arcsinh scales must be positive, got b={self.b!r}, d={self.d!r}")

    def forward(self, y):
        y, scalar = _asfloat(y)
        return _unwrap(self.a + self.b * np.arcsinh((y - self.c) / self.d), scalar)

    def inverse(self, z):
        z, scalar = _asfloat(z)
        return _unwrap(self.c + self.d * np.sinh((z - self.a) / self.b), scalar)

    def derivative(self, y):
        y, scalar = _asfloat(y)
        return _unwrap(self.b / np.sqrt(self.d ** 2 + (y - self.c) ** 2), scalar)

    @property
    def params(self):
        return (self.a, self.b, self.c, self.d)

    def with_params(self, params):
        return ArcSinh(*(float(p) for p in params[:4]))


@dataclass(frozen=True)
class SinhArcSinh(Transform):
    """y -> sinh(b (asinh(y) - a)) with b > 0.

    Inverse is z -> sinh(asinh(z) / b + a), also closed form.
    """

    a: float
    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise InvalidParams(f"sinh-arcsinh b must be positive, got {self.b!r}")

    def forward(self, y):
        y, scalar = _asfloat(y)
        return _unwrap(np.sinh(self.b * (np.arcsinh(y) - self.a)), scalar)

    def inverse(self, z):
        z, scalar = _asfloat(z)
        return _unwrap(np.sinh(np.arcsinh(z) / self.b + self.a), scalar)

    def derivative(self, y):
        y, scalar = _asfloat(y)
        out = self.b * np.cosh(self.b * (np.arcsinh(y) - self.a)) / np.sqrt(1.0 + y * y)
        return _unwrap(out, scalar)

    @property
    def params(self):
        return (self.a, self.b)

    def with_params(self, params):
        return SinhArcSinh(float(params[0]), float(params[1]))


@dataclass(frozen=True)
class BoxCox(Transform):
    """y -> (y^lam - 1) / lam for lam > 0, log(y) at lam = 0; needs y > 0."""

    lam: float

    def __post_init__(self):
        if not self.lam >= 0:
            raise InvalidParams(f"Box-Cox exponent must be >= 0, got {self.lam!r}")

    def _check_domain(self, y):
        if np.any(y <= 0.0):
            raise DomainError("Box-Cox transform requires positive inputs")

    def forward(self, y):
        y, scalar = _asfloat(y)
        self._check_domain(y)
        if self.lam < _BOXCOX_LOG_EPS:
            return _unwrap(np.log(y), scalar)
        return _unwrap(np.expm1(self.lam * np.log(y)) / self.lam, scalar)

    def inverse(self, z):
        z, scalar = _asfloat(z)
        if self.lam < _BOXCOX_LOG_EPS:
            return _unwrap(np.exp(z), scalar)
        if np.any(z <= -1.0 / self.lam):
            raise RangeError(
                f"value below the Box-Cox range floor -1/lam = {-1.0 / self.lam!r}")
        return _unwrap(np.exp(np.log1p(self.lam * z) / self.lam), scalar)

    def derivative(self, y):
        y, scalar = _asfloat(y)
        self._check_domain(y)
        return _unwrap(y ** (self.lam - 1.0), scalar)

    @property
    def params(self):
        return (self.lam,)

    def with_params(self, params):
        return BoxCox(float(params[0]))


@dataclass(frozen=True)
class Composed(Transform):
    """Chain of transforms applied left-to-right."""

    parts: Tuple[Transform, ...]

    def forward(self, y):
        for part in self.parts:
            y = part.forward(y)
        return y

    def inverse(self, z):
        for part in reversed(self.parts):
            z = part.inverse(z)
        return z

    def derivative(self, y):
        y, scalar = _asfloat(y)
        out = np.ones_like(y)
        for part in self.parts:
            out = out * part.derivative(y)
            y = part.forward(y)
        return _unwrap(out, scalar)

    def log_jacobian(self, y):
        y = np.asarray(y, dtype=float)
        total = 0.0
        for part in self.parts:
            total += part.log_jacobian(y)
            y = part.forward(y)
        return total

    @property
    def params(self):
        return tuple(p for part in self.parts for p in part.params)

    def with_params(self, params):
        params = list(params)
        parts = []
        at = 0
        for part in self.parts:
            k = part.n_params
            parts.append(part.with_params(params[at:at + k]))
            at += k
        return Composed(tuple(parts))


@dataclass(frozen=True)
class TransformFamily:
    """A transform kind plus the box its parameters live in."""

    name: str
    box: Tuple[Tuple[float, float], ...]
    build: Callable[[Tuple[float, ...]], Transform]

    @property
    def n_params(self):
        return len(self.box)

    def center(self):
        """Box-center parameters (used as an optimizer start)."""
        return tuple(0.5 * (lo + hi) for lo, hi in self.box)


# Default marginalization boxes.  Each contains the parameters that make the
# family collapse to the identity map in its interior.
_AFFINE_BOX = ((-1.0, 1.0), (0.1, 3.0))
_ARCSINH_BOX = ((-1.0, 1.0), (0.1, 3.0), (-1.0, 1.0), (0.1, 3.0))
_SINHARCSINH_BOX = ((-1.0, 1.0), (0.1, 3.0))
_BOXCOX_BOX = ((0.0, 3.0),)

_ELEMENTARY = {
    "I": TransformFamily("I", (), lambda p: IDENTITY),
    "L": TransformFamily("L", _AFFINE_BOX, lambda p: Affine(*p)),
    "A": TransformFamily("A", _ARCSINH_BOX, lambda p: ArcSinh(*p)),
    "SA": TransformFamily("SA", _SINHARCSINH_BOX, lambda p: SinhArcSinh(*p)),
    "BC": TransformFamily("BC", _BOXCOX_BOX, lambda p: BoxCox(*p)),
}


def family(name):
    """Look up a transform family by name.

    Elementary names: I (identity), L (affine), A (arcsinh),
    SA (sinh-arcsinh), BC (Box-Cox).  Hyphenated names such as ``L-SA``
    compose left-to-right with concatenated parameter boxes.
    """
    name = name.strip().upper()
    if name in _ELEMENTARY:
        return _ELEMENTARY[name]
    parts = name.split("-")
    if not all(p in _ELEMENTARY for p in parts):
        raise InvalidParams(f"unknown transform family {name!r}")
    fams = [_ELEMENTARY[p] for p in parts]
    box = tuple(b for f in fams for b in f.box)

    def build(params, fams=tuple(fams)):
        params = list(params)
        built = []
        at = 0
        for f in fams:
            built.append(f.build(tuple(params[at:at + f.n_params])))
            at += f.n_params
        return Composed(tuple(built))

    return TransformFamily(name, box, build)
