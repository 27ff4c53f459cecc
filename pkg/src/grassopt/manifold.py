"""Geometry of G(1, n): tangent projection, geodesics, parallel translation, clipping.

A point is represented by a unit vector ``y`` (sign-ambiguous: ``y`` and ``-y``
name the same subspace). Tangent vectors at ``y`` are vectors orthogonal to it.
All operations are pure functions over value types.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, PreconditionError

__all__ = [
    "DEGENERATE_STEP",
    "UNIT_TOL",
    "GrassmannPoint",
    "TangentVector",
    "zero_tangent",
    "project_tangent",
    "exp_map",
    "parallel_translate",
    "parallel_translate_self",
    "norm_clip",
    "tangent_inner",
    "geodesic_angle",
]

# Below this step norm the geodesic formulas (which divide by |h|) reduce to
# the identity; the singularity at h = 0 is removable.
DEGENERATE_STEP = 1e-12

UNIT_TOL = 1e-9
_TANGENCY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class GrassmannPoint:
    """A point on G(1, n) held as a unit-norm representation of dimension n >= 2.

    The wrapped array must not be mutated after construction.
    """

    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        object.__setattr__(self, "y", y)
        if y.ndim != 1 or y.shape[0] < 2:
            raise DimensionError(
                f"representation must be a vector of dimension >= 2, got shape {y.shape}"
            )
        n = float(np.linalg.norm(y))
        if not math.isfinite(n) or abs(n - 1.0) > UNIT_TOL:
            raise PreconditionError(f"representation must be unit norm within {UNIT_TOL}, |y|={n}")

    @property
    def dim(self) -> int:
        return self.y.shape[0]

    @staticmethod
    def from_unnormalized(v) -> "GrassmannPoint":
        v = np.asarray(v, dtype=np.float64)
        n = float(np.linalg.norm(v))
        if n == 0.0 or not math.isfinite(n):
            raise PreconditionError("cannot normalize a zero or non-finite vector")
        return GrassmannPoint(v / n)

    @staticmethod
    def random(n: int, rng: np.random.Generator) -> "GrassmannPoint":
        """Uniformly random point, as a normalized Gaussian sample."""
        return GrassmannPoint.from_unnormalized(rng.standard_normal(n))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A vector tangent at ``base``, i.e. orthogonal to the base representation.

    Tangency is checked with ``assert`` so release runs (``python -O``) trust
    the constructing operation instead of paying the per-step O(n) check.
    """

    v: np.ndarray
    base: GrassmannPoint

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        object.__setattr__(self, "v", v)
        if v.shape != self.base.y.shape:
            raise DimensionError(
                f"tangent dimension {v.shape} != base dimension {self.base.y.shape}"
            )
        assert (
            abs(float(self.base.y @ v)) <= _TANGENCY_TOL * (1.0 + float(np.linalg.norm(v)))
        ), "vector is not tangent at its base point"

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.v))


def zero_tangent(y: GrassmannPoint) -> TangentVector:
    return TangentVector(np.zeros(y.dim), y)


def _require_base(y: GrassmannPoint, t: TangentVector, name: str) -> None:
    if t.base is not y and not np.array_equal(t.base.y, y.y):
        raise PreconditionError(f"{name} is not tangent at the given point")


def project_tangent(y: GrassmannPoint, g) -> TangentVector:
    """Project an ambient gradient onto the tangent space at ``y``.

    Returns ``h = g - (y^T g) y``, the Riemannian gradient direction for a
    function with Euclidean gradient ``g``.
    """
    g = np.asarray(g, dtype=np.float64)
    if g.shape != y.y.shape:
        raise DimensionError(f"gradient shape {g.shape} != point dimension {y.y.shape}")
    h = g - (y.y @ g) * y.y
    return TangentVector(h, y)


def exp_map(y: GrassmannPoint, h: TangentVector) -> GrassmannPoint:
    """Follow the geodesic from ``y`` with initial velocity ``h`` for unit time.

    ``exp_y(h) = y cos|h| + (h/|h|) sin|h|``; the output is renormalized so
    repeated steps cannot drift off the unit sphere. Steps shorter than
    ``DEGENERATE_STEP`` return ``y`` unchanged.
    """
    _require_base(y, h, "h")
    nh = h.norm()
    if nh < DEGENERATE_STEP:
        return y
    out = y.y * math.cos(nh) + h.v * (math.sin(nh) / nh)
    out = out / np.linalg.norm(out)
    return GrassmannPoint(out)


def parallel_translate(y: GrassmannPoint, delta: TangentVector, h: TangentVector) -> TangentVector:
    """Transport ``delta`` along the geodesic with initial velocity ``h``.

    With ``u = h/|h|``::

        pt_y(delta; h) = delta - (u (1 - cos|h|) + y sin|h|) (u^T delta)

    The result is tangent at ``exp_map(y, h)`` and has the same norm as
    ``delta``. A degenerate ``h`` returns ``delta`` unchanged.
    """
    _require_base(y, delta, "delta")
    _require_base(y, h, "h")
    nh = h.norm()
    if nh < DEGENERATE_STEP:
        return delta
    u = h.v / nh
    coef = float(u @ delta.v)
    out = delta.v - (u * (1.0 - math.cos(nh)) + y.y * math.sin(nh)) * coef
    return TangentVector(out, exp_map(y, h))


def parallel_translate_self(y: GrassmannPoint, h: TangentVector) -> TangentVector:
    """Transport ``h`` along its own geodesic: ``h cos|h| - y |h| sin|h|``."""
    _require_base(y, h, "h")
    nh = h.norm()
    if nh < DEGENERATE_STEP:
        return h
    out = h.v * math.cos(nh) - y.y * (nh * math.sin(nh))
    return TangentVector(out, exp_map(y, h))


def norm_clip(h: TangentVector, nu: float) -> TangentVector:
    """Cap the norm of ``h`` at ``nu``, preserving its direction."""
    if nu <= 0.0:
        raise PreconditionError(f"clip threshold must be positive, got {nu}")
    nh = h.norm()
    if nh <= nu:
        return h
    return TangentVector(h.v * (nu / nh), h.base)


def tangent_inner(a: TangentVector, b: TangentVector) -> float:
    """Canonical inner product of two tangent vectors at the same point."""
    if a.v.shape != b.v.shape:
        raise DimensionError(f"tangent dimensions differ: {a.v.shape} vs {b.v.shape}")
    if a.base is not b.base and not np.array_equal(a.base.y, b.base.y):
        raise PreconditionError("tangent vectors have different base points")
    return float(a.v @ b.v)


def geodesic_angle(y1: GrassmannPoint, y2: GrassmannPoint) -> float:
    """Angle in [0, pi/2] between two points; sign-invariant in both arguments."""
    if y1.y.shape != y2.y.shape:
        raise DimensionError(f"dimensions differ: {y1.y.shape} vs {y2.y.shape}")
    c = min(1.0, abs(float(y1.y @ y2.y)))
    return math.acos(c)
