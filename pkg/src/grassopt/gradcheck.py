"""Finite-difference oracles for Euclidean and Riemannian gradients.

These are the project's independent checks: central differences for flat
parameters, and directional derivatives along geodesics for points on G(1, n).
Nothing here shares code with the analytic backward passes it validates.
"""

from dataclasses import dataclass

import numpy as np

from . import manifold
from .errors import NumericalError
from .manifold import GrassmannPoint, TangentVector

__all__ = ["FdRow", "FdReport", "rel_error", "fd_gradient", "riemannian_fd_check"]


def rel_error(a: float, b: float) -> float:
    """|a - b| / max(|a|, |b|, 1e-8)."""
    return abs(a - b) / max(abs(a), abs(b), 1e-8)


@dataclass(frozen=True)
class FdRow:
    index: int
    analytic: float
    numeric: float
    rel_error: float


@dataclass(frozen=True)
class FdReport:
    """Per-direction comparison of analytic against finite-difference derivatives."""

    max_rel_error: float
    worst_index: int
    rows: tuple[FdRow, ...]

    def passed(self, tol: float) -> bool:
        return self.max_rel_error < tol

    def format(self) -> str:
        lines = [
            f"max_rel_error = {self.max_rel_error:.3e} (worst index {self.worst_index})",
            f"{'index':>6} {'analytic':>16} {'numeric':>16} {'rel_error':>12}",
        ]
        for row in self.rows:
            lines.append(
                f"{row.index:>6} {row.analytic:>16.8e} {row.numeric:>16.8e} {row.rel_error:>12.3e}"
            )
        return "\n".join(lines)


def _report_from_pairs(pairs) -> FdReport:
    rows = tuple(FdRow(i, a, n, rel_error(a, n)) for i, (a, n) in enumerate(pairs))
    worst = max(rows, key=lambda r: r.rel_error)
    return FdReport(worst.rel_error, worst.index, rows)


def fd_gradient(f, x, eps: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar function of a flat vector."""
    x = np.asarray(x, dtype=np.float64)
    if eps <= 0.0:
        raise NumericalError(f"eps must be positive, got {eps}")
    grad = np.zeros_like(x)
    for i in range(x.shape[0]):
        xp = x.copy()
        xp[i] += eps
        xm = x.copy()
        xm[i] -= eps
        fp, fm = f(xp), f(xm)
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise NumericalError(f"non-finite function value while perturbing coordinate {i}")
        grad[i] = (fp - fm) / (2.0 * eps)
    return grad


def riemannian_fd_check(
    f,
    grad,
    y: GrassmannPoint,
    trials: int = 20,
    step: float = 1e-6,
    rng: np.random.Generator | None = None,
) -> FdReport:
    """Compare a claimed gradient of ``f`` on G(1, n) against geodesic differences.

    For each of ``trials`` random unit tangent directions ``v`` the directional
    derivative ``(f(exp_y(t v)) - f(exp_y(-t v))) / 2t`` must match
    ``<project_tangent(y, grad(y)), v>``.

    Parameters
    ----------
    f : callable
        Maps a GrassmannPoint to a scalar.
    grad : callable
        Maps a GrassmannPoint to the claimed ambient gradient vector.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    g = np.asarray(grad(y), dtype=np.float64)
    projected = manifold.project_tangent(y, g)
    pairs = []
    for _ in range(trials):
        v = manifold.project_tangent(y, rng.standard_normal(y.dim))
        nv = v.norm()
        if nv < manifold.DEGENERATE_STEP:
            continue
        v = TangentVector(v.v / nv, y)
        f_plus = f(manifold.exp_map(y, TangentVector(step * v.v, y)))
        f_minus = f(manifold.exp_map(y, TangentVector(-step * v.v, y)))
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise NumericalError("non-finite function value during geodesic perturbation")
        numeric = (f_plus - f_minus) / (2.0 * step)
        analytic = manifold.tangent_inner(projected, v)
        pairs.append((analytic, numeric))
    return _report_from_pairs(pairs)
