"""Optimizers: SGD with momentum and Adam on G(1, n), the Euclidean baseline, schedules.

The Grassmann steps are purely functional: they take a point, an ambient
gradient, and the previous state, and return the new point and state. Momenta
live in the tangent space of the current point and are moved by parallel
translation at every step.
"""

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import manifold
from .errors import NumericalError, PreconditionError
from .manifold import GrassmannPoint, TangentVector

__all__ = [
    "SgdGHyper",
    "AdamGHyper",
    "EuclideanHyper",
    "SgdGState",
    "AdamGState",
    "EuclideanSgdState",
    "LrSchedule",
    "sgdg_step",
    "adamg_step",
    "euclidean_sgd_step",
    "schedule_lr",
]


@dataclass(frozen=True)
class SgdGHyper:
    """Hyperparameters of SGD with momentum on G(1, n)."""

    eta: float = 0.2
    gamma: float = 0.9
    nu: float = 0.1

    def __post_init__(self):
        if self.eta <= 0.0:
            raise PreconditionError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.gamma < 1.0:
            raise PreconditionError(f"gamma must be in [0, 1), got {self.gamma}")
        if self.nu <= 0.0:
            raise PreconditionError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class AdamGHyper:
    """Hyperparameters of Adam on G(1, n); one adaptive rate per weight vector."""

    eta: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.99
    nu: float = 0.1
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.eta <= 0.0:
            raise PreconditionError(f"eta must be positive, got {self.eta}")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not 0.0 <= b < 1.0:
                raise PreconditionError(f"{name} must be in [0, 1), got {b}")
        if self.nu <= 0.0:
            raise PreconditionError(f"nu must be positive, got {self.nu}")


@dataclass(frozen=True)
class EuclideanHyper:
    """Hyperparameters of the SGD-with-Nesterov-momentum baseline."""

    eta: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 0.0005
    nesterov: bool = True


@dataclass(frozen=True)
class SgdGState:
    """Momentum state of one Grassmann point under SGD-G."""

    tau: TangentVector
    hyper: SgdGHyper = field(default_factory=SgdGHyper)

    @staticmethod
    def init(y: GrassmannPoint, hyper: SgdGHyper | None = None) -> "SgdGState":
        return SgdGState(manifold.zero_tangent(y), hyper or SgdGHyper())


@dataclass(frozen=True)
class AdamGState:
    """Momentum, scalar second moment, and step counter of one point under Adam-G."""

    tau: TangentVector
    v: float = 0.0
    t: int = 0
    hyper: AdamGHyper = field(default_factory=AdamGHyper)

    @staticmethod
    def init(y: GrassmannPoint, hyper: AdamGHyper | None = None) -> "AdamGState":
        return AdamGState(manifold.zero_tangent(y), 0.0, 0, hyper or AdamGHyper())


@dataclass(frozen=True)
class EuclideanSgdState:
    """Velocity state of one Euclidean parameter array."""

    velocity: np.ndarray
    hyper: EuclideanHyper = field(default_factory=EuclideanHyper)

    @staticmethod
    def init(w: np.ndarray, hyper: EuclideanHyper | None = None) -> "EuclideanSgdState":
        return EuclideanSgdState(np.zeros_like(w, dtype=np.float64), hyper or EuclideanHyper())


@dataclass(frozen=True)
class LrSchedule:
    """Piecewise-constant decay: the rate is multiplied by ``factor`` at each milestone."""

    initial: float
    milestones: tuple[int, ...] = ()
    factor: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "milestones", tuple(self.milestones))
        if self.initial <= 0.0:
            raise PreconditionError(f"initial rate must be positive, got {self.initial}")
        if not 0.0 < self.factor <= 1.0:
            raise PreconditionError(f"factor must be in (0, 1], got {self.factor}")
        if any(b <= a for a, b in zip(self.milestones, self.milestones[1:])):
            raise PreconditionError(f"milestones must be strictly increasing, got {self.milestones}")


def schedule_lr(schedule: LrSchedule, epoch: int) -> float:
    """Rate at ``epoch``: initial * factor^(number of milestones <= epoch)."""
    if epoch < 0:
        raise PreconditionError(f"epoch must be nonnegative, got {epoch}")
    k = bisect.bisect_right(schedule.milestones, epoch)
    return schedule.initial * schedule.factor**k


def _checked_gradient(g, y: GrassmannPoint) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if not np.isfinite(g).all():
        raise NumericalError(f"non-finite gradient for a point of dimension {y.dim}")
    return g


def sgdg_step(
    y: GrassmannPoint, g, state: SgdGState, lr: float
) -> tuple[GrassmannPoint, SgdGState]:
    """One SGD-with-momentum step on G(1, n).

    Project the ambient gradient, clip its norm at ``nu``, blend with the
    translated momentum, move by the exponential map, and translate the step
    itself to the new point::

        h  = g - (y^T g) y
        h' = norm_clip(h, nu)
        d  = gamma * tau - lr * h'
        y' = exp_y(d),  tau' = pt_y(d)
    """
    g = _checked_gradient(g, y)
    if lr < 0.0:
        raise PreconditionError(f"learning rate must be nonnegative, got {lr}")
    if not np.array_equal(state.tau.base.y, y.y):
        raise PreconditionError("momentum state belongs to a different point")
    hyper = state.hyper
    h = manifold.project_tangent(y, g)
    h_hat = manifold.norm_clip(h, hyper.nu)
    d = TangentVector(hyper.gamma * state.tau.v - lr * h_hat.v, y)
    y_new = manifold.exp_map(y, d)
    tau_new = manifold.parallel_translate_self(y, d)
    return y_new, SgdGState(tau_new, hyper)


def adamg_step(
    y: GrassmannPoint, g, state: AdamGState, lr: float
) -> tuple[GrassmannPoint, AdamGState]:
    """One Adam step on G(1, n) with a single adaptive rate per point.

    The second moment ``v`` is the scalar EMA of the clipped gradient's squared
    norm, so the update direction is never distorted coordinate-wise::

        eta_t = lr * sqrt(1 - beta2^t) / (1 - beta1^t)
        h'    = norm_clip(project(g), nu)
        m     = beta1 * tau + (1 - beta1) * h'
        v     = beta2 * v + (1 - beta2) * h'^T h'
        d     = -eta_t * m / sqrt(v + eps)
        y'    = exp_y(d),  tau' = pt_y(m; d)
    """
    g = _checked_gradient(g, y)
    if lr < 0.0:
        raise PreconditionError(f"learning rate must be nonnegative, got {lr}")
    if not np.array_equal(state.tau.base.y, y.y):
        raise PreconditionError("momentum state belongs to a different point")
    hyper = state.hyper
    t = state.t + 1
    eta_t = lr * np.sqrt(1.0 - hyper.beta2**t) / (1.0 - hyper.beta1**t)
    h = manifold.project_tangent(y, g)
    h_hat = manifold.norm_clip(h, hyper.nu)
    m = TangentVector(hyper.beta1 * state.tau.v + (1.0 - hyper.beta1) * h_hat.v, y)
    v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * float(h_hat.v @ h_hat.v)
    d = TangentVector(-eta_t / np.sqrt(v + hyper.epsilon) * m.v, y)
    y_new = manifold.exp_map(y, d)
    tau_new = manifold.parallel_translate(y, m, d)
    return y_new, AdamGState(tau_new, v, t, hyper)


def euclidean_sgd_step(
    w: np.ndarray,
    g: np.ndarray,
    state: EuclideanSgdState,
    lr: float,
    apply_weight_decay: bool = True,
) -> tuple[np.ndarray, EuclideanSgdState]:
    """One SGD step with (optionally Nesterov) momentum on a Euclidean parameter.

    The L2 term ``weight_decay * w`` is folded into the gradient before the
    momentum update. Arrays of any shape are accepted; the velocity mirrors
    the parameter's shape.
    """
    w = np.asarray(w, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if w.shape != g.shape:
        raise PreconditionError(f"parameter shape {w.shape} != gradient shape {g.shape}")
    if state.velocity.shape != w.shape:
        raise PreconditionError(
            f"velocity shape {state.velocity.shape} != parameter shape {w.shape}"
        )
    if not np.isfinite(g).all():
        raise NumericalError("non-finite gradient for a Euclidean parameter")
    hyper = state.hyper
    if apply_weight_decay and hyper.weight_decay != 0.0:
        g = g + hyper.weight_decay * w
    v = hyper.momentum * state.velocity + g
    update = g + hyper.momentum * v if hyper.nesterov else v
    return w - lr * update, EuclideanSgdState(v, hyper)
