"""The training loop: partitioned updates of Grassmann points and Euclidean parameters.

One train step runs forward/backward once, adds the orthogonality penalty's
gradient to the ambient gradients of partitioned columns, steps every
Grassmann point with SGD-G or Adam-G, and steps the remaining parameters with
the Euclidean baseline. The baseline optimizer ("sgd") skips the partition and
treats every parameter as Euclidean.
"""

from dataclasses import dataclass

import numpy as np

from .. import optim
from ..errors import PreconditionError
from ..manifold import GrassmannPoint, geodesic_angle
from ..regularizer import LayerColumns, ortho_grad, ortho_loss
from .network import EuclideanRef, Network, Partition, partition_parameters

__all__ = ["StepStats", "EpochStats", "Trainer", "GRASSMANN_OPTIMIZERS", "OPTIMIZERS"]

GRASSMANN_OPTIMIZERS = ("sgd-g", "adam-g")
OPTIMIZERS = ("sgd",) + GRASSMANN_OPTIMIZERS


@dataclass
class StepStats:
    loss: float
    ortho_loss: float
    mean_angle: float
    max_angle: float
    max_sgdg_contribution: float
    max_grad_norm: float


@dataclass
class EpochStats:
    steps: int = 0
    loss_sum: float = 0.0
    angle_sum: float = 0.0
    max_angle: float = 0.0
    max_sgdg_contribution: float = 0.0
    max_grad_norm: float = 0.0

    def add(self, s: StepStats) -> None:
        self.steps += 1
        self.loss_sum += s.loss
        self.angle_sum += s.mean_angle
        self.max_angle = max(self.max_angle, s.max_angle)
        self.max_sgdg_contribution = max(self.max_sgdg_contribution, s.max_sgdg_contribution)
        self.max_grad_norm = max(self.max_grad_norm, s.max_grad_norm)

    @property
    def mean_angle(self) -> float:
        return self.angle_sum / self.steps if self.steps else 0.0

    @property
    def mean_loss(self) -> float:
        return self.loss_sum / self.steps if self.steps else 0.0


class Trainer:
    """Owns the optimizer states for one network and applies train steps.

    ``bn_weight_decay=None`` resolves to the per-optimizer default: the
    Euclidean baseline decays BN offsets/scales, the Grassmann optimizers do
    not.
    """

    def __init__(
        self,
        net: Network,
        optimizer: str = "sgd-g",
        *,
        rng: np.random.Generator | None = None,
        eta_e: float = 0.01,
        eta_g: float | None = None,
        gamma: float = 0.9,
        beta1: float = 0.9,
        beta2: float = 0.99,
        nu: float = 0.1,
        alpha: float = 0.1,
        weight_decay: float = 0.0005,
        nesterov: bool = True,
        bn_weight_decay: bool | None = None,
    ):
        if optimizer not in OPTIMIZERS:
            raise PreconditionError(f"unknown optimizer {optimizer!r}, expected one of {OPTIMIZERS}")
        self.net = net
        self.optimizer = optimizer
        self.rng = rng if rng is not None else np.random.default_rng(0)
        if eta_g is None:
            eta_g = 0.2 if optimizer == "sgd-g" else 0.05
        self.eta_e = float(eta_e)
        self.eta_g = float(eta_g)
        self.alpha = float(alpha)
        if bn_weight_decay is None:
            bn_weight_decay = optimizer == "sgd"
        self.decay_groups = {"weight": True, "bias": True, "bn": bool(bn_weight_decay)}

        self.euclid_hyper = optim.EuclideanHyper(
            eta=eta_e, momentum=0.9, weight_decay=weight_decay, nesterov=nesterov
        )
        self.sgdg_hyper = optim.SgdGHyper(eta=eta_g, gamma=gamma, nu=nu)
        self.adamg_hyper = optim.AdamGHyper(eta=eta_g, beta1=beta1, beta2=beta2, nu=nu)

        full = partition_parameters(net)
        if optimizer == "sgd":
            # Baseline: every parameter is Euclidean, including BN-feeding matrices.
            extra = tuple(
                EuclideanRef(k, self._weight_name(k), "weight") for k in full.grassmann_layers
            )
            self.partition = Partition((), full.euclidean + extra, ())
            self.ortho_layers = full.grassmann_layers  # reported, not optimized
        else:
            self.partition = full
            self.ortho_layers = full.grassmann_layers

        self.point_states: list = []
        for ref in self.partition.points:
            y = self._read_point(ref)
            if optimizer == "sgd-g":
                self.point_states.append(optim.SgdGState.init(y, self.sgdg_hyper))
            else:
                self.point_states.append(optim.AdamGState.init(y, self.adamg_hyper))
        self.euclid_states = [
            optim.EuclideanSgdState.init(self._param(ref), self.euclid_hyper)
            for ref in self.partition.euclidean
        ]

    def _weight_name(self, layer_index: int) -> str:
        layer = self.net.layers[layer_index]
        return "W" if hasattr(layer, "W") else "filters"

    def _param(self, ref) -> np.ndarray:
        return self.net.layers[ref.layer_index].params()[ref.name]

    def _read_point(self, ref) -> GrassmannPoint:
        wm = self.net.layers[ref.layer_index].weight_matrix()
        return GrassmannPoint(wm[:, ref.column].copy())

    def ortho_total(self) -> float:
        """Summed orthogonality penalty over partition-eligible matrices.

        Columns are normalized first so the quantity is defined for the
        baseline as well (where norms drift away from one).
        """
        total = 0.0
        for k in self.ortho_layers:
            wm = self.net.layers[k].weight_matrix()
            cols = wm / np.linalg.norm(wm, axis=0)
            total += ortho_loss(LayerColumns(cols, self.alpha if self.alpha > 0 else 1.0))
        return total

    def train_step(self, bx, by, lr_g: float, lr_e: float) -> StepStats:
        net = self.net
        loss, grads, caches = net.loss_and_grads(bx, by, training=True)

        ortho_total = 0.0
        if self.optimizer in GRASSMANN_OPTIMIZERS and self.alpha > 0:
            for k in self.partition.grassmann_layers:
                wm = net.layers[k].weight_matrix()
                lc = LayerColumns(wm, self.alpha)
                ortho_total += ortho_loss(lc)
                gname = self._weight_name(k)
                grads[k][gname] = grads[k][gname] + ortho_grad(lc).reshape(grads[k][gname].shape)

        angles = []
        max_contrib = 0.0
        max_grad = 0.0
        one_minus_gamma = 1.0 - self.sgdg_hyper.gamma

        for i, ref in enumerate(self.partition.points):
            wm = net.layers[ref.layer_index].weight_matrix()
            gname = self._weight_name(ref.layer_index)
            gcol = grads[ref.layer_index][gname].reshape(wm.shape)[:, ref.column]
            y = GrassmannPoint(wm[:, ref.column].copy())
            gnorm = float(np.linalg.norm(gcol))
            max_grad = max(max_grad, gnorm)
            if self.optimizer == "sgd-g":
                # contribution of this gradient to total rotation: lr*|clip(h)|/(1-gamma)
                proj_sq = max(gnorm**2 - float(y.y @ gcol) ** 2, 0.0)
                h_norm = min(np.sqrt(proj_sq), self.sgdg_hyper.nu)
                max_contrib = max(max_contrib, lr_g * h_norm / one_minus_gamma)
                y_new, self.point_states[i] = optim.sgdg_step(y, gcol, self.point_states[i], lr_g)
            else:
                y_new, self.point_states[i] = optim.adamg_step(y, gcol, self.point_states[i], lr_g)
            angles.append(geodesic_angle(y, y_new))
            wm[:, ref.column] = y_new.y

        for i, ref in enumerate(self.partition.euclidean):
            arr = self._param(ref)
            g = grads[ref.layer_index][ref.name]
            max_grad = max(max_grad, float(np.linalg.norm(g.ravel())))
            new, self.euclid_states[i] = optim.euclidean_sgd_step(
                arr, g, self.euclid_states[i], lr_e,
                apply_weight_decay=self.decay_groups[ref.group],
            )
            arr[...] = new

        net.apply_running_updates(caches)
        angles_arr = np.asarray(angles) if angles else np.zeros(1)
        return StepStats(
            loss=loss,
            ortho_loss=ortho_total,
            mean_angle=float(angles_arr.mean()),
            max_angle=float(angles_arr.max()),
            max_sgdg_contribution=max_contrib,
            max_grad_norm=max_grad,
        )

    def train_epoch(self, x, labels, batch_size: int, lr_g: float, lr_e: float) -> EpochStats:
        """One shuffled pass over the training split; partial batches below 2 are dropped."""
        if batch_size < 2:
            raise PreconditionError(f"batch_size must be >= 2, got {batch_size}")
        stats = EpochStats()
        perm = self.rng.permutation(x.shape[0])
        for start in range(0, x.shape[0], batch_size):
            idx = perm[start : start + batch_size]
            if idx.shape[0] < 2:
                continue
            stats.add(self.train_step(x[idx], labels[idx], lr_g, lr_e))
        return stats
