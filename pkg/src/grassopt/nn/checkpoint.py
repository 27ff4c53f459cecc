"""Versioned checkpoints: parameters, partition map, optimizer states, BN statistics.

The on-disk format is an ``.npz`` archive holding every float64 array verbatim
plus one JSON header describing the architecture, the partition, the optimizer
hyperparameters, and the scalar optimizer state. Loading rebuilds a
:class:`~grassopt.nn.training.Trainer` whose arrays compare bit-exact with the
saved ones.
"""

import json

import numpy as np

from .. import optim
from ..errors import ValidationError
from ..manifold import TangentVector
from .layers import BatchNormLayer
from .network import build_network
from .training import Trainer

__all__ = ["CHECKPOINT_VERSION", "save_checkpoint", "load_checkpoint"]

CHECKPOINT_VERSION = 1


def _layer_arrays(net):
    for k, layer in enumerate(net.layers):
        for name, arr in layer.params().items():
            yield f"layer{k}.{name}", arr
        if isinstance(layer, BatchNormLayer):
            yield f"layer{k}.running_mean", layer.running_mean
            yield f"layer{k}.running_var", layer.running_var


def save_checkpoint(path, trainer: Trainer) -> None:
    arrays = dict(_layer_arrays(trainer.net))
    point_scalars = []
    for i, (ref, state) in enumerate(zip(trainer.partition.points, trainer.point_states)):
        arrays[f"point{i}.tau"] = state.tau.v
        if trainer.optimizer == "adam-g":
            point_scalars.append({"v": state.v, "t": state.t})
        else:
            point_scalars.append({})
    for i, state in enumerate(trainer.euclid_states):
        arrays[f"euclid{i}.velocity"] = state.velocity

    header = {
        "version": CHECKPOINT_VERSION,
        "net_meta": trainer.net.meta,
        "optimizer": trainer.optimizer,
        "eta_e": trainer.eta_e,
        "eta_g": trainer.eta_g,
        "alpha": trainer.alpha,
        "bn_weight_decay": trainer.decay_groups["bn"],
        "euclid_hyper": vars(trainer.euclid_hyper),
        "sgdg_hyper": vars(trainer.sgdg_hyper),
        "adamg_hyper": vars(trainer.adamg_hyper),
        "partition": {
            "points": [[ref.layer_index, ref.column, ref.dim] for ref in trainer.partition.points],
            "euclidean": [[ref.layer_index, ref.name, ref.group] for ref in trainer.partition.euclidean],
            "grassmann_layers": list(trainer.partition.grassmann_layers),
        },
        "point_scalars": point_scalars,
    }
    with open(path, "wb") as fh:
        np.savez(fh, __header__=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8), **arrays)


def load_checkpoint(path) -> Trainer:
    with np.load(path) as archive:
        header = json.loads(bytes(archive["__header__"]).decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise ValidationError(
                f"unsupported checkpoint version {header.get('version')!r}, expected {CHECKPOINT_VERSION}"
            )
        arrays = {k: archive[k] for k in archive.files if k != "__header__"}

    net = build_network(header["net_meta"], np.random.default_rng(0))
    sg = header["sgdg_hyper"]
    ag = header["adamg_hyper"]
    eh = header["euclid_hyper"]
    trainer = Trainer(
        net,
        header["optimizer"],
        eta_e=header["eta_e"],
        eta_g=header["eta_g"],
        gamma=sg["gamma"],
        beta1=ag["beta1"],
        beta2=ag["beta2"],
        nu=sg["nu"],
        alpha=header["alpha"],
        weight_decay=eh["weight_decay"],
        nesterov=eh["nesterov"],
        bn_weight_decay=header["bn_weight_decay"],
    )

    saved_points = [tuple(entry) for entry in header["partition"]["points"]]
    actual_points = [(r.layer_index, r.column, r.dim) for r in trainer.partition.points]
    saved_euclid = [tuple(entry) for entry in header["partition"]["euclidean"]]
    actual_euclid = [(r.layer_index, r.name, r.group) for r in trainer.partition.euclidean]
    if saved_points != actual_points or saved_euclid != actual_euclid:
        raise ValidationError("checkpoint partition map does not match the rebuilt network")

    for k, layer in enumerate(net.layers):
        for name, arr in layer.params().items():
            arr[...] = arrays[f"layer{k}.{name}"]
        if isinstance(layer, BatchNormLayer):
            layer.running_mean[...] = arrays[f"layer{k}.running_mean"]
            layer.running_var[...] = arrays[f"layer{k}.running_var"]

    for i, ref in enumerate(trainer.partition.points):
        y = trainer._read_point(ref)
        tau = TangentVector(arrays[f"point{i}.tau"], y)
        if trainer.optimizer == "adam-g":
            scal = header["point_scalars"][i]
            trainer.point_states[i] = optim.AdamGState(tau, scal["v"], scal["t"], trainer.adamg_hyper)
        else:
            trainer.point_states[i] = optim.SgdGState(tau, trainer.sgdg_hyper)
    for i in range(len(trainer.euclid_states)):
        trainer.euclid_states[i] = optim.EuclideanSgdState(
            arrays[f"euclid{i}.velocity"], trainer.euclid_hyper
        )
    return trainer
