"""Networks as ordered layer lists, and the Grassmann/Euclidean parameter partition.

A weight matrix is partitioned onto Grassmann manifolds exactly when it feeds
a batch-normalization layer and is under-complete (more inputs than outputs);
each of its columns then becomes one point on G(1, n). Everything else
(biases, BN offsets/scales, over-complete or BN-free matrices) stays
Euclidean.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NumericalError
from .layers import BatchNormLayer, ConvLayer, DenseLayer, FlattenLayer, ReluLayer, softmax_ce

__all__ = [
    "Network",
    "PointRef",
    "EuclideanRef",
    "Partition",
    "partition_parameters",
    "build_mlp",
    "build_convnet",
    "build_network",
]


@dataclass(frozen=True)
class PointRef:
    """One Grassmann point: column ``column`` of the weight matrix of layer ``layer_index``."""

    layer_index: int
    column: int
    dim: int


@dataclass(frozen=True)
class EuclideanRef:
    """One Euclidean parameter array, tagged with its weight-decay group."""

    layer_index: int
    name: str
    group: str  # "weight" | "bias" | "bn"


@dataclass(frozen=True)
class Partition:
    points: tuple[PointRef, ...]
    euclidean: tuple[EuclideanRef, ...]
    grassmann_layers: tuple[int, ...]  # layers whose whole weight matrix is column-partitioned

    def scalar_counts(self, net: "Network") -> tuple[int, int]:
        """(Grassmann scalars counted as point dims, Euclidean scalars)."""
        g = sum(ref.dim for ref in self.points)
        e = sum(net.layers[ref.layer_index].params()[ref.name].size for ref in self.euclidean)
        return g, e


class Network:
    """An ordered stack of layers ending in logits for softmax cross-entropy."""

    def __init__(self, layers, meta=None):
        self.layers = list(layers)
        self.meta = dict(meta or {})

    def forward(self, x, training=False):
        """Run all layers; returns (logits, caches). Pure: no state is touched."""
        caches = []
        out = x
        for layer in self.layers:
            out, cache = layer.forward(out, training=training)
            caches.append(cache)
        return out, caches

    def backward(self, dlogits, caches):
        """Backpropagate from the logits gradient; returns per-layer grad dicts."""
        grads = [None] * len(self.layers)
        dx = dlogits
        for k in range(len(self.layers) - 1, -1, -1):
            dx, grads[k] = self.layers[k].backward(dx, caches[k])
        return grads

    def loss_and_grads(self, x, labels, training=True):
        """Forward, softmax-CE loss, and full backward in one call."""
        logits, caches = self.forward(x, training=training)
        loss, dlogits = softmax_ce(logits, labels)
        if not np.isfinite(loss):
            raise NumericalError("non-finite training loss")
        grads = self.backward(dlogits, caches)
        return loss, grads, caches

    def apply_running_updates(self, caches):
        for layer, cache in zip(self.layers, caches):
            if isinstance(layer, BatchNormLayer):
                layer.update_running(cache)

    def evaluate(self, x, labels, batch_size=256):
        """Eval-mode mean loss and accuracy over a full split."""
        if x.shape[0] == 0:
            return 0.0, 0.0
        total_loss = 0.0
        correct = 0
        for start in range(0, x.shape[0], batch_size):
            bx = x[start : start + batch_size]
            by = labels[start : start + batch_size]
            logits, _ = self.forward(bx, training=False)
            loss, _ = softmax_ce(logits, by)
            total_loss += loss * bx.shape[0]
            correct += int((logits.argmax(axis=1) == by).sum())
        return total_loss / x.shape[0], correct / x.shape[0]


def partition_parameters(net: Network) -> Partition:
    """Assign every trainable array to the Grassmann or Euclidean side.

    The under-complete rule: a Dense/Conv weight matrix whose unrolled form is
    n-by-p with n > p and whose immediate successor is a BN layer contributes
    p Grassmann points of dimension n; everything else is Euclidean.
    """
    points: list[PointRef] = []
    euclid: list[EuclideanRef] = []
    gmats: list[int] = []
    layers = net.layers
    for k, layer in enumerate(layers):
        if isinstance(layer, (DenseLayer, ConvLayer)):
            wname = "W" if isinstance(layer, DenseLayer) else "filters"
            wm = layer.weight_matrix()
            feeds_bn = k + 1 < len(layers) and isinstance(layers[k + 1], BatchNormLayer)
            if feeds_bn and wm.shape[0] > wm.shape[1]:
                gmats.append(k)
                points.extend(PointRef(k, j, wm.shape[0]) for j in range(wm.shape[1]))
            else:
                euclid.append(EuclideanRef(k, wname, "weight"))
            if isinstance(layer, DenseLayer) and layer.bias is not None:
                euclid.append(EuclideanRef(k, "bias", "bias"))
        elif isinstance(layer, BatchNormLayer):
            euclid.append(EuclideanRef(k, "offset", "bn"))
            if layer.scale_trainable:
                euclid.append(EuclideanRef(k, "scale", "bn"))
    return Partition(tuple(points), tuple(euclid), tuple(gmats))


def _fan_in_init(n_in, n_out, rng):
    return rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)


def _unit_columns(matrix, rng):
    for j in range(matrix.shape[1]):
        col = rng.standard_normal(matrix.shape[0])
        matrix[:, j] = col / np.linalg.norm(col)


def _init_grassmann_columns(net: Network, rng) -> None:
    """Re-initialize every Grassmann-partitioned column as a random unit vector."""
    part = partition_parameters(net)
    for k in part.grassmann_layers:
        _unit_columns(net.layers[k].weight_matrix(), rng)


def build_mlp(
    in_dim,
    hidden,
    classes,
    rng,
    freeze_bn_scale=False,
    bn_eps=1e-5,
    bn_momentum=0.1,
):
    """Dense-BN-ReLU stack with a biased linear classifier on top.

    Hidden layers carry no bias (BN's offset takes that role); the classifier
    keeps its bias and never feeds BN.
    """
    layers = []
    d = int(in_dim)
    for h in hidden:
        layers.append(DenseLayer(_fan_in_init(d, h, rng)))
        layers.append(
            BatchNormLayer(h, momentum_stats=bn_momentum, eps_bn=bn_eps,
                           scale_trainable=not freeze_bn_scale)
        )
        layers.append(ReluLayer())
        d = h
    layers.append(DenseLayer(_fan_in_init(d, classes, rng), bias=np.zeros(classes)))
    meta = {
        "kind": "mlp",
        "in_dim": int(in_dim),
        "hidden": [int(h) for h in hidden],
        "classes": int(classes),
        "freeze_bn_scale": bool(freeze_bn_scale),
        "bn_eps": float(bn_eps),
        "bn_momentum": float(bn_momentum),
    }
    net = Network(layers, meta)
    _init_grassmann_columns(net, rng)
    return net


def build_convnet(
    input_shape,
    classes,
    rng,
    channels=(8, 16),
    freeze_bn_scale=False,
    bn_eps=1e-5,
    bn_momentum=0.1,
):
    """Two conv-BN-ReLU blocks (second one stride 2) and a linear classifier."""
    c, h, w = (int(v) for v in input_shape)
    c1, c2 = (int(v) for v in channels)
    layers = [
        ConvLayer(rng.standard_normal((3, 3, c, c1)) / np.sqrt(9 * c), stride=1, padding=1),
        BatchNormLayer(c1, momentum_stats=bn_momentum, eps_bn=bn_eps,
                       scale_trainable=not freeze_bn_scale),
        ReluLayer(),
        ConvLayer(rng.standard_normal((3, 3, c1, c2)) / np.sqrt(9 * c1), stride=2, padding=1),
        BatchNormLayer(c2, momentum_stats=bn_momentum, eps_bn=bn_eps,
                       scale_trainable=not freeze_bn_scale),
        ReluLayer(),
        FlattenLayer(),
    ]
    h2 = (h + 2 - 3) // 2 + 1
    w2 = (w + 2 - 3) // 2 + 1
    flat = c2 * h2 * w2
    layers.append(DenseLayer(_fan_in_init(flat, classes, rng), bias=np.zeros(classes)))
    meta = {
        "kind": "conv",
        "input_shape": [c, h, w],
        "channels": [c1, c2],
        "classes": int(classes),
        "freeze_bn_scale": bool(freeze_bn_scale),
        "bn_eps": float(bn_eps),
        "bn_momentum": float(bn_momentum),
    }
    net = Network(layers, meta)
    _init_grassmann_columns(net, rng)
    return net


def build_network(meta, rng):
    """Rebuild a network from its meta descriptor (fresh random parameters)."""
    kind = meta.get("kind")
    if kind == "mlp":
        return build_mlp(
            meta["in_dim"], meta["hidden"], meta["classes"], rng,
            freeze_bn_scale=meta.get("freeze_bn_scale", False),
            bn_eps=meta.get("bn_eps", 1e-5),
            bn_momentum=meta.get("bn_momentum", 0.1),
        )
    if kind == "conv":
        return build_convnet(
            meta["input_shape"], meta["classes"], rng,
            channels=meta.get("channels", (8, 16)),
            freeze_bn_scale=meta.get("freeze_bn_scale", False),
            bn_eps=meta.get("bn_eps", 1e-5),
            bn_momentum=meta.get("bn_momentum", 0.1),
        )
    raise DimensionError(f"unknown network kind {kind!r}")
