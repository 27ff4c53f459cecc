"""Layer primitives with manual forward and backward passes.

Every layer follows the same protocol: ``forward(x, training)`` returns
``(out, cache)`` without mutating any state, ``backward(dout, cache)`` returns
``(dx, grads)`` where ``grads`` maps parameter names to arrays, and
``params()`` lists the trainable arrays. Batch normalization keeps its running
statistics out of ``forward``; the training loop applies them explicitly via
``update_running`` so that forward passes stay pure (finite differencing
depends on this).
"""

import numpy as np

from ..errors import DimensionError, PreconditionError

__all__ = [
    "DenseLayer",
    "ConvLayer",
    "BatchNormLayer",
    "ReluLayer",
    "FlattenLayer",
    "softmax_ce",
]


class DenseLayer:
    """Fully connected layer ``x @ W (+ bias)``; bias is omitted when feeding BN."""

    def __init__(self, weight, bias=None):
        self.W = np.asarray(weight, dtype=np.float64)
        if self.W.ndim != 2:
            raise DimensionError(f"dense weight must be 2-D, got {self.W.shape}")
        self.bias = None if bias is None else np.asarray(bias, dtype=np.float64)
        if self.bias is not None and self.bias.shape != (self.W.shape[1],):
            raise DimensionError(f"bias shape {self.bias.shape} != ({self.W.shape[1]},)")

    @property
    def n_in(self) -> int:
        return self.W.shape[0]

    @property
    def n_out(self) -> int:
        return self.W.shape[1]

    def weight_matrix(self) -> np.ndarray:
        return self.W

    def params(self) -> dict:
        out = {"W": self.W}
        if self.bias is not None:
            out["bias"] = self.bias
        return out

    def forward(self, x, training=False):
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise DimensionError(f"dense input shape {x.shape} incompatible with W {self.W.shape}")
        out = x @ self.W
        if self.bias is not None:
            out = out + self.bias
        return out, x

    def backward(self, dout, cache):
        x = cache
        grads = {"W": x.T @ dout}
        if self.bias is not None:
            grads["bias"] = dout.sum(axis=0)
        return dout @ self.W.T, grads


class ConvLayer:
    """2-D convolution over NCHW inputs, filters stored as (kh, kw, c_in, c_out).

    The filter bank unrolled to a (kh*kw*c_in, c_out) matrix is the layer's
    weight matrix for partitioning purposes: each output channel is one
    column.
    """

    def __init__(self, filters, stride=1, padding=0):
        self.filters = np.ascontiguousarray(filters, dtype=np.float64)
        if self.filters.ndim != 4:
            raise DimensionError(f"filters must be 4-D (kh, kw, c_in, c_out), got {self.filters.shape}")
        if stride < 1 or padding < 0:
            raise PreconditionError(f"stride must be >= 1 and padding >= 0, got {stride}, {padding}")
        self.stride = int(stride)
        self.padding = int(padding)

    def weight_matrix(self) -> np.ndarray:
        kh, kw, cin, cout = self.filters.shape
        return self.filters.reshape(kh * kw * cin, cout)

    def params(self) -> dict:
        return {"filters": self.filters}

    def _out_hw(self, h, w):
        kh, kw = self.filters.shape[:2]
        ho = (h + 2 * self.padding - kh) // self.stride + 1
        wo = (w + 2 * self.padding - kw) // self.stride + 1
        if ho < 1 or wo < 1:
            raise DimensionError("convolution output would be empty")
        return ho, wo

    def forward(self, x, training=False):
        if x.ndim != 4 or x.shape[1] != self.filters.shape[2]:
            raise DimensionError(f"conv input shape {x.shape} incompatible with filters {self.filters.shape}")
        m, cin, h, w = x.shape
        kh, kw, _, cout = self.filters.shape
        ho, wo = self._out_hw(h, w)
        pad = self.padding
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
        cols = np.empty((m, ho, wo, kh, kw, cin))
        s = self.stride
        for di in range(kh):
            for dj in range(kw):
                patch = xp[:, :, di : di + s * ho : s, dj : dj + s * wo : s]
                cols[:, :, :, di, dj, :] = patch.transpose(0, 2, 3, 1)
        cols2 = cols.reshape(m * ho * wo, kh * kw * cin)
        out = cols2 @ self.weight_matrix()
        out = out.reshape(m, ho, wo, cout).transpose(0, 3, 1, 2)
        return out, (cols2, x.shape)

    def backward(self, dout, cache):
        cols2, x_shape = cache
        m, cin, h, w = x_shape
        kh, kw, _, cout = self.filters.shape
        ho, wo = self._out_hw(h, w)
        dmat = dout.transpose(0, 2, 3, 1).reshape(m * ho * wo, cout)
        dw = (cols2.T @ dmat).reshape(self.filters.shape)
        dcols = (dmat @ self.weight_matrix().T).reshape(m, ho, wo, kh, kw, cin)
        pad = self.padding
        s = self.stride
        dxp = np.zeros((m, cin, h + 2 * pad, w + 2 * pad))
        for di in range(kh):
            for dj in range(kw):
                dxp[:, :, di : di + s * ho : s, dj : dj + s * wo : s] += dcols[
                    :, :, :, di, dj, :
                ].transpose(0, 3, 1, 2)
        dx = dxp[:, :, pad : pad + h, pad : pad + w] if pad else dxp
        return dx, {"filters": dw}


class BatchNormLayer:
    """Batch normalization with per-unit trainable offset and (optionally frozen) scale.

    Train mode normalizes by the mini-batch mean and biased variance; eval mode
    uses running statistics maintained as an exponential moving average with
    the unbiased variance correction. 4-D inputs are normalized per channel.
    """

    def __init__(self, units, momentum_stats=0.1, eps_bn=1e-5, scale_trainable=True):
        if not 0.0 < momentum_stats < 1.0:
            raise PreconditionError(f"momentum_stats must be in (0, 1), got {momentum_stats}")
        if eps_bn <= 0.0:
            raise PreconditionError(f"eps_bn must be positive, got {eps_bn}")
        self.units = int(units)
        self.offset = np.zeros(self.units)
        self.scale = np.ones(self.units)
        self.running_mean = np.zeros(self.units)
        self.running_var = np.ones(self.units)
        self.momentum_stats = float(momentum_stats)
        self.eps_bn = float(eps_bn)
        self.scale_trainable = bool(scale_trainable)

    def params(self) -> dict:
        out = {"offset": self.offset}
        if self.scale_trainable:
            out["scale"] = self.scale
        return out

    def _flatten(self, x):
        if x.ndim == 2:
            if x.shape[1] != self.units:
                raise DimensionError(f"BN expects {self.units} units, got input {x.shape}")
            return x, None
        if x.ndim == 4:
            if x.shape[1] != self.units:
                raise DimensionError(f"BN expects {self.units} channels, got input {x.shape}")
            m, c, h, w = x.shape
            return x.transpose(0, 2, 3, 1).reshape(m * h * w, c), (m, c, h, w)
        raise DimensionError(f"BN input must be 2-D or 4-D, got shape {x.shape}")

    @staticmethod
    def _restore(x2, shape):
        if shape is None:
            return x2
        m, c, h, w = shape
        return x2.reshape(m, h, w, c).transpose(0, 3, 1, 2)

    def forward(self, x, training=False):
        x2, shape = self._flatten(x)
        if training:
            if x2.shape[0] < 2:
                raise PreconditionError(
                    f"train-mode BN needs at least 2 rows per unit, got {x2.shape[0]}"
                )
            mean = x2.mean(axis=0)
            var = x2.var(axis=0)
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps_bn)
        xhat = (x2 - mean) * inv_std
        out = self._restore(self.scale * xhat + self.offset, shape)
        cache = (xhat, inv_std, mean, var, x2.shape[0], shape, training)
        return out, cache

    def update_running(self, cache):
        """Fold the cached batch statistics into the running averages."""
        _, _, mean, var, rows, _, training = cache
        if not training:
            return
        unbiased = var * rows / (rows - 1) if rows > 1 else var
        w = self.momentum_stats
        self.running_mean = (1.0 - w) * self.running_mean + w * mean
        self.running_var = (1.0 - w) * self.running_var + w * unbiased

    def backward(self, dout, cache):
        xhat, inv_std, _, _, rows, shape, training = cache
        if not training:
            raise PreconditionError("BN backward requires a train-mode cache")
        dout2, _ = self._flatten(dout)
        dbeta = dout2.sum(axis=0)
        dgamma = (dout2 * xhat).sum(axis=0)
        dxhat = dout2 * self.scale
        m = float(rows)
        dx2 = (inv_std / m) * (
            m * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0)
        )
        grads = {"offset": dbeta}
        if self.scale_trainable:
            grads["scale"] = dgamma
        return self._restore(dx2, shape), grads


class ReluLayer:
    """Elementwise max(x, 0)."""

    def params(self) -> dict:
        return {}

    def forward(self, x, training=False):
        return np.maximum(x, 0.0), x

    def backward(self, dout, cache):
        return dout * (cache > 0), {}


class FlattenLayer:
    """Collapse all non-batch axes, for conv-to-dense transitions."""

    def params(self) -> dict:
        return {}

    def forward(self, x, training=False):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dout, cache):
        return dout.reshape(cache), {}


def softmax_ce(logits, labels):
    """Mean softmax cross-entropy and its gradient with respect to the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.ndim != 1 or logits.shape[0] != labels.shape[0]:
        raise DimensionError(f"incompatible logits {logits.shape} and labels {labels.shape}")
    m = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    loss = -float(log_probs[np.arange(m), labels].mean())
    dlogits = np.exp(log_probs)
    dlogits[np.arange(m), labels] -= 1.0
    return loss, dlogits / m
