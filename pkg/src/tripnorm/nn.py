"""Dense networks with hand-written backward passes.

Everything runs in float64. Parameters are exposed as a flat list
``[W0, b0, W1, b1, ...]`` of arrays that the optimiser updates in place;
gradient lists use the same order.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import CorruptFileError, NumericError, ShapeMismatchError

ENCODER_WIDTHS = (3, 64, 64, 128, 1024)
ESTIMATOR_WIDTHS = (1024, 512, 256, 3)
LATENT_DIM = 1024
ACTIVATIONS = ("none", "relu")


@dataclass(eq=False)
class DenseLayer:
    W: np.ndarray  # (out, in)
    b: np.ndarray  # (out,)
    activation: str = "relu"

    @property
    def shape(self):
        return self.W.shape


def init_weights(widths, seed=0, final_activation="none"):
    """Uniform He init for relu layers, Xavier for the linear output layer.

    Hidden layers are relu; the last layer uses ``final_activation``. Biases
    start at zero.
    """
    widths = [int(w) for w in widths]
    if len(widths) < 2 or min(widths) < 1:
        raise ValueError(f"invalid layer widths {widths}")
    rng = np.random.default_rng(seed)
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        act = final_activation if i == len(widths) - 2 else "relu"
        if act == "relu":
            bound = np.sqrt(6.0 / fan_in)
        else:
            bound = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(DenseLayer(W, np.zeros(fan_out), act))
    return layers


def _forward_stack(layers, X):
    inputs, pre = [], []
    for layer in layers:
        inputs.append(X)
        Z = X @ layer.W.T + layer.b
        pre.append(Z)
        X = np.maximum(Z, 0.0) if layer.activation == "relu" else Z
    return X, (inputs, pre)


def _backward_stack(layers, cache, dOut, input_grad=False):
    inputs, pre = cache
    grads = [None] * (2 * len(layers))
    d = dOut
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation == "relu":
            d = d * (pre[i] > 0)
        grads[2 * i] = d.T @ inputs[i]
        grads[2 * i + 1] = d.sum(axis=0)
        if i or input_grad:
            d = d @ layer.W
    return (grads, d) if input_grad else grads


class _Net:
    layers: list

    def params(self):
        out = []
        for layer in self.layers:
            out.extend((layer.W, layer.b))
        return out

    @property
    def widths(self):
        return (self.layers[0].W.shape[1],) + tuple(l.W.shape[0] for l in self.layers)

    def copy(self):
        clone = object.__new__(type(self))
        clone.layers = [DenseLayer(l.W.copy(), l.b.copy(), l.activation) for l in self.layers]
        return clone

    def digest(self) -> str:
        h = hashlib.sha256()
        for p in self.params():
            h.update(np.ascontiguousarray(p, dtype="<f8").tobytes())
        return h.hexdigest()

    def save(self, path):
        save_weights(self, path)


class EncoderNet(_Net):
    """Shared per-point MLP followed by a coordinate-wise max over points."""

    def __init__(self, layers):
        if layers[0].W.shape[1] != 3:
            raise ShapeMismatchError(f"encoder input width must be 3, got {layers[0].W.shape[1]}")
        if layers[-1].W.shape[0] != LATENT_DIM:
            raise ShapeMismatchError(
                f"encoder latent width must be {LATENT_DIM}, got {layers[-1].W.shape[0]}")
        self.layers = layers

    @classmethod
    def create(cls, seed=0, widths=ENCODER_WIDTHS):
        return cls(init_weights(widths, seed, final_activation="relu"))

    @classmethod
    def load(cls, path):
        return cls(load_weights(path))

    def forward(self, patches):
        """Latents for a ``(k, 3)`` patch or a ``(B, k, 3)`` batch.

        Returns ``(latent, cache)``.
        """
        patches = np.asarray(patches, dtype=np.float64)
        single = patches.ndim == 2
        if single:
            patches = patches[None]
        if patches.ndim != 3 or patches.shape[2] != 3:
            raise ShapeMismatchError(f"expected (B, k, 3) patches, got {patches.shape}")
        B, k, _ = patches.shape
        hidden, stack_cache = _forward_stack(self.layers[:-1], patches.reshape(B * k, 3))
        last = self.layers[-1]
        Z = (hidden @ last.W.T + last.b).reshape(B, k, -1)
        argmax = Z.argmax(axis=1)
        zmax = np.take_along_axis(Z, argmax[:, None, :], axis=1)[:, 0, :]
        latent = np.maximum(zmax, 0.0)
        cache = (stack_cache, hidden.reshape(B, k, -1), argmax, zmax > 0, single)
        return (latent[0] if single else latent), cache

    def backward(self, cache, dlatent):
        stack_cache, hidden, argmax, active, single = cache
        dlatent = np.asarray(dlatent, dtype=np.float64)
        if single:
            dlatent = dlatent[None]
        B, k, D = hidden.shape
        dW, db, dH = _kernels.maxpool_backward(dlatent, argmax, active, hidden, self.layers[-1].W)
        grads = _backward_stack(self.layers[:-1], stack_cache, dH.reshape(B * k, D))
        return grads + [dW, db]


class EstimatorNet(_Net):
    """Latent-to-normal regressor with unit-normalised output."""

    def __init__(self, layers):
        if layers[0].W.shape[1] != LATENT_DIM:
            raise ShapeMismatchError(
                f"estimator input width must be {LATENT_DIM}, got {layers[0].W.shape[1]}")
        if layers[-1].W.shape[0] != 3:
            raise ShapeMismatchError(
                f"estimator output width must be 3, got {layers[-1].W.shape[0]}")
        self.layers = layers

    @classmethod
    def create(cls, seed=0, widths=ESTIMATOR_WIDTHS):
        return cls(init_weights(widths, seed, final_activation="none"))

    @classmethod
    def load(cls, path):
        return cls(load_weights(path))

    def forward(self, latent):
        latent = np.asarray(latent, dtype=np.float64)
        single = latent.ndim == 1
        if single:
            latent = latent[None]
        if not np.all(np.isfinite(latent)):
            raise NumericError("non-finite latent fed to the estimator")
        raw, stack_cache = _forward_stack(self.layers, latent)
        norm = np.linalg.norm(raw, axis=1, keepdims=True)
        if np.any(norm < 1e-12):
            raise NumericError("estimator output too small to normalise")
        out = raw / norm
        cache = (stack_cache, out, norm, single)
        return (out[0] if single else out), cache

    def backward(self, cache, dout, return_input_grad=False):
        stack_cache, out, norm, single = cache
        dout = np.asarray(dout, dtype=np.float64)
        if single:
            dout = dout[None]
        draw = (dout - out * np.sum(out * dout, axis=1, keepdims=True)) / norm
        if not return_input_grad:
            return _backward_stack(self.layers, stack_cache, draw)
        grads, dlatent = _backward_stack(self.layers, stack_cache, draw, input_grad=True)
        return grads, (dlatent[0] if single else dlatent)


# ---------------------------------------------------------------------------
# optimisation
# ---------------------------------------------------------------------------


class SGD:
    """Classic momentum: ``v = momentum * v + g; p -= lr * v``."""

    def __init__(self, lr=0.01, momentum=0.9):
        self.lr = float(lr)
        self.momentum = float(momentum)
        self.velocity = None

    def step(self, params, grads) -> bool:
        """Update ``params`` in place. Returns ``False`` (and skips) on non-finite grads."""
        if len(params) != len(grads):
            raise ShapeMismatchError("parameter and gradient lists differ in length")
        for p, g in zip(params, grads):
            if p.shape != g.shape:
                raise ShapeMismatchError(f"gradient shape {g.shape} != parameter {p.shape}")
        if not all(np.all(np.isfinite(g)) for g in grads):
            return False
        if self.velocity is None:
            self.velocity = [np.zeros_like(p) for p in params]
        for p, g, v in zip(params, grads, self.velocity):
            v *= self.momentum
            v += g
            p -= self.lr * v
        return True

    def state_dict(self):
        return {"lr": self.lr, "momentum": self.momentum,
                "velocity": None if self.velocity is None else [v.copy() for v in self.velocity]}

    def load_state_dict(self, state):
        self.lr = float(state["lr"])
        self.momentum = float(state["momentum"])
        vel = state["velocity"]
        self.velocity = None if vel is None else [np.array(v, dtype=np.float64) for v in vel]


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` flat epochs."""

    def __init__(self, lr=0.01, factor=0.1, patience=3, threshold=1e-12):
        if not lr > 0:
            raise ValueError("learning rate must be positive")
        self.lr = float(lr)
        self.factor = float(factor)
        self.patience = int(patience)
        self.threshold = float(threshold)
        self.best = np.inf
        self.stagnant = 0

    def update(self, metric: float) -> float:
        if metric < self.best - self.threshold:
            self.best = float(metric)
            self.stagnant = 0
        else:
            self.stagnant += 1
            if self.stagnant >= self.patience:
                self.lr *= self.factor
                self.stagnant = 0
        return self.lr

    def state_dict(self):
        return {"lr": self.lr, "factor": self.factor, "patience": self.patience,
                "threshold": self.threshold, "best": self.best, "stagnant": self.stagnant}

    def load_state_dict(self, state):
        for key in ("lr", "factor", "threshold", "best"):
            setattr(self, key, float(state[key]))
        self.patience = int(state["patience"])
        self.stagnant = int(state["stagnant"])


# ---------------------------------------------------------------------------
# weight files
# ---------------------------------------------------------------------------

WEIGHTS_MAGIC = b"TNWTS001"


def save_weights(net, path) -> None:
    layers = net.layers if hasattr(net, "layers") else net
    with open(Path(path), "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<I", len(layers)))
        for layer in layers:
            rows, cols = layer.W.shape
            fh.write(struct.pack("<IIB", rows, cols, ACTIVATIONS.index(layer.activation)))
        for layer in layers:
            fh.write(np.ascontiguousarray(layer.W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(layer.b, dtype="<f8").tobytes())


def load_weights(path) -> list[DenseLayer]:
    data = Path(path).read_bytes()
    if data[:8] != WEIGHTS_MAGIC:
        raise CorruptFileError(f"{path}: not a weight file")
    try:
        (count,) = struct.unpack_from("<I", data, 8)
        off = 12
        shapes = []
        for _ in range(count):
            rows, cols, tag = struct.unpack_from("<IIB", data, off)
            off += 9
            if tag >= len(ACTIVATIONS):
                raise CorruptFileError(f"{path}: unknown activation tag {tag}")
            shapes.append((rows, cols, ACTIVATIONS[tag]))
    except struct.error:
        raise CorruptFileError(f"{path}: truncated header") from None
    expected = off + sum(8 * r * (c + 1) for r, c, _ in shapes)
    if len(data) != expected:
        raise CorruptFileError(f"{path}: expected {expected} bytes, found {len(data)}")
    layers = []
    prev_out = None
    for rows, cols, act in shapes:
        if prev_out is not None and cols != prev_out:
            raise CorruptFileError(f"{path}: inconsistent layer chain")
        W = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
        off += 8 * rows * cols
        b = np.frombuffer(data, dtype="<f8", count=rows, offset=off)
        off += 8 * rows
        layers.append(DenseLayer(W.astype(np.float64), b.astype(np.float64), act))
        prev_out = rows
    return layers
