"""Binary neural network training and inference.

The reference topology is 64-12-4.  Hidden neurons use a hard step
activation H(s) = 1 iff s > 0 with a fixed threshold tau; the output
layer trains with tanh so the loss has a gradient, then the activation
is swapped to the same hard step for deployment.  Hidden-step gradients
use a straight-through estimator.  Training is quantization aware by
default: forward passes see dead-zone quantized weights while gradients
update the latent float weights.

Everything is plain numpy; the whole parameter set is 816 floats, so
there is nothing to gain from a tensor framework here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .arrows import split_arrays
from .errors import ConfigError, DataError, NumericalError, ShapeError

HEAVISIDE = "heaviside"
TANH = "tanh"
_ACTIVATIONS = (HEAVISIDE, TANH)

NET_FORMAT = "acnn-net"
NET_VERSION = 1

# Decision margins below TIE_REL * tau are unresolvable ties and read as
# 0.  Genuine margins on the dead-zone weight grid are at least
# step/|grid| ~ 1e-3 while float accumulation noise sits near 1e-13, so
# the guard cleanly separates real decisions from representation noise
# and keeps software and simulated-hardware decisions provably aligned.
TIE_REL = 1e-9


@dataclass
class QuantSpec:
    """Dead-zone magnitude quantizer.

    Magnitudes below deadzone collapse to exactly zero; surviving
    magnitudes snap to a uniform grid of 2^(bits-1) levels spanning
    [deadzone, w_max] per sign.  With the defaults the largest to
    smallest nonzero magnitude ratio is 10, which bounds the capacitor
    spread a mapped neuron needs.
    """

    bits: int = 8
    deadzone: float = 0.1
    w_max: float = 1.0

    def validate(self) -> None:
        if self.bits < 2 or self.bits > 16:
            raise ConfigError("quantizer bits must be in [2, 16]")
        if not 0 < self.deadzone < self.w_max:
            raise ConfigError("need 0 < deadzone < w_max")

    @property
    def levels_per_sign(self) -> int:
        return 2 ** (self.bits - 1)

    @property
    def step(self) -> float:
        return (self.w_max - self.deadzone) / (self.levels_per_sign - 1)


def quantize_weights(w: np.ndarray, q: QuantSpec) -> np.ndarray:
    """Apply the dead-zone quantizer elementwise.  Idempotent."""
    w = np.asarray(w, dtype=np.float64)
    mag = np.clip(np.abs(w), None, q.w_max)
    idx = np.round((mag - q.deadzone) / q.step)
    snapped = q.deadzone + idx * q.step
    return np.where(mag < q.deadzone, 0.0, np.sign(w) * snapped)


@dataclass
class LayerSpec:
    """Dense layer: weights shaped (n_in, n_out) plus activation name."""

    weights: np.ndarray
    activation: str

    def validate(self) -> None:
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if np.ndim(self.weights) != 2:
            raise ShapeError("layer weights", "(n_in, n_out)", np.shape(self.weights))

    @property
    def n_in(self) -> int:
        return self.weights.shape[0]

    @property
    def n_out(self) -> int:
        return self.weights.shape[1]


@dataclass
class BinaryNet:
    layers: list
    tau: float = 0.1
    quantized: bool = False
    quant: QuantSpec | None = None

    def validate(self) -> None:
        if not self.layers:
            raise ConfigError("net needs at least one layer")
        if self.tau < 0:
            raise ConfigError("tau must be nonnegative")
        for i, layer in enumerate(self.layers):
            layer.validate()
            if i and layer.n_in != self.layers[i - 1].n_out:
                raise DataError(
                    f"layer {i} expects {self.layers[i - 1].n_out} inputs, "
                    f"weights say {layer.n_in}"
                )

    @property
    def shape(self) -> tuple:
        return (self.layers[0].n_in,) + tuple(l.n_out for l in self.layers)

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_in

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_out


@dataclass
class InferResult:
    class_index: int
    ambiguous: bool
    layer_bits: list
    preacts: list


@dataclass
class TrainConfig:
    """Hyperparameters for the reference training run."""

    hidden: int = 12
    epochs: int = 200
    batch_size: int = 64
    tau: float = 0.1
    lr: float = 0.02
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    ste_clip: float = 1.0
    init_scale: float = 0.5
    w_clip: float = 1.0
    quant_aware: bool = True
    cosine_lr: bool = True
    quant: QuantSpec = field(default_factory=QuantSpec)

    def validate(self) -> None:
        if self.epochs < 1:
            raise ConfigError("epochs must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.lr <= 0:
            raise ConfigError("lr must be positive")
        if self.hidden < 1:
            raise ConfigError("hidden must be positive")
        self.quant.validate()


@dataclass
class TrainResult:
    net: BinaryNet
    tanh_net: BinaryNet
    loss_history: list


def _effective_weights(layer_w, cfg):
    if cfg.quant_aware:
        return quantize_weights(layer_w, cfg.quant)
    return layer_w


def forward_bits(net: BinaryNet, x: np.ndarray) -> tuple:
    """Run the hard-threshold forward pass on a batch.

    Returns (list of per-layer bit matrices, list of per-layer
    preactivations).  The final layer's bits are computed with the step
    rule regardless of its activation tag; callers that care about the
    tanh readout use the preactivations.

    Preactivations within TIE_REL * tau of zero count as ties and give
    bit 0.  On the quantized weight grid such values only arise from
    exact rational ties blurred by float rounding, never from real
    margins.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.n_inputs:
        raise ShapeError("input batch", (None, net.n_inputs), x.shape)
    guard = TIE_REL * net.tau
    bits = []
    preacts = []
    h = x
    for layer in net.layers:
        s = h @ layer.weights - net.tau
        b = (s > guard).astype(np.float64)
        preacts.append(s)
        bits.append(b)
        h = b
    return bits, preacts


def classify(net: BinaryNet, x: np.ndarray) -> tuple:
    """Batch class decisions.

    Returns (classes, ambiguous, output_bits).  A tanh output layer
    picks the largest preactivation.  A step output layer expects a
    one-hot pattern; zero or multiple hot bits fall back to the first
    hot bit (class 0 when none), with the ambiguous flag set.  The
    fallback uses bits only, so hardware runs are directly comparable.
    """
    bits, preacts = forward_bits(net, x)
    out_bits = bits[-1].astype(np.uint8)
    if net.layers[-1].activation == TANH:
        s = preacts[-1]
        classes = np.argmax(s, axis=1)
        top = s[np.arange(len(s)), classes]
        ambiguous = (s == top[:, None]).sum(axis=1) > 1
    else:
        hot = out_bits.sum(axis=1)
        classes = np.argmax(out_bits, axis=1)  # first hot bit, 0 if none
        ambiguous = hot != 1
    return classes.astype(np.int64), ambiguous, out_bits


def infer(net: BinaryNet, pixels) -> InferResult:
    """Single-image inference with full bit traces."""
    x = np.asarray(pixels, dtype=np.float64).reshape(1, -1)
    bits, preacts = forward_bits(net, x)
    classes, ambiguous, _ = classify(net, x)
    return InferResult(
        class_index=int(classes[0]),
        ambiguous=bool(ambiguous[0]),
        layer_bits=[b[0].astype(np.uint8) for b in bits],
        preacts=[p[0] for p in preacts],
    )


def accuracy(net: BinaryNet, images) -> float:
    x, y = split_arrays(images)
    classes, _, _ = classify(net, x)
    return float(np.mean(classes == y))


@dataclass
class EvalStats:
    accuracy: float
    per_class: list
    n_ambiguous: int
    n: int


def evaluate(net: BinaryNet, images) -> EvalStats:
    x, y = split_arrays(images)
    classes, ambiguous, _ = classify(net, x)
    per_class = []
    for c in range(net.n_outputs):
        mask = y == c
        per_class.append(float(np.mean(classes[mask] == c)) if mask.any() else 1.0)
    return EvalStats(
        accuracy=float(np.mean(classes == y)),
        per_class=per_class,
        n_ambiguous=int(ambiguous.sum()),
        n=len(y),
    )


class _Adam:
    def __init__(self, shape, cfg):
        self.m = np.zeros(shape)
        self.v = np.zeros(shape)
        self.t = 0
        self.cfg = cfg

    def step(self, w, grad, lr):
        c = self.cfg
        self.t += 1
        self.m = c.beta1 * self.m + (1 - c.beta1) * grad
        self.v = c.beta2 * self.v + (1 - c.beta2) * grad * grad
        mhat = self.m / (1 - c.beta1 ** self.t)
        vhat = self.v / (1 - c.beta2 ** self.t)
        w = w - lr * mhat / (np.sqrt(vhat) + c.eps)
        return np.clip(w, -c.w_clip, c.w_clip)


def train_with_history(split, cfg: TrainConfig | None = None, seed: int = 0) -> TrainResult:
    """Train the 64-hidden-4 net on the train split.

    MSE loss against +/-1 one-hot targets through a tanh readout; the
    hidden step uses a straight-through gradient gated on |s| <=
    ste_clip.  Per-step weight clipping keeps |w| <= w_clip.  Returns
    both the deployable step-output net and the tanh-output twin so the
    swap cost can be measured.
    """
    cfg = cfg or TrainConfig()
    cfg.validate()
    x, y = split_arrays(split.train)
    n, n_in = x.shape
    n_out = int(y.max()) + 1
    targets = -np.ones((n, n_out))
    targets[np.arange(n), y] = 1.0

    rng = np.random.default_rng(seed)
    w1 = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(n_in, cfg.hidden))
    w2 = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(cfg.hidden, n_out))
    opt1 = _Adam(w1.shape, cfg)
    opt2 = _Adam(w2.shape, cfg)

    losses = []
    for epoch in range(cfg.epochs):
        lr = cfg.lr
        if cfg.cosine_lr:
            lr = cfg.lr * 0.5 * (1.0 + math.cos(math.pi * epoch / cfg.epochs))
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, tb = x[idx], targets[idx]
            w1e = _effective_weights(w1, cfg)
            w2e = _effective_weights(w2, cfg)

            s1 = xb @ w1e - cfg.tau
            h = (s1 > 0).astype(np.float64)
            s2 = h @ w2e - cfg.tau
            o = np.tanh(s2)
            err = o - tb
            loss = float(np.mean(err * err))
            epoch_loss += loss * len(idx)

            g_s2 = (2.0 / err.size) * err * (1 - o * o)
            g_w2 = h.T @ g_s2
            g_h = g_s2 @ w2e.T
            g_s1 = g_h * (np.abs(s1) <= cfg.ste_clip)
            g_w1 = xb.T @ g_s1

            w1 = opt1.step(w1, g_w1, lr)
            w2 = opt2.step(w2, g_w2, lr)
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            raise NumericalError(f"training loss diverged at epoch {epoch}")
        losses.append(epoch_loss)

    tanh_net = BinaryNet(
        layers=[LayerSpec(w1.copy(), HEAVISIDE), LayerSpec(w2.copy(), TANH)],
        tau=cfg.tau,
    )
    return TrainResult(
        net=swap_output_to_heaviside(tanh_net),
        tanh_net=tanh_net,
        loss_history=losses,
    )


def train(split, cfg: TrainConfig | None = None, seed: int = 0) -> BinaryNet:
    """Train and return the deployable step-activation net."""
    return train_with_history(split, cfg, seed).net


def swap_output_to_heaviside(net: BinaryNet) -> BinaryNet:
    """Deployment swap: replace the output activation with the step."""
    layers = [replace(l, weights=l.weights.copy()) for l in net.layers]
    layers[-1] = replace(layers[-1], activation=HEAVISIDE)
    return replace(net, layers=layers)


def quantize(net: BinaryNet, q: QuantSpec | None = None) -> BinaryNet:
    """Snap every weight onto the dead-zone grid.  Idempotent."""
    q = q or QuantSpec()
    q.validate()
    layers = [
        replace(l, weights=quantize_weights(l.weights, q)) for l in net.layers
    ]
    return replace(net, layers=layers, quantized=True, quant=q)


def save_net(net: BinaryNet, path) -> None:
    net.validate()
    doc = {
        "format": NET_FORMAT,
        "version": NET_VERSION,
        "tau": net.tau,
        "quantized": net.quantized,
        "quant": None
        if net.quant is None
        else {"bits": net.quant.bits, "deadzone": net.quant.deadzone,
              "w_max": net.quant.w_max},
        "layers": [
            {
                "activation": l.activation,
                "n_in": l.n_in,
                "n_out": l.n_out,
                "weights": l.weights.tolist(),
            }
            for l in net.layers
        ],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_net(path) -> BinaryNet:
    with open(path, "r", encoding="ascii") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"net file is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or doc.get("format") != NET_FORMAT:
        raise DataError("not a net file")
    if doc.get("version") != NET_VERSION:
        raise DataError(f"unsupported net format version {doc.get('version')!r}")
    layers = []
    for i, ld in enumerate(doc["layers"]):
        w = ld["weights"]
        if len(w) != ld["n_in"] or any(len(row) != ld["n_out"] for row in w):
            raise DataError(f"layer {i}: weight matrix does not match declared shape")
        layers.append(
            LayerSpec(np.array(w, dtype=np.float64), ld["activation"])
        )
    qd = doc.get("quant")
    quant = None if qd is None else QuantSpec(**qd)
    net = BinaryNet(
        layers=layers,
        tau=float(doc["tau"]),
        quantized=bool(doc.get("quantized", False)),
        quant=quant,
    )
    net.validate()
    return net
