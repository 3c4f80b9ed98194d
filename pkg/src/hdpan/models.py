"""Classifier/discriminator network construction, inference, and checkpoints.

Two architectures are supported: a three-layer MLP (two hidden layers plus
the output layer) for flat grayscale inputs, and a fixed small CNN for
28x28x3 inputs.  Both end in a sigmoid, so a forward pass over a batch
yields one probability-of-positive per sample, clamped away from 0/1 before
any loss sees it.  Weights are Glorot-uniform, biases zero, fully
determined by the seed.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field

import numpy as np

from .compute import Affine, Conv2d, Flatten, Param, ReLU, Sigmoid, Tensor
from .divergence import EPS

CHECKPOINT_MAGIC = "hdpan-checkpoint v1"


@dataclass(frozen=True)
class MlpSpec:
    """Three-layer MLP: input -> hidden[0] -> hidden[1] -> 1."""

    input_dim: int
    hidden: tuple[int, int] = (300, 300)
    output_dim: int = 1

    def __post_init__(self):
        if self.input_dim <= 0 or any(h <= 0 for h in self.hidden):
            raise ValueError("dimensions must be positive")
        if len(self.hidden) != 2:
            raise ValueError("exactly two hidden layers")
        if self.output_dim != 1:
            raise ValueError("output dim is fixed at 1")


@dataclass(frozen=True)
class CnnSpec:
    """The fixed conv stack for 28x28x3 inputs.

    (28x28x3) -> conv3x3x84 -> conv3x3x84 /2 -> conv1x1x168 -> conv1x1x8
    -> dense 1000 -> dense 1000 -> dense 1, ReLU between all hidden layers,
    sigmoid on the output.  The flatten feeds 14*14*8 = 1568 units into the
    first dense layer.
    """

    in_h: int = 28
    in_w: int = 28
    in_c: int = 3
    conv_channels: tuple[int, ...] = (84, 84, 168, 8)
    dense: tuple[int, ...] = (1000, 1000)


class Model:
    """An ordered layer stack ending in a sigmoid, producing Bernoulli probs.

    forward() clamps the sigmoid outputs to [EPS, 1-EPS]; backward() takes
    the loss gradient w.r.t. those clamped probabilities (one value per
    sample) and populates every Param's grad, returning the gradient w.r.t.
    the input batch.
    """

    def __init__(self, spec, layers: list, params: list[Param]):
        self.spec = spec
        self.layers = layers
        self.params = params
        self._clamp_mask = None

    def _prepare(self, batch: Tensor) -> Tensor:
        if isinstance(self.spec, MlpSpec):
            flat = batch.reshape(batch.shape[0], -1)
            if flat.shape[1] != self.spec.input_dim:
                raise ValueError(
                    f"batch flattens to {flat.shape[1]} features, "
                    f"spec wants {self.spec.input_dim}"
                )
            return flat
        if batch.ndim != 4:
            raise ValueError(f"cnn expects (N, H, W, C), got shape {batch.shape}")
        return batch

    def forward(self, batch: Tensor) -> np.ndarray:
        x = self._prepare(batch)
        for layer in self.layers:
            x = layer.forward(x)
        raw = x.reshape(-1)
        probs = np.clip(raw, EPS, 1.0 - EPS)
        self._clamp_mask = (raw > EPS) & (raw < 1.0 - EPS)
        return probs

    def backward(self, outgrad: np.ndarray) -> Tensor:
        # clamp has zero slope outside [EPS, 1-EPS]
        g = np.where(self._clamp_mask, outgrad, 0.0)
        up = g.reshape(-1, 1).astype(self.params[0].value.dtype)
        for layer in reversed(self.layers):
            up = layer.backward(up)
        return up

    def param_count(self) -> int:
        return sum(p.value.size for p in self.params)


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def build_mlp(spec: MlpSpec, seed: int, dtype=np.float32) -> Model:
    rng = np.random.default_rng(seed)
    dims = [spec.input_dim, *spec.hidden, spec.output_dim]
    layers: list = []
    params: list[Param] = []
    for i, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
        w = Param(_glorot(rng, (d_in, d_out), d_in, d_out, dtype))
        b = Param(np.zeros(d_out, dtype=dtype))
        params += [w, b]
        layers.append(Affine(w, b))
        layers.append(Sigmoid() if i == len(dims) - 2 else ReLU())
    return Model(spec, layers, params)


def build_cnn(seed: int, dtype=np.float32, spec: CnnSpec = CnnSpec()) -> Model:
    rng = np.random.default_rng(seed)
    layers: list = []
    params: list[Param] = []

    def conv(kh, kw, c_in, c_out, stride, pad):
        k = Param(
            _glorot(rng, (kh, kw, c_in, c_out), kh * kw * c_in, kh * kw * c_out, dtype)
        )
        b = Param(np.zeros(c_out, dtype=dtype))
        params.extend([k, b])
        layers.append(Conv2d(k, b, stride=stride, pad=pad))
        layers.append(ReLU())

    c1, c2, c3, c4 = spec.conv_channels
    conv(3, 3, spec.in_c, c1, stride=1, pad=1)
    conv(3, 3, c1, c2, stride=2, pad=1)
    conv(1, 1, c2, c3, stride=1, pad=0)
    conv(1, 1, c3, c4, stride=1, pad=0)
    layers.append(Flatten())

    flat_dim = (spec.in_h // 2) * (spec.in_w // 2) * c4
    dims = [flat_dim, *spec.dense, 1]
    for i, (d_in, d_out) in enumerate(zip(dims, dims[1:])):
        w = Param(_glorot(rng, (d_in, d_out), d_in, d_out, dtype))
        b = Param(np.zeros(d_out, dtype=dtype))
        params += [w, b]
        layers.append(Affine(w, b))
        layers.append(Sigmoid() if i == len(dims) - 2 else ReLU())
    return Model(spec, layers, params)


def saliency(model: Model, image: Tensor) -> np.ndarray:
    """Input-gradient heatmap in [0, 1] of shape (H, W).

    Gradient of the output probability w.r.t. the input pixels, absolute
    value, max over channels, then min-max normalized (an all-constant map
    normalizes to zeros).
    """
    if image.ndim == 3:
        batch = image[None, ...]
        h, w = image.shape[:2]
    elif image.ndim == 2:
        batch = image[None, ..., None]
        h, w = image.shape
    else:
        raise ValueError(f"expected (H, W) or (H, W, C) image, got {image.shape}")

    dtype = model.params[0].value.dtype
    model.forward(batch.astype(dtype))
    in_grad = model.backward(np.ones(1))
    for p in model.params:
        p.grad[...] = 0.0

    g = np.abs(np.asarray(in_grad, dtype=np.float64)).reshape(1, h, w, -1)
    heat = g.max(axis=3)[0]
    lo, hi = heat.min(), heat.max()
    if hi > lo:
        heat = (heat - lo) / (hi - lo)
    else:
        heat = np.zeros_like(heat)
    return heat


def _spec_header_lines(spec) -> list[str]:
    if isinstance(spec, MlpSpec):
        return [
            "arch mlp",
            f"input_dim {spec.input_dim}",
            "hidden " + " ".join(str(h) for h in spec.hidden),
        ]
    return [
        "arch cnn",
        f"input {spec.in_h} {spec.in_w} {spec.in_c}",
        "conv_channels " + " ".join(str(c) for c in spec.conv_channels),
        "dense " + " ".join(str(d) for d in spec.dense),
    ]


def save_model(model: Model, path, config_hash: str = "-") -> None:
    """Write a checkpoint: text header, 'data' marker, raw tensor bytes.

    Tensors are stored little-endian in parameter order; the round trip is
    bit-exact.
    """
    dtype = np.dtype(model.params[0].value.dtype)
    lines = [CHECKPOINT_MAGIC]
    lines += _spec_header_lines(model.spec)
    lines.append(f"dtype {dtype.name}")
    lines.append(f"config_hash {config_hash}")
    lines.append(f"tensors {len(model.params)}")
    for p in model.params:
        lines.append("shape " + " ".join(str(d) for d in p.value.shape))
    lines.append("data")
    blob = io.BytesIO()
    blob.write(("\n".join(lines) + "\n").encode("utf-8"))
    le = dtype.newbyteorder("<")
    for p in model.params:
        blob.write(np.ascontiguousarray(p.value, dtype=le).tobytes())
    with open(path, "wb") as fh:
        fh.write(blob.getvalue())


def load_model(path) -> tuple[Model, str]:
    """Rebuild a Model from a checkpoint; returns (model, config_hash)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    marker = b"\ndata\n"
    split = raw.find(marker)
    if split < 0:
        raise ValueError(f"{path}: not a checkpoint (missing data marker)")
    header = raw[:split].decode("utf-8").splitlines()
    body = raw[split + len(marker) :]
    if not header or header[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: bad checkpoint magic")

    fields = {}
    shapes = []
    for line in header[1:]:
        key, _, rest = line.partition(" ")
        if key == "shape":
            shapes.append(tuple(int(d) for d in rest.split()))
        else:
            fields[key] = rest

    dtype = np.dtype(fields["dtype"])
    if fields["arch"] == "mlp":
        spec = MlpSpec(
            input_dim=int(fields["input_dim"]),
            hidden=tuple(int(h) for h in fields["hidden"].split()),
        )
        model = build_mlp(spec, seed=0, dtype=dtype)
    elif fields["arch"] == "cnn":
        in_h, in_w, in_c = (int(v) for v in fields["input"].split())
        spec = CnnSpec(
            in_h=in_h,
            in_w=in_w,
            in_c=in_c,
            conv_channels=tuple(int(c) for c in fields["conv_channels"].split()),
            dense=tuple(int(d) for d in fields["dense"].split()),
        )
        model = build_cnn(seed=0, dtype=dtype, spec=spec)
    else:
        raise ValueError(f"unknown arch {fields['arch']!r}")

    if int(fields["tensors"]) != len(model.params):
        raise ValueError("tensor count does not match architecture")
    le = dtype.newbyteorder("<")
    offset = 0
    for p, shape in zip(model.params, shapes):
        if p.value.shape != shape:
            raise ValueError(f"shape mismatch: {p.value.shape} vs stored {shape}")
        n = int(np.prod(shape)) * dtype.itemsize
        chunk = body[offset : offset + n]
        if len(chunk) != n:
            raise ValueError("checkpoint truncated")
        p.value = np.frombuffer(chunk, dtype=le).astype(dtype).reshape(shape).copy()
        p.grad = np.zeros_like(p.value)
        offset += n
    if offset != len(body):
        raise ValueError("trailing bytes after tensors")
    _rebind_params(model)
    return model, fields.get("config_hash", "-")


def _rebind_params(model: Model) -> None:
    # layers hold the same Param objects; loading replaced .value in place,
    # so nothing to rewire — kept as an explicit invariant check instead
    layer_params = []
    for layer in model.layers:
        for attr in ("w", "b", "k"):
            p = getattr(layer, attr, None)
            if isinstance(p, Param):
                layer_params.append(p)
    assert all(any(p is q for q in model.params) for p in layer_params)


def config_fingerprint(text: str) -> str:
    """Short stable hash of a config document, echoed by reports."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
