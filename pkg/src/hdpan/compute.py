"""Dense-tensor layers with hand-written forward/backward passes.

Tensors are plain numpy arrays (row-major).  There is no computation graph:
each layer caches what its own backward needs, and a model calls the layers'
backward methods in reverse order.  Parameters default to float32 storage;
reductions accumulate in float64.  The same layers run unchanged in float64,
which is how the finite-difference tests drive them.
"""

from __future__ import annotations

import numpy as np

Tensor = np.ndarray


class Param:
    """A trainable tensor and its gradient accumulator (same shape)."""

    __slots__ = ("value", "grad")

    def __init__(self, value: Tensor):
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def shape(self):
        return self.value.shape


def sgd_step(params: list[Param], lr: float) -> None:
    """value <- value - lr * grad for each param, then zero the grads."""
    for p in params:
        p.value -= (lr * p.grad).astype(p.value.dtype, copy=False)
        p.grad[...] = 0.0


class Affine:
    """y = x @ w + b for x of shape (N, I), w (I, O), b (O,)."""

    def __init__(self, w: Param, b: Param):
        if w.value.ndim != 2 or b.value.shape != (w.value.shape[1],):
            raise ValueError(f"bad affine shapes w={w.value.shape} b={b.value.shape}")
        self.w = w
        self.b = b
        self._x = None

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 2 or x.shape[1] != self.w.value.shape[0]:
            raise ValueError(
                f"affine expects (N, {self.w.value.shape[0]}), got {x.shape}"
            )
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, upstream: Tensor) -> Tensor:
        x = self._x
        self.w.grad += x.T @ upstream
        self.b.grad += upstream.sum(axis=0, dtype=np.float64).astype(self.b.grad.dtype)
        return upstream @ self.w.value.T


class Conv2d:
    """Cross-correlation over NHWC inputs with an (kh, kw, C, F) kernel.

    Supports the architecture's kernel/stride menu (1x1 and 3x3, stride 1
    or 2); padding is explicit.  Output spatial dims follow
    floor((H + 2*pad - kh)/stride) + 1.
    """

    def __init__(self, k: Param, b: Param, stride: int = 1, pad: int = 0):
        if k.value.ndim != 4:
            raise ValueError(f"kernel must be (kh, kw, C, F), got {k.value.shape}")
        if b.value.shape != (k.value.shape[3],):
            raise ValueError(f"bias shape {b.value.shape} != ({k.value.shape[3]},)")
        self.k = k
        self.b = b
        self.stride = stride
        self.pad = pad
        self._xp = None
        self._out_hw = None

    def out_shape(self, h: int, w: int) -> tuple[int, int]:
        kh, kw = self.k.value.shape[:2]
        oh = (h + 2 * self.pad - kh) // self.stride + 1
        ow = (w + 2 * self.pad - kw) // self.stride + 1
        if oh <= 0 or ow <= 0:
            raise ValueError(f"non-positive conv output dims ({oh}, {ow})")
        return oh, ow

    def forward(self, x: Tensor) -> Tensor:
        kh, kw, c_in, f = self.k.value.shape
        if x.ndim != 4 or x.shape[3] != c_in:
            raise ValueError(f"conv expects (N, H, W, {c_in}), got {x.shape}")
        n, h, w, _ = x.shape
        oh, ow = self.out_shape(h, w)
        s, p = self.stride, self.pad
        xp = np.pad(x, ((0, 0), (p, p), (p, p), (0, 0))) if p else x
        self._xp = xp
        self._out_hw = (oh, ow)
        y = np.zeros((n, oh, ow, f), dtype=x.dtype)
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, i : i + s * oh : s, j : j + s * ow : s, :]
                y += patch @ self.k.value[i, j]
        return y + self.b.value

    def backward(self, upstream: Tensor) -> Tensor:
        kh, kw, c_in, f = self.k.value.shape
        xp = self._xp
        oh, ow = self._out_hw
        s, p = self.stride, self.pad
        self.b.grad += upstream.sum(axis=(0, 1, 2), dtype=np.float64).astype(
            self.b.grad.dtype
        )
        dxp = np.zeros_like(xp)
        up_flat = upstream.reshape(-1, f)
        for i in range(kh):
            for j in range(kw):
                patch = xp[:, i : i + s * oh : s, j : j + s * ow : s, :]
                self.k.grad[i, j] += patch.reshape(-1, c_in).T @ up_flat
                dxp[:, i : i + s * oh : s, j : j + s * ow : s, :] += (
                    upstream @ self.k.value[i, j].T
                )
        if p:
            return dxp[:, p:-p, p:-p, :]
        return dxp


class ReLU:
    def __init__(self):
        self._mask = None

    def forward(self, x: Tensor) -> Tensor:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0).astype(x.dtype, copy=False)

    def backward(self, upstream: Tensor) -> Tensor:
        return np.where(self._mask, upstream, 0.0).astype(upstream.dtype, copy=False)


class Sigmoid:
    def __init__(self):
        self._y = None

    def forward(self, x: Tensor) -> Tensor:
        # split by sign to avoid overflow in exp
        y = np.empty_like(x)
        pos = x >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        y[~pos] = ex / (1.0 + ex)
        self._y = y
        return y

    def backward(self, upstream: Tensor) -> Tensor:
        y = self._y
        return upstream * y * (1.0 - y)


class Flatten:
    def __init__(self):
        self._shape = None

    def forward(self, x: Tensor) -> Tensor:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, upstream: Tensor) -> Tensor:
        return upstream.reshape(self._shape)
