"""Differentiable layers: explicit forward caches, analytic backward passes.

forward(x) returns (y, cache); backward(cache, gy) returns the input
gradient and stores parameter gradients on the layer (gw / gb). A version
counter invalidates caches that predate the latest parameter update.
"""

import numpy as np

from ..errors import ShapeMismatch, StaleCache
from . import kernels


class Layer:
    """Base: parameter-free layer with cache versioning."""

    def __init__(self):
        self._version = 0

    def params(self):
        return []

    def grads(self):
        return []

    def bump_version(self):
        self._version += 1

    def _check_cache(self, cache):
        if cache[0] is not self:
            raise StaleCache("cache belongs to a different layer")
        if cache[1] != self._version:
            raise StaleCache("parameters changed since forward")


class Conv2d(Layer):
    def __init__(self, in_ch, out_ch, kernel, stride=1, pad=0, dtype=np.float32):
        super().__init__()
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride, self.pad = kernel, stride, pad
        self.w = np.zeros((out_ch, in_ch, kernel, kernel), dtype=dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.gw = None
        self.gb = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [("w", self.gw), ("b", self.gb)]

    def out_hw(self, h, w):
        k, s, p = self.kernel, self.stride, self.pad
        return (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ShapeMismatch(f"conv expects (n, {self.in_ch}, h, w), got {x.shape}")
        y = kernels.conv2d_forward(x, self.w, self.b, self.stride, self.pad)
        return y, (self, self._version, x, y.shape)

    def backward(self, cache, gy):
        self._check_cache(cache)
        _, _, x, out_shape = cache
        if gy.shape != out_shape:
            raise ShapeMismatch(f"grad shape {gy.shape} != forward output {out_shape}")
        self.gw = kernels.conv2d_grad_weight(x, gy, self.stride, self.pad,
                                             self.kernel, self.kernel)
        self.gb = gy.sum(axis=(0, 2, 3))
        return kernels.conv2d_grad_input(gy, self.w, self.stride, self.pad,
                                         x.shape[2], x.shape[3])


class ConvTranspose2d(Layer):
    """Upsampling layer; weight laid out (in_ch, out_ch, k, k)."""

    def __init__(self, in_ch, out_ch, kernel, stride, pad, dtype=np.float32):
        super().__init__()
        self.in_ch, self.out_ch = in_ch, out_ch
        self.kernel, self.stride, self.pad = kernel, stride, pad
        self.w = np.zeros((in_ch, out_ch, kernel, kernel), dtype=dtype)
        self.b = np.zeros(out_ch, dtype=dtype)
        self.gw = None
        self.gb = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def grads(self):
        return [("w", self.gw), ("b", self.gb)]

    def out_hw(self, h, w):
        k, s, p = self.kernel, self.stride, self.pad
        return (h - 1) * s - 2 * p + k, (w - 1) * s - 2 * p + k

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise ShapeMismatch(f"conv_t expects (n, {self.in_ch}, h, w), got {x.shape}")
        oh, ow = self.out_hw(x.shape[2], x.shape[3])
        y = kernels.conv_transpose2d_forward(x, self.w, self.b, self.stride,
                                             self.pad, oh, ow)
        return y, (self, self._version, x, y.shape)

    def backward(self, cache, gy):
        self._check_cache(cache)
        _, _, x, out_shape = cache
        if gy.shape != out_shape:
            raise ShapeMismatch(f"grad shape {gy.shape} != forward output {out_shape}")
        self.gw = kernels.conv_transpose2d_grad_weight(x, gy, self.stride, self.pad,
                                                       self.kernel, self.kernel)
        self.gb = gy.sum(axis=(0, 2, 3))
        return kernels.conv_transpose2d_grad_input(gy, self.w, self.stride, self.pad)


class Relu(Layer):
    def forward(self, x):
        y = np.maximum(x, 0)
        return y, (self, self._version, x > 0, y.shape)

    def backward(self, cache, gy):
        self._check_cache(cache)
        _, _, positive, out_shape = cache
        if gy.shape != out_shape:
            raise ShapeMismatch(f"grad shape {gy.shape} != forward output {out_shape}")
        return np.where(positive, gy, 0)


class MaxPool2x2(Layer):
    """2x2 stride-2 max; gradient routed to the recorded argmax only."""

    def forward(self, x):
        if x.shape[2] % 2 or x.shape[3] % 2:
            raise ShapeMismatch(f"maxpool needs even spatial dims, got {x.shape}")
        y, idx = kernels.maxpool2_forward(x)
        return y, (self, self._version, idx, x.shape, y.shape)

    def backward(self, cache, gy):
        self._check_cache(cache)
        _, _, idx, in_shape, out_shape = cache
        if gy.shape != out_shape:
            raise ShapeMismatch(f"grad shape {gy.shape} != forward output {out_shape}")
        return kernels.maxpool2_backward(idx, gy, in_shape[2], in_shape[3])


class Add(Layer):
    """Score fusion: elementwise sum of two equally shaped score maps."""

    def forward(self, a, b):
        if a.shape != b.shape:
            raise ShapeMismatch(f"fuse shapes differ: {a.shape} vs {b.shape}")
        y = a + b
        return y, (self, self._version, y.shape)

    def backward(self, cache, gy):
        self._check_cache(cache)
        _, _, out_shape = cache
        if gy.shape != out_shape:
            raise ShapeMismatch(f"grad shape {gy.shape} != forward output {out_shape}")
        return gy, gy
