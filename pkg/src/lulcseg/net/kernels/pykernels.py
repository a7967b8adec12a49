"""Pure-numpy kernel backend.

All convolution entry points work in the padded domain (the caller applies
zero padding and crops afterwards), so there are no bounds checks here. The
K*K loop over kernel taps turns every hot path into batched matmuls.
"""

import numpy as np

NAME = "numpy"


def set_num_threads(n: int):  # numpy/BLAS manages its own pool
    pass


def conv_fwd_padded(xp: np.ndarray, w: np.ndarray, b: np.ndarray, stride: int) -> np.ndarray:
    n, ci, hp, wp = xp.shape
    co, _, kh, kw = w.shape
    oh = (hp - kh) // stride + 1
    ow = (wp - kw) // stride + 1
    y = np.empty((n, co, oh * ow), dtype=xp.dtype)
    y[:] = b[None, :, None]
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
            # (co, ci) @ (n, ci, oh*ow) -> (n, co, oh*ow)
            y += np.matmul(w[:, :, i, j], xs.reshape(n, ci, oh * ow))
    return y.reshape(n, co, oh, ow)


def conv_gx_padded(gy: np.ndarray, w: np.ndarray, stride: int, hp: int, wp: int) -> np.ndarray:
    n, co, oh, ow = gy.shape
    _, ci, kh, kw = w.shape
    gxp = np.zeros((n, ci, hp, wp), dtype=gy.dtype)
    gy_flat = gy.reshape(n, co, oh * ow)
    for i in range(kh):
        for j in range(kw):
            contrib = np.matmul(w[:, :, i, j].T, gy_flat).reshape(n, ci, oh, ow)
            gxp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride] += contrib
    return gxp


def conv_gw_padded(xp: np.ndarray, gy: np.ndarray, stride: int, kh: int, kw: int) -> np.ndarray:
    n, co, oh, ow = gy.shape
    ci = xp.shape[1]
    gw = np.empty((co, ci, kh, kw), dtype=gy.dtype)
    gy_flat = gy.reshape(n, co, oh * ow)
    for i in range(kh):
        for j in range(kw):
            xs = xp[:, :, i:i + stride * oh:stride, j:j + stride * ow:stride]
            xs_flat = xs.reshape(n, ci, oh * ow)
            # sum over batch of (co, f) @ (f, ci)
            gw[:, :, i, j] = np.matmul(gy_flat, xs_flat.transpose(0, 2, 1)).sum(axis=0)
    return gw


def maxpool2_fwd(x: np.ndarray):
    """2x2 stride-2 max pool; returns pooled values and window argmax codes.

    Codes are 0..3 in row-major window order (2*dy + dx), first max wins.
    """
    n, c, h, w = x.shape
    windows = x.reshape(n, c, h // 2, 2, w // 2, 2)
    stacked = windows.transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h // 2, w // 2, 4)
    idx = stacked.argmax(axis=4).astype(np.uint8)
    y = np.take_along_axis(stacked, idx[..., None].astype(np.intp), axis=4)[..., 0]
    return np.ascontiguousarray(y), idx


def maxpool2_bwd(idx: np.ndarray, gy: np.ndarray, h: int, w: int) -> np.ndarray:
    n, c, oh, ow = gy.shape
    stacked = np.zeros((n, c, oh, ow, 4), dtype=gy.dtype)
    np.put_along_axis(stacked, idx[..., None].astype(np.intp), gy[..., None], axis=4)
    gx = stacked.reshape(n, c, oh, ow, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, h, w)
    return np.ascontiguousarray(gx)
