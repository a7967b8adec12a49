"""Kernel backend selection and the shared convolution surface.

The compiled Cython backend is used when its extension imported cleanly;
otherwise the numpy backend takes over. LULC_KERNEL_BACKEND=numpy|cython
forces the choice (forcing cython without the extension is an error).

Transposed convolution is served by the same three conv kernels with the
operand roles swapped, so each backend only implements five primitives.
"""

import os

import numpy as np

_force = os.environ.get("LULC_KERNEL_BACKEND", "").strip().lower()
if _force not in ("", "numpy", "cython"):
    raise RuntimeError(f"LULC_KERNEL_BACKEND must be 'numpy' or 'cython', got {_force!r}")

if _force == "numpy":
    from . import pykernels as _impl
else:
    try:
        from . import _cykernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _force == "cython":
            raise
        from . import pykernels as _impl

BACKEND = _impl.NAME

_num_threads = 1


def set_num_threads(n: int):
    """Thread budget for compiled kernels. Results are bit-stable regardless."""
    global _num_threads
    _num_threads = max(1, int(n))
    _impl.set_num_threads(_num_threads)


def get_num_threads() -> int:
    return _num_threads


def _contig(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a)


def _pad(x: np.ndarray, pad: int) -> np.ndarray:
    if pad == 0:
        return _contig(x)
    return np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))


def _check_geometry(oh, ow, hp, wp, kh, kw, stride):
    # keep the nogil loops in bounds: padded extent must cover every tap
    if oh != (hp - kh) // stride + 1 or ow != (wp - kw) // stride + 1:
        from ...errors import ShapeMismatch
        raise ShapeMismatch(
            f"output {oh}x{ow} inconsistent with padded input {hp}x{wp}, "
            f"kernel {kh}x{kw}, stride {stride}")


def conv2d_forward(x, w, b, stride: int, pad: int):
    return _impl.conv_fwd_padded(_pad(x, pad), _contig(w), _contig(b), stride)


def conv2d_grad_input(gy, w, stride: int, pad: int, in_h: int, in_w: int):
    hp, wp = in_h + 2 * pad, in_w + 2 * pad
    _check_geometry(gy.shape[2], gy.shape[3], hp, wp, w.shape[2], w.shape[3], stride)
    gxp = _impl.conv_gx_padded(_contig(gy), _contig(w), stride, hp, wp)
    if pad == 0:
        return gxp
    return _contig(gxp[:, :, pad:pad + in_h, pad:pad + in_w])


def conv2d_grad_weight(x, gy, stride: int, pad: int, kh: int, kw: int):
    _check_geometry(gy.shape[2], gy.shape[3], x.shape[2] + 2 * pad,
                    x.shape[3] + 2 * pad, kh, kw, stride)
    return _impl.conv_gw_padded(_pad(x, pad), _contig(gy), stride, kh, kw)


def conv_transpose2d_forward(x, w, b, stride: int, pad: int, out_h: int, out_w: int):
    # forward of a transposed conv == input-gradient of the matching conv
    y = conv2d_grad_input(x, w, stride, pad, out_h, out_w)
    y += b[None, :, None, None]
    return y


def conv_transpose2d_grad_input(gy, w, stride: int, pad: int):
    return _impl.conv_fwd_padded(_pad(gy, pad), _contig(w),
                                 np.zeros(w.shape[0], dtype=gy.dtype), stride)


def conv_transpose2d_grad_weight(x, gy, stride: int, pad: int, kh: int, kw: int):
    # weight gradient of a transposed conv reuses the conv weight-gradient
    # kernel with the input acting as the strided outer operand
    return _impl.conv_gw_padded(_pad(gy, pad), _contig(x), stride, kh, kw)


def maxpool2_forward(x):
    return _impl.maxpool2_fwd(_contig(x))


def maxpool2_backward(idx, gy, in_h: int, in_w: int):
    return _impl.maxpool2_bwd(idx, _contig(gy), in_h, in_w)
