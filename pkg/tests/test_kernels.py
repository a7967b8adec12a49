import numpy as np
import pytest

from lulcseg.errors import ShapeMismatch
from lulcseg.net import kernels
from lulcseg.net.kernels import pykernels


# ------------------------------------------------------- reference oracles

def conv_naive(x, w, b, stride, pad):
    """Direct sliding-window evaluation, one scalar tap at a time."""
    n, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (wd + 2 * pad - kw) // stride + 1
    y = np.zeros((n, co, oh, ow), x.dtype)
    for bi in range(n):
        for o in range(co):
            for r in range(oh):
                for c in range(ow):
                    acc = b[o]
                    for ic in range(ci):
                        for i in range(kh):
                            for j in range(kw):
                                acc += xp[bi, ic, r * stride + i, c * stride + j] * w[o, ic, i, j]
                    y[bi, o, r, c] = acc
    return y


def convt_naive(x, w, b, stride, pad):
    """Scatter each input element through the kernel, then crop padding."""
    n, cin, h, wd = x.shape
    _, cout, kh, kw = w.shape
    oh = (h - 1) * stride - 2 * pad + kh
    ow = (wd - 1) * stride - 2 * pad + kw
    full = np.zeros((n, cout, oh + 2 * pad, ow + 2 * pad), x.dtype)
    for bi in range(n):
        for ic in range(cin):
            for r in range(h):
                for c in range(wd):
                    v = x[bi, ic, r, c]
                    for oc in range(cout):
                        for i in range(kh):
                            for j in range(kw):
                                full[bi, oc, r * stride + i, c * stride + j] += v * w[ic, oc, i, j]
    return full[:, :, pad:pad + oh, pad:pad + ow] + b[None, :, None, None]


def rand(rng, *shape):
    return rng.standard_normal(shape)


# ------------------------------------------------------------ conv forward

def test_scalar_conv():
    x = np.full((1, 1, 1, 1), 3.0)
    w = np.full((1, 1, 1, 1), 2.0)
    b = np.array([1.0])
    y = kernels.conv2d_forward(x, w, b, stride=1, pad=0)
    assert y.shape == (1, 1, 1, 1)
    assert y[0, 0, 0, 0] == 7.0


@pytest.mark.parametrize("stride,pad,k", [(1, 0, 3), (1, 1, 3), (2, 1, 4), (1, 3, 7)])
def test_conv_forward_matches_naive(stride, pad, k):
    rng = np.random.default_rng(stride * 100 + pad * 10 + k)
    x = rand(rng, 2, 3, 8, 9)
    w = rand(rng, 4, 3, k, k)
    b = rand(rng, 4)
    got = kernels.conv2d_forward(x, w, b, stride, pad)
    want = conv_naive(x, w, b, stride, pad)
    assert got.shape == want.shape
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_constant_image_sum_one_kernel():
    # kernel summing to 1 over a constant image reproduces the constant
    x = np.full((1, 1, 6, 6), 5.0)
    w = np.full((1, 1, 3, 3), 1.0 / 9.0)
    y = kernels.conv2d_forward(x, w, np.zeros(1), stride=1, pad=0)
    np.testing.assert_allclose(y, 5.0, rtol=1e-12)


# ---------------------------------------------------------- conv gradients

def fd_grad(f, a, eps=1e-6):
    g = np.zeros_like(a)
    flat = a.ravel()
    gflat = g.ravel()
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + eps
        up = f()
        flat[i] = keep - eps
        down = f()
        flat[i] = keep
        gflat[i] = (up - down) / (2 * eps)
    return g


@pytest.mark.parametrize("stride,pad", [(1, 1), (2, 1)])
def test_conv_grad_input_matches_fd(stride, pad):
    rng = np.random.default_rng(21)
    x = rand(rng, 1, 2, 6, 6)
    w = rand(rng, 3, 2, 3, 3)
    b = rand(rng, 3)
    g = rand(rng, *kernels.conv2d_forward(x, w, b, stride, pad).shape)

    loss = lambda: float((kernels.conv2d_forward(x, w, b, stride, pad) * g).sum())
    gx = kernels.conv2d_grad_input(g, w, stride, pad, 6, 6)
    np.testing.assert_allclose(gx, fd_grad(loss, x), rtol=1e-6, atol=1e-8)


@pytest.mark.parametrize("stride,pad", [(1, 1), (2, 1)])
def test_conv_grad_weight_matches_fd(stride, pad):
    rng = np.random.default_rng(22)
    x = rand(rng, 1, 2, 6, 6)
    w = rand(rng, 3, 2, 3, 3)
    b = rand(rng, 3)
    g = rand(rng, *kernels.conv2d_forward(x, w, b, stride, pad).shape)

    loss = lambda: float((kernels.conv2d_forward(x, w, b, stride, pad) * g).sum())
    gw = kernels.conv2d_grad_weight(x, g, stride, pad, 3, 3)
    np.testing.assert_allclose(gw, fd_grad(loss, w), rtol=1e-6, atol=1e-8)


# ------------------------------------------------------- transposed conv

@pytest.mark.parametrize("stride,pad,k", [(2, 1, 4), (8, 4, 16), (1, 0, 3)])
def test_conv_transpose_forward_matches_naive(stride, pad, k):
    rng = np.random.default_rng(31)
    x = rand(rng, 2, 3, 5, 6)
    w = rand(rng, 3, 2, k, k)
    b = rand(rng, 2)
    oh = (5 - 1) * stride - 2 * pad + k
    ow = (6 - 1) * stride - 2 * pad + k
    got = kernels.conv_transpose2d_forward(x, w, b, stride, pad, oh, ow)
    want = convt_naive(x, w, b, stride, pad)
    assert got.shape == (2, 2, oh, ow)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


def test_conv_transpose_doubles_spatial_dims():
    # the decoder setting: k=4, stride=2, pad=1 maps h -> 2h
    x = np.zeros((1, 1, 7, 7))
    w = np.zeros((1, 1, 4, 4))
    y = kernels.conv_transpose2d_forward(x, w, np.zeros(1), 2, 1, 14, 14)
    assert y.shape == (1, 1, 14, 14)


def test_conv_transpose_grad_input_matches_fd():
    rng = np.random.default_rng(32)
    x = rand(rng, 1, 2, 4, 4)
    w = rand(rng, 2, 3, 4, 4)
    b = rand(rng, 3)
    stride, pad = 2, 1
    oh = ow = (4 - 1) * 2 - 2 + 4
    g = rand(rng, 1, 3, oh, ow)

    loss = lambda: float(
        (kernels.conv_transpose2d_forward(x, w, b, stride, pad, oh, ow) * g).sum())
    gx = kernels.conv_transpose2d_grad_input(g, w, stride, pad)
    np.testing.assert_allclose(gx, fd_grad(loss, x), rtol=1e-6, atol=1e-8)


def test_conv_transpose_grad_weight_matches_fd():
    rng = np.random.default_rng(33)
    x = rand(rng, 1, 2, 4, 4)
    w = rand(rng, 2, 3, 4, 4)
    b = rand(rng, 3)
    stride, pad = 2, 1
    oh = ow = (4 - 1) * 2 - 2 + 4
    g = rand(rng, 1, 3, oh, ow)

    loss = lambda: float(
        (kernels.conv_transpose2d_forward(x, w, b, stride, pad, oh, ow) * g).sum())
    gw = kernels.conv_transpose2d_grad_weight(x, g, stride, pad, 4, 4)
    np.testing.assert_allclose(gw, fd_grad(loss, w), rtol=1e-6, atol=1e-8)


# ---------------------------------------------------------------- pooling

def test_maxpool_window_example():
    x = np.array([[[[1.0, 5.0], [3.0, 2.0]]]])
    y, idx = kernels.maxpool2_forward(x)
    assert y[0, 0, 0, 0] == 5.0
    assert idx[0, 0, 0, 0] == 1  # row-major window position of the max


def test_maxpool_tie_takes_first():
    x = np.full((1, 1, 2, 2), 7.0)
    y, idx = kernels.maxpool2_forward(x)
    assert y[0, 0, 0, 0] == 7.0
    assert idx[0, 0, 0, 0] == 0


def test_maxpool_forward_matches_naive():
    rng = np.random.default_rng(41)
    x = rand(rng, 2, 3, 8, 10)
    y, idx = kernels.maxpool2_forward(x)
    assert y.shape == (2, 3, 4, 5)
    for bi in range(2):
        for c in range(3):
            for r in range(4):
                for q in range(5):
                    win = x[bi, c, 2 * r:2 * r + 2, 2 * q:2 * q + 2].ravel()
                    assert y[bi, c, r, q] == win.max()
                    assert idx[bi, c, r, q] == win.argmax()


def test_maxpool_backward_routes_to_argmax():
    rng = np.random.default_rng(42)
    x = rand(rng, 1, 2, 6, 6)
    _, idx = kernels.maxpool2_forward(x)
    gy = rand(rng, 1, 2, 3, 3)
    gx = kernels.maxpool2_backward(idx, gy, 6, 6)
    assert gx.shape == x.shape
    # every window holds its incoming gradient at the argmax, zero elsewhere
    for c in range(2):
        for r in range(3):
            for q in range(3):
                win = gx[0, c, 2 * r:2 * r + 2, 2 * q:2 * q + 2].ravel()
                code = idx[0, c, r, q]
                assert win[code] == gy[0, c, r, q]
                others = np.delete(win, code)
                assert (others == 0).all()


def test_maxpool_backward_matches_fd():
    rng = np.random.default_rng(43)
    x = rand(rng, 1, 1, 4, 4)
    g = rand(rng, 1, 1, 2, 2)
    loss = lambda: float((kernels.maxpool2_forward(x)[0] * g).sum())
    _, idx = kernels.maxpool2_forward(x)
    gx = kernels.maxpool2_backward(idx, g, 4, 4)
    np.testing.assert_allclose(gx, fd_grad(loss, x), rtol=1e-6, atol=1e-8)


# --------------------------------------------------------- geometry guard

def test_inconsistent_grad_geometry_rejected():
    rng = np.random.default_rng(51)
    w = rand(rng, 2, 3, 4, 4)
    bad_gy = rand(rng, 1, 2, 5, 6)  # wrong spatial dims for the claimed input
    with pytest.raises(ShapeMismatch):
        kernels.conv2d_grad_input(bad_gy, w, stride=2, pad=1, in_h=9, in_w=11)
    with pytest.raises(ShapeMismatch):
        kernels.conv2d_grad_weight(rand(rng, 1, 3, 9, 11), bad_gy,
                                   stride=2, pad=1, kh=4, kw=4)


# ------------------------------------------------------ backend agreement

cyk = pytest.importorskip  # alias to keep lines short


@pytest.fixture(scope="module")
def cykernels():
    return pytest.importorskip("lulcseg.net.kernels._cykernels")


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_backends_agree_on_conv(cykernels, dtype):
    rng = np.random.default_rng(61)
    # f32 differs only by accumulation order between the two backends
    tol = dict(rtol=1e-4, atol=1e-5) if dtype == np.float32 else dict(rtol=1e-12, atol=1e-12)
    xp = rng.standard_normal((2, 3, 9, 9)).astype(dtype)
    w = rng.standard_normal((4, 3, 3, 3)).astype(dtype)
    b = rng.standard_normal(4).astype(dtype)
    np.testing.assert_allclose(cykernels.conv_fwd_padded(xp, w, b, 1),
                               pykernels.conv_fwd_padded(xp, w, b, 1), **tol)
    gy = rng.standard_normal((2, 4, 7, 7)).astype(dtype)
    np.testing.assert_allclose(cykernels.conv_gx_padded(gy, w, 1, 9, 9),
                               pykernels.conv_gx_padded(gy, w, 1, 9, 9), **tol)
    np.testing.assert_allclose(cykernels.conv_gw_padded(xp, gy, 1, 3, 3),
                               pykernels.conv_gw_padded(xp, gy, 1, 3, 3), **tol)


@pytest.mark.parametrize("dtype", [np.float32, np.float64])
def test_backends_agree_on_pooling(cykernels, dtype):
    rng = np.random.default_rng(62)
    x = rng.standard_normal((2, 3, 8, 8)).astype(dtype)
    y_c, idx_c = cykernels.maxpool2_fwd(x)
    y_p, idx_p = pykernels.maxpool2_fwd(x)
    assert np.array_equal(y_c, y_p)
    assert np.array_equal(idx_c, idx_p)
    gy = rng.standard_normal((2, 3, 4, 4)).astype(dtype)
    assert np.array_equal(cykernels.maxpool2_bwd(idx_c, gy, 8, 8),
                          pykernels.maxpool2_bwd(idx_p, gy, 8, 8))


def test_compiled_backend_thread_count_is_bit_stable(cykernels):
    rng = np.random.default_rng(63)
    xp = rng.standard_normal((3, 4, 12, 12)).astype(np.float32)
    w = rng.standard_normal((6, 4, 3, 3)).astype(np.float32)
    b = rng.standard_normal(6).astype(np.float32)
    before = kernels.get_num_threads()
    try:
        cykernels.set_num_threads(1)
        one = cykernels.conv_fwd_padded(xp, w, b, 1)
        cykernels.set_num_threads(4)
        four = cykernels.conv_fwd_padded(xp, w, b, 1)
    finally:
        cykernels.set_num_threads(before)
    assert one.tobytes() == four.tobytes()


def test_backend_name_reported():
    assert kernels.BACKEND in ("numpy", "cython")
    assert pykernels.NAME == "numpy"
