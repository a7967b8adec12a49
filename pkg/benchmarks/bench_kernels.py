"""Time the five kernel primitives on both backends and report speedups.

The numpy backend leans on BLAS matmuls, the compiled backend on fused
loops with per-output thread ownership; which one wins depends on shape,
dtype and thread budget, so measure instead of guessing:

    python3 benchmarks/bench_kernels.py --dtype float32 --threads 1
"""

import argparse
import time

import numpy as np

from lulcseg.net.kernels import pykernels

try:
    from lulcseg.net.kernels import _cykernels as cykernels
except ImportError:
    cykernels = None


def timed(fn, args, repeats):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(dtype, rng):
    """Representative shapes from the segmentation network (narrow widths
    for the heavy head so the single-threaded fallback stays measurable)."""

    def t(*shape):
        return rng.standard_normal(shape).astype(dtype)

    out = []

    # encoder conv at 112x112, padded domain (pad 1 applied by the caller)
    xp = t(1, 32, 114, 114)
    w = t(64, 32, 3, 3)
    b = t(64)
    out.append(("conv_fwd 32->64 @112", "conv_fwd_padded", (xp, w, b, 1)))
    gy = t(1, 64, 112, 112)
    out.append(("conv_gx  32->64 @112", "conv_gx_padded", (gy, w, 1, 114, 114)))
    out.append(("conv_gw  32->64 @112", "conv_gw_padded", (xp, gy, 1, 3, 3)))

    # quarter-width head conv: 7x7 kernel over a 7x7 map, pad 3
    xh = t(1, 128, 13, 13)
    wh = t(1024, 128, 7, 7)
    out.append(("conv_fwd head 7x7", "conv_fwd_padded", (xh, wh, t(1024), 1)))

    # decoder upsampling runs through conv_gx with stride 2
    gu = t(1, 2, 28, 28)
    wu = t(2, 2, 4, 4)
    out.append(("convT    2->2 @28->56", "conv_gx_padded", (gu, wu, 2, 58, 58)))

    # pooling over an encoder-sized map
    xpool = t(1, 64, 224, 224)
    out.append(("maxpool  64 @224", "maxpool2_fwd", (xpool,)))
    y, idx = pykernels.maxpool2_fwd(xpool)
    gpool = rng.standard_normal(y.shape).astype(dtype)
    out.append(("maxpool  backward", "maxpool2_bwd", (idx, gpool, 224, 224)))
    return out


def first_array(out):
    return out[0] if isinstance(out, tuple) else out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dtype", choices=("float32", "float64"),
                    default="float32")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)

    if cykernels is None:
        print("compiled backend not built; run pip install -e . first")
        return 1
    cykernels.set_num_threads(args.threads)

    dtype = np.dtype(args.dtype)
    rng = np.random.default_rng(0)
    print(f"dtype={dtype.name} threads={args.threads} repeats={args.repeats}")
    header = f"{'case':<22} {'numpy':>9} {'cython':>9} {'speedup':>8} {'max|diff|':>10}"
    print(header)
    print("-" * len(header))
    for label, prim, call_args in cases(dtype, rng):
        t_py, out_py = timed(getattr(pykernels, prim), call_args, args.repeats)
        t_cy, out_cy = timed(getattr(cykernels, prim), call_args, args.repeats)
        diff = float(np.abs(first_array(out_py) - first_array(out_cy)).max())
        print(f"{label:<22} {t_py * 1e3:>7.2f}ms {t_cy * 1e3:>7.2f}ms "
              f"{t_py / t_cy:>7.2f}x {diff:>10.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
