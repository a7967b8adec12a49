"""Per-pixel softmax cross-entropy with ignore-pixel exclusion."""

import numpy as np

from ..errors import AllPixelsIgnored, ShapeMismatch
from ..labels import IGNORE


def softmax(logits: np.ndarray) -> np.ndarray:
    """Channel softmax of (n, c, h, w) logits, computed shift-stable."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, masks: np.ndarray):
    """Mean negative log-likelihood over non-ignore pixels and its gradient.

    ``masks`` is a (n, h, w) uint8 batch over {OTHER=0, TARGET=1, IGNORE}.
    The gradient is zero at ignore pixels; internal reductions run in float64.
    """
    if logits.ndim != 4 or masks.shape != (logits.shape[0],) + logits.shape[2:]:
        raise ShapeMismatch(f"logits {logits.shape} vs masks {masks.shape}")
    valid = masks != IGNORE
    count = int(valid.sum())
    if count == 0:
        raise AllPixelsIgnored("every ground-truth pixel is ignore")

    z = logits.astype(np.float64)
    z -= z.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp

    classes = np.where(valid, masks, 0).astype(np.intp)
    picked = np.take_along_axis(logp, classes[:, None], axis=1)[:, 0]
    loss = -(picked[valid].sum()) / count

    grad = np.exp(logp)
    onehot_rows = np.arange(logits.shape[1])[None, :, None, None] == classes[:, None]
    grad -= onehot_rows
    grad *= valid[:, None] / count
    return float(loss), grad.astype(logits.dtype)
