"""FCN-8: VGG-16 conv encoder, convolutionalized head, transpose-conv decoder
with pool3/pool4 score fusion.

Channel widths scale with a width multiplier so gradient checks and CI run
at desk scale; 1.0 reproduces the full VGG-16 widths. The binary head uses
two softmax channels (target / other).
"""

import numpy as np

from ..errors import ShapeMismatch
from .layers import Add, Conv2d, ConvTranspose2d, MaxPool2x2, Relu

WIDTH_CHOICES = (1.0, 0.5, 0.25, 0.125, 0.0625)

# VGG-16 conv blocks: (name, base output channels), pools between blocks
_VGG_BLOCKS = [
    [("conv1_1", 64), ("conv1_2", 64)],
    [("conv2_1", 128), ("conv2_2", 128)],
    [("conv3_1", 256), ("conv3_2", 256), ("conv3_3", 256)],
    [("conv4_1", 512), ("conv4_2", 512), ("conv4_3", 512)],
    [("conv5_1", 512), ("conv5_2", 512), ("conv5_3", 512)],
]


def bilinear_kernel(size: int) -> np.ndarray:
    """Separable bilinear upsampling filter; shifted copies sum to one."""
    factor = (size + 1) // 2
    center = factor - 1 if size % 2 == 1 else factor - 0.5
    ramp = 1.0 - np.abs(np.arange(size) - center) / factor
    return np.outer(ramp, ramp)


class Fcn8Model:
    def __init__(self, width_multiplier=1.0, num_classes=2, dtype=np.float32):
        if width_multiplier not in WIDTH_CHOICES:
            raise ValueError(f"width multiplier must be one of {WIDTH_CHOICES}")
        self.width_multiplier = width_multiplier
        self.num_classes = num_classes
        self.dtype = dtype
        ch = lambda base: max(1, int(round(base * width_multiplier)))

        self.encoder = []
        in_ch = 3
        for block_idx, block in enumerate(_VGG_BLOCKS, start=1):
            for name, base in block:
                out_ch = ch(base)
                self.encoder.append((name, Conv2d(in_ch, out_ch, 3, 1, 1, dtype)))
                self.encoder.append((f"{name}.relu", Relu()))
                in_ch = out_ch
            self.encoder.append((f"pool{block_idx}", MaxPool2x2()))

        head_ch = ch(4096)
        self.fc6 = Conv2d(in_ch, head_ch, 7, 1, 3, dtype)
        self.relu6 = Relu()
        self.fc7 = Conv2d(head_ch, head_ch, 1, 1, 0, dtype)
        self.relu7 = Relu()
        self.score_fr = Conv2d(head_ch, num_classes, 1, 1, 0, dtype)
        self.score_pool4 = Conv2d(ch(512), num_classes, 1, 1, 0, dtype)
        self.score_pool3 = Conv2d(ch(256), num_classes, 1, 1, 0, dtype)
        self.upscore2 = ConvTranspose2d(num_classes, num_classes, 4, 2, 1, dtype)
        self.fuse4 = Add()
        self.upscore_pool4 = ConvTranspose2d(num_classes, num_classes, 4, 2, 1, dtype)
        self.fuse3 = Add()
        self.upscore8 = ConvTranspose2d(num_classes, num_classes, 16, 8, 4, dtype)

    def _named_layers(self):
        for name, layer in self.encoder:
            yield name, layer
        for name in ("fc6", "relu6", "fc7", "relu7", "score_fr", "score_pool4",
                     "score_pool3", "upscore2", "upscore_pool4", "upscore8"):
            yield name, getattr(self, name)

    def params(self):
        """Ordered (name, array) pairs; arrays are live references."""
        out = []
        for name, layer in self._named_layers():
            for suffix, arr in layer.params():
                out.append((f"{name}.{suffix}", arr))
        return out

    def grads(self):
        out = []
        for name, layer in self._named_layers():
            for suffix, arr in layer.grads():
                out.append((f"{name}.{suffix}", arr))
        return out

    def load_params(self, named_arrays, strict=True):
        """Copy arrays into matching parameters by name; shapes must agree.

        Returns the loaded names; with strict=False, unknown names are
        skipped so partial (e.g. encoder-only) weight files load cleanly.
        """
        own = dict(self.params())
        loaded = []
        for name, arr in named_arrays:
            if name not in own:
                if strict:
                    raise ShapeMismatch(f"no parameter named {name}")
                continue
            if own[name].shape != arr.shape:
                raise ShapeMismatch(
                    f"{name}: shape {arr.shape} does not match model {own[name].shape}")
            own[name][...] = arr
            loaded.append(name)
        for _, layer in self._named_layers():
            layer.bump_version()
        return loaded

    def forward(self, x, want_state=False):
        """Logits for a batch (n, 3, h, w) with h, w multiples of 32, values in [0, 1]."""
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeMismatch(f"expected (n, 3, h, w), got {x.shape}")
        if x.shape[2] % 32 or x.shape[3] % 32:
            raise ShapeMismatch(f"spatial dims must be multiples of 32, got {x.shape}")

        caches = []
        taps = {}
        h = x
        for name, layer in self.encoder:
            h, cache = layer.forward(h)
            caches.append((name, layer, cache))
            if name in ("pool3", "pool4", "pool5"):
                taps[name] = h

        h, c_fc6 = self.fc6.forward(h)
        h, c_relu6 = self.relu6.forward(h)
        h, c_fc7 = self.fc7.forward(h)
        h, c_relu7 = self.relu7.forward(h)
        score, c_score = self.score_fr.forward(h)

        up2, c_up2 = self.upscore2.forward(score)
        sp4, c_sp4 = self.score_pool4.forward(taps["pool4"])
        f4, c_f4 = self.fuse4.forward(up2, sp4)

        up4, c_up4 = self.upscore_pool4.forward(f4)
        sp3, c_sp3 = self.score_pool3.forward(taps["pool3"])
        f3, c_f3 = self.fuse3.forward(up4, sp3)

        logits, c_up8 = self.upscore8.forward(f3)

        if not want_state:
            return logits
        state = {
            "encoder": caches,
            "head": (c_fc6, c_relu6, c_fc7, c_relu7, c_score),
            "decoder": (c_up2, c_sp4, c_f4, c_up4, c_sp3, c_f3, c_up8),
            "pool_shapes": {k: v.shape for k, v in taps.items()},
        }
        return logits, state

    def backward(self, state, grad_logits):
        """Backpropagate; parameter gradients land on the layers."""
        c_fc6, c_relu6, c_fc7, c_relu7, c_score = state["head"]
        c_up2, c_sp4, c_f4, c_up4, c_sp3, c_f3, c_up8 = state["decoder"]

        g = self.upscore8.backward(c_up8, grad_logits)
        g_up4, g_sp3 = self.fuse3.backward(c_f3, g)
        skip3 = self.score_pool3.backward(c_sp3, g_sp3)
        g = self.upscore_pool4.backward(c_up4, g_up4)
        g_up2, g_sp4 = self.fuse4.backward(c_f4, g)
        skip4 = self.score_pool4.backward(c_sp4, g_sp4)
        g = self.upscore2.backward(c_up2, g_up2)

        g = self.score_fr.backward(c_score, g)
        g = self.relu7.backward(c_relu7, g)
        g = self.fc7.backward(c_fc7, g)
        g = self.relu6.backward(c_relu6, g)
        g = self.fc6.backward(c_fc6, g)

        skips = {"pool4": skip4, "pool3": skip3}
        for name, layer, cache in reversed(state["encoder"]):
            if name in skips:
                g = g + skips.pop(name)
            g = layer.backward(cache, g)
        return g

    def sgd_step(self, lr: float):
        """Plain SGD over every parameter with a gradient."""
        for _, layer in self._named_layers():
            pairs = list(zip(layer.params(), layer.grads()))
            if not pairs:
                continue
            stepped = False
            for (_, p), (_, g) in pairs:
                if g is not None:
                    p -= lr * g.astype(p.dtype, copy=False)
                    stepped = True
            if stepped:
                layer.bump_version()

    def snapshot(self):
        return [(name, arr.copy()) for name, arr in self.params()]

    def restore(self, snap):
        self.load_params(snap)


def init_model(seed: int, width_multiplier: float = 1.0, num_classes: int = 2,
               dtype=np.float32) -> Fcn8Model:
    """He-init convs, bilinear transpose convs, zero score layers. Seed-deterministic."""
    model = Fcn8Model(width_multiplier, num_classes, dtype)
    rng = np.random.default_rng(seed)

    for name, layer in model._named_layers():
        if not isinstance(layer, Conv2d):
            continue
        if name.startswith("score"):
            continue  # zero scores make the initial logits exactly zero
        fan_in = layer.in_ch * layer.kernel * layer.kernel
        std = np.sqrt(2.0 / fan_in)
        layer.w[...] = (rng.standard_normal(layer.w.shape) * std).astype(dtype)

    kern = {4: bilinear_kernel(4), 16: bilinear_kernel(16)}
    for up in (model.upscore2, model.upscore_pool4, model.upscore8):
        k = kern[up.kernel].astype(dtype)
        for c in range(min(up.in_ch, up.out_ch)):
            up.w[c, c] = k
    return model
