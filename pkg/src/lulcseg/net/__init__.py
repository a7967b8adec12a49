"""Minimal differentiable tensor core and the FCN-8 network."""

from . import kernels
from .fcn8 import Fcn8Model, bilinear_kernel, init_model, WIDTH_CHOICES
from .layers import Add, Conv2d, ConvTranspose2d, MaxPool2x2, Relu
from .loss import softmax, softmax_cross_entropy

__all__ = [
    "kernels", "Fcn8Model", "bilinear_kernel", "init_model", "WIDTH_CHOICES",
    "Add", "Conv2d", "ConvTranspose2d", "MaxPool2x2", "Relu",
    "softmax", "softmax_cross_entropy",
]
