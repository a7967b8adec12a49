"""Per-class binary LULC segmentation of RGB satellite rasters with FCN-8."""

__version__ = "0.1.0"
