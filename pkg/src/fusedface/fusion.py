"""Pixel-level fusion of a co-registered visual/thermal image pair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fusedface.errors import DataError
from fusedface.imageio import GrayImage

VISUAL_WEIGHT = 0.70
THERMAL_WEIGHT = 0.30


@dataclass(frozen=True)
class FusionWeights:
    """Global visual weight ``a`` and thermal weight ``b`` (``a + b == 1``)."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise DataError(f"fusion weights must be non-negative, got a={self.a}, b={self.b}")
        if abs(self.a + self.b - 1.0) > 1e-12:
            raise DataError(f"fusion weights must sum to 1, got a+b={self.a + self.b!r}")

    @classmethod
    def from_visual(cls, a: float) -> FusionWeights:
        return cls(a=float(a), b=1.0 - float(a))


def default_weights() -> FusionWeights:
    return FusionWeights(VISUAL_WEIGHT, THERMAL_WEIGHT)


def fuse(visual: GrayImage, thermal: GrayImage, w: FusionWeights | None = None) -> GrayImage:
    """Return ``w.a * visual + w.b * thermal`` pixel by pixel."""
    if w is None:
        w = default_weights()
    if visual.size != thermal.size:
        raise DataError(
            f"visual image is {visual.width}x{visual.height} but thermal image is "
            f"{thermal.width}x{thermal.height}"
        )
    fused = w.a * visual.pixels + w.b * thermal.pixels
    # a + (1 - a) can round one ulp above 1
    return GrayImage(visual.width, visual.height, np.clip(fused, 0.0, 1.0))
