"""Hand-crafted per-pixel features: perceptual color plus position.

Stands in for a learned backbone at desk scale. Each pixel gets a
5-vector: a lightly smoothed, rescaled CIELAB triple and its normalized
grid coordinates. Deterministic given the image and config.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

FEATURE_DIM = 5

# sRGB (D65) to XYZ, rows scaled so Y of white is 1.
_RGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_WHITE = np.array([0.95047, 1.0, 1.08883])


@dataclass(frozen=True)
class FeatureConfig:
    """Scales for the color and coordinate feature groups."""

    color_scale: float = 10.0
    coordinate_scale: float = 2.0
    smoothing_radius: float = 0.7

    def __post_init__(self):
        if self.color_scale <= 0 or self.coordinate_scale < 0:
            raise ValueError("feature scales must be positive")
        if self.smoothing_radius < 0:
            raise ValueError("smoothing radius must be non-negative")

    def to_json_dict(self):
        return {
            "color_scale": self.color_scale,
            "coordinate_scale": self.coordinate_scale,
            "smoothing_radius": self.smoothing_radius,
        }

    @staticmethod
    def from_json_dict(data):
        return FeatureConfig(**data)


def srgb_to_lab(rgb):
    """sRGB in [0, 1] to CIELAB (D65 white), vectorized over leading dims."""
    rgb = np.asarray(rgb, dtype=np.float64)
    linear = np.where(
        rgb <= 0.04045, rgb / 12.92, ((rgb + 0.055) / 1.055) ** 2.4
    )
    xyz = linear @ _RGB_TO_XYZ.T / _WHITE
    cube = np.cbrt(xyz)
    f = np.where(xyz > (6 / 29) ** 3, cube, xyz / (3 * (6 / 29) ** 2) + 4 / 29)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def extract_features(image, cfg=FeatureConfig()):
    """(H, W, 5) float32 feature map for an (H, W, 3) uint8 image."""
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got {image.shape}")
    h, w = image.shape[:2]
    lab = srgb_to_lab(image.astype(np.float64) / 255.0)
    # Normalize Lab channels to comparable ranges before scaling.
    lab[..., 0] /= 100.0
    lab[..., 1:] /= 110.0
    if cfg.smoothing_radius > 0:
        for c in range(3):
            lab[..., c] = gaussian_filter(lab[..., c], sigma=cfg.smoothing_radius)
    rows = (np.arange(h, dtype=np.float64) / h)[:, None]
    cols = (np.arange(w, dtype=np.float64) / w)[None, :]
    feats = np.empty((h, w, FEATURE_DIM), dtype=np.float32)
    feats[..., :3] = (lab * cfg.color_scale).astype(np.float32)
    feats[..., 3] = (rows * cfg.coordinate_scale).astype(np.float32)
    feats[..., 4] = (cols * cfg.coordinate_scale).astype(np.float32)
    return feats
