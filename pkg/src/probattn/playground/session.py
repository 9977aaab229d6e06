"""Interactive segmentation sessions.

A session wraps one image: per-pixel features act as queries and keys,
per-pixel scalar logits as value means, and annotator clicks pin values
over small disks. The displayed mask comes from an attention read-out
whose weights use queries and keys only; clicks influence it through the
value pathway (pinned values override the unit means) and, when value
propagation is enabled, by EM updates of the means themselves.

Sessions are single-writer: operations return new session objects that
share the immutable feature/weight arrays.
"""

from __future__ import annotations

import base64
import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from PIL import Image

from ..adaptation import AdaptationConfig, FixedValues, adapt_keys, propagate_values
from ..core import attention_output, responsibilities
from ..errors import InvalidBBox, OutOfBounds, ShapeMismatch
from ..model import DistancePrior, MixtureModel, UniformPrior
from .features import FEATURE_DIM, FeatureConfig, extract_features

# Full weight matrices are cached only below this unit count (memory cap).
WEIGHT_CACHE_MAX_UNITS = 4096


def default_adaptation() -> AdaptationConfig:
    return AdaptationConfig(theta_xi=0.0, theta_mu=1.0, key_iters=0, value_iters=5)


@dataclass(frozen=True)
class PlaygroundConfig:
    """Everything that determines a session apart from the image itself."""

    feature: FeatureConfig = field(default_factory=FeatureConfig)
    adaptation: AdaptationConfig = field(default_factory=default_adaptation)
    prior_kind: str = "distance"  # "distance" | "uniform"
    prior_sigma: float = 6.0
    alpha: float | None = None  # None -> 1/sqrt(d)
    beta: float = 0.1
    seed_logit: float = 1.0
    click_value: float = 4.0
    click_radius: int = 8
    max_side: int = 128
    query_shift: tuple | None = None
    cache_weights: bool = True

    def __post_init__(self):
        if self.prior_kind not in ("distance", "uniform"):
            raise ValueError(f"unknown prior kind {self.prior_kind!r}")
        if self.prior_sigma <= 0 or self.beta < 0 or self.click_radius < 0:
            raise ValueError("invalid playground parameters")
        if self.max_side < 8:
            raise ValueError("max_side must be at least 8")
        if self.query_shift is not None and len(self.query_shift) != FEATURE_DIM:
            raise ValueError(f"query_shift must have {FEATURE_DIM} entries")

    @property
    def effective_alpha(self):
        return self.alpha if self.alpha is not None else 1.0 / math.sqrt(FEATURE_DIM)

    def to_json_dict(self):
        data = {
            "feature": self.feature.to_json_dict(),
            "adaptation": self.adaptation.to_json_dict(),
            "prior_kind": self.prior_kind,
            "prior_sigma": self.prior_sigma,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed_logit": self.seed_logit,
            "click_value": self.click_value,
            "click_radius": self.click_radius,
            "max_side": self.max_side,
            "query_shift": None if self.query_shift is None else list(self.query_shift),
            "cache_weights": self.cache_weights,
        }
        return data

    @staticmethod
    def from_json_dict(data):
        data = dict(data)
        kwargs = {}
        if "feature" in data:
            kwargs["feature"] = FeatureConfig.from_json_dict(data.pop("feature"))
        if "adaptation" in data:
            kwargs["adaptation"] = AdaptationConfig.from_json_dict(
                data.pop("adaptation")
            )
        shift = data.pop("query_shift", None)
        if shift is not None:
            kwargs["query_shift"] = tuple(float(x) for x in shift)
        allowed = {
            "prior_kind", "prior_sigma", "alpha", "beta", "seed_logit",
            "click_value", "click_radius", "max_side", "cache_weights",
        }
        unknown = set(data) - allowed
        if unknown:
            raise ValueError(f"unknown playground config keys: {sorted(unknown)}")
        kwargs.update(data)
        return PlaygroundConfig(**kwargs)


@dataclass(frozen=True)
class ClickEvent:
    row: int
    col: int
    positive: bool
    radius: int = 8


@dataclass
class SessionBase:
    """Per-image state shared by every trial/session on that image:
    features, queries, the (possibly key-adapted) model, and the cached
    attention weights."""

    cfg: PlaygroundConfig
    image: np.ndarray  # (H, W, 3) uint8, already resized
    gt: np.ndarray | None  # (H, W) bool
    features: np.ndarray  # (H, W, d) float32
    queries: np.ndarray  # (n, d) float64
    model: MixtureModel  # value means all zero; keys possibly adapted
    weights: np.ndarray | None  # (n, n) cached read-out weights

    @property
    def shape(self):
        return self.image.shape[:2]


@dataclass
class SegmentationSession:
    base: SessionBase
    bbox: tuple | None  # (r0, c0, r1, c1) in resized coords, half-open
    model: MixtureModel
    clicks: list
    fixed: dict  # pixel index -> pinned logit (latest click wins)
    output_logits: np.ndarray  # (n,) attention read-out
    mask: np.ndarray  # (H, W) bool

    @property
    def cfg(self):
        return self.base.cfg

    @property
    def shape(self):
        return self.base.shape

    @property
    def gt(self):
        return self.base.gt

    @property
    def image(self):
        return self.base.image


def _resize(image, gt, max_side):
    h, w = image.shape[:2]
    if max(h, w) <= max_side:
        return image, gt, 1.0
    scale = max_side / max(h, w)
    nh, nw = max(8, round(h * scale)), max(8, round(w * scale))
    img = np.asarray(
        Image.fromarray(image).resize((nw, nh), Image.BOX), dtype=np.uint8
    )
    if gt is not None:
        gt = np.asarray(
            Image.fromarray(gt.astype(np.uint8) * 255).resize(
                (nw, nh), Image.NEAREST
            )
        ) > 127
    return img, gt, scale


def prepare_base(image, cfg=PlaygroundConfig(), gt=None):
    """Resize, extract features, build the zero-mean model, adapt keys if
    configured, and cache the read-out weights for small grids."""
    image = np.asarray(image, dtype=np.uint8)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ShapeMismatch(f"expected (H, W, 3) uint8 image, got {image.shape}")
    if min(image.shape[:2]) < 8:
        raise ShapeMismatch("images must be at least 8x8")
    if gt is not None:
        gt = np.asarray(gt).astype(bool)
        if gt.shape != image.shape[:2]:
            raise ShapeMismatch("ground truth mask does not match the image")
    image, gt, _ = _resize(image, gt, cfg.max_side)
    h, w = image.shape[:2]
    feats = extract_features(image, cfg.feature)
    keys = feats.reshape(-1, FEATURE_DIM).astype(np.float64)
    queries = keys.copy()
    if cfg.query_shift is not None:
        queries = queries + np.asarray(cfg.query_shift, dtype=np.float64)
    n = h * w
    prior = (
        DistancePrior((h, w), cfg.prior_sigma)
        if cfg.prior_kind == "distance"
        else UniformPrior()
    )
    model = MixtureModel(
        keys=keys,
        key_precisions=np.full(n, cfg.effective_alpha),
        value_means=np.zeros((n, 1)),
        value_precisions=np.full(n, cfg.beta),
        prior=prior,
    )
    if cfg.adaptation.key_iters >= 1:
        model = adapt_keys(model, queries, cfg.adaptation)
    weights = None
    if cfg.cache_weights and n <= WEIGHT_CACHE_MAX_UNITS:
        weights = responsibilities(queries, model)
    return SessionBase(
        cfg=cfg, image=image, gt=gt, features=feats, queries=queries,
        model=model, weights=weights,
    )


def _scale_bbox(bbox, orig_shape, new_shape):
    r0, c0, r1, c1 = bbox
    oh, ow = orig_shape
    nh, nw = new_shape
    sr, sc = nh / oh, nw / ow
    r0, r1 = int(math.floor(r0 * sr)), int(math.ceil(r1 * sr))
    c0, c1 = int(math.floor(c0 * sc)), int(math.ceil(c1 * sc))
    return (
        max(0, r0), max(0, c0), min(nh, max(r1, r0 + 1)), min(nw, max(c1, c0 + 1))
    )


def _refresh(session):
    """Recompute the attention read-out and mask in place.

    The per-pixel output logit is the attention average of the unit value
    means; clicks influence it through value propagation only.
    """
    base = session.base
    if base.weights is not None and session.model.keys is base.model.keys:
        out = base.weights @ session.model.value_means
    else:
        out = attention_output(base.queries, session.model)
    session.output_logits = out[:, 0]
    session.mask = session.output_logits.reshape(session.shape) > 0.0
    return session


def init_session(image, bbox=None, cfg=PlaygroundConfig(), gt=None, base=None):
    """Fresh session: value means seeded from the bounding box (when
    given), keys and queries from the features, mask from the read-out."""
    if base is None:
        base = prepare_base(image, cfg, gt=gt)
    else:
        cfg = base.cfg
    h, w = base.shape
    mu = np.zeros((h * w, 1))
    scaled_bbox = None
    if bbox is not None:
        oh, ow = np.asarray(image).shape[:2]
        r0, c0, r1, c1 = bbox
        if not (0 <= r0 < r1 <= oh and 0 <= c0 < c1 <= ow):
            raise InvalidBBox(f"bbox {bbox} outside an {oh}x{ow} image")
        scaled_bbox = _scale_bbox(bbox, (oh, ow), (h, w))
        r0, c0, r1, c1 = scaled_bbox
        seed = np.full((h, w), -cfg.seed_logit)
        seed[r0:r1, c0:c1] = cfg.seed_logit
        mu = seed.reshape(-1, 1)
    session = SegmentationSession(
        base=base,
        bbox=scaled_bbox,
        model=base.model.replace(value_means=mu),
        clicks=[],
        fixed={},
        output_logits=np.zeros(h * w),
        mask=np.zeros((h, w), dtype=bool),
    )
    return _refresh(session)


def _disk_pixels(shape, row, col, radius):
    h, w = shape
    r0, r1 = max(0, row - radius), min(h, row + radius + 1)
    c0, c1 = max(0, col - radius), min(w, col + radius + 1)
    rr, cc = np.meshgrid(np.arange(r0, r1), np.arange(c0, c1), indexing="ij")
    inside = (rr - row) ** 2 + (cc - col) ** 2 <= radius**2
    return (rr[inside] * w + cc[inside]).astype(np.intp)


def apply_click(session, click):
    """New session with the click folded in.

    The click's disk pins values (positive clicks pin +V, negative -V;
    the latest click wins per pixel); value propagation runs per the
    session config; the mask is recomputed. Key adaptation depends only
    on the queries, which clicks never change, so its configured run is
    satisfied by the keys adapted at session start: re-running it from
    the same starting keys would reproduce them bit for bit.
    """
    h, w = session.shape
    if not (0 <= click.row < h and 0 <= click.col < w):
        raise OutOfBounds(f"click {(click.row, click.col)} outside {h}x{w}")
    cfg = session.cfg
    value = cfg.click_value if click.positive else -cfg.click_value
    fixed = dict(session.fixed)
    for p in _disk_pixels((h, w), click.row, click.col, click.radius):
        fixed[int(p)] = value
    model = session.model
    acfg = cfg.adaptation
    if acfg.value_iters >= 1 and fixed:
        fv = FixedValues(
            np.fromiter(fixed.keys(), dtype=np.intp),
            np.fromiter(fixed.values(), dtype=np.float64)[:, None],
        )
        model = propagate_values(model, session.base.queries, fv, acfg)
    out = SegmentationSession(
        base=session.base,
        bbox=session.bbox,
        model=model,
        clicks=session.clicks + [click],
        fixed=fixed,
        output_logits=session.output_logits,
        mask=session.mask,
    )
    return _refresh(out)


def predict_mask(session):
    """Foreground where the read-out logit is strictly positive."""
    return session.mask.copy()


def iou(mask, gt):
    """Intersection over union; 1.0 when both masks are empty."""
    mask = np.asarray(mask, dtype=bool)
    gt = np.asarray(gt, dtype=bool)
    if mask.shape != gt.shape:
        raise ShapeMismatch(f"mask {mask.shape} vs ground truth {gt.shape}")
    union = np.logical_or(mask, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(mask, gt).sum() / union)


# ---------------------------------------------------------------------------
# Serialization (bit-exact round trip)
# ---------------------------------------------------------------------------


def _enc(arr):
    arr = np.ascontiguousarray(arr)
    return {
        "dtype": str(arr.dtype),
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _dec(payload):
    arr = np.frombuffer(
        base64.b64decode(payload["data"]), dtype=np.dtype(payload["dtype"])
    )
    return arr.reshape(payload["shape"]).copy()


def session_to_dict(session):
    b = session.base
    return {
        "format": "probattn-session/1",
        "config": b.cfg.to_json_dict(),
        "image": _enc(b.image),
        "gt": None if b.gt is None else _enc(b.gt),
        "features": _enc(b.features),
        "queries": _enc(b.queries),
        "base_keys": _enc(b.model.keys),
        "bbox": None if session.bbox is None else list(session.bbox),
        "value_means": _enc(session.model.value_means),
        "keys": _enc(session.model.keys),
        "clicks": [
            {"row": c.row, "col": c.col, "positive": c.positive, "radius": c.radius}
            for c in session.clicks
        ],
        "fixed": {str(k): v for k, v in session.fixed.items()},
    }


def session_from_dict(data):
    if data.get("format") != "probattn-session/1":
        raise ValueError("unsupported session payload")
    cfg = PlaygroundConfig.from_json_dict(data["config"])
    image = _dec(data["image"])
    gt = None if data["gt"] is None else _dec(data["gt"])
    h, w = image.shape[:2]
    n = h * w
    prior = (
        DistancePrior((h, w), cfg.prior_sigma)
        if cfg.prior_kind == "distance"
        else UniformPrior()
    )
    base_model = MixtureModel(
        keys=_dec(data["base_keys"]),
        key_precisions=np.full(n, cfg.effective_alpha),
        value_means=np.zeros((n, 1)),
        value_precisions=np.full(n, cfg.beta),
        prior=prior,
    )
    queries = _dec(data["queries"])
    weights = None
    if cfg.cache_weights and n <= WEIGHT_CACHE_MAX_UNITS:
        weights = responsibilities(queries, base_model)
    base = SessionBase(
        cfg=cfg, image=image, gt=gt, features=_dec(data["features"]),
        queries=queries, model=base_model, weights=weights,
    )
    session = SegmentationSession(
        base=base,
        bbox=None if data["bbox"] is None else tuple(data["bbox"]),
        model=base_model.replace(keys=_dec(data["keys"]),
                                 value_means=_dec(data["value_means"])),
        clicks=[ClickEvent(**c) for c in data["clicks"]],
        fixed={int(k): float(v) for k, v in data["fixed"].items()},
        output_logits=np.zeros(n),
        mask=np.zeros((h, w), dtype=bool),
    )
    return _refresh(session)


def session_digest(session):
    """Stable hash of the session's observable state (regression anchor)."""
    h = hashlib.sha256()
    payload = session_to_dict(session)
    h.update(json.dumps(payload, sort_keys=True).encode())
    h.update(session.mask.tobytes())
    return h.hexdigest()
