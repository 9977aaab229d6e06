"""Attention with relative position embeddings, full-grid and axial.

Position embeddings enter twice: a query-side table shifts the per-unit
query likelihood (Gaussian with mean (key + r^q)/2 and doubled precision)
and a key-side table reshapes the activation prior. Axial attention
restricts each pixel's attention to its own row or column within a local
context window; a corrective-self-attention pass chains a height block
and a width block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import row_softmax
from .errors import DimensionMismatch, NonUniformPrecision, ShapeMismatch
from .model import (
    MixtureModel,
    as_query_batch,
    pe_prior_terms,
    pe_query_ll_terms,
    position_prior_logits,
)

_ROW_BLOCK_ELEMS = 2_000_000


@dataclass(frozen=True)
class AxialConfig:
    """Grid extents, attended axis, and local context reach.

    A pixel attends to slice positions j with |j - i| < ``context``;
    ``context`` equal to the axis length makes the slice attention full.
    """

    height: int
    width: int
    context: int = 64
    axis: str = "height"

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ShapeMismatch("grid extents must be at least 1")
        if self.axis not in ("height", "width"):
            raise ValueError(f"unknown axis {self.axis!r}")
        axis_len = self.height if self.axis == "height" else self.width
        if not 1 <= self.context <= axis_len:
            raise ShapeMismatch(
                f"context must be in [1, {axis_len}] for axis {self.axis}"
            )


def pe_query_log_likelihood(q, j, i, model, pe):
    """Log query likelihood of unit ``j`` for a query at unit ``i``."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (model.d,):
        raise DimensionMismatch(f"query has shape {q.shape}, expected ({model.d},)")
    rq = pe.lookup_flat("q", i, j)
    return float(
        pe_query_ll_terms(
            q, model.keys[j], model.key_precisions[j], rq
        )
    )


def pe_prior_logits(i, j, model, pe):
    """Unnormalized log prior mass of unit ``j`` for querying unit ``i``."""
    rq = pe.lookup_flat("q", i, j)
    rk = pe.lookup_flat("k", i, j)
    return float(
        pe_prior_terms(
            model.keys[j],
            model.key_precisions[j],
            model.value_precisions[j],
            model.value_means[j],
            rq,
            rk,
        )
    )


def _check_constrained(model, assume_constrained):
    if assume_constrained:
        return
    try:
        model.uniform_alpha()
    except NonUniformPrecision:
        raise NonUniformPrecision(
            "position-embedded attention expects equal key precisions "
            "(pass assume_constrained=True to opt into the general weights)"
        ) from None


def pe_attention(queries, model, pe, assume_constrained=False):
    """Position-embedded attention output for one query per unit.

    Weights combine the embedded prior and the embedded query likelihood,
    row-normalized; the output is the weighted value-mean average.
    """
    q = as_query_batch(model, queries)
    n = model.n
    if q.shape[0] != n:
        raise DimensionMismatch(
            f"pe_attention needs one query per unit (got {q.shape[0]} for {n})"
        )
    h, w = pe.grid
    if h * w != n:
        raise ShapeMismatch(f"PE grid {pe.grid} does not cover {n} units")
    _check_constrained(model, assume_constrained)
    out = np.empty((n, model.m))
    block = max(1, _ROW_BLOCK_ELEMS // max(n * model.d, 1))
    cols = np.arange(n, dtype=np.intp)
    for start in range(0, n, block):
        stop = min(start + block, n)
        rows = np.arange(start, stop, dtype=np.intp)
        prior = position_prior_logits(model, pe, rows)
        ii = np.repeat(rows, n)
        jj = np.tile(cols, len(rows))
        rq = pe.lookup_flat("q", ii, jj).reshape(len(rows), n, model.d)
        qll = pe_query_ll_terms(
            q[start:stop, None, :], model.keys, model.key_precisions, rq
        )
        weights = row_softmax(prior + qll)
        out[start:stop] = weights @ model.value_means
    return out


def _as_grid_param(arr, shape, name):
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 0:
        return np.broadcast_to(a, shape)
    if a.shape != shape:
        raise ShapeMismatch(f"{name} must be scalar or shaped {shape}, got {a.shape}")
    return a


def _slice_attention(queries, keys, alphas, betas, mus, pe, axis, context):
    """Windowed PE attention along one 1-D slice of the grid.

    Offsets outside the window are clamped before the table lookup (the
    tables only need to cover the window reach) and masked out after.
    """
    length = keys.shape[0]
    delta = np.arange(length)[None, :] - np.arange(length)[:, None]
    clamped = np.clip(delta, -(context - 1), context - 1)
    zeros = np.zeros_like(delta)
    dr, dc = (clamped, zeros) if axis == "height" else (zeros, clamped)
    rq = pe.lookup("q", dr, dc)
    rk = pe.lookup("k", dr, dc)
    prior = pe_prior_terms(keys, alphas, betas, mus, rq, rk)
    qll = pe_query_ll_terms(queries[:, None, :], keys, alphas, rq)
    logits = prior + qll
    logits[np.abs(delta) >= context] = -np.inf
    return row_softmax(logits) @ mus


def axial_attention(features, values, alphas, betas, cfg, pe, assume_constrained=False):
    """Attention along one grid axis within a local context window.

    ``features`` (H, W, d) act as both queries and keys; ``values``
    (H, W, m) as value means. Each height column (or width row) is an
    independent softmax restricted to slice offsets |j - i| < context.
    """
    features = np.asarray(features, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if features.ndim != 3 or values.ndim != 3:
        raise ShapeMismatch("features and values must be (H, W, dim) maps")
    h, w = features.shape[:2]
    if values.shape[:2] != (h, w):
        raise ShapeMismatch("features and values disagree on the grid")
    if (cfg.height, cfg.width) != (h, w):
        raise ShapeMismatch(
            f"config grid {(cfg.height, cfg.width)} does not match maps {(h, w)}"
        )
    alphas = _as_grid_param(alphas, (h, w), "alphas")
    betas = _as_grid_param(betas, (h, w), "betas")
    if not assume_constrained and np.any(alphas != alphas.flat[0]):
        raise NonUniformPrecision(
            "axial attention expects equal key precisions "
            "(pass assume_constrained=True to opt into the general weights)"
        )
    out = np.empty_like(values)
    if cfg.axis == "height":
        for c in range(w):
            out[:, c, :] = _slice_attention(
                features[:, c, :], features[:, c, :], alphas[:, c], betas[:, c],
                values[:, c, :], pe, "height", cfg.context,
            )
    else:
        for r in range(h):
            out[r, :, :] = _slice_attention(
                features[r, :, :], features[r, :, :], alphas[r, :], betas[r, :],
                values[r, :, :], pe, "width", cfg.context,
            )
    return out


def csa_pass(features, values, alphas, betas, pe, context=64,
             axes=("height", "width"), assume_constrained=False):
    """Chained axial blocks, each consuming the previous block's output.

    The default order is a height block followed by a width block;
    transposed grids swap the order via ``axes``.
    """
    h, w = np.asarray(features).shape[:2]
    out = values
    for axis in axes:
        axis_len = h if axis == "height" else w
        cfg = AxialConfig(h, w, context=min(context, axis_len), axis=axis)
        out = axial_attention(features, out, alphas, betas, cfg, pe,
                              assume_constrained=assume_constrained)
    return out
