"""Data model: the query/value mixture bank, its priors, and PE tables.

A model is a bank of ``n`` memory units. Unit ``j`` holds a key ``keys[j]``
(dimension ``d``), a key precision ``key_precisions[j] > 0``, an expected
value ``value_means[j]`` (dimension ``m``) and a value precision
``value_precisions[j] >= 0``. A value precision of exactly 0 encodes the
limit in which the unit carries no value information: the value factor is
dropped from responsibilities and the unit is excluded from value updates.

Models are immutable; every adaptation operation returns a new instance.
"""

from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    DimensionMismatch,
    NonUniformPrecision,
    OffsetOutOfRange,
    ShapeMismatch,
)

LOG_2PI = math.log(2.0 * math.pi)


def _readonly(a, dtype=np.float64):
    out = np.asarray(a, dtype=dtype)
    if out is a and out.flags.writeable:
        out = out.copy()  # never freeze an array the caller still owns
    out.setflags(write=False)
    return out


def grid_positions(grid):
    """(H*W, 2) array of (row, col) coordinates in row-major order."""
    h, w = grid
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1)


# ---------------------------------------------------------------------------
# Relative position embeddings
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RelativePE:
    """Relative position embedding tables over a 2-D grid.

    Offsets are (delta_row, delta_col) between the attended unit j and the
    querying unit i, in row-major flat indexing. ``full`` tables carry one
    d-vector per 2-D offset; ``factored`` tables carry one d-vector per
    axis offset and sum the two on lookup. Query-side and key-side tables
    are separate. Tables may cover less than the full grid range (e.g. for
    windowed attention); lookups beyond their range raise
    :class:`OffsetOutOfRange`.
    """

    grid: tuple[int, int]
    variant: str  # "full" | "factored"
    q_table: np.ndarray | None = None  # full: (2A-1, 2B-1, d)
    k_table: np.ndarray | None = None
    q_height: np.ndarray | None = None  # factored: (2A-1, d)
    q_width: np.ndarray | None = None  # (2B-1, d)
    k_height: np.ndarray | None = None
    k_width: np.ndarray | None = None

    def __post_init__(self):
        h, w = self.grid
        if h < 1 or w < 1:
            raise ShapeMismatch(f"grid must be at least 1x1, got {self.grid}")
        if self.variant == "full":
            for name in ("q_table", "k_table"):
                t = getattr(self, name)
                if t is None or t.ndim != 3:
                    raise ShapeMismatch(f"{name} must be a (rows, cols, d) table")
                if t.shape[0] % 2 != 1 or t.shape[1] % 2 != 1:
                    raise ShapeMismatch(f"{name} must have odd extents, got {t.shape}")
                object.__setattr__(self, name, _readonly(t))
            if self.q_table.shape != self.k_table.shape:
                raise ShapeMismatch("query and key tables must have equal shapes")
        elif self.variant == "factored":
            dims = set()
            for name in ("q_height", "q_width", "k_height", "k_width"):
                t = getattr(self, name)
                if t is None or t.ndim != 2:
                    raise ShapeMismatch(f"{name} must be a (offsets, d) table")
                if t.shape[0] % 2 != 1:
                    raise ShapeMismatch(f"{name} must have an odd extent, got {t.shape}")
                dims.add(t.shape[1])
                object.__setattr__(self, name, _readonly(t))
            if len(dims) != 1:
                raise ShapeMismatch("all factored tables must share the embedding dim")
        else:
            raise ValueError(f"unknown PE variant {self.variant!r}")

    @property
    def dim(self):
        if self.variant == "full":
            return self.q_table.shape[2]
        return self.q_height.shape[1]

    def _reach(self):
        """(max |delta_row|, max |delta_col|) covered by the tables."""
        if self.variant == "full":
            return (self.q_table.shape[0] - 1) // 2, (self.q_table.shape[1] - 1) // 2
        return (self.q_height.shape[0] - 1) // 2, (self.q_width.shape[0] - 1) // 2

    def _check_range(self, dr, dc):
        mr, mc = self._reach()
        bad = (np.abs(dr) > mr) | (np.abs(dc) > mc)
        if np.any(bad):
            raise OffsetOutOfRange(
                f"offset outside table range (+-{mr}, +-{mc})"
            )

    def lookup(self, side, dr, dc):
        """Embedding vectors for integer offset arrays (broadcastable).

        ``side`` is "q" or "k". Returns an array with trailing dim d.
        """
        dr = np.asarray(dr, dtype=np.intp)
        dc = np.asarray(dc, dtype=np.intp)
        self._check_range(dr, dc)
        mr, mc = self._reach()
        if self.variant == "full":
            table = self.q_table if side == "q" else self.k_table
            return table[dr + mr, dc + mc]
        if side == "q":
            return self.q_height[dr + mr] + self.q_width[dc + mc]
        return self.k_height[dr + mr] + self.k_width[dc + mc]

    def lookup_flat(self, side, i, j):
        """Embedding for flat unit indices i (query side) and j (key side)."""
        h, w = self.grid
        i = np.asarray(i, dtype=np.intp)
        j = np.asarray(j, dtype=np.intp)
        dr = j // w - i // w
        dc = j % w - i % w
        return self.lookup(side, dr, dc)

    @staticmethod
    def random(grid, dim, variant="factored", scale=0.1, rng=None, full_reach=None):
        """Seeded random tables covering the whole grid (or ``full_reach``)."""
        rng = np.random.default_rng(rng)
        h, w = grid
        rh, rw = full_reach if full_reach is not None else (h - 1, w - 1)
        if variant == "full":
            shape = (2 * rh + 1, 2 * rw + 1, dim)
            return RelativePE(
                grid=grid,
                variant="full",
                q_table=rng.normal(scale=scale, size=shape),
                k_table=rng.normal(scale=scale, size=shape),
            )
        return RelativePE(
            grid=grid,
            variant="factored",
            q_height=rng.normal(scale=scale, size=(2 * rh + 1, dim)),
            q_width=rng.normal(scale=scale, size=(2 * rw + 1, dim)),
            k_height=rng.normal(scale=scale, size=(2 * rh + 1, dim)),
            k_width=rng.normal(scale=scale, size=(2 * rw + 1, dim)),
        )

    @staticmethod
    def full_from_factored(pe):
        """Materialize a full table as sums of a factored PE's axis tables."""
        if pe.variant != "factored":
            raise ValueError("expected a factored PE")
        q = pe.q_height[:, None, :] + pe.q_width[None, :, :]
        k = pe.k_height[:, None, :] + pe.k_width[None, :, :]
        return RelativePE(grid=pe.grid, variant="full", q_table=q, k_table=k)


# ---------------------------------------------------------------------------
# Priors over units
# ---------------------------------------------------------------------------


class Prior:
    """Base class: per-row prior over the n units.

    ``log_rows(model, rows)`` returns normalized log-probabilities of shape
    (len(rows), n); ``rows=None`` requests all rows (or a single shared row
    when ``row_constant`` is true).
    """

    row_constant = False

    def log_rows(self, model, rows=None):
        raise NotImplementedError

    def required_n(self):
        """Unit count this prior is pinned to, or None if size-agnostic."""
        return None


class UniformPrior(Prior):
    row_constant = True

    def log_rows(self, model, rows=None):
        return np.full((1, model.n), -math.log(model.n))

    def __eq__(self, other):
        return isinstance(other, UniformPrior)


class MagnitudePrior(Prior):
    """Prior tied to key/value vector lengths; collapses constrained MAP
    inference to dot-product softmax attention. Requires equal precisions."""

    row_constant = True

    def log_rows(self, model, rows=None):
        alpha = model.uniform_alpha()
        beta = model.uniform_beta()
        logits = 0.5 * alpha * np.sum(model.keys**2, axis=1)
        if beta != 0.0:
            logits = logits + 0.5 * beta * np.sum(model.value_means**2, axis=1)
        return (logits - logsumexp(logits))[None, :]

    def __eq__(self, other):
        return isinstance(other, MagnitudePrior)


class ExplicitPrior(Prior):
    """A stored n-by-n activation probability matrix."""

    def __init__(self, pi):
        pi = _readonly(pi)
        if pi.ndim != 2 or pi.shape[0] != pi.shape[1]:
            raise ShapeMismatch(f"explicit prior must be square, got {pi.shape}")
        if np.any(pi < 0):
            raise ValueError("explicit prior entries must be non-negative")
        rowsum = pi.sum(axis=1)
        if np.any(np.abs(rowsum - 1.0) > 1e-9):
            raise ValueError("explicit prior rows must sum to 1 within 1e-9")
        self.pi = pi

    def log_rows(self, model, rows=None):
        block = self.pi if rows is None else self.pi[np.asarray(rows, dtype=np.intp)]
        with np.errstate(divide="ignore"):
            return np.log(block)

    def required_n(self):
        return self.pi.shape[0]

    def __eq__(self, other):
        return isinstance(other, ExplicitPrior) and np.array_equal(self.pi, other.pi)


class DistancePrior(Prior):
    """Grid-locality prior: activation probability decays as
    exp(-dist(i, j) / sigma) in Euclidean grid distance."""

    # Full log-row matrices are memoized up to this unit count (n^2 memory).
    CACHE_MAX_UNITS = 4096

    def __init__(self, grid, sigma=1.0):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        self.grid = (int(grid[0]), int(grid[1]))
        self.sigma = float(sigma)
        self._pos = grid_positions(self.grid).astype(np.float64)

    def _compute_rows(self, rows):
        pos = self._pos
        rp = pos if rows is None else pos[np.asarray(rows, dtype=np.intp)]
        sq = (
            np.sum(rp**2, axis=1)[:, None]
            + np.sum(pos**2, axis=1)[None, :]
            - 2.0 * rp @ pos.T
        )
        logits = -np.sqrt(np.maximum(sq, 0.0)) / self.sigma
        return logits - logsumexp(logits, axis=1, keepdims=True)

    def log_rows(self, model, rows=None):
        n = self._pos.shape[0]
        if n <= self.CACHE_MAX_UNITS:
            full = _distance_log_rows(self.grid, self.sigma)
            return full if rows is None else full[np.asarray(rows, dtype=np.intp)]
        return self._compute_rows(rows)

    def required_n(self):
        return self.grid[0] * self.grid[1]

    def __eq__(self, other):
        return (
            isinstance(other, DistancePrior)
            and self.grid == other.grid
            and self.sigma == other.sigma
        )


@functools.lru_cache(maxsize=2)
def _distance_log_rows(grid, sigma):
    out = DistancePrior(grid, sigma)._compute_rows(None)
    out.setflags(write=False)
    return out


class PositionPrior(Prior):
    """Position-aware prior built from relative PE tables.

    The unnormalized log mass of unit j for querying unit i combines a
    Gaussian match between the key and the key-side embedding with
    magnitude terms for the key, both embeddings, and the expected value.
    """

    def __init__(self, pe):
        self.pe = pe

    def log_rows(self, model, rows=None):
        n = model.n
        if rows is None:
            rows = np.arange(n)
        rows = np.asarray(rows, dtype=np.intp)
        logits = position_prior_logits(model, self.pe, rows)
        return logits - logsumexp(logits, axis=1, keepdims=True)

    def required_n(self):
        h, w = self.pe.grid
        return h * w

    def __eq__(self, other):
        return isinstance(other, PositionPrior) and self.pe is other.pe


def pe_prior_terms(keys, alphas, betas, mus, rq, rk):
    """Unnormalized log prior mass with position embeddings.

    For a (querying position, unit j) pair with embeddings rq, rk this is
    ``log N(key_j | rk, (1/alpha_j) I)
    + (alpha_j/2)(2 ||key_j||^2 + ||rq||^2 + ||rk||^2)
    + (beta_j/2) ||mu_j||^2``.
    ``rq``/``rk`` have shape (..., n, d); the result broadcasts to (..., n).
    """
    d = keys.shape[-1]
    gauss = 0.5 * d * (np.log(alphas) - LOG_2PI) - 0.5 * alphas * np.sum(
        (keys - rk) ** 2, axis=-1
    )
    mag = 0.5 * alphas * (
        2.0 * np.sum(keys**2, axis=-1)
        + np.sum(rq**2, axis=-1)
        + np.sum(rk**2, axis=-1)
    )
    val = 0.5 * betas * np.sum(mus**2, axis=-1)
    return gauss + mag + val


def pe_query_ll_terms(queries, keys, alphas, rq):
    """Log query likelihood with a query-side position embedding.

    The density is Gaussian with mean (key_j + rq)/2 and precision
    2*alpha_j. ``queries`` has shape (..., 1, d) against units (n, d) with
    embeddings rq of shape (..., n, d); the result broadcasts to (..., n).
    """
    d = keys.shape[-1]
    mean = 0.5 * (keys + rq)
    return 0.5 * d * (np.log(2.0 * alphas) - LOG_2PI) - alphas * np.sum(
        (queries - mean) ** 2, axis=-1
    )


def position_prior_logits(model, pe, rows):
    """Unnormalized log prior mass for each (row i, unit j) pair."""
    n = model.n
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.arange(n, dtype=np.intp)
    ii = np.repeat(rows, n)
    jj = np.tile(cols, len(rows))
    rq = pe.lookup_flat("q", ii, jj).reshape(len(rows), n, model.d)
    rk = pe.lookup_flat("k", ii, jj).reshape(len(rows), n, model.d)
    return pe_prior_terms(
        model.keys, model.key_precisions, model.value_precisions,
        model.value_means, rq, rk,
    )


# ---------------------------------------------------------------------------
# The mixture model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MixtureModel:
    """Immutable bank of memory units with a prior over unit activation."""

    keys: np.ndarray  # (n, d)
    key_precisions: np.ndarray  # (n,), all > 0
    value_means: np.ndarray  # (n, m)
    value_precisions: np.ndarray  # (n,), all >= 0
    prior: Prior

    def __post_init__(self):
        keys = _readonly(np.atleast_2d(self.keys))
        means = _readonly(np.atleast_2d(self.value_means))
        alphas = _readonly(np.atleast_1d(self.key_precisions))
        betas = _readonly(np.atleast_1d(self.value_precisions))
        n = keys.shape[0]
        if n == 0:
            raise ValueError("a model needs at least one memory unit")
        if means.shape[0] != n or alphas.shape != (n,) or betas.shape != (n,):
            raise DimensionMismatch(
                f"inconsistent unit counts: keys {keys.shape}, means {means.shape}, "
                f"alphas {alphas.shape}, betas {betas.shape}"
            )
        for name, arr in (("keys", keys), ("value_means", means),
                          ("key_precisions", alphas), ("value_precisions", betas)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        if np.any(alphas <= 0):
            raise ValueError("key precisions must be strictly positive")
        if np.any(betas < 0):
            raise ValueError("value precisions must be non-negative")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "value_means", means)
        object.__setattr__(self, "key_precisions", alphas)
        object.__setattr__(self, "value_precisions", betas)
        req = self.prior.required_n()
        if req is not None and req != n:
            raise DimensionMismatch(
                f"prior is pinned to {req} units but the model has {n}"
            )

    @property
    def n(self):
        return self.keys.shape[0]

    @property
    def d(self):
        return self.keys.shape[1]

    @property
    def m(self):
        return self.value_means.shape[1]

    def uniform_alpha(self):
        a = self.key_precisions
        if np.any(a != a[0]):
            raise NonUniformPrecision("key precisions differ across units")
        return float(a[0])

    def uniform_beta(self):
        b = self.value_precisions
        if np.any(b != b[0]):
            raise NonUniformPrecision("value precisions differ across units")
        return float(b[0])

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @staticmethod
    def standard(keys, values, alpha=None, beta=0.0, prior=None):
        """Bank with shared precisions; ``alpha`` defaults to 1/sqrt(d)."""
        keys = np.atleast_2d(np.asarray(keys, dtype=np.float64))
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        n, d = keys.shape
        if alpha is None:
            alpha = 1.0 / math.sqrt(d)
        return MixtureModel(
            keys=keys,
            key_precisions=np.full(n, float(alpha)),
            value_means=values,
            value_precisions=np.full(n, float(beta)),
            prior=prior if prior is not None else MagnitudePrior(),
        )


def as_query_batch(model, queries):
    """Validate and coerce a query batch to (nq, d) float64."""
    q = np.asarray(queries, dtype=np.float64)
    if q.ndim == 1:
        q = q[None, :]
    if q.ndim != 2 or q.shape[1] != model.d:
        raise DimensionMismatch(
            f"queries have shape {np.shape(queries)}, expected (*, {model.d})"
        )
    return q


def as_value_batch(model, values, count=None):
    """Validate and coerce a value batch to (nv, m) float64."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim == 1:
        v = v[:, None] if model.m == 1 else v[None, :]
    if v.ndim != 2 or v.shape[1] != model.m:
        raise DimensionMismatch(
            f"values have shape {np.shape(values)}, expected (*, {model.m})"
        )
    if count is not None and v.shape[0] != count:
        raise DimensionMismatch(f"expected {count} values, got {v.shape[0]}")
    return v
