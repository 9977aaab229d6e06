"""Inference-time EM updates of the mixture parameters.

Key adaptation moves keys toward observed queries under a Gaussian anchor;
value propagation moves expected values toward externally fixed values at
a subset of units. Both are MAP EM updates: each iteration re-weights
units by their posterior responsibility and solves the penalized M-step in
closed form. Updates never mutate their input model and never produce an
invalid one: per-unit updates that would break positivity are rejected
with an :class:`AdaptationGuardWarning` and the previous value is kept.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .core import (
    _BLOCK_ELEMS,
    pairwise_sqdist,
    query_ll_matrix,
    query_marginal_log_likelihood,
    row_softmax,
    value_ll_matrix,
)
from .errors import AllZeroRow, DegeneratePrecision, DimensionMismatch
from .model import (
    LOG_2PI,
    ExplicitPrior,
    MagnitudePrior,
    MixtureModel,
    as_query_batch,
    as_value_batch,
)

from .errors import AdaptationGuardWarning

ANCHOR_PREVIOUS = "previous"
ANCHOR_INITIAL = "initial"


@dataclass(frozen=True)
class AdaptationConfig:
    """Prior strengths and iteration counts for the online updates.

    ``theta_xi`` and ``theta_mu`` are Gaussian anchor precisions (0 gives
    the maximum-likelihood update); ``theta_alpha`` / ``theta_beta`` are
    Gamma prior pairs, ``None`` disabling the corresponding update;
    ``theta_pi`` is the Dirichlet parameter for prior updates (scalar or
    per-entry matrix, at least 1). ``anchor`` selects whether Gaussian
    anchors track the previous iterate or the initial parameters.
    """

    theta_xi: float = 0.0
    theta_alpha: tuple[float, float] | None = None
    theta_mu: float = 1.0
    theta_beta: tuple[float, float] | None = None
    theta_pi: float = 1.0
    key_iters: int = 1
    value_iters: int = 5
    anchor: str = ANCHOR_PREVIOUS
    # Recompute the magnitude prior from current keys each key iteration;
    # set False to freeze it at the pre-adaptation keys (ablation).
    refresh_magnitude_prior: bool = True
    # Dimension factor in the beta update: "m" (value dim) or "d" (the
    # literal printed formula, kept for comparison).
    beta_dim_factor: str = "m"

    def __post_init__(self):
        if self.theta_xi < 0 or self.theta_mu < 0:
            raise ValueError("anchor precisions must be non-negative")
        for name in ("theta_alpha", "theta_beta"):
            pair = getattr(self, name)
            if pair is not None:
                a, b = pair
                if a <= 0 or b <= 0:
                    raise ValueError(f"{name} parameters must be strictly positive")
        if np.any(np.asarray(self.theta_pi) < 1.0):
            raise ValueError("theta_pi must be at least 1")
        if self.key_iters < 0 or self.value_iters < 0:
            raise ValueError("iteration counts must be non-negative")
        if self.anchor not in (ANCHOR_PREVIOUS, ANCHOR_INITIAL):
            raise ValueError(f"unknown anchor {self.anchor!r}")
        if self.beta_dim_factor not in ("m", "d"):
            raise ValueError("beta_dim_factor must be 'm' or 'd'")

    def to_json_dict(self):
        d = {
            "theta_xi": self.theta_xi,
            "theta_alpha1": None if self.theta_alpha is None else self.theta_alpha[0],
            "theta_alpha2": None if self.theta_alpha is None else self.theta_alpha[1],
            "theta_mu": self.theta_mu,
            "theta_beta1": None if self.theta_beta is None else self.theta_beta[0],
            "theta_beta2": None if self.theta_beta is None else self.theta_beta[1],
            "theta_pi": self.theta_pi,
            "key_iters": self.key_iters,
            "value_iters": self.value_iters,
            "anchor": self.anchor,
        }
        return d

    @staticmethod
    def from_json_dict(data):
        data = dict(data)
        known = {
            "theta_xi", "theta_alpha1", "theta_alpha2", "theta_mu",
            "theta_beta1", "theta_beta2", "theta_pi", "key_iters",
            "value_iters", "anchor",
        }
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown adaptation config keys: {sorted(unknown)}")
        a1, a2 = data.get("theta_alpha1"), data.get("theta_alpha2")
        b1, b2 = data.get("theta_beta1"), data.get("theta_beta2")
        if (a1 is None) != (a2 is None) or (b1 is None) != (b2 is None):
            raise ValueError("Gamma prior parameters must be given in pairs")
        kwargs = {}
        for key in ("theta_xi", "theta_mu", "theta_pi"):
            if key in data:
                kwargs[key] = float(data[key])
        for key in ("key_iters", "value_iters"):
            if key in data:
                kwargs[key] = int(data[key])
        if "anchor" in data:
            kwargs["anchor"] = data["anchor"]
        if a1 is not None:
            kwargs["theta_alpha"] = (float(a1), float(a2))
        if b1 is not None:
            kwargs["theta_beta"] = (float(b1), float(b2))
        return AdaptationConfig(**kwargs)


@dataclass(frozen=True)
class FixedValues:
    """Externally pinned values at a subset of units.

    ``indices`` are distinct unit indices; ``values`` their pinned value
    vectors, one row per index.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 1:
            vals = vals[:, None]
        if idx.ndim != 1 or vals.ndim != 2 or idx.shape[0] != vals.shape[0]:
            raise DimensionMismatch("indices and values must pair up one to one")
        if len(np.unique(idx)) != len(idx):
            raise ValueError("fixed indices must be distinct")
        if np.any(idx < 0):
            raise ValueError("fixed indices must be non-negative")
        idx.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.indices)


def _warn(msg):
    warnings.warn(msg, AdaptationGuardWarning, stacklevel=3)


def _query_weight_sums(model, queries, need_dispersion=False):
    """Accumulate per-unit responsibility sums over all queries.

    Returns (sum_w, sum_wq, sum_w_halfsq) where sum_w[k] is the total
    weight of unit k, sum_wq[k] the weight-averaged query mass, and
    sum_w_halfsq[k] = sum_i w_ik * ||q_i - key_k||^2 / 2 (or None).
    Blocked over query rows so memory stays bounded for large batches.
    """
    n, d = model.n, model.d
    lp_const = model.prior.log_rows(model) if model.prior.row_constant else None
    if lp_const is None and queries.shape[0] != n:
        raise DimensionMismatch(
            "adaptation with a row-dependent prior needs one query per unit"
        )
    sum_w = np.zeros(n)
    sum_wq = np.zeros((n, d))
    sum_disp = np.zeros(n) if need_dispersion else None
    alpha = model.key_precisions
    equal_alpha = not need_dispersion and np.all(alpha == alpha[0])
    block = max(1, _BLOCK_ELEMS // max(n, 1))
    for start in range(0, queries.shape[0], block):
        stop = min(start + block, queries.shape[0])
        qb = queries[start:stop]
        if equal_alpha:
            # Row-constant query norms cancel in the softmax.
            logits = qb @ (alpha[0] * model.keys.T)
            logits -= (0.5 * alpha[0]) * np.sum(model.keys**2, axis=1)[None, :]
            sq = None
        else:
            sq = pairwise_sqdist(qb, model.keys)
            logits = (
                0.5 * d * (np.log(alpha) - LOG_2PI)[None, :]
                - 0.5 * alpha[None, :] * sq
            )
        if lp_const is not None:
            logits += lp_const
        else:
            logits += model.prior.log_rows(model, np.arange(start, stop))
        w = row_softmax(logits)
        sum_w += w.sum(axis=0)
        sum_wq += w.T @ qb
        if need_dispersion:
            sum_disp += 0.5 * np.sum(w * sq, axis=0)
    return sum_w, sum_wq, sum_disp


def adapt_keys(model, queries, cfg):
    """EM update of the keys from observed queries.

    Each iteration computes query-only responsibilities and pulls every
    key toward its responsibility-weighted query mean, tempered by the
    Gaussian anchor of precision ``theta_xi``. Under the magnitude prior
    the prior is recomputed from the updated keys each iteration unless
    ``cfg.refresh_magnitude_prior`` is False.
    """
    if cfg.key_iters < 1:
        raise ValueError("adapt_keys requires key_iters >= 1")
    q = as_query_batch(model, queries)
    theta = cfg.theta_xi
    initial_keys = model.keys
    frozen_prior = None
    if isinstance(model.prior, MagnitudePrior) and not cfg.refresh_magnitude_prior:
        frozen_prior = ExplicitPrior(
            np.tile(np.exp(model.prior.log_rows(model)[0]), (model.n, 1))
        )
    current = model if frozen_prior is None else model.replace(prior=frozen_prior)
    for _ in range(cfg.key_iters):
        sum_w, sum_wq, _ = _query_weight_sums(current, q)
        alpha = current.key_precisions
        anchor = current.keys if cfg.anchor == ANCHOR_PREVIOUS else initial_keys
        denom = theta + alpha * sum_w
        new_keys = current.keys.copy()
        ok = denom > 0
        if not np.all(ok):
            _warn(
                f"key update denominator vanished for {int(np.sum(~ok))} unit(s); "
                "keeping their previous keys"
            )
        new_keys[ok] = (
            theta * anchor[ok] + alpha[ok, None] * sum_wq[ok]
        ) / denom[ok, None]
        current = current.replace(keys=new_keys)
    if frozen_prior is not None:
        current = current.replace(prior=model.prior)
    return current


def adapt_alphas(model, queries, cfg):
    """Gamma-MAP update of the key precisions from observed queries.

    Runs ``cfg.key_iters`` iterations; responsibilities are recomputed
    with the current precisions each time. Updates that would produce a
    non-positive precision are rejected per unit.
    """
    if cfg.theta_alpha is None:
        raise ValueError("adapt_alphas requires cfg.theta_alpha")
    if cfg.key_iters < 1:
        raise ValueError("adapt_alphas requires key_iters >= 1")
    q = as_query_batch(model, queries)
    t1, t2 = cfg.theta_alpha
    if t1 <= 1.0 - 0.5 * model.d * q.shape[0]:
        raise ValueError(
            "theta_alpha[0] too small for this batch: the update numerator "
            "could be non-positive for any responsibility pattern"
        )
    current = model
    for _ in range(cfg.key_iters):
        sum_w, _, sum_disp = _query_weight_sums(current, q, need_dispersion=True)
        num = t1 + 0.5 * current.d * sum_w - 1.0
        den = t2 + sum_disp
        with np.errstate(divide="ignore", invalid="ignore"):
            proposed = num / den
        ok = np.isfinite(proposed) & (proposed > 0)
        if not np.all(ok):
            _warn(
                f"alpha update rejected for {int(np.sum(~ok))} unit(s) "
                "(non-positive precision); keeping previous values"
            )
        new_alpha = current.key_precisions.copy()
        new_alpha[ok] = proposed[ok]
        current = current.replace(key_precisions=new_alpha)
    return current


def _fixed_weight_state(model, queries, fixed):
    """Pre-iteration state for fixed-pair responsibilities.

    Returns (A, unique_values, inverse_index, live_mask, values) where A
    holds exp(prior + query likelihood + value normalizer), max-subtracted
    per row and exponentiated once. Per-iteration weights multiply A by
    exp(-beta/2 ||v_i - mu_k||^2); grouping rows by unique fixed value
    keeps the per-iteration exponential count at (#distinct values) x n.
    """
    q = as_query_batch(model, queries)
    if q.shape[0] != model.n:
        raise DimensionMismatch(
            "value updates need the full self-attention query batch "
            f"(got {q.shape[0]} queries for {model.n} units)"
        )
    idx = fixed.indices
    if np.any(idx >= model.n):
        raise DimensionMismatch("fixed indices exceed the unit count")
    vals = as_value_batch(model, fixed.values, count=len(idx))
    qf = q[idx]
    if model.prior.row_constant:
        lp = model.prior.log_rows(model)
    else:
        lp = model.prior.log_rows(model, idx)
    beta = model.value_precisions
    live = beta > 0
    base = lp + query_ll_matrix(model, qf)
    norm = np.zeros(model.n)
    norm[live] = 0.5 * model.m * (np.log(beta[live]) - LOG_2PI)
    base = base + norm[None, :]
    base -= base.max(axis=1, keepdims=True)
    uniq, inverse = np.unique(vals, axis=0, return_inverse=True)
    return np.exp(base), uniq, inverse, live, vals


def _fixed_weights(model, state_a, uniq, inverse):
    """Row-normalized fixed-pair responsibilities for the current means."""
    beta = model.value_precisions
    expo = -0.5 * beta[None, :] * pairwise_sqdist(uniq, model.value_means)
    expo[:, beta == 0] = 0.0  # dropped value factor
    w = state_a * np.exp(expo)[inverse]
    total = w.sum(axis=1, keepdims=True)
    if np.any(total == 0.0):
        raise AllZeroRow("a fixed-pair responsibility row underflowed")
    return w / total


def propagate_values(model, queries, fixed, cfg):
    """EM propagation of fixed values into the value means.

    Each iteration weights every fixed pair against all units (query and
    value factors both included) and pulls each live unit's mean toward
    the weighted fixed-value average, tempered by the ``theta_mu`` anchor.
    Units with zero value precision are left untouched.
    """
    if cfg.value_iters < 1:
        raise ValueError("propagate_values requires value_iters >= 1")
    if len(fixed) == 0:
        raise ValueError("propagate_values requires at least one fixed value")
    if not np.any(model.value_precisions > 0):
        raise DegeneratePrecision("no unit has a positive value precision")
    theta = cfg.theta_mu
    initial_means = model.value_means
    current = model
    base, uniq, inverse, live, vals = _fixed_weight_state(model, queries, fixed)
    for _ in range(cfg.value_iters):
        w = _fixed_weights(current, base, uniq, inverse)
        sum_w = w.sum(axis=0)
        sum_wv = w.T @ vals
        beta = current.value_precisions
        anchor = (
            current.value_means if cfg.anchor == ANCHOR_PREVIOUS else initial_means
        )
        denom = theta + beta * sum_w
        ok = live & (denom > 0)
        skipped = live & ~ok
        if np.any(skipped):
            _warn(
                f"value update denominator vanished for {int(np.sum(skipped))} "
                "unit(s); keeping their previous means"
            )
        new_means = current.value_means.copy()
        new_means[ok] = (
            theta * anchor[ok] + beta[ok, None] * sum_wv[ok]
        ) / denom[ok, None]
        current = current.replace(value_means=new_means)
    return current


def update_betas(model, queries, fixed, cfg):
    """Gamma-MAP update of the value precisions from fixed pairs.

    The dimension factor follows ``cfg.beta_dim_factor`` ("m" uses the
    value dimension; "d" keeps the query-dimension variant for
    comparison). Zero-precision units stay excluded.
    """
    if cfg.theta_beta is None:
        raise ValueError("update_betas requires cfg.theta_beta")
    if cfg.value_iters < 1:
        raise ValueError("update_betas requires value_iters >= 1")
    if len(fixed) == 0:
        raise ValueError("update_betas requires at least one fixed value")
    t1, t2 = cfg.theta_beta
    factor = 0.5 * (model.m if cfg.beta_dim_factor == "m" else model.d)
    current = model
    for _ in range(cfg.value_iters):
        base, uniq, inverse, live, vals = _fixed_weight_state(current, queries, fixed)
        w = _fixed_weights(current, base, uniq, inverse)
        sum_w = w.sum(axis=0)
        disp = 0.5 * np.sum(w * pairwise_sqdist(vals, current.value_means), axis=0)
        num = t1 + factor * sum_w - 1.0
        den = t2 + disp
        with np.errstate(divide="ignore", invalid="ignore"):
            proposed = num / den
        ok = live & np.isfinite(proposed) & (proposed > 0)
        if np.any(live & ~ok):
            _warn(
                f"beta update rejected for {int(np.sum(live & ~ok))} unit(s) "
                "(non-positive precision); keeping previous values"
            )
        new_beta = current.value_precisions.copy()
        new_beta[ok] = proposed[ok]
        current = current.replace(value_precisions=new_beta)
    return current


def update_priors(model, queries, fixed, cfg):
    """Dirichlet-MAP update of the activation prior from fixed pairs.

    The result is always an explicit prior: rows at fixed units get the
    responsibility-plus-pseudocount update, all other rows are the old
    prior materialized. Requires ``theta_pi >= 1`` so no entry can go
    negative.
    """
    if len(fixed) == 0:
        raise ValueError("update_priors requires at least one fixed value")
    theta = np.asarray(cfg.theta_pi, dtype=np.float64)
    if np.any(theta < 1.0):
        raise ValueError("theta_pi must be at least 1")
    base, uniq, inverse, live, vals = _fixed_weight_state(model, queries, fixed)
    w = _fixed_weights(model, base, uniq, inverse)
    pi = np.exp(model.prior.log_rows(model))
    if pi.shape[0] == 1:
        pi = np.tile(pi, (model.n, 1))
    else:
        pi = pi.copy()
    if theta.ndim == 2:
        theta_rows = theta[fixed.indices]
    else:
        theta_rows = np.broadcast_to(theta, w.shape)
    num = w + theta_rows - 1.0
    pi[fixed.indices] = num / num.sum(axis=1, keepdims=True)
    return model.replace(prior=ExplicitPrior(pi))


def adaptation_pass(model, queries, cfg, fixed=None, update_prior=False):
    """Run the enabled updates in a fixed order: keys, alphas, means,
    betas, priors; each step sees the previous step's output."""
    current = model
    if cfg.key_iters >= 1:
        current = adapt_keys(current, queries, cfg)
        if cfg.theta_alpha is not None:
            current = adapt_alphas(current, queries, cfg)
    if fixed is not None and len(fixed) > 0 and cfg.value_iters >= 1:
        if np.any(current.value_precisions > 0):
            current = propagate_values(current, queries, fixed, cfg)
            if cfg.theta_beta is not None:
                current = update_betas(current, queries, fixed, cfg)
        if update_prior:
            current = update_priors(current, queries, fixed, cfg)
    return current


# ---------------------------------------------------------------------------
# Objective monitors (used by the verification suites)
# ---------------------------------------------------------------------------


def key_penalized_objective(model, queries, theta_xi=0.0, anchor_keys=None):
    """Query marginal log likelihood minus the Gaussian key anchor penalty."""
    obj = query_marginal_log_likelihood(queries, model)
    if theta_xi > 0 and anchor_keys is not None:
        obj -= 0.5 * theta_xi * float(np.sum((model.keys - anchor_keys) ** 2))
    return obj


def fixed_pairs_penalized_objective(
    model, queries, fixed, theta_mu=0.0, anchor_means=None
):
    """Joint log likelihood of the fixed pairs minus the mean anchor penalty.

    The value factor is dropped for zero-precision units, matching the
    responsibility convention.
    """
    q = as_query_batch(model, queries)
    idx = fixed.indices
    vals = as_value_batch(model, fixed.values, count=len(idx))
    if model.prior.row_constant:
        lp = model.prior.log_rows(model)
    else:
        lp = model.prior.log_rows(model, idx)
    logits = lp + query_ll_matrix(model, q[idx]) + value_ll_matrix(model, vals)
    obj = float(np.sum(logsumexp(logits, axis=1)))
    if theta_mu > 0 and anchor_means is not None:
        obj -= 0.5 * theta_mu * float(np.sum((model.value_means - anchor_means) ** 2))
    return obj
