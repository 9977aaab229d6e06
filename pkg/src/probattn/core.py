"""Responsibility computation and MAP value inference for the mixture bank.

All likelihood arithmetic happens in log space with per-row max
subtraction; weights are only exponentiated after normalization is safe.
Everything here is a pure function of its inputs and 64-bit throughout.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import logsumexp

from .errors import (
    AllZeroRow,
    DegeneratePrecision,
    DimensionMismatch,
    NonUniformPrecision,
)
from .model import (
    LOG_2PI,
    MagnitudePrior,
    MixtureModel,
    as_query_batch,
    as_value_batch,
)

# Cap on elements per temporary block: keeps peak memory near 32 MB.
_BLOCK_ELEMS = 4_000_000


def pairwise_sqdist(a, b):
    """Squared Euclidean distances between rows of ``a`` and rows of ``b``."""
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.maximum(sq, 0.0, out=sq)


def row_softmax(logits):
    """Softmax per row with max subtraction; rejects all--inf rows."""
    peak = np.max(logits, axis=1, keepdims=True)
    if not np.all(np.isfinite(peak)):
        raise AllZeroRow("a responsibility row has no finite logits")
    w = np.exp(logits - peak)
    w /= w.sum(axis=1, keepdims=True)
    return w


def query_log_likelihood(q, j, model):
    """Log density of query ``q`` under unit ``j``'s isotropic Gaussian."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (model.d,):
        raise DimensionMismatch(f"query has shape {q.shape}, expected ({model.d},)")
    alpha = model.key_precisions[j]
    diff = q - model.keys[j]
    return 0.5 * model.d * (math.log(alpha) - LOG_2PI) - 0.5 * alpha * float(
        diff @ diff
    )


def value_log_likelihood(v, j, model):
    """Log density of value ``v`` under unit ``j``; requires beta_j > 0."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (model.m,):
        raise DimensionMismatch(f"value has shape {v.shape}, expected ({model.m},)")
    beta = model.value_precisions[j]
    if beta == 0.0:
        raise DegeneratePrecision(
            f"unit {j} has zero value precision; its value density is degenerate"
        )
    diff = v - model.value_means[j]
    return 0.5 * model.m * (math.log(beta) - LOG_2PI) - 0.5 * beta * float(diff @ diff)


def query_ll_matrix(model, queries):
    """(nq, n) matrix of per-unit query log likelihoods."""
    alpha = model.key_precisions
    sq = pairwise_sqdist(queries, model.keys)
    return 0.5 * model.d * (np.log(alpha) - LOG_2PI)[None, :] - 0.5 * alpha[None, :] * sq


def value_ll_matrix(model, values):
    """(nv, n) value log likelihoods; columns with beta = 0 contribute 0.

    A zero value precision encodes "no value information": the factor is
    dropped from the responsibility product rather than evaluated.
    """
    beta = model.value_precisions
    out = np.zeros((values.shape[0], model.n))
    live = beta > 0
    if np.any(live):
        sq = pairwise_sqdist(values, model.value_means[live])
        out[:, live] = (
            0.5 * model.m * (np.log(beta[live]) - LOG_2PI)[None, :]
            - 0.5 * beta[live][None, :] * sq
        )
    return out


def log_prior_rows(model, rows=None):
    """Normalized log prior, shaped (1, n) for row-constant priors."""
    return model.prior.log_rows(model, rows)


def _require_self_rows(model, nq, what):
    if not model.prior.row_constant and nq != model.n:
        raise DimensionMismatch(
            f"{what} with a row-dependent prior needs one query per unit "
            f"(got {nq} queries for {model.n} units)"
        )


def responsibilities(queries, model, values=None):
    """Posterior unit responsibilities for each query (the attention matrix).

    Entry [i, j] is the probability that unit j generated query i (and
    value i, when ``values`` is given). With ``values`` omitted, all value
    precisions are treated as zero and the weights depend on queries alone.
    Rows sum to one.
    """
    q = as_query_batch(model, queries)
    _require_self_rows(model, q.shape[0], "responsibilities")
    if values is None:
        return row_softmax(_query_weight_logits_fast(model, q))
    logits = weight_logits(model, q, values=values)
    return row_softmax(logits)


def _query_weight_logits_fast(model, queries, rows=None):
    """Query-only weight logits, up to row constants (softmax-equivalent).

    With equal key precisions the per-row query-norm term is constant and
    dropped, turning the distance expansion into one matrix product plus
    column terms; otherwise falls back to the exact logits. Only valid
    for consumers that normalize per row.
    """
    alpha = model.key_precisions
    a0 = alpha[0]
    if np.any(alpha != a0):
        return weight_logits(model, queries, rows=rows)
    if model.prior.row_constant:
        lp = log_prior_rows(model)
    else:
        lp = log_prior_rows(model, rows)
    logits = queries @ (a0 * model.keys.T)
    col = lp - (0.5 * a0) * np.sum(model.keys**2, axis=1)[None, :]
    logits += col
    return logits


def weight_logits(model, queries, values=None, rows=None):
    """Unnormalized log responsibilities (prior + likelihood terms).

    ``rows=None`` with a row-dependent prior means "all rows in order".
    """
    if model.prior.row_constant:
        lp = log_prior_rows(model)
    else:
        lp = log_prior_rows(model, rows)
    logits = lp + query_ll_matrix(model, queries)
    if values is not None:
        v = as_value_batch(model, values, count=queries.shape[0])
        logits = logits + value_ll_matrix(model, v)
    return logits


def magnitude_prior(model):
    """Length-linked prior over units (requires equal precisions).

    Returns the n-vector of probabilities proportional to
    ``exp((alpha/2)||key_j||^2 + (beta/2)||mu_j||^2)``.
    """
    log_pi = MagnitudePrior().log_rows(model)[0]
    return np.exp(log_pi)


def standard_attention(queries, model, assume_constrained=False):
    """Single-pass dot-product attention output for each query.

    Valid in the constrained regime: magnitude prior, equal key precisions,
    value precisions treated as zero. Weights reduce to
    ``softmax(alpha * keys @ q)`` and the output is their value average.
    """
    q = as_query_batch(model, queries)
    if not assume_constrained and not isinstance(model.prior, MagnitudePrior):
        raise NonUniformPrecision(
            "standard_attention requires the magnitude prior "
            "(pass assume_constrained=True to override)"
        )
    alpha = model.uniform_alpha()
    w = row_softmax(alpha * (q @ model.keys.T))
    return w @ model.value_means


def value_inference_objective(query, model, v, unit_index=0):
    """Joint log density of (query, v) under the mixture, up to p(q).

    This is the quantity EM value inference ascends:
    ``log sum_j pi_j p(q|u_j) p(v|u_j)`` with the value factor dropped for
    units with zero value precision.
    """
    q = as_query_batch(model, query)
    lp = (
        log_prior_rows(model)
        if model.prior.row_constant
        else log_prior_rows(model, [unit_index])
    )
    logits = lp + query_ll_matrix(model, q)
    v = as_value_batch(model, v, count=1)
    logits = logits + value_ll_matrix(model, v)
    return float(logsumexp(logits[0]))


def em_value_inference(query, model, init_v, iters, unit_index=0):
    """Iterative EM estimate of the most probable value for one query.

    Alternates posterior responsibilities (including the value factor) with
    the precision-weighted value average. Returns the final estimate and
    the objective trace (length ``iters`` + 1, non-decreasing).
    """
    if iters < 1:
        raise ValueError("iters must be at least 1")
    beta = model.value_precisions
    if not np.any(beta > 0):
        raise DegeneratePrecision("em_value_inference needs some positive value precision")
    q = as_query_batch(model, query)
    lp = (
        log_prior_rows(model)
        if model.prior.row_constant
        else log_prior_rows(model, [unit_index])
    )
    base = lp + query_ll_matrix(model, q)  # (1, n), fixed across iterations
    v = as_value_batch(model, init_v, count=1)
    trace = np.empty(iters + 1)
    trace[0] = logsumexp(base + value_ll_matrix(model, v))
    for t in range(iters):
        w = row_softmax(base + value_ll_matrix(model, v))[0]
        denom = float(w @ beta)
        if denom == 0.0:
            raise DegeneratePrecision(
                "all responsibility mass fell on zero-precision units"
            )
        v = ((w * beta) @ model.value_means / denom)[None, :]
        trace[t + 1] = logsumexp(base + value_ll_matrix(model, v))
    return v[0], trace


def query_marginal_log_likelihood(queries, model):
    """Total log marginal density of the query batch under the mixture."""
    q = as_query_batch(model, queries)
    _require_self_rows(model, q.shape[0], "query_marginal_log_likelihood")
    total = 0.0
    block = max(1, _BLOCK_ELEMS // max(model.n, 1))
    for start in range(0, q.shape[0], block):
        stop = min(start + block, q.shape[0])
        rows = np.arange(start, stop)
        logits = weight_logits(model, q[start:stop], rows=rows)
        total += float(np.sum(logsumexp(logits, axis=1)))
    return total


def attention_output(queries, model, block=None):
    """Responsibility-weighted value average, computed in row blocks.

    Query-only weights (value precisions treated as zero), so this is the
    generalized attention update for arbitrary priors and per-unit key
    precisions. Suits large unit counts: peak memory stays bounded.
    """
    q = as_query_batch(model, queries)
    _require_self_rows(model, q.shape[0], "attention_output")
    nq = q.shape[0]
    out = np.empty((nq, model.m))
    if block is None:
        block = max(1, _BLOCK_ELEMS // max(model.n, 1))
    for start in range(0, nq, block):
        stop = min(start + block, nq)
        rows = np.arange(start, stop)
        w = row_softmax(_query_weight_logits_fast(model, q[start:stop], rows=rows))
        out[start:stop] = w @ model.value_means
    return out
