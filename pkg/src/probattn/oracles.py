"""Independent reference evaluations used to cross-check the fast paths.

Everything here is deliberately naive: per-pair loops, extended-precision
arithmetic via mpmath, and direct transcriptions of the update formulas.
None of it calls the vectorized implementations it is used to verify; the
only shared surface is the model's raw parameter arrays.
"""

from __future__ import annotations

import numpy as np
from mpmath import mp, mpf

from .model import (
    DistancePrior,
    ExplicitPrior,
    MagnitudePrior,
    PositionPrior,
    UniformPrior,
)

DPS = 50


def _sqn(a, b):
    """Squared distance between two vectors, in mpmath."""
    total = mpf(0)
    for x, y in zip(a, b):
        diff = mpf(float(x)) - mpf(float(y))
        total += diff * diff
    return total


def _query_like(q, key, alpha, d):
    alpha = mpf(float(alpha))
    return (alpha / (2 * mp.pi)) ** (mpf(d) / 2) * mp.e ** (-alpha / 2 * _sqn(q, key))


def _value_like(v, mu, beta, m):
    if float(beta) == 0.0:
        return mpf(1)  # dropped factor for zero-precision units
    beta = mpf(float(beta))
    return (beta / (2 * mp.pi)) ** (mpf(m) / 2) * mp.e ** (-beta / 2 * _sqn(v, mu))


def prior_rows_direct(model, rows):
    """Per-row prior over units, evaluated directly per variant."""
    n = model.n
    prior = model.prior
    out = []
    with mp.workdps(DPS):
        if isinstance(prior, UniformPrior):
            row = [mpf(1) / n] * n
            return [list(row) for _ in rows]
        if isinstance(prior, MagnitudePrior):
            alpha = mpf(float(model.key_precisions[0]))
            beta = mpf(float(model.value_precisions[0]))
            masses = [
                mp.e ** (alpha / 2 * _sqn(model.keys[j], np.zeros(model.d))
                         + beta / 2 * _sqn(model.value_means[j], np.zeros(model.m)))
                for j in range(n)
            ]
            z = sum(masses)
            row = [mass / z for mass in masses]
            return [list(row) for _ in rows]
        if isinstance(prior, ExplicitPrior):
            return [[mpf(float(prior.pi[i, j])) for j in range(n)] for i in rows]
        if isinstance(prior, DistancePrior):
            h, w = prior.grid
            for i in rows:
                ri, ci = divmod(int(i), w)
                masses = []
                for j in range(n):
                    rj, cj = divmod(j, w)
                    dist = mp.sqrt(mpf((ri - rj) ** 2 + (ci - cj) ** 2))
                    masses.append(mp.e ** (-dist / mpf(prior.sigma)))
                z = sum(masses)
                out.append([mass / z for mass in masses])
            return out
        if isinstance(prior, PositionPrior):
            for i in rows:
                masses = [
                    mp.e ** _pe_prior_logit_direct(model, prior.pe, int(i), j)
                    for j in range(n)
                ]
                z = sum(masses)
                out.append([mass / z for mass in masses])
            return out
    raise TypeError(f"unsupported prior {type(prior)!r}")


def responsibilities_direct(queries, model, values=None):
    """Per-pair posterior weights, normalized per row, as float64."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    nq, n = queries.shape[0], model.n
    rows = range(nq) if not model.prior.row_constant else [0] * nq
    with mp.workdps(DPS):
        priors = prior_rows_direct(model, rows if not model.prior.row_constant else [0])
        out = np.empty((nq, n))
        for i in range(nq):
            prow = priors[i] if not model.prior.row_constant else priors[0]
            masses = []
            for j in range(n):
                mass = prow[j] * _query_like(
                    queries[i], model.keys[j], model.key_precisions[j], model.d
                )
                if values is not None:
                    mass *= _value_like(
                        values[i], model.value_means[j],
                        model.value_precisions[j], model.m,
                    )
                masses.append(mass)
            z = sum(masses)
            out[i] = [float(mass / z) for mass in masses]
    return out


def standard_attention_direct(queries, model):
    """Textbook softmax(alpha * Q K^T) V in plain numpy."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    alpha = float(model.key_precisions[0])
    logits = alpha * queries @ model.keys.T
    logits = logits - logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    w = w / w.sum(axis=1, keepdims=True)
    return w @ model.value_means


def em_value_inference_direct(query, model, init_v, iters, row=0):
    """Extended-precision EM value inference for one query."""
    with mp.workdps(DPS):
        prow = prior_rows_direct(model, [row])[0]
        qlike = [
            _query_like(query, model.keys[j], model.key_precisions[j], model.d)
            for j in range(model.n)
        ]
        v = [mpf(float(x)) for x in np.atleast_1d(init_v)]
        for _ in range(iters):
            masses = [
                prow[j] * qlike[j] * _value_like(
                    v, model.value_means[j], model.value_precisions[j], model.m
                )
                for j in range(model.n)
            ]
            z = sum(masses)
            w = [mass / z for mass in masses]
            denom = sum(
                w[j] * mpf(float(model.value_precisions[j])) for j in range(model.n)
            )
            v = [
                sum(
                    w[j] * mpf(float(model.value_precisions[j]))
                    * mpf(float(model.value_means[j, c]))
                    for j in range(model.n)
                ) / denom
                for c in range(model.m)
            ]
        return np.array([float(x) for x in v])


def marginal_log_likelihood_direct(queries, model):
    """Direct extended-precision query marginal log likelihood."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    with mp.workdps(DPS):
        total = mpf(0)
        rows = (
            [0] * queries.shape[0]
            if model.prior.row_constant
            else list(range(queries.shape[0]))
        )
        priors = prior_rows_direct(
            model, [0] if model.prior.row_constant else rows
        )
        for i in range(queries.shape[0]):
            prow = priors[0] if model.prior.row_constant else priors[i]
            mass = sum(
                prow[j] * _query_like(
                    queries[i], model.keys[j], model.key_precisions[j], model.d
                )
                for j in range(model.n)
            )
            total += mp.log(mass)
        return float(total)


# ---------------------------------------------------------------------------
# Adaptation formula oracles
# ---------------------------------------------------------------------------


def _query_weights_direct(model, queries):
    """Query-only posterior weights in extended precision."""
    nq, n = queries.shape[0], model.n
    rows = [0] if model.prior.row_constant else list(range(nq))
    priors = prior_rows_direct(model, rows)
    w = []
    for i in range(nq):
        prow = priors[0] if model.prior.row_constant else priors[i]
        masses = [
            prow[j] * _query_like(
                queries[i], model.keys[j], model.key_precisions[j], model.d
            )
            for j in range(n)
        ]
        z = sum(masses)
        w.append([mass / z for mass in masses])
    return w


def adapt_keys_direct(model, queries, theta_xi, iters, anchor="previous",
                      refresh_magnitude_prior=True):
    """Direct per-unit evaluation of the key update recursion."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    with mp.workdps(DPS):
        current = model
        keys0 = model.keys
        frozen = None
        if isinstance(model.prior, MagnitudePrior) and not refresh_magnitude_prior:
            frozen = ExplicitPrior(
                np.tile(
                    np.array(
                        [float(x) for x in prior_rows_direct(model, [0])[0]]
                    ),
                    (model.n, 1),
                )
            )
            current = current.replace(prior=frozen)
        theta = mpf(float(theta_xi))
        for _ in range(iters):
            w = _query_weights_direct(current, queries)
            new_keys = np.array(current.keys)
            for k in range(model.n):
                alpha = mpf(float(current.key_precisions[k]))
                sw = sum(w[i][k] for i in range(queries.shape[0]))
                anchor_vec = current.keys[k] if anchor == "previous" else keys0[k]
                denom = theta + alpha * sw
                if denom == 0:
                    continue
                for c in range(model.d):
                    swq = sum(
                        w[i][k] * mpf(float(queries[i, c]))
                        for i in range(queries.shape[0])
                    )
                    new_keys[k, c] = float(
                        (theta * mpf(float(anchor_vec[c])) + alpha * swq) / denom
                    )
            current = current.replace(keys=new_keys)
        if frozen is not None:
            current = current.replace(prior=model.prior)
        return np.array(current.keys)


def adapt_alphas_direct(model, queries, theta_alpha, iters):
    """Direct per-unit evaluation of the precision update recursion."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    t1, t2 = (mpf(float(t)) for t in theta_alpha)
    with mp.workdps(DPS):
        current = model
        for _ in range(iters):
            w = _query_weights_direct(current, queries)
            new_alpha = np.array(current.key_precisions)
            for k in range(model.n):
                sw = sum(w[i][k] for i in range(queries.shape[0]))
                disp = sum(
                    w[i][k] * _sqn(queries[i], current.keys[k]) / 2
                    for i in range(queries.shape[0])
                )
                num = t1 + mpf(model.d) / 2 * sw - 1
                den = t2 + disp
                if den > 0 and num / den > 0:
                    new_alpha[k] = float(num / den)
            current = current.replace(key_precisions=new_alpha)
        return np.array(current.key_precisions)


def _fixed_weights_direct(model, queries, indices, values):
    """Fixed-pair posterior weights (query and value factors)."""
    rows = [0] * len(indices) if model.prior.row_constant else list(indices)
    priors = prior_rows_direct(
        model, [0] if model.prior.row_constant else rows
    )
    w = []
    for pos, i in enumerate(indices):
        prow = priors[0] if model.prior.row_constant else priors[pos]
        masses = [
            prow[j]
            * _query_like(queries[i], model.keys[j], model.key_precisions[j], model.d)
            * _value_like(
                values[pos], model.value_means[j],
                model.value_precisions[j], model.m,
            )
            for j in range(model.n)
        ]
        z = sum(masses)
        w.append([mass / z for mass in masses])
    return w


def propagate_values_direct(model, queries, indices, values, theta_mu, iters,
                            anchor="previous"):
    """Direct evaluation of the value propagation recursion."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    theta = mpf(float(theta_mu))
    with mp.workdps(DPS):
        current = model
        means0 = model.value_means
        for _ in range(iters):
            w = _fixed_weights_direct(current, queries, indices, values)
            new_means = np.array(current.value_means)
            for k in range(model.n):
                beta = mpf(float(current.value_precisions[k]))
                if beta == 0:
                    continue
                sw = sum(w[pos][k] for pos in range(len(indices)))
                denom = theta + beta * sw
                if denom == 0:
                    continue
                anchor_vec = (
                    current.value_means[k] if anchor == "previous" else means0[k]
                )
                for c in range(model.m):
                    swv = sum(
                        w[pos][k] * mpf(float(values[pos, c]))
                        for pos in range(len(indices))
                    )
                    new_means[k, c] = float(
                        (theta * mpf(float(anchor_vec[c])) + beta * swv) / denom
                    )
            current = current.replace(value_means=new_means)
        return np.array(current.value_means)


def update_betas_direct(model, queries, indices, values, theta_beta, iters,
                        dim_factor="m"):
    """Direct evaluation of the value-precision update recursion."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    t1, t2 = (mpf(float(t)) for t in theta_beta)
    factor = mpf(model.m if dim_factor == "m" else model.d) / 2
    with mp.workdps(DPS):
        current = model
        for _ in range(iters):
            w = _fixed_weights_direct(current, queries, indices, values)
            new_beta = np.array(current.value_precisions)
            for k in range(model.n):
                if current.value_precisions[k] == 0:
                    continue
                sw = sum(w[pos][k] for pos in range(len(indices)))
                disp = sum(
                    w[pos][k] * _sqn(values[pos], current.value_means[k]) / 2
                    for pos in range(len(indices))
                )
                num = t1 + factor * sw - 1
                den = t2 + disp
                if den > 0 and num / den > 0:
                    new_beta[k] = float(num / den)
            current = current.replace(value_precisions=new_beta)
        return np.array(current.value_precisions)


def update_priors_direct(model, queries, indices, values, theta_pi):
    """Direct evaluation of the Dirichlet prior update."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    with mp.workdps(DPS):
        w = _fixed_weights_direct(model, queries, indices, values)
        rows = prior_rows_direct(
            model,
            [0] if model.prior.row_constant else list(range(model.n)),
        )
        pi = np.empty((model.n, model.n))
        for i in range(model.n):
            prow = rows[0] if model.prior.row_constant else rows[i]
            pi[i] = [float(p) for p in prow]
        theta = np.broadcast_to(np.asarray(theta_pi, dtype=np.float64),
                                (model.n, model.n))
        for pos, i in enumerate(indices):
            num = [
                w[pos][k] + mpf(float(theta[i, k])) - 1 for k in range(model.n)
            ]
            z = sum(num)
            pi[i] = [float(x / z) for x in num]
        return pi


# ---------------------------------------------------------------------------
# Grid-search oracle for scalar value inference
# ---------------------------------------------------------------------------


def value_objective_grid(query, model, lo=-10.0, hi=10.0, step=1e-4, row=0):
    """Dense evaluation of log p(v, q | mixture) over a scalar value grid.

    Returns (grid, objective). Direct density arithmetic; usable only for
    m = 1 models.
    """
    if model.m != 1:
        raise ValueError("the grid oracle handles scalar values only")
    grid = np.arange(lo, hi + step / 2, step)
    query = np.asarray(query, dtype=np.float64)
    with mp.workdps(DPS):
        prow = prior_rows_direct(model, [row])[0]
        log_pi = np.array([float(mp.log(p)) for p in prow])
    alpha = model.key_precisions
    beta = model.value_precisions
    d = model.d
    qterm = 0.5 * d * (np.log(alpha) - np.log(2 * np.pi)) - 0.5 * alpha * np.sum(
        (query[None, :] - model.keys) ** 2, axis=1
    )
    const = log_pi + qterm
    logits = np.tile(const, (grid.size, 1))
    live = beta > 0
    if np.any(live):
        vterm = (
            0.5 * (np.log(beta[live]) - np.log(2 * np.pi))[None, :]
            - 0.5 * beta[live][None, :]
            * (grid[:, None] - model.value_means[:, 0][live][None, :]) ** 2
        )
        logits[:, live] += vterm
    peak = logits.max(axis=1, keepdims=True)
    obj = peak[:, 0] + np.log(np.sum(np.exp(logits - peak), axis=1))
    return grid, obj


def hill_climb(values, start):
    """Index of the local maximum reached by greedy steps from ``start``."""
    idx = int(start)
    while True:
        if idx > 0 and values[idx - 1] > values[idx]:
            idx -= 1
        elif idx + 1 < len(values) and values[idx + 1] > values[idx]:
            idx += 1
        else:
            return idx


# ---------------------------------------------------------------------------
# Position-embedding brute force
# ---------------------------------------------------------------------------


def _pe_prior_logit_direct(model, pe, i, j):
    """Extended-precision log prior mass for the (i, j) pair."""
    rq = np.asarray(pe.lookup_flat("q", i, j), dtype=np.float64)
    rk = np.asarray(pe.lookup_flat("k", i, j), dtype=np.float64)
    alpha = mpf(float(model.key_precisions[j]))
    beta = mpf(float(model.value_precisions[j]))
    d = mpf(model.d)
    key = model.keys[j]
    gauss = d / 2 * mp.log(alpha / (2 * mp.pi)) - alpha / 2 * _sqn(key, rk)
    mag = alpha / 2 * (
        2 * _sqn(key, np.zeros(model.d))
        + _sqn(rq, np.zeros(model.d))
        + _sqn(rk, np.zeros(model.d))
    )
    val = beta / 2 * _sqn(model.value_means[j], np.zeros(model.m))
    return gauss + mag + val


def _pe_query_loglike_direct(model, pe, q, i, j):
    rq = np.asarray(pe.lookup_flat("q", i, j), dtype=np.float64)
    alpha = mpf(float(model.key_precisions[j]))
    d = mpf(model.d)
    mean = (np.asarray(model.keys[j]) + rq) / 2.0
    return d / 2 * mp.log(2 * alpha / (2 * mp.pi)) - alpha * _sqn(q, mean)


def pe_attention_direct(queries, model, pe):
    """Per-pair brute-force position-embedded attention."""
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    n = model.n
    out = np.empty((n, model.m))
    with mp.workdps(DPS):
        for i in range(n):
            masses = [
                mp.e ** (
                    _pe_prior_logit_direct(model, pe, i, j)
                    + _pe_query_loglike_direct(model, pe, queries[i], i, j)
                )
                for j in range(n)
            ]
            z = sum(masses)
            for c in range(model.m):
                out[i, c] = float(
                    sum(
                        masses[j] * mpf(float(model.value_means[j, c]))
                        for j in range(n)
                    ) / z
                )
    return out


def axial_attention_direct(features, values, alphas, betas, context, axis, pe):
    """Per-slice brute-force windowed axial attention."""
    features = np.asarray(features, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    h, w = features.shape[:2]
    alphas = np.broadcast_to(np.asarray(alphas, dtype=np.float64), (h, w))
    betas = np.broadcast_to(np.asarray(betas, dtype=np.float64), (h, w))
    out = np.empty_like(values)
    with mp.workdps(DPS):
        def slice_out(feats, als, bts, vals, axis_name):
            length = feats.shape[0]
            res = np.empty_like(vals)
            for i in range(length):
                masses = []
                js = [j for j in range(length) if abs(j - i) < context]
                for j in js:
                    delta = j - i
                    dr, dc = (delta, 0) if axis_name == "height" else (0, delta)
                    rq = np.asarray(pe.lookup("q", dr, dc), dtype=np.float64)
                    rk = np.asarray(pe.lookup("k", dr, dc), dtype=np.float64)
                    alpha = mpf(float(als[j]))
                    beta = mpf(float(bts[j]))
                    d = mpf(feats.shape[1])
                    gauss = d / 2 * mp.log(alpha / (2 * mp.pi)) \
                        - alpha / 2 * _sqn(feats[j], rk)
                    mag = alpha / 2 * (
                        2 * _sqn(feats[j], np.zeros(feats.shape[1]))
                        + _sqn(rq, np.zeros_like(rq))
                        + _sqn(rk, np.zeros_like(rk))
                    )
                    val = beta / 2 * _sqn(vals[j], np.zeros(vals.shape[1]))
                    mean = (feats[j] + rq) / 2.0
                    qll = d / 2 * mp.log(2 * alpha / (2 * mp.pi)) \
                        - alpha * _sqn(feats[i], mean)
                    masses.append(mp.e ** (gauss + mag + val + qll))
                z = sum(masses)
                for c in range(vals.shape[1]):
                    res[i, c] = float(
                        sum(
                            masses[pos] * mpf(float(vals[j, c]))
                            for pos, j in enumerate(js)
                        ) / z
                    )
            return res

        if axis == "height":
            for c in range(w):
                out[:, c, :] = slice_out(
                    features[:, c, :], alphas[:, c], betas[:, c],
                    values[:, c, :], "height",
                )
        else:
            for r in range(h):
                out[r, :, :] = slice_out(
                    features[r, :, :], alphas[r, :], betas[r, :],
                    values[r, :, :], "width",
                )
    return out
