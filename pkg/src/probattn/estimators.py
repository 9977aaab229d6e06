"""Scikit-learn style estimators wrapping the mixture attention core.

Two surfaces cover the common compositions: a transformer that holds a
fitted key/value bank and maps queries to inferred values (optionally
adapting its keys to the query batch first), and a semi-supervised
propagator that spreads a handful of pinned values across all samples.
Both follow the usual ``fit`` / ``transform`` / ``get_params`` contract so
they drop into pipelines and grid searches.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .adaptation import AdaptationConfig, FixedValues, adapt_keys, propagate_values
from .core import attention_output, em_value_inference, standard_attention
from .model import MagnitudePrior, MixtureModel, UniformPrior


def _as_values(y):
    y = check_array(y, ensure_2d=False, dtype=np.float64, ensure_all_finite=False)
    return y[:, None] if y.ndim == 1 else y


class MixtureAttention(BaseEstimator, TransformerMixin):
    """Attention over a fitted memory bank of keys and values.

    Parameters
    ----------
    alpha : float or None
        Shared key precision; ``None`` uses 1/sqrt(d).
    beta : float
        Shared value precision. 0 keeps the single-pass softmax update;
        positive values enable iterative EM value inference.
    em_iters : int
        EM iterations per query when ``beta`` > 0.
    key_adaptation_iters : int
        When positive, keys are adapted to each transform batch before
        inference (inference-time EM update of the bank).
    key_prior_precision : float
        Gaussian anchor precision for key adaptation (0 = maximum
        likelihood update).

    Attributes
    ----------
    model_ : MixtureModel
        The fitted bank.
    adapted_model_ : MixtureModel
        Bank used by the last ``transform`` call (differs from ``model_``
        only when key adaptation ran).
    """

    def __init__(self, alpha=None, beta=0.0, em_iters=1,
                 key_adaptation_iters=0, key_prior_precision=0.0):
        self.alpha = alpha
        self.beta = beta
        self.em_iters = em_iters
        self.key_adaptation_iters = key_adaptation_iters
        self.key_prior_precision = key_prior_precision

    def fit(self, X, y):
        """Store the bank: rows of ``X`` are keys, rows of ``y`` values."""
        X = check_array(X, dtype=np.float64)
        y = _as_values(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError(
                f"X has {X.shape[0]} rows but y has {y.shape[0]}"
            )
        self.model_ = MixtureModel.standard(
            X, y, alpha=self.alpha, beta=self.beta, prior=MagnitudePrior()
        )
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Inferred value for each query row of ``X``."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}"
            )
        model = self.model_
        if self.key_adaptation_iters > 0:
            cfg = AdaptationConfig(
                theta_xi=self.key_prior_precision,
                key_iters=self.key_adaptation_iters,
            )
            model = adapt_keys(model, X, cfg)
        self.adapted_model_ = model
        if self.beta == 0.0:
            return standard_attention(X, model)
        out = np.empty((X.shape[0], model.m))
        for i, q in enumerate(X):
            out[i], _ = em_value_inference(
                q, model, init_v=np.zeros(model.m), iters=self.em_iters
            )
        return out

    def predict(self, X):
        """Alias of :meth:`transform`, squeezing scalar values."""
        out = self.transform(X)
        return out[:, 0] if out.shape[1] == 1 else out


class ValuePropagation(BaseEstimator):
    """Semi-supervised value spreading over a sample bank.

    Fit with features ``X`` and targets ``y`` where unlabeled rows are
    NaN; labeled rows act as pinned values that EM propagates to every
    sample. Mirrors the label-propagation family but for continuous
    targets.

    Parameters
    ----------
    theta_mu : float
        Anchor precision pulling propagated values toward ``init_value``.
    iters : int
        EM propagation iterations.
    alpha, beta : float
        Shared key and value precisions of the underlying bank.
    init_value : float
        Initial value mean for every unit before propagation.
    """

    def __init__(self, theta_mu=1.0, iters=5, alpha=None, beta=0.1,
                 init_value=0.0):
        self.theta_mu = theta_mu
        self.iters = iters
        self.alpha = alpha
        self.beta = beta
        self.init_value = init_value

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = _as_values(y)
        if y.shape[0] != X.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        labeled = ~np.any(np.isnan(y), axis=1)
        if not np.any(labeled):
            raise ValueError("at least one labeled (non-NaN) row is required")
        init = np.full((X.shape[0], y.shape[1]), float(self.init_value))
        model = MixtureModel.standard(
            X, init, alpha=self.alpha, beta=self.beta, prior=UniformPrior()
        )
        fixed = FixedValues(np.flatnonzero(labeled), y[labeled])
        cfg = AdaptationConfig(theta_mu=self.theta_mu, value_iters=self.iters)
        self.model_ = propagate_values(model, X, fixed, cfg)
        self.n_features_in_ = X.shape[1]
        self.values_ = self.model_.value_means.copy()
        return self

    def predict(self, X=None):
        """Propagated values: the bank's own when ``X`` is None, otherwise
        the attention output for new query rows."""
        check_is_fitted(self, "model_")
        if X is None:
            out = self.values_
        else:
            X = check_array(X, dtype=np.float64)
            out = attention_output(X, self.model_)
        return out[:, 0] if out.shape[1] == 1 else out

    def transform(self, X):
        out = self.predict(X)
        return out[:, None] if out.ndim == 1 else out
