"""Estimator-style front end: fit/score/sample objects that compose with
scikit-learn pipelines and model-selection utilities."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, DensityMixin

from .density import estimate_density
from .learn import LearnConfig, learn
from .mixtures import cdf as mixture_cdf
from .mixtures import pdf as mixture_pdf
from .mixtures import sample as mixture_sample
from .validation import check_fitted, check_samples


class MixtureLearner(BaseEstimator, DensityMixin):
    """Proper, agnostic mixture fit: the hypothesis is itself a mixture.

    Parameters
    ----------
    k : number of components.
    eps : target accuracy of the internal density estimate and fit.
    delta : failure budget, recorded in reports (the pipeline exposes
        empirical success rates rather than a tail-probability knob).
    gamma : optional precision cap; when set, the bounded-precision
        search is used instead of allocation enumeration.
    family : "gaussian", "exponential", or "laplace".
    seed : base seed for the solver's multi-start search.

    Attributes (after fit)
    ----------------------
    model_ : MixtureParams of the fitted mixture.
    report_ : FitReport with threshold, allocation, and solver diagnostics.
    """

    def __init__(self, k=1, eps=0.1, delta=0.1, gamma=None, family="gaussian", seed=0):
        self.k = k
        self.eps = eps
        self.delta = delta
        self.gamma = gamma
        self.family = family
        self.seed = seed

    def fit(self, X, y=None):
        x = check_samples(X)
        cfg = LearnConfig(
            k=self.k,
            eps=self.eps,
            delta=self.delta,
            gamma=self.gamma,
            family=self.family,
            seed=self.seed,
        )
        self.report_ = learn(x, cfg)
        self.model_ = self.report_.params
        return self

    def pdf(self, X):
        check_fitted(self, "model_")
        return mixture_pdf(self.model_, check_samples(X))

    def cdf(self, X):
        check_fitted(self, "model_")
        return mixture_cdf(self.model_, check_samples(X))

    def score_samples(self, X):
        check_fitted(self, "model_")
        return np.log(np.maximum(self.pdf(X), 1e-300))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))

    def sample(self, n_samples=1, seed=None):
        check_fitted(self, "model_")
        return mixture_sample(
            self.model_, n_samples, self.seed if seed is None else seed
        )


class PiecewiseDensityEstimator(BaseEstimator, DensityMixin):
    """Nonparametric front half of the pipeline: the piecewise-polynomial
    density estimate, exposed as an estimator of its own.

    Attributes (after fit)
    ----------------------
    estimate_ : DensityEstimate (piecewise polynomial plus bookkeeping).
    """

    def __init__(self, k=1, eps=0.1):
        self.k = k
        self.eps = eps

    def fit(self, X, y=None):
        x = check_samples(X)
        self.estimate_ = estimate_density(x, self.k, self.eps)
        return self

    def pdf(self, X):
        check_fitted(self, "estimate_")
        return self.estimate_.pp.evaluate(check_samples(X))

    def score_samples(self, X):
        check_fitted(self, "estimate_")
        return np.log(np.maximum(self.pdf(X), 1e-300))

    def score(self, X, y=None):
        return float(np.mean(self.score_samples(X)))
