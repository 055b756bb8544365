"""scikit-learn style wrappers around the embedding, coding and optimization routines."""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import optim
from .embeddings import EmbeddingMode, as_mode, embed
from .frames import build_frame, default_kashin_params
from .quantizers import dsc_decode, dsc_encode
from .validation import (check_binary_labels, check_matrix, check_positive_int, check_rate,
                         check_vector)


class DemocraticEmbedder(TransformerMixin, BaseEstimator):
    """Map rows of ``X`` (length ``n``) to frame coefficients (length ``N``).

    ``inverse_transform`` applies the frame, so it undoes ``transform``
    exactly.
    """

    def __init__(self, frame_kind="hadamard", N=None, mode="near", method="lp", seed=0):
        self.frame_kind = frame_kind
        self.N = N
        self.mode = mode
        self.method = method
        self.seed = seed

    def fit(self, X, y=None):
        X = check_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.frame_ = build_frame(self.frame_kind, self.n_features_in_, self.N, self.seed)
        self.params_ = None
        if as_mode(self.mode) is EmbeddingMode.DEMOCRATIC and self.method == "iterative":
            self.params_ = default_kashin_params(self.frame_, seed=self.seed)
        return self

    def transform(self, X):
        check_is_fitted(self, "frame_")
        X = check_matrix(X, self.n_features_in_)
        return np.array([embed(self.frame_, x, self.mode, method=self.method,
                               params=self.params_).coefficients for x in X])

    def inverse_transform(self, Z):
        check_is_fitted(self, "frame_")
        Z = check_matrix(Z, self.frame_.N, name="Z")
        return self.frame_.apply(Z)


class DSCQuantizer(TransformerMixin, BaseEstimator):
    """Rate-``R`` (near) democratic source coder.

    ``encode`` and ``decode`` work on single vectors and payloads;
    ``transform`` returns the decoded reconstruction of every row.
    """

    def __init__(self, rate=4.0, frame_kind="hadamard", N=None, mode="near", method="lp", seed=0):
        self.rate = rate
        self.frame_kind = frame_kind
        self.N = N
        self.mode = mode
        self.method = method
        self.seed = seed

    def fit(self, X, y=None):
        check_rate(self.rate)
        X = check_matrix(X)
        self.n_features_in_ = X.shape[1]
        self.frame_ = build_frame(self.frame_kind, self.n_features_in_, self.N, self.seed)
        self.params_ = None
        if as_mode(self.mode) is EmbeddingMode.DEMOCRATIC and self.method == "iterative":
            self.params_ = default_kashin_params(self.frame_, seed=self.seed)
        return self

    def encode(self, y):
        check_is_fitted(self, "frame_")
        y = check_vector(y, self.n_features_in_)
        return dsc_encode(self.frame_, y, self.rate, self.mode, method=self.method,
                          params=self.params_)

    def decode(self, payload):
        check_is_fitted(self, "frame_")
        return dsc_decode(self.frame_, payload)

    def transform(self, X):
        X = check_matrix(X, getattr(self, "n_features_in_", None))
        return np.array([self.decode(self.encode(x)) for x in X])


class DGDDEFRegressor(RegressorMixin, BaseEstimator):
    """(Ridge) least squares fitted by DGD-DEF over an ``R``-bit gradient link."""

    def __init__(self, rate=4.0, frame_kind="orthonormal", N=None, mode="near", alpha=None,
                 T=100, reg=0.0, seed=0):
        self.rate = rate
        self.frame_kind = frame_kind
        self.N = N
        self.mode = mode
        self.alpha = alpha
        self.T = T
        self.reg = reg
        self.seed = seed

    def fit(self, X, y):
        X = check_matrix(X)
        y = check_vector(y, X.shape[0])
        check_rate(self.rate)
        T = check_positive_int(self.T, "T")
        obj = optim.RidgeLS(X, y, self.reg) if self.reg > 0 else optim.LeastSquares(X, y)
        frame = build_frame(self.frame_kind, X.shape[1], self.N, self.seed)
        self.report_ = optim.dgd_def(obj, frame, self.rate, self.mode, self.alpha, T)
        self.coef_ = self.report_.iterates[-1]
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return check_matrix(X, self.n_features_in_) @ self.coef_


class DQPSGDClassifier(ClassifierMixin, BaseEstimator):
    """Linear hinge-loss classifier trained by DQ-PSGD on ``R``-bit subgradients.

    ``N`` defaults to ``max(2n, 32)``: smaller redundant orthonormal frames
    rarely satisfy the uncertainty principle the democratic shape coder needs.
    """

    def __init__(self, rate=2.0, N=None, T=1000, radius=5.0, batch=10, seed=0):
        self.rate = rate
        self.N = N
        self.T = T
        self.radius = radius
        self.batch = batch
        self.seed = seed

    def fit(self, X, y):
        X = check_matrix(X)
        signed, self.classes_ = check_binary_labels(y)
        if signed.shape[0] != X.shape[0]:
            raise ValueError("X and y have different numbers of rows")
        obj = optim.HingeSVM(X, signed)
        n = X.shape[1]
        frame = build_frame("orthonormal", n, self.N or max(2 * n, 32), self.seed)
        params = default_kashin_params(frame, seed=self.seed)
        domain = optim.Ball(np.zeros(n), self.radius)
        batch = min(check_positive_int(self.batch, "batch"), X.shape[0])
        self.report_ = optim.dq_psgd(obj, frame, self.rate, check_positive_int(self.T, "T"),
                                     domain, rng=self.seed, params=params,
                                     oracle=optim.StochasticSubgradient(batch, self.seed))
        self.coef_ = self.report_.averaged
        self.n_features_in_ = n
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_")
        return check_matrix(X, self.n_features_in_) @ self.coef_

    def predict(self, X):
        return np.where(self.decision_function(X) >= 0, self.classes_[1], self.classes_[0])
