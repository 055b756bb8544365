import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from democode import (DemocraticEmbedder, DGDDEFRegressor, DQPSGDClassifier, DSCQuantizer)
from democode.errors import DimensionMismatch
from democode.validation import check_binary_labels, check_positive_int, check_rate, check_vector


def test_embedder_roundtrip():
    X = np.random.default_rng(0).standard_normal((5, 12))
    est = DemocraticEmbedder(N=16, seed=2).fit(X)
    Z = est.transform(X)
    assert Z.shape == (5, 16)
    np.testing.assert_allclose(est.inverse_transform(Z), X, atol=1e-10)
    assert clone(est).get_params() == est.get_params()


def test_embedder_democratic_has_smaller_linf():
    X = np.random.default_rng(1).standard_normal((3, 8))
    near = DemocraticEmbedder("orthonormal", N=16, mode="near").fit(X).transform(X)
    dem = DemocraticEmbedder("orthonormal", N=16, mode="dem").fit(X).transform(X)
    assert np.all(np.abs(dem).max(axis=1) <= np.abs(near).max(axis=1) + 1e-9)


def test_quantizer_transform_and_codec():
    X = np.random.default_rng(2).standard_normal((4, 16))
    q = DSCQuantizer(rate=6).fit(X)
    R = q.transform(X)
    assert np.all(np.linalg.norm(R - X, axis=1) < 0.2 * np.linalg.norm(X, axis=1))
    np.testing.assert_array_equal(q.decode(q.encode(X[0])), R[0])


def test_not_fitted_and_shape_errors():
    with pytest.raises(NotFittedError):
        DemocraticEmbedder().transform(np.ones((1, 4)))
    est = DemocraticEmbedder().fit(np.ones((2, 4)))
    with pytest.raises(DimensionMismatch):
        est.transform(np.ones((1, 5)))


def test_regressor_approaches_least_squares():
    rng = np.random.default_rng(3)
    A = rng.standard_normal((60, 6))
    b = A @ rng.standard_normal(6) + 0.1 * rng.standard_normal(60)
    reg = DGDDEFRegressor(rate=8, T=200).fit(A, b)
    ls = np.linalg.lstsq(A, b, rcond=None)[0]
    np.testing.assert_allclose(reg.coef_, ls, atol=1e-3)
    assert reg.score(A, b) > 0.9


def test_classifier_separates_classes():
    rng = np.random.default_rng(4)
    y = np.array(["a"] * 30 + ["b"] * 30)
    X = np.where(y[:, None] == "b", 1.0, -1.0) * 0.5 + 0.3 * rng.standard_normal((60, 8))
    clf = DQPSGDClassifier(rate=4, T=300, batch=10).fit(X, y)
    assert clf.score(X, y) > 0.9
    assert set(clf.predict(X)) <= {"a", "b"}


def test_validation_helpers():
    with pytest.raises(ValueError):
        check_vector([1.0, np.nan])
    with pytest.raises(DimensionMismatch):
        check_vector([1.0, 2.0], n=3)
    with pytest.raises(ValueError):
        check_rate(0)
    with pytest.raises(ValueError):
        check_positive_int(1.5, "T")
    signed, classes = check_binary_labels([3, 5, 5])
    np.testing.assert_array_equal(signed, [-1, 1, 1])
    with pytest.raises(ValueError):
        check_binary_labels([1, 2, 3])
