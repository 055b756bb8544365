import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import hadamard

from democode.errors import InvalidDelta, InvalidDimensions, InvalidUP
from democode.frames import (FrameKind, as_kind, build_frame, default_kashin_params,
                             estimate_up_eta, frame_from_descriptor, fwht, kashin_constants,
                             next_power_of_two)


def test_fwht_matches_dense_hadamard():
    rng = np.random.default_rng(0)
    for N in (1, 2, 8, 64):
        x = rng.standard_normal(N)
        np.testing.assert_allclose(fwht(x), hadamard(N) @ x, atol=1e-10)


def test_fwht_batched_rows():
    X = np.arange(12.0).reshape(3, 4)
    np.testing.assert_allclose(fwht(X), X @ hadamard(4).T)


def test_fwht_rejects_non_power_of_two():
    with pytest.raises(InvalidDimensions):
        fwht(np.ones(6))


def test_next_power_of_two():
    assert [next_power_of_two(k) for k in (1, 2, 3, 116, 128)] == [1, 2, 4, 128, 128]


@pytest.mark.parametrize("kind,n,N", [("hadamard", 5, 8), ("hadamard", 16, 16),
                                       ("orthonormal", 6, 10), ("identity", 4, 4)])
def test_parseval_frames(kind, n, N):
    S = build_frame(kind, n, N, seed=3).to_dense()
    assert S.shape == (n, N)
    np.testing.assert_allclose(S @ S.T, np.eye(n), atol=1e-10)


def test_hadamard_apply_matches_dense():
    frame = build_frame("hadamard", 12, 16, seed=7)
    S = frame.to_dense()
    rng = np.random.default_rng(1)
    x, y = rng.standard_normal(16), rng.standard_normal(12)
    np.testing.assert_allclose(frame.apply(x), S @ x, atol=1e-12)
    np.testing.assert_allclose(frame.apply_adjoint(y), S.T @ y, atol=1e-12)
    # entries are +-1/sqrt(N)
    np.testing.assert_allclose(np.abs(S), 1 / 4)


def test_subgaussian_frame_bounds_are_eigenvalues():
    frame = build_frame("subgaussian", 8, 64, seed=2)
    A, B = frame.frame_bounds()
    eig = np.linalg.eigvalsh(frame.matrix @ frame.matrix.T)
    assert (A, B) == pytest.approx((eig[0], eig[-1]))
    assert not frame.is_parseval


def test_build_is_deterministic_and_roundtrips_descriptor():
    a = build_frame("orthonormal", 6, 12, seed=11)
    b = frame_from_descriptor(a.descriptor())
    np.testing.assert_array_equal(a.to_dense(), b.to_dense())
    c = build_frame("orthonormal", 6, 12, seed=12)
    assert not np.allclose(a.to_dense(), c.to_dense())


def test_invalid_dimensions():
    with pytest.raises(InvalidDimensions):
        build_frame("orthonormal", 8, 4)
    with pytest.raises(InvalidDimensions):
        build_frame("hadamard", 8, 12)
    with pytest.raises(InvalidDimensions):
        build_frame("identity", 3, 4)


def test_kind_aliases_and_codes():
    assert as_kind("randomized-hadamard") is FrameKind.HADAMARD
    for kind in FrameKind:
        assert FrameKind.from_code(kind.code) is kind


def test_kashin_constants_hand_values():
    # eta=1/2, delta=1/4, Parseval: K_u = 0.5/(0.5*0.5) = 2, K_l = 1
    p = kashin_constants(0.5, 0.25)
    assert p.k_upper == pytest.approx(2.0)
    assert p.k_lower == pytest.approx(1.0)


def test_kashin_constants_reject_bad_inputs():
    # A = eta sqrt(B) sits on the boundary of the strict inequality
    with pytest.raises(InvalidUP):
        kashin_constants(1.0, 0.5)
    with pytest.raises(InvalidUP):
        kashin_constants(0.5, 1.5)


def test_up_estimate_rejects_tiny_delta():
    frame = build_frame("orthonormal", 4, 8, seed=0)
    with pytest.raises(InvalidDelta):
        estimate_up_eta(frame, 0.1)


def test_square_orthonormal_frame_has_no_up():
    frame = build_frame("orthonormal", 8, 8, seed=0)
    with pytest.raises(InvalidUP):
        default_kashin_params(frame, seed=0)


def test_redundant_frame_has_up():
    frame = build_frame("orthonormal", 16, 32, seed=0)
    p = default_kashin_params(frame, seed=0)
    assert 0 < p.eta < 1
    assert p.k_upper > 1
    assert p.delta == pytest.approx(0.25)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5), st.integers(0, 2 ** 32), st.sampled_from(["hadamard", "orthonormal"]))
def test_frame_is_tight_for_any_seed(log_extra, seed, kind):
    n = 4
    N = n * 2 ** log_extra if kind == "hadamard" else n + 3 * log_extra
    frame = build_frame(kind, n, N, seed)
    y = np.random.default_rng(seed % 1000).standard_normal(n)
    # S S^T = I means the adjoint preserves the norm
    assert np.linalg.norm(frame.apply_adjoint(y)) == pytest.approx(np.linalg.norm(y), rel=1e-9)
    assert frame.aspect_ratio == pytest.approx(N / n)
    assert math.isclose(np.linalg.norm(frame.apply(frame.apply_adjoint(y)) - y), 0, abs_tol=1e-9)
