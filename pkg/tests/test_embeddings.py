import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from democode.embeddings import (democratic_iterative, democratic_lp, dynamic_range_bound, embed,
                                 near_democratic)
from democode.errors import DimensionMismatch, MissingParams
from democode.frames import build_frame, default_kashin_params
from democode.lp import linf_min


def highs_linf(S, y):
    """Independent oracle: min t s.t. Sx = y, -t <= x <= t, solved by HiGHS."""
    n, N = S.shape
    c = np.r_[np.zeros(N), 1.0]
    A_eq = np.hstack([S, np.zeros((n, 1))])
    eye = np.eye(N)
    A_ub = np.vstack([np.hstack([eye, -np.ones((N, 1))]), np.hstack([-eye, -np.ones((N, 1))])])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(2 * N), A_eq=A_eq, b_eq=y,
                  bounds=[(None, None)] * (N + 1), method="highs")
    assert res.status == 0
    return res.fun


def test_near_democratic_identity_is_input():
    frame = build_frame("identity", 3)
    y = np.array([1.0, -2.0, 0.5])
    emb = near_democratic(frame, y)
    np.testing.assert_array_equal(emb.coefficients, y)
    assert emb.gain == 2.0


def test_near_democratic_hand_example():
    # S = [1/sqrt2, 1/sqrt2]: S^T y = (y/sqrt2, y/sqrt2)
    frame = build_frame("hadamard", 1, 2, seed=0)
    S = frame.to_dense()
    emb = near_democratic(frame, np.array([math.sqrt(2)]))
    np.testing.assert_allclose(emb.coefficients, S.ravel() * math.sqrt(2))
    np.testing.assert_allclose(np.abs(emb.coefficients), [1.0, 1.0])


def test_near_democratic_matches_pinv_for_dense_frames():
    frame = build_frame("subgaussian", 5, 12, seed=4)
    y = np.random.default_rng(0).standard_normal(5)
    np.testing.assert_allclose(near_democratic(frame, y).coefficients,
                               np.linalg.pinv(frame.matrix) @ y, atol=1e-10)


def test_democratic_lp_hand_example():
    # S = [1, 1] / sqrt 2 style: the min-l_inf solution of x1 + x2 = 2 is (1, 1)
    frame = build_frame("hadamard", 1, 2, seed=0)
    S = frame.to_dense()
    y = np.array([math.sqrt(2)]) * S[0, 0] * math.sqrt(2)
    emb = democratic_lp(frame, y)
    assert emb.residual < 1e-9
    assert emb.gain == pytest.approx(abs(y[0]) / (abs(S[0, 0]) * 2))


@pytest.mark.parametrize("kind,n,N,seed", [("orthonormal", 6, 12, 0), ("hadamard", 10, 16, 1),
                                            ("subgaussian", 4, 9, 2), ("orthonormal", 16, 32, 3)])
def test_democratic_lp_matches_highs(kind, n, N, seed):
    frame = build_frame(kind, n, N, seed)
    y = np.random.default_rng(seed).standard_normal(n)
    emb = democratic_lp(frame, y)
    assert emb.residual < 1e-8
    assert emb.gain == pytest.approx(highs_linf(frame.to_dense(), y), rel=1e-7, abs=1e-10)


def test_democratic_lp_brute_force_small():
    # n=2, N=4: enumerate vertex candidates of the LP (x_j = +-t on all but n-1 coords)
    frame = build_frame("orthonormal", 2, 4, seed=5)
    S = frame.to_dense()
    y = np.array([0.3, -1.1])
    best = math.inf
    for free in itertools.combinations(range(4), 1):
        fixed = [j for j in range(4) if j not in free]
        for signs in itertools.product((-1.0, 1.0), repeat=len(fixed)):
            # unknowns: x_free, t
            M = np.zeros((2, 2))
            M[:, 0] = S[:, free[0]]
            M[:, 1] = S[:, fixed] @ np.array(signs)
            try:
                sol = np.linalg.solve(M, y)
            except np.linalg.LinAlgError:
                continue
            xf, t = sol
            if t >= 0 and abs(xf) <= t + 1e-12:
                best = min(best, t)
    assert democratic_lp(frame, y).gain == pytest.approx(best, rel=1e-9)


def test_lp_reports_consistent_solution():
    rng = np.random.default_rng(9)
    S = rng.standard_normal((3, 7))
    y = rng.standard_normal(3)
    x, t, pivots = linf_min(S, y)
    np.testing.assert_allclose(S @ x, y, atol=1e-9)
    assert np.max(np.abs(x)) <= t + 1e-9
    assert pivots >= 1


def test_square_frames_lp_equals_near():
    frame = build_frame("orthonormal", 8, 8, seed=1)
    y = np.random.default_rng(1).standard_normal(8)
    np.testing.assert_allclose(democratic_lp(frame, y).coefficients,
                               near_democratic(frame, y).coefficients, atol=1e-8)


def test_iterative_reconstructs_and_is_bounded():
    frame = build_frame("orthonormal", 16, 32, seed=0)
    params = default_kashin_params(frame, seed=0)
    y = np.random.default_rng(2).standard_normal(16)
    emb = democratic_iterative(frame, y, params, iters=60)
    assert emb.residual < 1e-6 * np.linalg.norm(y)
    assert emb.gain <= params.k_upper / math.sqrt(32) * np.linalg.norm(y) * (1 + 1e-9)


def test_iterative_needs_params():
    frame = build_frame("orthonormal", 4, 8, seed=0)
    with pytest.raises(MissingParams):
        democratic_iterative(frame, np.ones(4), None)


def test_zero_vector_and_shape_errors():
    frame = build_frame("hadamard", 8, 16, seed=0)
    for mode in ("near", "dem"):
        emb = embed(frame, np.zeros(8), mode)
        assert emb.gain == 0.0
    with pytest.raises(DimensionMismatch):
        near_democratic(frame, np.ones(7))


def test_dynamic_range_bound_values():
    had = build_frame("hadamard", 64, 128, seed=0)
    assert dynamic_range_bound(had, "near") == pytest.approx(2 * math.sqrt(math.log(256) / 128))
    orth = build_frame("orthonormal", 64, 128, seed=0)
    assert dynamic_range_bound(orth, "near") == pytest.approx(
        2 * math.sqrt(math.log(256) / 128) * math.sqrt(2))
    assert dynamic_range_bound(build_frame("identity", 5), "near") == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_lp_is_minimal_and_feasible(seed):
    frame = build_frame("orthonormal", 4, 8, seed)
    y = np.random.default_rng(seed).standard_normal(4)
    lp = democratic_lp(frame, y)
    nd = near_democratic(frame, y)
    assert lp.residual < 1e-8
    # min l_inf never exceeds the l_inf of any other solution, and is >= ||y||/sqrt(N)
    assert lp.gain <= nd.gain + 1e-9
    assert lp.gain >= np.linalg.norm(y) / math.sqrt(8) - 1e-9
