import math

import numpy as np
import pytest

from democode.errors import BudgetTooSmall, HeaderMismatch, MissingParams, OutOfRange
from democode.frames import build_frame, default_kashin_params
from democode.payload import EXACT32, PayloadMode, QuantizedPayload
from democode.quantizers import (ScalarQuantizerSpec, covering_efficiency, cuq_decode, cuq_encode,
                                 dsc_decode, dsc_encode, gain_dequantize, gain_quantize_dithered,
                                 gain_shape_decode, gain_shape_quantize, prop1_bound,
                                 scalar_covering_efficiency, uniform_dequantize, uniform_quantize)
from democode.rng import make_rng


def test_uniform_grid_two_bits():
    spec = ScalarQuantizerSpec(2)
    np.testing.assert_allclose(spec.grid, [-0.75, -0.25, 0.25, 0.75])
    assert spec.resolution == 0.5


def test_uniform_quantize_ties_go_low():
    spec = ScalarQuantizerSpec(2)
    idx = uniform_quantize(np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 0.3]), spec)
    np.testing.assert_array_equal(idx, [0, 0, 1, 2, 3, 2])


def test_uniform_quantize_error_is_half_resolution():
    rng = np.random.default_rng(0)
    for b in (1, 3, 6):
        spec = ScalarQuantizerSpec(b)
        x = rng.uniform(-1, 1, 5000)
        err = np.abs(uniform_dequantize(uniform_quantize(x, spec), spec) - x)
        assert err.max() <= 2.0 ** -b + 1e-15


def test_uniform_quantize_range_checks():
    with pytest.raises(OutOfRange):
        uniform_quantize(np.array([1.01]), ScalarQuantizerSpec(3))
    with pytest.raises(BudgetTooSmall):
        ScalarQuantizerSpec(0)


def test_decode_all_max_indices_identity():
    frame = build_frame("identity", 2)
    payload = QuantizedPayload(PayloadMode.NDSC, 2, 2, 1, EXACT32, frame.kind, 0, 1.0,
                               np.array([1, 1]))
    np.testing.assert_allclose(dsc_decode(frame, payload), [0.5, 0.5])


def test_dsc_identity_hand_example():
    # y = (1, -0.5): gain 1, b=2; -0.5 is a tie between -0.75 and -0.25 and goes low
    frame = build_frame("identity", 2)
    payload = dsc_encode(frame, np.array([1.0, -0.5]), 2)
    assert payload.gain == 1.0
    np.testing.assert_array_equal(payload.indices, [3, 0])
    np.testing.assert_allclose(dsc_decode(frame, payload), [0.75, -0.75])


def test_dsc_zero_vector():
    frame = build_frame("hadamard", 8, 8, seed=0)
    payload = dsc_encode(frame, np.zeros(8), 3)
    assert payload.gain == 0.0
    np.testing.assert_array_equal(dsc_decode(frame, payload), np.zeros(8))


def test_dsc_budget_and_header():
    frame = build_frame("hadamard", 100, 128, seed=1)
    payload = dsc_encode(frame, np.ones(100), 2)
    assert payload.bits == 1  # floor(200/128)
    assert payload.body_bits <= math.floor(100 * 2)
    with pytest.raises(BudgetTooSmall):
        dsc_encode(frame, np.ones(100), 1)
    other = build_frame("hadamard", 100, 128, seed=2)
    with pytest.raises(HeaderMismatch):
        dsc_decode(other, payload)


def test_ndsc_error_within_prop1_bound():
    bound = prop1_bound(4, 1, "near", N=128)
    rng = np.random.default_rng(3)
    for seed in range(20):
        frame = build_frame("hadamard", 128, 128, seed)
        y = rng.standard_normal(128)
        err = np.linalg.norm(dsc_decode(frame, dsc_encode(frame, y, 4)) - y) / np.linalg.norm(y)
        assert err <= bound


def test_dsc_democratic_error_within_bound():
    frame = build_frame("orthonormal", 16, 32, seed=0)
    params = default_kashin_params(frame, seed=0)
    bound = prop1_bound(4, 2, "dem", k_upper=params.k_upper)
    y = np.random.default_rng(4).standard_normal(16)
    for method in ("lp", "iterative"):
        p = dsc_encode(frame, y, 4, "dem", method=method, params=params)
        assert np.linalg.norm(dsc_decode(frame, p) - y) / np.linalg.norm(y) <= bound


def test_dsc_with_dithered_gain():
    frame = build_frame("hadamard", 8, 8, seed=0)
    y = np.random.default_rng(5).standard_normal(8)
    p = dsc_encode(frame, y, 4, gain_bits=8, gain_max=10.0, rng=make_rng(0))
    assert p.transmitted_bits == 8 * 4 + 8
    with pytest.raises(MissingParams):
        dsc_decode(frame, p)
    assert np.linalg.norm(dsc_decode(frame, p, gain_max=10.0) - y) < np.linalg.norm(y)


def test_prop1_and_covering_values():
    assert prop1_bound(4, 1, "dem", k_upper=2) == pytest.approx(0.25)
    assert prop1_bound(4, 1, "near", N=128) == pytest.approx(0.25 * math.sqrt(math.log(256)))
    assert prop1_bound(4, 1, "near", N=128) == pytest.approx(0.5887, abs=5e-5)
    assert prop1_bound(200, 1, "near", N=128) < 1e-50
    for R in (1, 3, 7):
        assert covering_efficiency(R, 1, "dem", k_upper=2).rho == pytest.approx(4.0)
    assert covering_efficiency(2, 1, "near", N=8).rho == pytest.approx(4 * math.sqrt(math.log(16)))
    assert covering_efficiency(2, 1, "near", N=8).rho == pytest.approx(6.6604, abs=1e-4)
    assert scalar_covering_efficiency(16) == 4.0


def test_gain_endpoints_are_exact():
    rng = make_rng(0)
    for _ in range(100):
        assert gain_quantize_dithered(0.0, 3, 2.0, rng) == 0
        assert gain_dequantize(gain_quantize_dithered(2.0, 3, 2.0, rng), 3, 2.0) == 2.0
    with pytest.raises(OutOfRange):
        gain_quantize_dithered(2.5, 3, 2.0, rng)


def test_gain_midpoint_is_a_fair_coin():
    # grid 0, 1, 2, 3 (bits=2, Bmax=3); v=1.5 picks 1 or 2
    rng = make_rng(1)
    draws = np.array([gain_quantize_dithered(1.5, 2, 3.0, rng) for _ in range(20000)])
    assert set(np.unique(draws)) == {1, 2}
    vals = gain_dequantize(draws, 2, 3.0)
    se = vals.std() / math.sqrt(vals.size)
    assert abs(vals.mean() - 1.5) <= 3 * se


def test_cuq_grid_points_are_exact():
    level, bits = 2.0, 2
    grid = cuq_decode(np.arange(4), level, bits)
    np.testing.assert_allclose(grid, [-2, -2 / 3, 2 / 3, 2])
    idx = cuq_encode(grid, level, bits, make_rng(0))
    np.testing.assert_array_equal(idx, np.arange(4))


def test_cuq_one_bit_zero_is_unbiased():
    rng = make_rng(2)
    vals = cuq_decode(cuq_encode(np.zeros(20000), 1.0, 1, rng), 1.0, 1)
    assert set(np.unique(vals)) == {-1.0, 1.0}
    assert abs(vals.mean()) <= 3 * vals.std() / math.sqrt(vals.size)


def test_cuq_out_of_range():
    with pytest.raises(OutOfRange):
        cuq_encode(np.array([1.5]), 1.0, 2, make_rng(0))


def test_gain_shape_zero_and_range():
    frame = build_frame("orthonormal", 16, 32, seed=0)
    params = default_kashin_params(frame, seed=0)
    p = gain_shape_quantize(frame, np.zeros(16), 4, 1.0, 8, params, make_rng(0))
    np.testing.assert_array_equal(gain_shape_decode(frame, p, 1.0, params), np.zeros(16))
    with pytest.raises(OutOfRange):
        gain_shape_quantize(frame, np.ones(16), 4, 1.0, 8, params, make_rng(0))


def test_gain_shape_unbiased_and_second_moment():
    frame = build_frame("orthonormal", 16, 32, seed=0)
    params = default_kashin_params(frame, seed=0)
    rng = make_rng(3)
    y = np.random.default_rng(6).standard_normal(16)
    Bmax = 2 * np.linalg.norm(y)
    out = np.array([gain_shape_decode(frame, gain_shape_quantize(frame, y, 4, Bmax, 4, params, rng),
                                      Bmax, params) for _ in range(4000)])
    se = out.std(axis=0) / math.sqrt(len(out))
    assert np.all(np.abs(out.mean(axis=0) - y) <= 4 * se)
    assert np.mean(np.sum(out ** 2, axis=1)) <= (Bmax * params.k_upper) ** 2 * 1.05
