import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from democode import compressors as comp
from democode.errors import ConfigError, InvalidSpec, MissingParams
from democode.frames import build_frame
from democode.rng import make_rng


def test_topk_hand_example():
    x = np.array([0.1, -3.0, 2.0, 2.0, 0.0])
    res = comp.compress(comp.TopK(2), x)
    # ties between the two 2.0 entries go to the lower index
    np.testing.assert_array_equal(res.output, [0, -3.0, 2.0, 0, 0])
    assert res.bits == math.ceil(math.log2(10)) + 2 * 32


def test_sign_and_bits():
    res = comp.compress(comp.Sign(0.5), np.array([1.0, -2.0, 0.0]))
    np.testing.assert_array_equal(res.output, [0.5, -0.5, 0.5])
    assert res.bits == 3


def test_index_bits_values():
    assert comp.index_bits(5, 5) == 0
    assert comp.index_bits(4, 2) == 3  # C(4,2) = 6
    assert comp.index_bits(128, 64) == (math.comb(128, 64) - 1).bit_length()


def test_bit_costs():
    assert comp.bit_cost(comp.StandardDither(3), 10) == 32 + 10 * 3
    spec = comp.RandomSparsify(4, value_bits=1, shared_randomness=True)
    assert comp.bit_cost(spec, 16) == 4 + 32
    assert comp.bit_cost(comp.RandomSparsify(4), 16) == comp.index_bits(16, 4) + 4 * 32


def test_random_sparsify_keeps_k_and_needs_rng():
    x = np.arange(1.0, 11.0)
    res = comp.compress(comp.RandomSparsify(3), x, make_rng(0))
    kept = np.flatnonzero(res.output)
    assert kept.size == 3
    np.testing.assert_array_equal(res.output[kept], x[kept])
    with pytest.raises(MissingParams):
        comp.compress(comp.RandomSparsify(3), x)


def test_validation_errors():
    with pytest.raises(InvalidSpec):
        comp.bit_cost(comp.TopK(0), 4)
    with pytest.raises(InvalidSpec):
        comp.bit_cost(comp.TopK(5), 4)
    with pytest.raises(InvalidSpec):
        comp.bit_cost(comp.StandardDither(0), 4)


def test_config_records():
    assert comp.spec_from_config({"type": "qsgd", "s": 4}) == comp.StandardDither(4)
    spec = comp.RandomSparsify(8, rescale=True)
    assert comp.spec_from_config(comp.spec_to_config(spec)) == spec
    with pytest.raises(ConfigError):
        comp.spec_from_config({"type": "nope"})
    with pytest.raises(ConfigError):
        comp.spec_from_config({"type": "topk", "q": 1})


@pytest.mark.parametrize("spec", [comp.RandomSparsify(3, rescale=True), comp.StandardDither(2)])
def test_unbiased_compressors(spec):
    x = np.array([1.5, -0.2, 0.0, 3.0, -2.0, 0.7])
    rng = make_rng(4)
    out = np.array([comp.compress(spec, x, rng).output for _ in range(20000)])
    se = out.std(axis=0) / math.sqrt(len(out))
    assert np.all(np.abs(out.mean(axis=0) - x) <= 4 * se + 1e-12)


def test_prop5_membership():
    assert comp.satisfies_prop5(comp.TopK(3))
    assert comp.satisfies_prop5(comp.RandomSparsify(3, value_bits=1))
    assert not comp.satisfies_prop5(comp.RandomSparsify(3, rescale=True))
    assert not comp.satisfies_prop5(comp.Sign())


def test_wrapper_gamma_hadamard():
    frame = build_frame("hadamard", 128, 128, seed=0)
    assert comp.wrapper_gamma(frame, "near") == pytest.approx(2 * math.sqrt(math.log(256)))


def test_democratic_wrap_reconstructs_with_full_topk():
    frame = build_frame("hadamard", 16, 16, seed=1)
    y = np.random.default_rng(0).standard_normal(16)
    res = comp.democratic_wrap(frame, comp.TopK(16), y)
    np.testing.assert_allclose(res.output, y, atol=1e-12)
    assert res.in_hypothesis


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 32), st.integers(0, 10 ** 6), st.booleans())
def test_sparsifiers_never_exceed_linf_and_keep_sign(k, seed, topk):
    x = np.random.default_rng(seed).standard_normal(32)
    spec = comp.TopK(k, value_bits=3) if topk else comp.RandomSparsify(k, value_bits=2)
    out = comp.compress(spec, x, make_rng(seed)).output
    assert np.all(np.abs(out) <= np.max(np.abs(x)) + 1e-12)
    kept = out != 0
    assert np.all(np.sign(out[kept]) == np.sign(x[kept]))
