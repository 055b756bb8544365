"""General compression operators and the democratic wrapper.

Every operator maps ``x`` in ``R^m`` to a decoded vector in ``R^m`` and
reports the exact number of bits its encoding would occupy.  The wrapper
compresses the (near) democratic embedding of ``y`` instead of ``y`` itself
and decodes by applying the frame.
"""

import math
from dataclasses import asdict, dataclass

import numpy as np

from .embeddings import dynamic_range_bound, embed
from .errors import ConfigError, InvalidSpec, MissingParams
from .quantizers import ScalarQuantizerSpec, uniform_dequantize, uniform_quantize

FLOAT_BITS = 32


def index_bits(m, k):
    """Bits to name a k-subset of m coordinates, ``ceil(log2 C(m, k))``."""
    count = math.comb(m, k)
    return (count - 1).bit_length()


@dataclass(frozen=True)
class RandomSparsify:
    """Keep ``k`` uniformly chosen coordinates.

    ``rescale`` multiplies the survivors by ``m/k`` (unbiased).  Values go
    out as 32-bit floats, or with ``value_bits < 32`` as indices of the
    l_inf-normalized uniform quantizer plus one 32-bit gain.  With
    ``shared_randomness`` the support comes from a seed both sides hold, so
    it costs no index bits.
    """

    k: int
    rescale: bool = False
    value_bits: int = FLOAT_BITS
    shared_randomness: bool = False
    type = "random_sparsify"


@dataclass(frozen=True)
class TopK:
    """Keep the ``k`` largest magnitudes (lower index wins ties)."""

    k: int
    value_bits: int = FLOAT_BITS
    type = "topk"


@dataclass(frozen=True)
class Sign:
    """``scale * sign(x)`` with ``sign(0) = +1``; one bit per coordinate."""

    scale: float = 1.0
    type = "sign"


@dataclass(frozen=True)
class StandardDither:
    """QSGD-style ``s``-level dithering of ``x / ||x||_2`` (unbiased)."""

    levels: int
    type = "standard_dither"


_SPECS = {cls.type: cls for cls in (RandomSparsify, TopK, Sign, StandardDither)}
_ALIASES = {"randk": "random_sparsify", "rand_k": "random_sparsify", "random": "random_sparsify",
            "top_k": "topk", "qsgd": "standard_dither", "sd": "standard_dither"}


def spec_from_config(record):
    """Build a spec from a tagged record such as ``{"type": "topk", "k": 64}``."""
    record = dict(record)
    tag = str(record.pop("type", "")).lower()
    tag = _ALIASES.get(tag, tag)
    if tag not in _SPECS:
        raise ConfigError(f"unknown compressor type {tag!r}")
    if tag == "standard_dither" and "s" in record:
        record["levels"] = record.pop("s")
    try:
        return _SPECS[tag](**record)
    except TypeError as exc:
        raise ConfigError(f"bad fields for {tag}: {exc}") from None


def spec_to_config(spec):
    return {"type": spec.type, **asdict(spec)}


def validate(spec, m):
    if isinstance(spec, (RandomSparsify, TopK)):
        if not 1 <= spec.k <= m:
            raise InvalidSpec(f"k={spec.k} outside [1, {m}]")
        if not 1 <= spec.value_bits <= FLOAT_BITS:
            raise InvalidSpec(f"value_bits={spec.value_bits} outside [1, 32]")
    elif isinstance(spec, StandardDither):
        if spec.levels < 1:
            raise InvalidSpec("standard dithering needs s >= 1")
    elif isinstance(spec, Sign):
        if not np.isfinite(spec.scale):
            raise InvalidSpec("sign scale must be finite")
    else:
        raise InvalidSpec(f"not a compressor spec: {spec!r}")


def bit_cost(spec, m):
    """Exact transmitted bits for one compressed vector of length ``m``."""
    validate(spec, m)
    if isinstance(spec, Sign):
        return m
    if isinstance(spec, StandardDither):
        return FLOAT_BITS + m * ((spec.levels).bit_length() + 1)
    shared = isinstance(spec, RandomSparsify) and spec.shared_randomness
    bits = 0 if shared else index_bits(m, spec.k)
    bits += spec.k * spec.value_bits
    if spec.value_bits < FLOAT_BITS:
        bits += FLOAT_BITS
    return bits


@dataclass(frozen=True, eq=False)
class CompressionResult:
    output: np.ndarray
    bits: int


def _encode_values(vals, value_bits):
    if value_bits >= FLOAT_BITS or vals.size == 0:
        return vals
    g = float(np.max(np.abs(vals)))
    if g == 0:
        return np.zeros_like(vals)
    spec = ScalarQuantizerSpec(value_bits)
    return g * uniform_dequantize(uniform_quantize(vals / g, spec), spec)


def compress(spec, x, rng=None):
    """Apply ``spec`` to ``x``; returns the decoded vector and its bit cost."""
    x = np.asarray(x, dtype=float)
    m = x.shape[0]
    bits = bit_cost(spec, m)
    out = np.zeros(m)

    if isinstance(spec, Sign):
        out = np.where(x >= 0, spec.scale, -spec.scale).astype(float)
    elif isinstance(spec, TopK):
        keep = np.argsort(-np.abs(x), kind="stable")[:spec.k]
        out[keep] = _encode_values(x[keep], spec.value_bits)
    elif isinstance(spec, RandomSparsify):
        if rng is None:
            raise MissingParams("random sparsification needs an rng")
        keep = np.sort(rng.choice(m, size=spec.k, replace=False))
        vals = _encode_values(x[keep], spec.value_bits)
        out[keep] = vals * (m / spec.k) if spec.rescale else vals
    else:
        if rng is None:
            raise MissingParams("standard dithering needs an rng")
        g = float(np.linalg.norm(x))
        if g > 0:
            s = spec.levels
            scaled = np.abs(x) / g * s
            low = np.floor(scaled)
            level = low + (rng.random(m) < scaled - low)
            out = np.sign(x) * g * level / s
    return CompressionResult(out, bits)


def satisfies_prop5(spec):
    """Whether ``spec`` keeps signs and never exceeds ``||x||_inf`` per coordinate."""
    # the symmetric grid has no zero level, so quantized survivors keep their sign
    if isinstance(spec, RandomSparsify):
        return not spec.rescale
    return isinstance(spec, TopK)


def wrapper_gamma(frame, mode, params=None):
    """Error multiplier of the wrapped scheme, ``sqrt(N)`` times the embedding's l_inf bound.

    That is ``K_u`` (democratic) or ``2 sqrt(log 2N)`` (near-democratic,
    Hadamard), with the extra ``sqrt(lambda)`` for dense random frames.
    """
    return dynamic_range_bound(frame, mode, params) * math.sqrt(frame.N)


@dataclass(frozen=True, eq=False)
class WrapResult:
    output: np.ndarray
    bits: int
    embedding: np.ndarray
    compressed: np.ndarray
    in_hypothesis: bool


def democratic_wrap(frame, spec, y, mode="near", rng=None, *, method="lp", params=None, iters=30):
    """Embed ``y``, compress the embedding with ``spec`` and decode with ``S``.

    ``in_hypothesis`` flags whether ``spec`` meets the sign and max-magnitude
    condition the error bound of :func:`wrapper_gamma` relies on.
    """
    x = embed(frame, y, mode, method=method, params=params, iters=iters).coefficients
    res = compress(spec, x, rng)
    return WrapResult(frame.apply(res.output), res.bits, x, res.output, satisfies_prop5(spec))
