"""Fixed-length source coding on top of (near) democratic embeddings.

Deterministic coders (DSC / NDSC) normalize the embedding by its l_inf norm
and round every coordinate to the nearest point of the rate-``b`` uniform
grid ``v_i = -1 + (2i - 1) / 2^b``.  Dithered coders round randomly to one of
the two neighbouring grid points so that the decoded value is unbiased; they
are used for the gain (l2 norm) and, coordinate-wise (CUQ), for the shape of
the gain-shape quantizer.
"""

import math
from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingMode, as_mode, embed
from .errors import BudgetTooSmall, CorruptPayload, MissingParams, OutOfRange
from .frames import FrameKind, as_kind
from .payload import EXACT32, PayloadMode, QuantizedPayload

RANGE_SLACK = 1e-12


def coordinate_bits(n, N, rate):
    """Bits per embedding coordinate, ``floor(n R / N)``."""
    return int(math.floor(n * rate / N + 1e-9))


def budget_bits(n, rate):
    """Total body budget ``floor(n R)``."""
    return int(math.floor(n * rate + 1e-9))


@dataclass(frozen=True)
class ScalarQuantizerSpec:
    bits: int

    def __post_init__(self):
        if self.bits < 1:
            raise BudgetTooSmall("scalar quantizer needs at least one bit")

    @property
    def levels(self):
        return 1 << self.bits

    @property
    def resolution(self):
        return 2.0 / self.levels

    @property
    def grid(self):
        return -1.0 + (np.arange(self.levels) + 0.5) * self.resolution


def uniform_quantize(x, spec):
    """Nearest-grid-point indices for ``x`` in the unit l_inf ball.

    Exact midpoints go to the lower index.
    """
    x = np.asarray(x, dtype=float)
    if x.size and np.max(np.abs(x)) > 1.0 + RANGE_SLACK:
        raise OutOfRange("uniform quantizer input outside [-1, 1]")
    idx = np.ceil((x + 1.0) / spec.resolution) - 1
    return np.clip(idx, 0, spec.levels - 1).astype(np.int64)


def uniform_dequantize(indices, spec):
    return -1.0 + (np.asarray(indices, dtype=float) + 0.5) * spec.resolution


def _float32_ceil(g):
    g32 = np.float32(g)
    if float(g32) < g:
        g32 = np.nextafter(g32, np.float32(np.inf))
    return float(g32)


# -- dithered scalar quantization -------------------------------------------

def _dither(v, lo, hi, levels, rng):
    v = np.asarray(v, dtype=float)
    step = (hi - lo) / (levels - 1)
    pos = (v - lo) / step
    j = np.clip(np.floor(pos), 0, levels - 2)
    up = rng.random(v.shape) < (pos - j)
    return (j + up).astype(np.int64)


def gain_quantize_dithered(v, bits, Bmax, rng):
    """Unbiased ``bits``-bit index for a gain ``v`` in ``[0, Bmax]``.

    The grid has ``2^bits`` points ``j * Bmax / (2^bits - 1)`` including both
    endpoints; ``v`` goes to its lower neighbour with probability equal to
    its distance from the upper neighbour over the spacing.
    """
    if bits < 1:
        raise ValueError("gain quantizer needs at least one bit")
    if not (-RANGE_SLACK * Bmax <= v <= Bmax * (1 + RANGE_SLACK)):
        raise OutOfRange(f"gain {v} outside [0, {Bmax}]")
    if Bmax == 0:
        return 0
    v = min(max(float(v), 0.0), Bmax)
    return int(_dither(v, 0.0, Bmax, 1 << bits, rng))


def gain_dequantize(index, bits, Bmax):
    return Bmax * index / ((1 << bits) - 1)


def cuq_encode(x, level, bits, rng):
    """Coordinate-wise dithered indices on the grid of ``2^bits`` points over ``[-level, level]``."""
    x = np.asarray(x, dtype=float)
    if bits < 1:
        raise BudgetTooSmall("CUQ needs at least one bit per coordinate")
    if x.size and np.max(np.abs(x)) > level * (1 + RANGE_SLACK):
        raise OutOfRange(f"CUQ input l_inf {np.max(np.abs(x)):.4g} exceeds level {level:.4g}")
    if level == 0:
        return np.zeros(x.shape, dtype=np.int64)
    return _dither(np.clip(x, -level, level), -level, level, 1 << bits, rng)


def cuq_decode(indices, level, bits):
    M = 1 << bits
    return -level + np.asarray(indices, dtype=float) * (2.0 * level / (M - 1))


# -- DSC / NDSC ---------------------------------------------------------------

def dsc_encode(frame, y, rate, mode="near", gain_bits=EXACT32, *, method="lp", params=None,
               gain_max=None, rng=None, iters=30):
    """Encode ``y`` with (near) democratic source coding at ``rate`` bits per dimension.

    ``gain_bits=0`` sends ``||x||_inf`` as a float32 (rounded up, so the
    normalized embedding stays inside the grid); ``gain_bits=k > 0`` sends a
    dithered ``k``-bit index over ``[0, gain_max]`` and needs ``rng``.
    """
    mode = as_mode(mode)
    y = np.asarray(y, dtype=float)
    b = coordinate_bits(frame.n, frame.N, rate)
    if b < 1:
        raise BudgetTooSmall(f"floor(nR/N) = floor({frame.n}*{rate}/{frame.N}) < 1")
    spec = ScalarQuantizerSpec(b)
    x = embed(frame, y, mode, method=method, params=params, iters=iters).coefficients
    g = float(np.max(np.abs(x))) if x.size else 0.0

    if gain_bits == EXACT32:
        gain = _float32_ceil(g)
        norm = gain
    else:
        if gain_max is None or rng is None:
            raise MissingParams("dithered gain needs gain_max and rng")
        gain = gain_quantize_dithered(g, gain_bits, gain_max, rng)
        norm = g
    if norm > 0:
        indices = uniform_quantize(x / norm, spec)
    else:
        indices = np.zeros(frame.N, dtype=np.int64)
    pmode = PayloadMode.DSC if mode is EmbeddingMode.DEMOCRATIC else PayloadMode.NDSC
    return QuantizedPayload(pmode, frame.n, frame.N, b, gain_bits, frame.kind, int(frame.seed),
                            gain, indices)


def dsc_decode(frame, payload, gain_max=None):
    """``gain * S @ grid[indices]``."""
    payload.check_frame(frame)
    payload.check_indices()
    if payload.mode is PayloadMode.DITHERED:
        raise CorruptPayload("gain-shape payloads decode with gain_shape_decode")
    if payload.gain_bits == EXACT32:
        gain = float(payload.gain)
    else:
        if gain_max is None:
            raise MissingParams("dithered gain needs gain_max to decode")
        gain = gain_dequantize(payload.gain, payload.gain_bits, gain_max)
    if gain == 0:
        return np.zeros(frame.n)
    x = uniform_dequantize(payload.indices, ScalarQuantizerSpec(payload.bits))
    return frame.apply(gain * x)


# -- gain-shape ---------------------------------------------------------------

def shape_level(frame, params=None, mode="democratic"):
    """CUQ dynamic range for a unit-norm shape: the l_inf bound of its embedding."""
    from .embeddings import dynamic_range_bound

    mode = as_mode(mode)
    if mode is EmbeddingMode.DEMOCRATIC and params is None:
        raise MissingParams("democratic shape quantizer needs Kashin parameters")
    return dynamic_range_bound(frame, mode, params)


def gain_shape_quantize(frame, y, rate, Bmax, gain_bits, params, rng, *, mode="democratic",
                        method="iterative", iters=30):
    """Unbiased gain-shape quantization of ``y`` with ``||y||_2 <= Bmax``.

    The gain ``||y||_2`` is dithered over ``[0, Bmax]`` with ``gain_bits``
    bits (``0`` sends it as float32).  The shape ``y / ||y||_2`` is embedded
    and each coordinate dithered over ``[-K_u/sqrt(N), K_u/sqrt(N)]`` with
    ``floor(nR/N)`` bits.
    """
    y = np.asarray(y, dtype=float)
    g = float(np.linalg.norm(y))
    if g > Bmax * (1 + RANGE_SLACK):
        raise OutOfRange(f"||y||_2 = {g:.6g} exceeds Bmax = {Bmax:.6g}")
    b = coordinate_bits(frame.n, frame.N, rate)
    if b < 1:
        raise BudgetTooSmall(f"floor(nR/N) = floor({frame.n}*{rate}/{frame.N}) < 1")
    level = shape_level(frame, params, mode)

    if gain_bits == EXACT32:
        gain = _float32_ceil(g) if g > 0 else 0.0
    else:
        gain = gain_quantize_dithered(min(g, Bmax), gain_bits, Bmax, rng)
    if g > 0:
        x = embed(frame, y / g, mode, method=method, params=params, iters=iters).coefficients
    else:
        x = np.zeros(frame.N)
    indices = cuq_encode(x, level, b, rng)
    return QuantizedPayload(PayloadMode.DITHERED, frame.n, frame.N, b, gain_bits, frame.kind,
                            int(frame.seed), gain, indices)


def gain_shape_decode(frame, payload, Bmax, params, mode="democratic"):
    payload.check_frame(frame)
    payload.check_indices()
    if payload.gain_bits == EXACT32:
        gain = float(payload.gain)
    else:
        gain = gain_dequantize(payload.gain, payload.gain_bits, Bmax)
    level = shape_level(frame, params, mode)
    return gain * frame.apply(cuq_decode(payload.indices, level, payload.bits))


# -- reference formulas -------------------------------------------------------

def prop1_bound(rate, aspect, mode, k_upper=None, N=None, frame_kind=FrameKind.HADAMARD):
    """Worst-case normalized error of DSC / NDSC.

    DSC: ``2^(1 - R/lambda) K_u``.  NDSC: ``2^(2 - R/lambda) sqrt(log 2N)``,
    with ``sqrt(lambda log 2N)`` instead for dense random frames.
    """
    mode = as_mode(mode)
    if mode is EmbeddingMode.DEMOCRATIC:
        if k_upper is None:
            raise MissingParams("DSC bound needs K_u")
        return 2.0 ** (1.0 - rate / aspect) * k_upper
    if N is None:
        raise MissingParams("NDSC bound needs N")
    factor = math.log(2 * N)
    if as_kind(frame_kind) in (FrameKind.ORTHONORMAL, FrameKind.SUBGAUSSIAN):
        factor *= aspect
    return 2.0 ** (2.0 - rate / aspect) * math.sqrt(factor)


@dataclass(frozen=True)
class CoveringReport:
    rate: float
    aspect: float
    k_upper: float
    N: int
    rho: float


def covering_efficiency(rate, aspect, mode, k_upper=None, N=None, frame_kind=FrameKind.HADAMARD):
    """``rho_d = 2^(1 + R(1 - 1/lambda)) K_u`` or ``rho_nd = 2^(2 + R(1 - 1/lambda)) sqrt(log 2N)``."""
    mode = as_mode(mode)
    expo = rate * (1.0 - 1.0 / aspect)
    if mode is EmbeddingMode.DEMOCRATIC:
        if k_upper is None:
            raise MissingParams("DSC covering efficiency needs K_u")
        rho = 2.0 ** (1.0 + expo) * k_upper
    else:
        if N is None:
            raise MissingParams("NDSC covering efficiency needs N")
        factor = math.log(2 * N)
        if as_kind(frame_kind) in (FrameKind.ORTHONORMAL, FrameKind.SUBGAUSSIAN):
            factor *= aspect
        rho = 2.0 ** (2.0 + expo) * math.sqrt(factor)
    return CoveringReport(rate, aspect, k_upper, N, rho)


def scalar_covering_efficiency(n):
    """Covering efficiency of the plain uniform scalar quantizer, ``sqrt(n)``."""
    return math.sqrt(n)
