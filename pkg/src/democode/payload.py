"""Bit-exact quantized payloads.

Wire layout (all multi-byte integers little-endian)::

    magic "DSC1"      4 bytes
    version           u8
    mode              u8   0 = DSC, 1 = NDSC, 2 = dithered gain-shape
    n                 u32
    N                 u32
    b                 u8   bits per embedding coordinate
    gain_encoding     u8   0 = 32-bit float, k > 0 = k-bit dithered index
    frame kind        u8
    frame seed        u64
    gain field        4 bytes (float32) or ceil(k / 8) bytes (index)
    body              ceil(N * b / 8) bytes

The body holds the ``N`` level indices, coordinate-major, each written
least-significant bit first, with bits filling every byte from its least
significant end.  Unused trailing bits of the last byte are zero.
"""

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .errors import CorruptPayload, HeaderMismatch
from .frames import FrameKind

MAGIC = b"DSC1"
VERSION = 1
_HEADER = struct.Struct("<4sBBIIBBBQ")
EXACT32 = 0


class PayloadMode(enum.IntEnum):
    DSC = 0
    NDSC = 1
    DITHERED = 2


def pack_indices(indices, bits):
    """Pack non-negative integers of ``bits`` bits each into bytes."""
    idx = np.asarray(indices, dtype=np.uint64)
    if bits == 0 or idx.size == 0:
        return b""
    shifts = np.arange(bits, dtype=np.uint64)
    bitmat = ((idx[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bitmat.ravel(), bitorder="little").tobytes()


def unpack_indices(data, count, bits):
    if bits == 0 or count == 0:
        return np.zeros(count, dtype=np.int64)
    flat = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    total = count * bits
    if np.any(flat[total:]):
        raise CorruptPayload("non-zero padding bits after the body")
    bitmat = flat[:total].reshape(count, bits).astype(np.uint64)
    weights = np.uint64(1) << np.arange(bits, dtype=np.uint64)
    return (bitmat * weights).sum(axis=1).astype(np.int64)


@dataclass(frozen=True, eq=False)
class QuantizedPayload:
    """One encoded vector.

    ``gain`` is a float for the 32-bit encoding (already rounded to float32)
    and an integer grid index when ``gain_bits > 0``.
    """

    mode: PayloadMode
    n: int
    N: int
    bits: int
    gain_bits: int
    frame_kind: FrameKind
    frame_seed: int
    gain: object
    indices: np.ndarray

    @property
    def body_bits(self):
        return self.N * self.bits

    @property
    def gain_field_bits(self):
        return 32 if self.gain_bits == EXACT32 else self.gain_bits

    @property
    def transmitted_bits(self):
        """Counted channel bits: body plus gain (header is shared configuration)."""
        return self.body_bits + self.gain_field_bits

    def check_frame(self, frame):
        if (frame.n, frame.N, frame.kind, int(frame.seed)) != (
            self.n, self.N, self.frame_kind, int(self.frame_seed)
        ):
            raise HeaderMismatch(
                f"payload was encoded for {self.frame_kind.value} n={self.n} N={self.N} "
                f"seed={self.frame_seed}, decoder has {frame.descriptor()}"
            )

    def check_indices(self):
        idx = np.asarray(self.indices)
        if idx.shape != (self.N,):
            raise CorruptPayload(f"expected {self.N} indices, got shape {idx.shape}")
        if idx.size and (idx.min() < 0 or idx.max() >= (1 << self.bits)):
            raise CorruptPayload(f"level index outside [0, 2^{self.bits})")

    def to_bytes(self):
        self.check_indices()
        head = _HEADER.pack(MAGIC, VERSION, int(self.mode), self.n, self.N, self.bits,
                            self.gain_bits, self.frame_kind.code, int(self.frame_seed))
        if self.gain_bits == EXACT32:
            gain = struct.pack("<f", float(self.gain))
        else:
            gain = int(self.gain).to_bytes(math.ceil(self.gain_bits / 8), "little")
        return head + gain + pack_indices(self.indices, self.bits)

    @classmethod
    def from_bytes(cls, data):
        data = bytes(data)
        if len(data) < _HEADER.size:
            raise CorruptPayload("payload shorter than its header")
        magic, version, mode, n, N, bits, gain_bits, kind, seed = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise CorruptPayload(f"bad magic {magic!r}")
        if version != VERSION:
            raise CorruptPayload(f"unsupported payload version {version}")
        try:
            mode = PayloadMode(mode)
            kind = FrameKind.from_code(kind)
        except ValueError as exc:
            raise CorruptPayload(str(exc)) from None
        pos = _HEADER.size
        gain_len = 4 if gain_bits == EXACT32 else math.ceil(gain_bits / 8)
        body_len = math.ceil(N * bits / 8)
        if len(data) != pos + gain_len + body_len:
            raise CorruptPayload(f"payload length {len(data)} != {pos + gain_len + body_len}")
        raw = data[pos:pos + gain_len]
        if gain_bits == EXACT32:
            gain = struct.unpack("<f", raw)[0]
        else:
            gain = int.from_bytes(raw, "little")
            if gain >> gain_bits:
                raise CorruptPayload("gain index exceeds its bit width")
        indices = unpack_indices(data[pos + gain_len:], N, bits)
        return cls(mode, n, N, bits, gain_bits, kind, seed, gain, indices)
