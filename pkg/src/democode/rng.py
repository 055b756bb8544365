"""Pinned random streams.

All randomness in the package comes from numpy's Philox4x64 counter-based
bit generator, which produces the same stream on every platform for a given
64-bit seed.  Gaussian variates are drawn with the Box-Muller transform on
top of that stream rather than numpy's ziggurat sampler, so the mapping from
seed to normal draws is fully specified here.
"""

import hashlib
import struct

import numpy as np

SEED_MASK = (1 << 64) - 1


def make_rng(seed):
    """Return a ``numpy.random.Generator`` backed by Philox for ``seed``.

    A ``Generator`` passed in is returned unchanged so functions can accept
    either a seed or a caller-owned stream.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("an explicit seed is required")
    return np.random.Generator(np.random.Philox(int(seed) & SEED_MASK))


def standard_normal(rng, size):
    """Standard normal draws via Box-Muller from ``rng``'s uniform stream."""
    size = (size,) if np.isscalar(size) else tuple(size)
    count = int(np.prod(size)) if size else 1
    pairs = (count + 1) // 2
    u1 = rng.random(pairs)
    u2 = rng.random(pairs)
    # 1 - u lies in (0, 1], keeping the log finite
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    theta = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(theta), radius * np.sin(theta)])
    return z[:count].reshape(size)


def derive_seed(*parts):
    """Hash arbitrary cell coordinates into a 64-bit seed.

    Used to give every (seed, rate, method, ...) cell of an experiment its
    own independent stream.
    """
    h = hashlib.sha256()
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x00")
    return struct.unpack("<Q", h.digest()[:8])[0]
