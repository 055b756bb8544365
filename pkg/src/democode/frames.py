"""Parseval frames and their Kashin constants.

A frame here is a wide ``n x N`` analysis operator ``S`` used to embed a
vector ``y`` in ``R^n`` into coefficients ``x`` in ``R^N`` with ``S x = y``.
Three random constructions are supported together with the identity
(no-embedding) baseline:

``orthonormal``
    ``n`` rows sampled without replacement from the orthogonal factor
    ``U V^T`` of the SVD of an ``N x N`` Gaussian matrix.
``hadamard``
    ``S = P D H`` with ``H`` the normalized Walsh-Hadamard matrix, ``D`` a
    random sign diagonal and ``P`` a row sampler.  Only the signs and the
    sampled rows are stored; products go through the fast transform.
``subgaussian``
    i.i.d. Gaussian entries scaled by ``1/sqrt(N)``.  Only approximately
    Parseval; kept for frame-class comparisons.
``identity``
    ``S = I_n``.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidDelta, InvalidDimensions, InvalidUP
from .rng import make_rng, standard_normal

PARSEVAL_TOL = 1e-9


class FrameKind(str, enum.Enum):
    IDENTITY = "identity"
    ORTHONORMAL = "orthonormal"
    HADAMARD = "hadamard"
    SUBGAUSSIAN = "subgaussian"

    @property
    def code(self):
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code):
        for kind, value in _KIND_CODES.items():
            if value == code:
                return kind
        raise ValueError(f"unknown frame kind code {code}")

    @property
    def is_parseval(self):
        return self is not FrameKind.SUBGAUSSIAN


_KIND_CODES = {
    FrameKind.IDENTITY: 0,
    FrameKind.ORTHONORMAL: 1,
    FrameKind.HADAMARD: 2,
    FrameKind.SUBGAUSSIAN: 3,
}

_KIND_ALIASES = {
    "ortho": FrameKind.ORTHONORMAL,
    "orthogonal": FrameKind.ORTHONORMAL,
    "random_orthonormal": FrameKind.ORTHONORMAL,
    "randomized_hadamard": FrameKind.HADAMARD,
    "gaussian": FrameKind.SUBGAUSSIAN,
    "sub_gaussian": FrameKind.SUBGAUSSIAN,
    "none": FrameKind.IDENTITY,
}


def as_kind(kind):
    if isinstance(kind, FrameKind):
        return kind
    key = str(kind).lower().replace("-", "_")
    if key in _KIND_ALIASES:
        return _KIND_ALIASES[key]
    try:
        return FrameKind(key)
    except ValueError:
        raise InvalidDimensions(f"unknown frame kind {kind!r}") from None


def is_power_of_two(k):
    return k >= 1 and (k & (k - 1)) == 0


def next_power_of_two(k):
    return 1 << max(int(k) - 1, 0).bit_length()


def fwht(x):
    """Unnormalized fast Walsh-Hadamard transform along the last axis.

    Runs in ``O(N log N)`` per vector; the last axis must have power-of-two
    length.  Returns a new array.
    """
    x = np.array(x, dtype=float)
    N = x.shape[-1]
    if not is_power_of_two(N):
        raise InvalidDimensions(f"transform length must be a power of two, got {N}")
    lead = x.shape[:-1]
    h = 1
    while h < N:
        y = x.reshape(lead + (N // (2 * h), 2, h))
        a = y[..., 0, :]
        b = y[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2).reshape(lead + (N,))
        h *= 2
    return x


@dataclass(frozen=True, eq=False)
class Frame:
    """An immutable ``n x N`` frame.

    Dense kinds keep ``matrix``; the Hadamard kind keeps ``signs`` (the
    diagonal of ``D``) and ``rows`` (the sorted sampled row indices of ``P``).
    """

    kind: FrameKind
    n: int
    N: int
    seed: int = 0
    matrix: np.ndarray = field(default=None, repr=False)
    signs: np.ndarray = field(default=None, repr=False)
    rows: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("matrix", "signs", "rows"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.array(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)

    @property
    def aspect_ratio(self):
        return self.N / self.n

    @property
    def is_parseval(self):
        return self.kind.is_parseval

    def apply(self, x):
        """``S @ x`` for ``x`` of shape ``(..., N)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.N,):
            raise DimensionMismatch(f"expected trailing dimension {self.N}, got {x.shape}")
        if self.kind is FrameKind.IDENTITY:
            return x.copy()
        if self.kind is FrameKind.HADAMARD:
            z = fwht(x) * (self.signs / math.sqrt(self.N))
            return z[..., self.rows]
        return x @ self.matrix.T

    def apply_adjoint(self, y):
        """``S.T @ y`` for ``y`` of shape ``(..., n)``."""
        y = np.asarray(y, dtype=float)
        if y.shape[-1:] != (self.n,):
            raise DimensionMismatch(f"expected trailing dimension {self.n}, got {y.shape}")
        if self.kind is FrameKind.IDENTITY:
            return y.copy()
        if self.kind is FrameKind.HADAMARD:
            z = np.zeros(y.shape[:-1] + (self.N,))
            z[..., self.rows] = y
            return fwht(z * self.signs) / math.sqrt(self.N)
        return y @ self.matrix

    def to_dense(self):
        """Explicit ``n x N`` matrix.  Only for solvers and tests."""
        if self.matrix is not None:
            return np.array(self.matrix)
        if self.kind is FrameKind.IDENTITY:
            return np.eye(self.n)
        return self.apply(np.eye(self.N)).T

    def frame_bounds(self):
        """Lower and upper frame bounds ``(A, B)`` (extreme eigenvalues of ``S S^T``)."""
        if self.is_parseval:
            return 1.0, 1.0
        eig = np.linalg.eigvalsh(self.matrix @ self.matrix.T)
        return float(eig[0]), float(eig[-1])

    def descriptor(self):
        return {"kind": self.kind.value, "n": self.n, "N": self.N, "seed": int(self.seed)}


def build_frame(kind, n, N=None, seed=0):
    """Construct a frame deterministically from ``(kind, n, N, seed)``.

    ``N`` defaults to ``n`` (and to the next power of two for Hadamard).
    """
    kind = as_kind(kind)
    n = int(n)
    if N is None:
        N = next_power_of_two(n) if kind is FrameKind.HADAMARD else n
    N = int(N)
    if n < 1 or N < n:
        raise InvalidDimensions(f"need 1 <= n <= N, got n={n}, N={N}")
    seed = int(seed) & ((1 << 64) - 1)

    if kind is FrameKind.IDENTITY:
        if N != n:
            raise InvalidDimensions("identity frame requires N == n")
        return Frame(kind, n, N, seed)

    rng = make_rng(seed)
    if kind is FrameKind.HADAMARD:
        if not is_power_of_two(N):
            raise InvalidDimensions(f"Hadamard frame requires N a power of two, got {N}")
        signs = np.where(rng.random(N) < 0.5, -1.0, 1.0)
        rows = np.sort(rng.permutation(N)[:n])
        return Frame(kind, n, N, seed, signs=signs, rows=rows)
    if kind is FrameKind.ORTHONORMAL:
        G = standard_normal(rng, (N, N))
        U, _, Vt = np.linalg.svd(G)
        Q = U @ Vt
        rows = np.sort(rng.permutation(N)[:n])
        return Frame(kind, n, N, seed, matrix=Q[rows])
    # SUBGAUSSIAN
    G = standard_normal(rng, (n, N))
    return Frame(kind, n, N, seed, matrix=G / math.sqrt(N))


def frame_from_descriptor(desc):
    return build_frame(desc["kind"], desc["n"], desc["N"], desc.get("seed", 0))


def apply(frame, x):
    return frame.apply(x)


def apply_adjoint(frame, y):
    return frame.apply_adjoint(y)


@dataclass(frozen=True)
class KashinParams:
    """Uncertainty-principle parameters and the derived Kashin constants."""

    eta: float
    delta: float
    frame_lower: float
    frame_upper: float
    k_upper: float
    k_lower: float


def kashin_constants(eta, delta, A=1.0, B=1.0):
    """Kashin constants ``K_l = 1/sqrt(B)`` and ``K_u = eta / ((A - eta sqrt(B)) sqrt(delta))``."""
    eta, delta, A, B = float(eta), float(delta), float(A), float(B)
    if not (eta > 0 and 0 < delta < 1 and 0 < A <= B):
        raise InvalidUP(f"need eta > 0, 0 < delta < 1, 0 < A <= B; got {eta}, {delta}, {A}, {B}")
    gap = A - eta * math.sqrt(B)
    if not gap > 0:
        raise InvalidUP(f"A={A} must exceed eta*sqrt(B)={eta * math.sqrt(B)}")
    k_upper = eta / (gap * math.sqrt(delta))
    return KashinParams(eta, delta, A, B, k_upper, 1.0 / math.sqrt(B))


def estimate_up_eta(frame, delta, trials=200, seed=0):
    """Monte-Carlo lower estimate of the UP parameter ``eta`` at sparsity ``delta``.

    Returns the largest ``||S x||_2`` over ``trials`` random unit vectors
    with ``floor(delta * N)`` non-zeros (uniform support, Gaussian values).
    """
    k = int(math.floor(delta * frame.N))
    if k < 1:
        raise InvalidDelta(f"delta*N = {delta * frame.N} < 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(seed)
    X = np.zeros((trials, frame.N))
    for t in range(trials):
        support = rng.permutation(frame.N)[:k]
        vals = standard_normal(rng, k)
        X[t, support] = vals / np.linalg.norm(vals)
    return float(np.max(np.linalg.norm(frame.apply(X), axis=1)))


def default_kashin_params(frame, seed=0, delta=None, trials=200, margin=1.1):
    """Estimated UP parameters and Kashin constants for a frame.

    ``delta`` defaults to ``1 / (2 * aspect_ratio)``; the Monte-Carlo eta is
    inflated by ``margin`` before the constants are derived.
    """
    if delta is None:
        delta = 1.0 / (2.0 * frame.aspect_ratio)
    eta = margin * estimate_up_eta(frame, delta, trials=trials, seed=seed)
    A, B = frame.frame_bounds()
    return kashin_constants(eta, delta, A, B)
