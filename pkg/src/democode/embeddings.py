"""Democratic and near-democratic embeddings.

Given a frame ``S`` and ``y`` in ``R^n``, an embedding is any ``x`` in
``R^N`` with ``S x = y``.  The democratic embedding minimizes ``||x||_inf``
(a linear program); the near-democratic embedding minimizes ``||x||_2`` and
has the closed form ``S^T (S S^T)^{-1} y``, i.e. ``S^T y`` for Parseval
frames.  A Kashin embedding can also be reached without an LP by the
truncate-and-project iteration, given uncertainty-principle parameters.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, MissingParams, NonContracting, SingularGram
from .frames import FrameKind, kashin_constants
from .lp import linf_min


class EmbeddingMode(str, enum.Enum):
    DEMOCRATIC = "democratic"
    NEAR_DEMOCRATIC = "near"


_MODE_ALIASES = {"dem": EmbeddingMode.DEMOCRATIC, "near_democratic": EmbeddingMode.NEAR_DEMOCRATIC,
                 "nd": EmbeddingMode.NEAR_DEMOCRATIC, "d": EmbeddingMode.DEMOCRATIC}


def as_mode(mode):
    if isinstance(mode, EmbeddingMode):
        return mode
    key = str(mode).lower().replace("-", "_")
    return _MODE_ALIASES.get(key) or EmbeddingMode(key)


@dataclass(frozen=True, eq=False)
class Embedding:
    coefficients: np.ndarray
    source_dim: int
    mode: EmbeddingMode
    residual: float

    @property
    def gain(self):
        return float(np.max(np.abs(self.coefficients))) if self.coefficients.size else 0.0


def _check_y(frame, y):
    y = np.asarray(y, dtype=float)
    if y.shape != (frame.n,):
        raise DimensionMismatch(f"expected a vector of length {frame.n}, got shape {y.shape}")
    return y


def _make(frame, y, x, mode):
    res = float(np.linalg.norm(y - frame.apply(x)))
    return Embedding(x, frame.n, mode, res)


def near_democratic(frame, y):
    """Minimum-l2 embedding ``S^+ y`` (``S^T y`` for Parseval frames)."""
    y = _check_y(frame, y)
    if frame.is_parseval:
        x = frame.apply_adjoint(y)
    else:
        S = frame.matrix
        try:
            w = np.linalg.solve(S @ S.T, y)
        except np.linalg.LinAlgError as exc:
            raise SingularGram(str(exc)) from exc
        x = S.T @ w
    return _make(frame, y, x, EmbeddingMode.NEAR_DEMOCRATIC)


def democratic_lp(frame, y, max_iter=None):
    """Minimum-l_inf embedding by linear programming (desk-scale ``N``)."""
    y = _check_y(frame, y)
    if not np.any(y):
        return _make(frame, y, np.zeros(frame.N), EmbeddingMode.DEMOCRATIC)
    if frame.kind is FrameKind.IDENTITY:
        return _make(frame, y, y.copy(), EmbeddingMode.DEMOCRATIC)
    x, _, _ = linf_min(frame.to_dense(), y, max_iter=max_iter)
    return _make(frame, y, x, EmbeddingMode.DEMOCRATIC)


def democratic_iterative(frame, y, params, iters=30, slack=0.05):
    """Kashin embedding by truncate-and-project.

    Each step takes ``u = S^T r``, clips every coordinate to magnitude
    ``||r||_2 / sqrt(delta N)``, adds the clipped vector to the coefficients
    and removes its image from the residual.  Raises
    :class:`NonContracting` if a step fails to shrink the residual by at
    least ``eta + slack``.
    """
    y = _check_y(frame, y)
    if params is None:
        raise MissingParams("truncate-and-project needs (eta, delta)")
    kashin_constants(params.eta, params.delta, params.frame_lower, params.frame_upper)
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x = np.zeros(frame.N)
    r = y.copy()
    rnorm = float(np.linalg.norm(r))
    floor = 1e-15 * max(rnorm, 1e-300)
    scale = math.sqrt(params.delta * frame.N)
    for _ in range(iters):
        if rnorm <= floor:
            break
        u = frame.apply_adjoint(r)
        level = rnorm / scale
        v = np.clip(u, -level, level)
        x += v
        r = r - frame.apply(v)
        new = float(np.linalg.norm(r))
        if new > (params.eta + slack) * rnorm and new > floor:
            raise NonContracting(f"residual went from {rnorm:.3e} to {new:.3e} (eta={params.eta:.3f})")
        rnorm = new
    return _make(frame, y, x, EmbeddingMode.DEMOCRATIC)


def embed(frame, y, mode, method="lp", params=None, iters=30):
    """Dispatch to the embedding selected by ``mode``/``method``."""
    mode = as_mode(mode)
    if mode is EmbeddingMode.NEAR_DEMOCRATIC:
        return near_democratic(frame, y)
    if method == "lp":
        return democratic_lp(frame, y)
    if method == "iterative":
        return democratic_iterative(frame, y, params, iters=iters)
    raise ValueError(f"unknown democratic method {method!r}")


def dynamic_range_bound(frame, mode, params=None):
    """Bound on ``||x||_inf / ||y||_2`` for the given embedding mode.

    Democratic: ``K_u / sqrt(N)``.  Near-democratic: ``2 sqrt(log(2N)/N)``
    for Hadamard frames, with an extra ``sqrt(lambda)`` for dense random
    frames.  The identity frame does no spreading, so its bound is 1.
    Logarithms are natural.
    """
    mode = as_mode(mode)
    N = frame.N
    if mode is EmbeddingMode.DEMOCRATIC:
        if params is None:
            raise MissingParams("democratic bound needs Kashin parameters")
        return params.k_upper / math.sqrt(N)
    if frame.kind is FrameKind.IDENTITY:
        return 1.0
    base = 2.0 * math.sqrt(math.log(2 * N) / N)
    if frame.kind is FrameKind.HADAMARD:
        return base
    return base * math.sqrt(frame.aspect_ratio)
