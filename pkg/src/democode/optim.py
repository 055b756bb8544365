"""Communication-constrained first-order methods.

``dgd_def`` is gradient descent in which every gradient crosses an
``R``-bit link through (near) democratic source coding, with the previous
quantization error fed back into both the gradient access point and the
quantizer input.  ``dq_psgd`` is projected stochastic subgradient descent
whose subgradients go through the unbiased gain-shape quantizer.  The
module also holds the objectives, oracles, projections and the closed-form
bounds that the runs are compared against.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import BitChannel
from .embeddings import as_mode, EmbeddingMode
from .errors import InvalidDomain, InvalidStepSize, MissingParams
from .frames import FrameKind, build_frame
from .payload import EXACT32
from .quantizers import (budget_bits, dsc_decode, dsc_encode, gain_shape_decode,
                         gain_shape_quantize, prop1_bound, shape_level)
from .rng import make_rng

DIVERGED = 1e30


# -- objectives ---------------------------------------------------------------

class LeastSquares:
    """``f(x) = 0.5 ||A x - b||^2 + 0.5 reg ||x||^2``."""

    reg = 0.0

    def __init__(self, A, b):
        self.A = np.asarray(A, dtype=float)
        self.b = np.asarray(b, dtype=float)
        if self.A.ndim != 2 or self.b.shape != (self.A.shape[0],):
            raise ValueError(f"A {self.A.shape} and b {self.b.shape} do not match")
        H = self.A.T @ self.A + self.reg * np.eye(self.A.shape[1])
        eig = np.linalg.eigvalsh(H)
        self.L = float(eig[-1])
        self.mu = float(max(eig[0], 0.0))
        self.x_star = np.linalg.solve(H, self.A.T @ self.b) if self.mu > 0 else \
            np.linalg.lstsq(self.A, self.b, rcond=None)[0]

    @property
    def dim(self):
        return self.A.shape[1]

    def value(self, x):
        r = self.A @ x - self.b
        return 0.5 * float(r @ r) + 0.5 * self.reg * float(x @ x)

    def gradient(self, x):
        return self.A.T @ (self.A @ x - self.b) + self.reg * x

    def initial_distance(self, x0=None):
        x0 = np.zeros(self.dim) if x0 is None else x0
        return float(np.linalg.norm(x0 - self.x_star))

    @property
    def sigma(self):
        """Worst-case rate of unquantized GD at the optimal step, ``(L - mu)/(L + mu)``."""
        return (self.L - self.mu) / (self.L + self.mu)


class RidgeLS(LeastSquares):
    def __init__(self, A, b, reg):
        if reg < 0:
            raise ValueError("ridge strength must be non-negative")
        self.reg = float(reg)
        super().__init__(A, b)


class HingeSVM:
    """``f(x) = mean_i max(0, 1 - b_i <a_i, x>)`` over labelled points."""

    def __init__(self, points, labels):
        self.points = np.asarray(points, dtype=float)
        self.labels = np.asarray(labels, dtype=float)
        if self.points.ndim != 2 or self.labels.shape != (self.points.shape[0],):
            raise ValueError("points must be m x n with m labels")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be +1 or -1")
        self.B = float(np.max(np.linalg.norm(self.points, axis=1)))

    lower_bound = 0.0

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def m(self):
        return self.points.shape[0]

    def margins(self, x):
        return self.labels * (self.points @ x)

    def value(self, x):
        return float(np.mean(np.maximum(0.0, 1.0 - self.margins(x))))

    def values(self, X):
        """Objective at each row of ``X``."""
        M = (np.atleast_2d(X) @ self.points.T) * self.labels
        return np.mean(np.maximum(0.0, 1.0 - M), axis=1)

    def sample_subgradients(self, x, idx=None):
        """Per-sample subgradients; a sample exactly at the kink contributes 0."""
        idx = np.arange(self.m) if idx is None else np.asarray(idx)
        active = (1.0 - self.margins(x)[idx]) > 0
        return -(active * self.labels[idx])[:, None] * self.points[idx]

    def subgradient(self, x, idx=None):
        return self.sample_subgradients(x, idx).mean(axis=0)

    def classification_error(self, x):
        pred = np.where(self.points @ x >= 0, 1.0, -1.0)
        return float(np.mean(pred != self.labels))


class CallableObjective:
    """Any convex function given as ``value`` and ``subgradient`` callables."""

    def __init__(self, value, subgradient, dim, B):
        self._value = value
        self._sub = subgradient
        self.dim = int(dim)
        self.B = float(B)

    def value(self, x):
        return float(self._value(x))

    def values(self, X):
        return np.array([self.value(x) for x in np.atleast_2d(X)])

    def subgradient(self, x, idx=None):
        return np.asarray(self._sub(x), dtype=float)


# -- oracles ------------------------------------------------------------------

@dataclass(frozen=True)
class ExactGradient:
    pass


@dataclass(frozen=True)
class StochasticSubgradient:
    """Mean subgradient over ``batch`` samples drawn without replacement."""

    batch: int
    seed: int = 0


def query(obj, oracle, x, rng=None):
    if isinstance(oracle, StochasticSubgradient):
        m = obj.m
        if not 1 <= oracle.batch <= m:
            raise ValueError(f"batch {oracle.batch} outside [1, {m}]")
        idx = rng.choice(m, size=oracle.batch, replace=False)
        return obj.subgradient(x, idx)
    if hasattr(obj, "gradient"):
        return obj.gradient(x)
    return obj.subgradient(x)


# -- domains ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if not (self.radius >= 0 and np.isfinite(self.radius)):
            raise InvalidDomain(f"ball radius must be finite and >= 0, got {self.radius}")

    @property
    def diameter(self):
        return 2.0 * self.radius


@dataclass(frozen=True, eq=False)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi) or not np.all(np.isfinite(hi - lo)):
            raise InvalidDomain("box needs finite lo <= hi of equal shape")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def diameter(self):
        return float(np.linalg.norm(self.hi - self.lo))


def project(domain, x):
    """Euclidean projection onto an l2 ball or a box."""
    x = np.asarray(x, dtype=float)
    if isinstance(domain, Ball):
        if x.shape != domain.center.shape:
            raise InvalidDomain(f"point shape {x.shape} vs center {domain.center.shape}")
        d = x - domain.center
        norm = float(np.linalg.norm(d))
        if norm <= domain.radius:
            return x.copy()
        return domain.center + d * (domain.radius / norm)
    if isinstance(domain, Box):
        if x.shape != domain.lo.shape:
            raise InvalidDomain(f"point shape {x.shape} vs box {domain.lo.shape}")
        return np.clip(x, domain.lo, domain.hi)
    raise InvalidDomain(f"unsupported domain {domain!r}")


# -- bounds -------------------------------------------------------------------

def thm1_lower(sigma, rate):
    """Minimax lower bound on the linear rate, ``max{sigma, 2^-R}``."""
    return max(float(sigma), 2.0 ** (-rate))


def unquantized_rate(alpha, L, mu):
    """``nu = (1 - alpha* L mu alpha)^(1/2)`` with ``alpha* = 2/(L + mu)``."""
    alpha_star = 2.0 / (L + mu)
    return math.sqrt(max(0.0, 1.0 - alpha_star * L * mu * alpha))


def prop2_bound(nu, beta, alpha, L, T, D, tol=1e-12):
    """DGD-DEF distance envelope after ``T`` steps."""
    if abs(nu - beta) <= tol:
        return nu ** T * (1.0 + alpha * L * T) * D
    return max(nu, beta) ** T * (1.0 + beta * alpha * L / abs(beta - nu)) * D


def prop4_bound(k_upper, D, B, T):
    """Expected suboptimality of DQ-PSGD, ``K_u D B / sqrt(T)``."""
    return k_upper * D * B / math.sqrt(T)


def lemma5_radius(L, D, nu, beta, t):
    """``r_t = L D sum_{j=0}^t nu^j beta^(t-j)``, a bound on the quantizer input norm."""
    j = np.arange(t + 1)
    return float(L * D * np.sum(nu ** j * beta ** (t - j)))


def empirical_rate(dist_T, dist_0, T):
    """``(dist_T / dist_0)^(1/T)``, clipped at 1 (non-finite counts as diverged)."""
    if dist_0 == 0:
        return 0.0
    if not np.isfinite(dist_T) or dist_T >= dist_0:
        return 1.0
    return float((dist_T / dist_0) ** (1.0 / T))


def fit_inverse_sqrt(T_values, gaps):
    """Least-squares ``C`` in ``gap = C / sqrt(T)`` and the fit's R^2."""
    T_values = np.asarray(T_values, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    basis = 1.0 / np.sqrt(T_values)
    C = float(basis @ gaps / (basis @ basis))
    resid = gaps - C * basis
    total = float(np.sum((gaps - gaps.mean()) ** 2))
    r2 = 1.0 - float(resid @ resid) / total if total > 0 else 1.0
    return C, r2


# -- reports ------------------------------------------------------------------

@dataclass(eq=False)
class RunReport:
    """Per-iteration trace of one run plus summary numbers.

    ``iterates[t]`` is the server iterate after ``t`` steps; ``bits[t]`` is
    what step ``t`` transmitted.  ``bounds`` maps a name to a trace aligned
    with ``iterates``.
    """

    method: str
    iterates: np.ndarray
    distances: np.ndarray
    objective: np.ndarray
    bits: np.ndarray
    rate: float = None
    diverged: bool = False
    averaged: np.ndarray = None
    gaps: np.ndarray = None
    bounds: dict = field(default_factory=dict)
    trace: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def T(self):
        return len(self.bits)

    def rows(self):
        """One dict per iteration, for CSV output."""
        out = []
        for t in range(len(self.iterates)):
            row = {"iteration": t, "method": self.method,
                   "distance": float(self.distances[t]) if self.distances is not None else "",
                   "objective": float(self.objective[t]),
                   "bits": int(self.bits[t - 1]) if t > 0 else 0}
            if self.gaps is not None:
                row["gap"] = float(self.gaps[t])
            for name, tr in sorted(self.bounds.items()):
                row[name] = float(tr[t])
            out.append(row)
        return out


def _check_step(obj, alpha):
    if obj.mu <= 0:
        raise InvalidStepSize("DGD-DEF needs a strongly convex objective (mu > 0)")
    alpha_star = 2.0 / (obj.L + obj.mu)
    if alpha is None:
        return alpha_star
    if not (0 < alpha <= alpha_star * (1 + 1e-12)):
        raise InvalidStepSize(f"step {alpha} outside (0, 2/(L+mu)] = (0, {alpha_star}]")
    return float(alpha)


def coder_beta(frame, rate, mode, params=None):
    """Normalized worst-case error of the DSC / NDSC coder, or ``None`` if unknown."""
    mode = as_mode(mode)
    if frame.kind is FrameKind.IDENTITY and mode is EmbeddingMode.NEAR_DEMOCRATIC:
        return math.sqrt(frame.n) * 2.0 ** (1.0 - rate)
    if mode is EmbeddingMode.DEMOCRATIC and params is None:
        return None
    return prop1_bound(rate, frame.aspect_ratio, mode, k_upper=getattr(params, "k_upper", None),
                       N=frame.N, frame_kind=frame.kind)


def dgd_def(obj, frame, rate, mode="near", alpha=None, T=100, gain_bits=EXACT32, *,
            method="lp", params=None, gain_max=None, rng=None, x0=None, channel=None,
            iters=30, name=None):
    """Gradient descent with democratic error feedback.

    Per step the worker forms ``z = x + alpha e`` and ``u = grad f(z) - e``,
    encodes ``u`` and keeps ``e = decode(encode(u)) - u``; the server
    decodes and steps ``x <- x - alpha q``.  Starts from ``x0`` (default 0)
    with ``e = 0``.  Every payload goes through a :class:`BitChannel` whose
    budget is ``floor(nR)`` plus the gain field.
    """
    alpha = _check_step(obj, alpha)
    n = obj.dim
    if frame.n != n:
        raise ValueError(f"frame has n={frame.n}, objective has dimension {n}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    e = np.zeros(n)
    gain_field = 32 if gain_bits == EXACT32 else gain_bits
    if channel is None:
        channel = BitChannel(budget_bits(n, rate) + gain_field)

    xs, zs, us, es, bits = [x.copy()], [], [], [], []
    diverged = False
    for t in range(T):
        z = x + alpha * e
        u = obj.gradient(z) - e
        if not np.all(np.isfinite(u)) or np.linalg.norm(x - obj.x_star) > DIVERGED:
            diverged = True
            break
        payload = dsc_encode(frame, u, rate, mode, gain_bits, method=method, params=params,
                             gain_max=gain_max, rng=rng, iters=iters)
        channel.send(t, payload.transmitted_bits, payload)
        q = dsc_decode(frame, payload, gain_max=gain_max)
        e = q - u
        x = x - alpha * q
        xs.append(x.copy())
        zs.append(z)
        us.append(u)
        es.append(e)
        bits.append(payload.transmitted_bits)

    xs = np.array(xs)
    dist = np.linalg.norm(xs - obj.x_star, axis=1)
    steps = len(bits)
    rate_emp = 1.0 if diverged else empirical_rate(dist[-1], dist[0], max(steps, 1))
    report = RunReport(name or f"dgd-def-{as_mode(mode).value}", xs, dist,
                       np.array([obj.value(v) for v in xs]), np.array(bits, dtype=np.int64),
                       rate=rate_emp, diverged=diverged,
                       trace={"z": np.array(zs), "u": np.array(us), "e": np.array(es)},
                       info={"alpha": alpha, "L": obj.L, "mu": obj.mu, "rate_R": rate,
                             "frame": frame.descriptor(), "budget": channel.budget_per_iteration})
    nu = unquantized_rate(alpha, obj.L, obj.mu)
    beta = coder_beta(frame, rate, mode, params)
    D = dist[0]
    report.info.update(nu=nu, beta=beta, D=D)
    if beta is not None:
        report.bounds["prop2"] = np.array([prop2_bound(nu, beta, alpha, obj.L, t, D)
                                           for t in range(len(xs))])
    report.bounds["thm1"] = np.full(len(xs), thm1_lower(obj.sigma, rate))
    return report


def unquantized_gd(obj, alpha=None, T=100, x0=None):
    """Plain gradient descent with the same bookkeeping as :func:`dgd_def`."""
    alpha = _check_step(obj, alpha)
    x = np.zeros(obj.dim) if x0 is None else np.array(x0, dtype=float)
    xs = [x.copy()]
    for _ in range(T):
        x = x - alpha * obj.gradient(x)
        xs.append(x.copy())
    xs = np.array(xs)
    dist = np.linalg.norm(xs - obj.x_star, axis=1)
    nu = unquantized_rate(alpha, obj.L, obj.mu)
    rep = RunReport("gd", xs, dist, np.array([obj.value(v) for v in xs]),
                    np.full(T, 64 * obj.dim, dtype=np.int64),
                    rate=empirical_rate(dist[-1], dist[0], T),
                    info={"alpha": alpha, "L": obj.L, "mu": obj.mu, "nu": nu})
    rep.bounds["nu_envelope"] = nu ** np.arange(T + 1) * dist[0]
    return rep


def scalar_dqgd_baseline(obj, rate, alpha=None, T=100, **kw):
    """DGD-DEF with the identity frame: l_inf-normalized scalar quantization, no embedding."""
    frame = build_frame(FrameKind.IDENTITY, obj.dim)
    return dgd_def(obj, frame, rate, "near", alpha, T, name="scalar", **kw)


def dq_psgd(obj, frame, rate, T, domain, step=None, rng=None, *, params=None,
            oracle=ExactGradient(), gain_bits=32, x0=None, mode="democratic",
            method="iterative", iters=30, f_star=None, channel=None, name=None):
    """Projected subgradient descent on gain-shape quantized subgradients.

    The gain ``||g||_2`` is dithered over ``[0, B]`` and the shape goes
    through coordinate-wise dithering of its democratic embedding, so every
    quantized subgradient is unbiased.  The default step is
    ``D / (B K_u sqrt(T))``; the output is the average of ``x_1 .. x_T``.
    """
    rng = make_rng(0 if rng is None else rng)
    n = obj.dim
    B = float(obj.B)
    D = domain.diameter
    mode = as_mode(mode)
    if mode is EmbeddingMode.DEMOCRATIC and params is None:
        raise MissingParams("DQ-PSGD with democratic shapes needs Kashin parameters")
    k_eff = shape_level(frame, params, mode) * math.sqrt(frame.N)
    if step is None:
        step = D / (B * k_eff * math.sqrt(T)) if B > 0 else 0.0
    if step < 0:
        raise InvalidStepSize("step must be non-negative")
    x = project(domain, np.zeros(n) if x0 is None else np.asarray(x0, dtype=float))
    gain_field = 32 if gain_bits == EXACT32 else gain_bits
    if channel is None:
        channel = BitChannel(budget_bits(n, rate) + gain_field)
    oracle_rng = make_rng(oracle.seed) if isinstance(oracle, StochasticSubgradient) else None

    xs, bits = [x.copy()], []
    for t in range(T):
        g = query(obj, oracle, x, oracle_rng)
        payload = gain_shape_quantize(frame, g, rate, B, gain_bits, params, rng, mode=mode,
                                      method=method, iters=iters)
        channel.send(t, payload.transmitted_bits, payload)
        q = gain_shape_decode(frame, payload, B, params, mode)
        x = project(domain, x - step * q)
        xs.append(x.copy())
        bits.append(payload.transmitted_bits)

    xs = np.array(xs)
    running = np.cumsum(xs[1:], axis=0) / np.arange(1, T + 1)[:, None]
    averaged = np.vstack([xs[:1], running])
    obj_avg = obj.values(averaged)
    report = RunReport(name or f"dq-psgd-{mode.value}", xs, None, obj_avg,
                       np.array(bits, dtype=np.int64), averaged=averaged[-1],
                       info={"step": step, "B": B, "D": D, "k_upper": k_eff, "rate_R": rate,
                             "frame": frame.descriptor(), "budget": channel.budget_per_iteration})
    if f_star is not None:
        report.gaps = obj_avg - f_star
        report.info["f_star"] = f_star
    t_axis = np.maximum(np.arange(T + 1), 1)
    report.bounds["prop4"] = np.array([prop4_bound(k_eff, D, B, t) for t in t_axis])
    if hasattr(obj, "classification_error"):
        report.trace["classification_error"] = np.array(
            [obj.classification_error(v) for v in averaged])
    return report


def reference_optimum(obj, domain, T=10 ** 6, x0=None, chunk=None):
    """High-accuracy ``min f`` over ``domain`` by a long unquantized subgradient run.

    Uses exact subgradients with step ``D / (B sqrt(t+1))`` and returns the
    smaller of the averaged-iterate value and the best value seen (checked
    every ``chunk`` steps).  Stops early once the best value reaches the
    objective's ``lower_bound``, if it has one.
    """
    D = domain.diameter
    B = max(float(obj.B), 1e-300)
    x = project(domain, np.zeros(obj.dim) if x0 is None else np.asarray(x0, dtype=float))
    chunk = chunk or max(1, T // 1000)
    total = np.zeros(obj.dim)
    best = obj.value(x)
    floor = getattr(obj, "lower_bound", -math.inf)
    for t in range(T):
        x = project(domain, x - (D / (B * math.sqrt(t + 1))) * obj.subgradient(x))
        total += x
        if t % chunk == 0:
            best = min(best, obj.value(x))
            if best <= floor:
                return floor
    return min(best, obj.value(x), obj.value(total / T))
