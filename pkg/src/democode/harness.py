"""Experiment configuration, execution and CSV output.

Each experiment kind takes an :class:`ExperimentConfig` and returns a list of
row dicts with a fixed header (see ``HEADERS``).  Rows are sorted before they
are written, and every (method, rate, seed, ...) cell draws from its own
stream seeded by hashing the cell coordinates, so a config reproduces its
CSV byte for byte (timing columns excepted).

Configs are JSON objects::

    {"kind": "compression_map", "n": 256, "rates": [1, 2, 3, 4],
     "realizations": 50, "seed": 0, "output": "map.csv"}

Unknown keys are rejected.  The defaults for every kind are in ``DEFAULTS``.
"""

import csv
import io
import json
import math
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import compressors as comp
from . import optim
from .channel import BitChannel, LedgerEntry  # noqa: F401  (re-exported)
from .embeddings import democratic_lp, near_democratic
from .errors import BudgetTooSmall, ConfigError, DimensionMismatch, ParseError
from .frames import build_frame, default_kashin_params, next_power_of_two
from .quantizers import dsc_decode, dsc_encode
from .rng import derive_seed, make_rng, standard_normal

KINDS = ("compression_map", "rate_vs_R", "wallclock", "sparsified_gd", "svm")

DEFAULTS = {
    "compression_map": {
        "n": 256, "rates": [1, 2, 3, 4, 5, 6], "realizations": 50, "seed": 0,
        "schemes": ["scalar", "sd", "topk", "ndh", "ndo", "kashin"], "kashin_aspect": 1.5,
    },
    "rate_vs_R": {
        "n": 116, "m": 1000, "T": 50, "rates": [1, 2, 3, 4, 6, 8, 12], "seed": 0,
        "methods": ["gd", "scalar", "ndsc", "ndh", "dsc"], "dsc_N": 128,
    },
    "wallclock": {
        "dims": [16, 32, 64, 128, 256], "repeats": 10, "warmup": 1, "seed": 0,
    },
    "sparsified_gd": {
        "n": 64, "m": 400, "T": 200, "seeds": [0, 1, 2], "keep_fraction": 0.5,
        "value_bits": 1, "reg_fraction": 0.1, "step_fraction": 1.0,
    },
    "svm": {
        "dataset": {"type": "synthetic", "m": 100, "n": 30, "seed": 0},
        "rate": 2.0, "N": 60, "T": 2000, "seeds": list(range(10)), "radius": 5.0,
        "batch": 10, "sparse_rate": 0.5, "reference_T": 1000000,
        "methods": ["unquantized", "dq-psgd", "nd-sparsified", "naive-sparsified"],
    },
}

HEADERS = {
    "compression_map": ["scheme", "R", "mean_normalized_error", "std", "bits"],
    "rate_vs_R": ["method", "R", "empirical_rate_clipped"],
    "wallclock": ["n", "method", "mean_seconds", "min_seconds"],
    "sparsified_gd": ["iteration", "method", "objective", "gap", "classification_error"],
    "svm": ["iteration", "method", "objective", "gap", "classification_error"],
}


@dataclass
class ExperimentConfig:
    kind: str
    options: dict = field(default_factory=dict)
    output: str = None
    workers: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.options) - set(DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"unknown keys for {self.kind}: {sorted(unknown)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def get(self, key):
        return self.options.get(key, DEFAULTS[self.kind][key])

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        try:
            kind = data.pop("kind")
        except KeyError:
            raise ConfigError("config needs a 'kind'") from None
        output = data.pop("output", None)
        workers = int(data.pop("workers", 1))
        return cls(kind, data, output, workers)

    @classmethod
    def from_file(cls, path):
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    def to_dict(self):
        out = {"kind": self.kind, **self.options}
        if self.output:
            out["output"] = self.output
        if self.workers != 1:
            out["workers"] = self.workers
        return out


# -- data ---------------------------------------------------------------------

def gaussian_cubed(rng, shape):
    """Element-wise cubes of standard normals (heavy-tailed test data)."""
    return standard_normal(rng, shape) ** 3


def synthetic_classes(m=100, n=30, seed=0, separation=1.0, noise=1.0):
    """Two Gaussian classes with means ``+-separation * 1/sqrt(n)`` and noise ``noise/sqrt(n)``.

    The first ``ceil(m/2)`` rows are labelled +1.
    """
    rng = make_rng(seed)
    labels = np.where(np.arange(m) < (m + 1) // 2, 1.0, -1.0)
    mean = np.full(n, separation / math.sqrt(n))
    A = labels[:, None] * mean + noise * standard_normal(rng, (m, n)) / math.sqrt(n)
    return A, labels


_IDX_TYPES = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}


def read_idx(path):
    """Parse an IDX file (big-endian magic ``0 0 type ndim`` then ``ndim`` u32 sizes)."""
    data = Path(path).read_bytes()
    if len(data) < 4 or data[0] != 0 or data[1] != 0:
        raise ParseError(f"{path}: bad IDX magic")
    dtype = _IDX_TYPES.get(data[2])
    if dtype is None:
        raise ParseError(f"{path}: unknown IDX element type 0x{data[2]:02x}")
    ndim = data[3]
    head = 4 + 4 * ndim
    if len(data) < head:
        raise ParseError(f"{path}: truncated IDX header")
    dims = struct.unpack(f">{ndim}I", data[4:head])
    count = int(np.prod(dims)) if dims else 1
    body = np.frombuffer(data, dtype=dtype, offset=head)
    if body.size != count:
        raise ParseError(f"{path}: expected {count} elements, found {body.size}")
    return body.reshape(dims).astype(float)


def read_csv_dataset(path):
    """Rows of ``n`` features followed by a label; an optional header row is skipped."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), 1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if rows or lineno > 1:
                    raise ParseError(f"{path}:{lineno}: non-numeric value") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    width = len(rows[0])
    if width < 2 or any(len(r) != width for r in rows):
        raise ParseError(f"{path}: rows must all have n+1 >= 2 columns")
    arr = np.array(rows)
    return arr[:, :-1], arr[:, -1]


def _to_pm1(labels, positive=None):
    labels = np.asarray(labels, dtype=float)
    if positive is not None:
        return np.where(labels == positive, 1.0, -1.0)
    values = np.unique(labels)
    if values.size != 2:
        raise ParseError(f"need two classes, found {values.size}; set 'positive'")
    return np.where(labels == values[1], 1.0, -1.0)


def load_dataset(source):
    """Return ``(A, labels)`` with labels in {-1, +1}.

    ``source`` is a dict with ``type`` in {synthetic, idx, csv}.  IDX sources
    take ``images`` and ``labels`` paths and optionally ``classes`` (two
    digits to keep) and ``positive``; every source accepts ``normalize`` to
    scale rows to unit l2 norm.
    """
    source = dict(source)
    kind = source.pop("type", "synthetic")
    normalize = source.pop("normalize", False)
    if kind == "synthetic":
        A, y = synthetic_classes(**source)
    elif kind == "idx":
        images = read_idx(source["images"])
        raw = read_idx(source["labels"])
        A = images.reshape(images.shape[0], -1)
        if raw.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"{A.shape[0]} images but {raw.shape[0]} labels")
        classes = source.get("classes")
        if classes is not None:
            keep = np.isin(raw, classes)
            A, raw = A[keep], raw[keep]
        limit = source.get("limit")
        if limit is not None:
            A, raw = A[:limit], raw[:limit]
        y = _to_pm1(raw, source.get("positive"))
    elif kind == "csv":
        A, raw = read_csv_dataset(source["path"])
        y = _to_pm1(raw, source.get("positive"))
    else:
        raise ConfigError(f"unknown dataset type {kind!r}")
    if normalize:
        norms = np.linalg.norm(A, axis=1, keepdims=True)
        A = A / np.where(norms > 0, norms, 1.0)
    return A, y


# -- output -------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if np.isfinite(v) else str(float(v))
    return "" if v is None else str(v)


def rows_to_csv(rows, header):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(row.get(h)) for h in header])
    return buf.getvalue()


def write_csv(rows, header, path):
    Path(path).write_text(rows_to_csv(rows, header), encoding="utf-8")


def _run_cells(fn, cells, workers):
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


# -- compression map ----------------------------------------------------------

def topk_for_budget(n, rate):
    """Largest ``k`` whose Top-K encoding (32-bit values plus support) fits in ``nR`` bits."""
    budget = int(math.floor(n * rate + 1e-9))
    k = 0
    while k < n and comp.bit_cost(comp.TopK(k + 1), n) <= budget:
        k += 1
    return k


def sd_levels_for_rate(rate):
    """Standard-dithering levels using ``R`` bits of level index plus a sign bit."""
    return max(1, 2 ** int(rate) - 1)


def _compression_cell(cell):
    scheme, rate, n, realizations, seed, aspect = cell
    ys = gaussian_cubed(make_rng(derive_seed("compression_map", "data", seed, n)), (realizations, n))
    rng = make_rng(derive_seed("compression_map", scheme, rate, seed))
    frame_seed = derive_seed("compression_map", "frame", scheme, seed)
    errors, bits = [], 0
    try:
        if scheme in ("scalar", "ndh", "ndo", "kashin"):
            mode, method, params = "near", "lp", None
            if scheme == "scalar":
                frame = build_frame("identity", n)
            elif scheme == "ndh":
                frame = build_frame("hadamard", n, next_power_of_two(n), frame_seed)
            elif scheme == "ndo":
                frame = build_frame("orthonormal", n, n, frame_seed)
            else:
                frame = build_frame("orthonormal", n, int(math.ceil(aspect * n)), frame_seed)
                mode, method = "democratic", "iterative"
                params = default_kashin_params(frame, seed=frame_seed)
            for y in ys:
                payload = dsc_encode(frame, y, rate, mode, method=method, params=params)
                errors.append(np.linalg.norm(dsc_decode(frame, payload) - y) / np.linalg.norm(y))
                bits = payload.transmitted_bits
        else:
            if scheme == "sd":
                spec = comp.StandardDither(sd_levels_for_rate(rate))
            elif scheme == "topk":
                k = topk_for_budget(n, rate)
                if k < 1:
                    return None
                spec = comp.TopK(k)
            else:
                raise ConfigError(f"unknown compression scheme {scheme!r}")
            for y in ys:
                res = comp.compress(spec, y, rng)
                errors.append(np.linalg.norm(res.output - y) / np.linalg.norm(y))
                bits = res.bits
    except BudgetTooSmall:
        return None
    errors = np.array(errors)
    return {"scheme": scheme, "R": rate, "mean_normalized_error": float(errors.mean()),
            "std": float(errors.std()), "bits": bits}


def run_compression_map(cfg):
    """Normalized compression error ``E||Q(y) - y|| / ||y||`` on Gaussian-cubed vectors.

    Rows where a scheme cannot run at a rate (fewer than one bit per
    embedding coordinate, or no Top-K entry fits) are omitted.
    """
    n, seed = cfg.get("n"), cfg.get("seed")
    cells = [(s, r, n, cfg.get("realizations"), seed, cfg.get("kashin_aspect"))
             for s in cfg.get("schemes") for r in cfg.get("rates")]
    rows = [r for r in _run_cells(_compression_cell, cells, cfg.workers) if r is not None]
    return sorted(rows, key=lambda r: (r["scheme"], r["R"]))


# -- rate vs R ----------------------------------------------------------------

def least_squares_instance(n, m, seed):
    rng = make_rng(derive_seed("least_squares", n, m, seed))
    A = gaussian_cubed(rng, (m, n))
    b = A @ standard_normal(rng, n) + standard_normal(rng, m)
    return optim.LeastSquares(A, b)


def _rate_cell(cell):
    method, rate, n, m, T, seed, dsc_N = cell
    obj = least_squares_instance(n, m, seed)
    fseed = derive_seed("rate_vs_R", "frame", method, seed)
    if method == "gd":
        rep = optim.unquantized_gd(obj, T=T)
    elif method == "scalar":
        rep = optim.scalar_dqgd_baseline(obj, rate, T=T)
    else:
        if method == "ndsc":
            frame, mode = build_frame("orthonormal", n, n, fseed), "near"
        elif method == "ndh":
            frame, mode = build_frame("hadamard", n, next_power_of_two(n), fseed), "near"
        elif method == "dsc":
            frame, mode = build_frame("orthonormal", n, dsc_N, fseed), "democratic"
        else:
            raise ConfigError(f"unknown rate_vs_R method {method!r}")
        try:
            rep = optim.dgd_def(obj, frame, rate, mode, T=T)
        except BudgetTooSmall:
            return None
    return {"method": method, "R": rate, "empirical_rate_clipped": rep.rate}


def run_rate_vs_R(cfg):
    """Empirical DGD-DEF rate against the bit budget on Gaussian-cubed least squares."""
    cells = [(meth, r, cfg.get("n"), cfg.get("m"), cfg.get("T"), cfg.get("seed"), cfg.get("dsc_N"))
             for meth in cfg.get("methods") for r in cfg.get("rates")]
    rows = [r for r in _run_cells(_rate_cell, cells, cfg.workers) if r is not None]
    return sorted(rows, key=lambda r: (r["method"], r["R"]))


# -- wall clock ---------------------------------------------------------------

def time_call(fn, repeats=10, warmup=1):
    """Seconds per call on the monotonic clock: ``(mean, min)`` over ``repeats`` after ``warmup``."""
    for _ in range(warmup):
        fn()
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return float(np.mean(samples)), float(np.min(samples))


def run_wallclock(cfg):
    """Time democratic (LP) against near-democratic (closed form) embeddings.

    Uses Hadamard frames with ``N = 2^ceil(log2 n)``.  Frame construction
    and input generation happen before timing starts.
    """
    rows = []
    for n in cfg.get("dims"):
        N = next_power_of_two(n)
        seed = derive_seed("wallclock", n, cfg.get("seed"))
        frame = build_frame("hadamard", n, N, seed)
        y = standard_normal(make_rng(seed), n)
        for method, fn in (("democratic", lambda: democratic_lp(frame, y)),
                           ("near_democratic", lambda: near_democratic(frame, y))):
            mean, best = time_call(fn, cfg.get("repeats"), cfg.get("warmup"))
            rows.append({"n": n, "method": method, "mean_seconds": mean, "min_seconds": best})
    return sorted(rows, key=lambda r: (r["n"], r["method"]))


# -- sparsified GD ------------------------------------------------------------

def sparsified_gd(obj, compress_fn, alpha, T, x_ref):
    """Gradient descent on compressed gradients; returns per-iteration objective values."""
    x = np.zeros(obj.dim)
    vals = [obj.value(x)]
    for t in range(T):
        g = compress_fn(obj.gradient(x), t)
        x = x - alpha * g
        if not np.all(np.isfinite(x)) or np.linalg.norm(x - x_ref) > optim.DIVERGED:
            vals.extend([math.inf] * (T - t))
            break
        vals.append(obj.value(x))
    return np.array(vals)


def _sparsified_cell(cell):
    seed, n, m, T, keep, vbits, reg_frac, step_frac = cell
    rng = make_rng(derive_seed("sparsified_gd", "data", n, m, seed))
    A = gaussian_cubed(rng, (m, n))
    b = A @ standard_normal(rng, n) + standard_normal(rng, m)
    L_A = float(np.linalg.eigvalsh(A.T @ A)[-1])
    obj = optim.RidgeLS(A, b, reg_frac * L_A)
    alpha = step_frac * 2.0 / (obj.L + obj.mu)
    f_star = obj.value(obj.x_star)
    frame = build_frame("orthonormal", n, n, derive_seed("sparsified_gd", "frame", seed))
    k = max(1, int(round(keep * n)))
    spec = comp.RandomSparsify(k, value_bits=vbits, shared_randomness=True)
    out = []
    for method in ("naive", "wrapped"):
        crng = make_rng(derive_seed("sparsified_gd", "compress", seed))
        channel = BitChannel(comp.bit_cost(spec, n))

        def fn(g, t, method=method, crng=crng, channel=channel):
            if method == "naive":
                res = comp.compress(spec, g, crng)
                channel.send(t, res.bits)
                return res.output
            res = comp.democratic_wrap(frame, spec, g, "near", crng)
            channel.send(t, res.bits)
            return res.output

        vals = sparsified_gd(obj, fn, alpha, T, obj.x_star)
        out.append((method, vals - f_star))
    return out


def run_sparsified_gd(cfg):
    """Ridge regression on heavy-tailed data with R < 1 gradient compression.

    Both methods randomly keep ``keep_fraction`` of the coordinates (support
    from shared randomness) and send each survivor with ``value_bits`` bits
    plus one 32-bit gain; ``wrapped`` does this on the near-democratic
    embedding of the gradient.  Rows hold the mean over seeds.
    """
    seeds = cfg.get("seeds")
    T = cfg.get("T")
    cells = [(s, cfg.get("n"), cfg.get("m"), T, cfg.get("keep_fraction"), cfg.get("value_bits"),
              cfg.get("reg_fraction"), cfg.get("step_fraction")) for s in seeds]
    results = _run_cells(_sparsified_cell, cells, cfg.workers)
    rows = []
    for method in ("naive", "wrapped"):
        gaps = np.mean([dict(r)[method] for r in results], axis=0)
        for t, gap in enumerate(gaps):
            rows.append({"iteration": t, "method": method, "objective": "", "gap": float(gap),
                         "classification_error": ""})
    return sorted(rows, key=lambda r: (r["method"], r["iteration"]))


# -- SVM ----------------------------------------------------------------------

def svm_setup(cfg):
    A, labels = load_dataset(cfg.get("dataset"))
    obj = optim.HingeSVM(A, labels)
    domain = optim.Ball(np.zeros(obj.dim), cfg.get("radius"))
    f_star = optim.reference_optimum(obj, domain, T=cfg.get("reference_T"))
    return obj, domain, f_star


def _svm_cell(cell):
    method, seed, opts, obj, domain, f_star = cell
    n = obj.dim
    T, rate, N, batch = opts["T"], opts["rate"], opts["N"], opts["batch"]
    oracle = optim.StochasticSubgradient(batch, derive_seed("svm", "oracle", seed))
    rng = make_rng(derive_seed("svm", method, seed))
    fseed = derive_seed("svm", "frame", seed)
    if method == "dq-psgd":
        frame = build_frame("orthonormal", n, N, fseed)
        params = default_kashin_params(frame, seed=fseed)
        rep = optim.dq_psgd(obj, frame, rate, T, domain, rng=rng, params=params, oracle=oracle,
                            f_star=f_star)
        return method, rep.objective - f_star, rep.trace["classification_error"]
    return method, *_sparse_psgd(obj, domain, method, T, opts["sparse_rate"], rng, oracle, fseed,
                                 f_star)


def _sparse_psgd(obj, domain, method, T, sparse_rate, rng, oracle, fseed, f_star):
    n = obj.dim
    D, B = domain.diameter, obj.B
    frame = build_frame("orthonormal", n, n, fseed)
    if method == "unquantized":
        spec = None
        scale = 1.0
    else:
        k = max(1, int(round(sparse_rate * n)))
        spec = comp.RandomSparsify(k, rescale=True, value_bits=1, shared_randomness=True)
        # rescaled survivors can grow the norm by n/k
        scale = n / k
    step = D / (B * scale * math.sqrt(T))
    oracle_rng = make_rng(oracle.seed)
    x = np.zeros(n)
    xs = []
    for _ in range(T):
        g = optim.query(obj, oracle, x, oracle_rng)
        if method == "naive-sparsified":
            g = comp.compress(spec, g, rng).output
        elif method == "nd-sparsified":
            g = comp.democratic_wrap(frame, spec, g, "near", rng).output
        x = optim.project(domain, x - step * g)
        xs.append(x)
    xs = np.array(xs)
    avg = np.vstack([np.zeros((1, n)), np.cumsum(xs, axis=0) / np.arange(1, T + 1)[:, None]])
    return obj.values(avg) - f_star, np.array([obj.classification_error(v) for v in avg])


def run_svm(cfg):
    """Hinge-loss SVM traces: averaged-iterate gap and classification error, mean over seeds."""
    obj, domain, f_star = svm_setup(cfg)
    opts = {k: cfg.get(k) for k in ("T", "rate", "N", "batch", "sparse_rate")}
    cells = [(meth, s, opts, obj, domain, f_star) for meth in cfg.get("methods")
             for s in cfg.get("seeds")]
    results = _run_cells(_svm_cell, cells, cfg.workers)
    rows = []
    for method in cfg.get("methods"):
        gaps = np.mean([g for mth, g, _ in results if mth == method], axis=0)
        errs = np.mean([e for mth, _, e in results if mth == method], axis=0)
        for t in range(len(gaps)):
            rows.append({"iteration": t, "method": method, "objective": float(gaps[t] + f_star),
                         "gap": float(gaps[t]), "classification_error": float(errs[t])})
    return sorted(rows, key=lambda r: (r["method"], r["iteration"]))


RUNNERS = {
    "compression_map": run_compression_map,
    "rate_vs_R": run_rate_vs_R,
    "wallclock": run_wallclock,
    "sparsified_gd": run_sparsified_gd,
    "svm": run_svm,
}


def run_experiment(cfg, output=None):
    """Run ``cfg`` and write its CSV to ``output`` (or ``cfg.output``) if given."""
    rows = RUNNERS[cfg.kind](cfg)
    path = output or cfg.output
    if path:
        write_csv(rows, HEADERS[cfg.kind], path)
    return rows
