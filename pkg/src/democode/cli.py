"""Command-line interface.

Subcommands are thin wrappers over library calls::

    democode embed --frame hadamard --N 128 --seed 1 --mode near --in y.csv --out x.csv
    democode quantize --frame hadamard --seed 1 --rate 4 --in y.csv --out y.dsc --decoded yq.csv
    democode dequantize --in y.dsc --out yq.csv
    democode compress --type topk --k 8 --seed 0 --in y.csv --out yc.csv
    democode optimize --algo dgd-def --rate 4 --seed 0 --out run.csv
    democode bench --config fig1a.json --out fig1a.csv
    democode bounds --which thm1 --sigma 0.5 --rate 1

Exit status is 0 on success, 1 on a usage error and 2 on a runtime error
(including a bit-budget violation).
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import compressors as comp
from . import harness, optim, quantizers
from .embeddings import as_mode, dynamic_range_bound, embed
from .errors import DemocodeError
from .frames import build_frame, default_kashin_params, frame_from_descriptor, kashin_constants
from .payload import EXACT32, PayloadMode, QuantizedPayload
from .rng import derive_seed, make_rng


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def read_vector(path):
    """One value per line or a single comma-separated row."""
    text = Path(path).read_text(encoding="utf-8")
    tokens = [t for t in text.replace(",", " ").split() if t]
    try:
        return np.array([float(t) for t in tokens])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def write_vector(vec, path):
    text = "".join(f"{float(v)!r}\n" for v in vec)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _frame_args(p, seed_required=True):
    p.add_argument("--frame", default="hadamard",
                   help="identity | orthonormal | hadamard | subgaussian")
    p.add_argument("--n", type=int, help="input dimension (defaults to the vector length)")
    p.add_argument("--N", type=int, help="embedding dimension")
    p.add_argument("--seed", type=int, required=seed_required)
    p.add_argument("--mode", default="near", help="dem | near")
    p.add_argument("--method", default="lp", choices=("lp", "iterative"))


def _build(args, n):
    if args.n is not None and args.n != n:
        raise UsageError(f"--n {args.n} does not match the input length {n}")
    frame = build_frame(args.frame, n, args.N, args.seed)
    params = None
    if as_mode(args.mode).value == "democratic" and args.method == "iterative":
        params = default_kashin_params(frame, seed=args.seed)
    return frame, params


def cmd_embed(args):
    y = read_vector(args.input)
    frame, params = _build(args, len(y))
    emb = embed(frame, y, args.mode, method=args.method, params=params)
    write_vector(emb.coefficients, args.out)
    print(f"gain={emb.gain!r}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_quantize(args):
    y = read_vector(args.input)
    frame, params = _build(args, len(y))
    rng = make_rng(derive_seed("quantize", args.seed)) if args.gain_bits else None
    payload = quantizers.dsc_encode(frame, y, args.rate, args.mode, args.gain_bits,
                                    method=args.method, params=params, gain_max=args.gain_max,
                                    rng=rng)
    data = payload.to_bytes()
    Path(args.out).write_bytes(data)
    if args.decoded:
        write_vector(quantizers.dsc_decode(frame, payload, gain_max=args.gain_max), args.decoded)
    print(f"bits={payload.transmitted_bits} bytes={len(data)}")
    return 0


def decode_payload_bytes(data, gain_max=None):
    payload = QuantizedPayload.from_bytes(data)
    frame = frame_from_descriptor({"kind": payload.frame_kind.value, "n": payload.n,
                                   "N": payload.N, "seed": payload.frame_seed})
    if payload.mode is PayloadMode.DITHERED:
        raise UsageError("gain-shape payloads need out-of-band Kashin parameters to decode")
    return quantizers.dsc_decode(frame, payload, gain_max=gain_max)


def cmd_dequantize(args):
    write_vector(decode_payload_bytes(Path(args.input).read_bytes(), args.gain_max), args.out)
    return 0


def cmd_compress(args):
    x = read_vector(args.input)
    record = {"type": args.type}
    for key in ("k", "levels", "scale", "value_bits"):
        val = getattr(args, key)
        if val is not None:
            record[key] = val
    if args.rescale:
        record["rescale"] = True
    spec = comp.spec_from_config(record)
    rng = make_rng(derive_seed("compress", args.seed))
    if args.wrap:
        frame = build_frame(args.wrap, len(x), args.N, args.seed)
        res = comp.democratic_wrap(frame, spec, x, args.mode, rng)
    else:
        res = comp.compress(spec, x, rng)
    write_vector(res.output, args.out)
    print(f"bits={res.bits}", file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return 0


def cmd_optimize(args):
    seed = args.seed
    if args.algo == "dq-psgd":
        A, labels = harness.load_dataset(json.loads(args.dataset) if args.dataset else
                                         {"type": "synthetic", "m": args.m or 100,
                                          "n": args.n or 30, "seed": seed})
        obj = optim.HingeSVM(A, labels)
        domain = optim.Ball(np.zeros(obj.dim), args.radius)
        frame = build_frame(args.frame, obj.dim, args.N, seed)
        params = default_kashin_params(frame, seed=seed)
        f_star = optim.reference_optimum(obj, domain, T=args.reference_T)
        rep = optim.dq_psgd(obj, frame, args.rate, args.T, domain,
                            rng=derive_seed("optimize", seed), params=params,
                            oracle=optim.StochasticSubgradient(args.batch, seed), f_star=f_star)
    else:
        obj = harness.least_squares_instance(args.n or 116, args.m or 1000, seed)
        if args.algo == "gd":
            rep = optim.unquantized_gd(obj, T=args.T)
        elif args.algo == "scalar":
            rep = optim.scalar_dqgd_baseline(obj, args.rate, T=args.T)
        else:
            frame = build_frame(args.frame, obj.dim, args.N, seed)
            params = None
            if as_mode(args.mode).value == "democratic":
                params = _try_params(frame, seed)
            rep = optim.dgd_def(obj, frame, args.rate, args.mode, T=args.T, params=params)
    rows = rep.rows()
    header = ["iteration", "method", "distance", "objective", "bits"]
    if rep.gaps is not None:
        header.append("gap")
    header += sorted(rep.bounds)
    harness.write_csv(rows, header, args.out)
    summary = rep.rate if rep.rate is not None else rep.gaps[-1] if rep.gaps is not None else None
    summary = None if summary is None else float(summary)
    print(f"{rep.method} T={rep.T} summary={summary!r}")
    return 0


def _try_params(frame, seed):
    try:
        return default_kashin_params(frame, seed=seed)
    except DemocodeError:
        return None


def cmd_bench(args):
    cfg = harness.ExperimentConfig.from_file(args.config)
    if args.workers:
        cfg.workers = args.workers
    out = args.out or cfg.output
    rows = harness.run_experiment(cfg, out)
    if not out:
        sys.stdout.write(harness.rows_to_csv(rows, harness.HEADERS[cfg.kind]))
    return 0


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"bounds --which {args.which} requires {', '.join(missing)}")


def cmd_bounds(args):
    w = args.which
    if w == "thm1":
        _need(args, "sigma", "rate")
        val = optim.thm1_lower(args.sigma, args.rate)
    elif w in ("prop1", "lemma4"):
        _need(args, "rate")
        mode = as_mode(args.mode)
        if mode.value == "democratic":
            _need(args, "ku")
        else:
            _need(args, "N")
        fn = quantizers.prop1_bound if w == "prop1" else \
            (lambda *a, **k: quantizers.covering_efficiency(*a, **k).rho)
        val = fn(args.rate, args.aspect, mode, k_upper=args.ku, N=args.N, frame_kind=args.frame)
    elif w == "prop2":
        _need(args, "nu", "beta", "alpha", "L", "T", "D")
        val = optim.prop2_bound(args.nu, args.beta, args.alpha, args.L, args.T, args.D)
    elif w == "prop4":
        _need(args, "ku", "D", "B", "T")
        val = optim.prop4_bound(args.ku, args.D, args.B, args.T)
    elif w == "kashin":
        _need(args, "eta", "delta")
        val = kashin_constants(args.eta, args.delta).k_upper
    else:
        _need(args, "N")
        if as_mode(args.mode).value == "democratic":
            _need(args, "ku")
            val = args.ku / math.sqrt(args.N)
        else:
            frame = build_frame(args.frame, args.n or args.N, args.N, 0)
            val = dynamic_range_bound(frame, args.mode)
    print(repr(float(val)))
    return 0


def build_parser():
    parser = _Parser(prog="democode", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("embed", help="embed a vector")
    _frame_args(p)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("quantize", help="DSC/NDSC-encode a vector to a .dsc payload")
    _frame_args(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--gain-bits", type=int, default=EXACT32)
    p.add_argument("--gain-max", type=float)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decoded")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("dequantize", help="decode a .dsc payload")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--gain-max", type=float)
    p.set_defaults(func=cmd_dequantize)

    p = sub.add_parser("compress", help="apply a compression operator")
    p.add_argument("--type", required=True,
                   help="topk | random_sparsify | sign | standard_dither")
    p.add_argument("--k", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--scale", type=float)
    p.add_argument("--value-bits", type=int)
    p.add_argument("--rescale", action="store_true")
    p.add_argument("--wrap", help="compress the embedding for this frame kind")
    p.add_argument("--N", type=int)
    p.add_argument("--mode", default="near")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("optimize", help="run an optimizer and write its trace")
    p.add_argument("--algo", required=True, choices=("dgd-def", "dq-psgd", "gd", "scalar"))
    p.add_argument("--rate", type=float, default=4.0)
    p.add_argument("--T", type=int, default=50)
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--frame", default="orthonormal")
    p.add_argument("--N", type=int)
    p.add_argument("--mode", default="near")
    p.add_argument("--radius", type=float, default=5.0)
    p.add_argument("--batch", type=int, default=10)
    p.add_argument("--reference-T", type=int, default=10 ** 6)
    p.add_argument("--dataset", help="JSON dataset source for dq-psgd")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("bench", help="run an experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("bounds", help="evaluate a bound formula")
    p.add_argument("--which", required=True,
                   choices=("thm1", "prop1", "prop2", "prop4", "lemma4", "kashin", "range"))
    for name in ("sigma", "rate", "ku", "nu", "beta", "alpha", "L", "D", "B", "eta", "delta"):
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--aspect", type=float, default=1.0)
    p.add_argument("--N", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--mode", default="near")
    p.add_argument("--frame", default="hadamard")
    p.set_defaults(func=cmd_bounds)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (DemocodeError, OSError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
