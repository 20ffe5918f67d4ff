"""Command-line driver: fit, simulate, bench, split-eval and heatmap.

Exit status is 0 on success, 2 for bad input or arguments and 3 when the
numerics fail.  ``SCB_THREADS`` sets the default worker count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import __version__
from .core import (
    Bicluster,
    BiclustError,
    InputError,
    NumericError,
    _as_array,
    read_csv,
    restandardize,
    rng_stream,
    standardize,
    write_csv,
)
from .mean_biclust import BiclustConfig, fit_sequence
from .simulation import (
    DATA_STREAM,
    SCENARIOS,
    bench,
    default_threads,
    generate,
    primary_fitter,
    reproducibility,
)
from .var_biclust import ClusterTooSmall, fit_variance_sequence

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
FIT_STREAM, SPLIT_STREAM = 7, 8


class UsageError(InputError):
    pass


def _config(args) -> BiclustConfig:
    kind = args.kind
    null = args.null or ("chisq" if kind == "variance" else "beta")
    if kind == "variance" and null != "chisq":
        raise UsageError("variance biclusters need --null chisq")
    if kind == "mean" and null == "chisq":
        raise UsageError("--null chisq applies to variance biclusters only")
    if kind == "variance" and args.base != "kmeans":
        raise UsageError("variance biclusters have no hierarchical base")
    if args.replicates is not None and args.replicates < 1:
        raise UsageError("--replicates must be positive")
    try:
        cfg = BiclustConfig(base="hierarchical" if args.base == "hier" else "kmeans",
                            null_method=null, alpha=args.alpha, max_layers=args.max_layers)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.replicates is not None:
        cfg = replace(cfg, null_replicates=args.replicates)
    return cfg


def _config_dict(cfg: BiclustConfig, kind: str) -> dict:
    d = asdict(cfg)
    d["kind"] = kind
    return d


def _load_matrix(args):
    """``(working matrix, kept column indices, raw column count)``."""
    X = read_csv(args.input, has_header=args.header)
    p = X.p
    if args.no_standardize:
        return X, np.arange(p), p
    if args.drop_constant:
        Z, keep = standardize(X, drop_constant=True)
        return Z, keep, p
    return standardize(X), np.arange(p), p


def _write_json(path, doc):
    text = json.dumps(doc, indent=2) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _layer_dict(U: Bicluster, keep: np.ndarray, p: int) -> dict:
    d = U.to_dict()
    d["cols"] = [int(keep[j]) for j in U.cols]
    w = np.zeros(p)
    w[keep] = U.weights
    d["weights"] = [float(x) for x in w]
    return d


def load_result(path) -> tuple:
    """Read a ``fit`` result back: ``(layers, metadata)``."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        layers = [Bicluster.from_dict(d) for d in doc["layers"]]
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"{path}: not a fit result ({e})") from None
    meta = {k: v for k, v in doc.items() if k != "layers"}
    return layers, meta


def cmd_fit(args) -> int:
    cfg = _config(args)
    Z, keep, p = _load_matrix(args)
    rng = rng_stream(args.seed, FIT_STREAM)
    t0 = time.perf_counter()
    if args.kind == "variance":
        seq = fit_variance_sequence(Z, cfg, rng)
    else:
        seq = fit_sequence(Z, cfg, rng)
    ms = (time.perf_counter() - t0) * 1e3
    doc = {
        "version": __version__,
        "seed": args.seed,
        "config": _config_dict(cfg, args.kind),
        "n": Z.n,
        "p": p,
        "stopped_reason": seq.stopped_reason,
        "wall_ms": None if args.no_timing else ms,
        "layers": [_layer_dict(U, keep, p) for U in seq.layers],
    }
    _write_json(args.out, doc)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario}; choose 1-5")
    sim = generate(args.scenario, rng_stream(args.seed, DATA_STREAM, args.scenario, 0))
    write_csv(args.out, sim.data)
    if args.truth:
        _write_json(args.truth, sim.truth_dict())
    return EXIT_OK


def _parse_ids(text) -> list:
    try:
        ids = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"bad scenario list {text!r}") from None
    bad = [i for i in ids if i not in SCENARIOS]
    if bad or not ids:
        raise UsageError(f"unknown scenario(s) {bad or text}; choose from 1-5")
    return ids


def cmd_bench(args) -> int:
    ids = _parse_ids(args.scenarios)
    if args.replicates < 1:
        raise UsageError("--replicates must be positive")
    over = {} if args.max_layers is None else {"max_layers": args.max_layers}
    res = bench(ids, args.replicates, args.seed, args.threads, **over)
    if args.no_timing:
        for r in res.rows:
            r["wall_ms"] = 0.0
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "bench.csv"), "w") as fh:
        fh.write(res.to_csv())
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write(res.summary_table())
    _write_json(os.path.join(args.out, "summary.json"), {"config": res.config,
                                                         "scenarios": res.summary()})
    sys.stdout.write(res.summary_table())
    return EXIT_OK


def cmd_split_eval(args) -> int:
    cfg = _config(args)
    if args.splits < 1:
        raise UsageError("--splits must be positive")
    X = read_csv(args.input, has_header=args.header)
    if X.n < 8:
        raise UsageError("split evaluation needs at least 8 observations")
    fit = primary_fitter(args.kind, cfg)
    rep = reproducibility(X, fit, args.splits, rng_stream(args.seed, SPLIT_STREAM))
    doc = {"version": __version__, "seed": args.seed, "config": _config_dict(cfg, args.kind)}
    doc.update(rep.to_dict())
    _write_json(args.out, doc)
    return EXIT_OK


OUTLINE_COLORS = ((0, 0, 0), (0, 160, 0), (160, 0, 160), (230, 140, 0))


def diverging_rgb(Z: np.ndarray, limit: float = 3.0) -> np.ndarray:
    """Blue-white-red ramp; values are clipped to ``[-limit, limit]``."""
    v = np.clip(Z, -limit, limit) / limit
    lo = np.where(v < 0, 1.0 + v, 1.0)
    hi = np.where(v > 0, 1.0 - v, 1.0)
    rgb = np.stack([lo, lo * hi, hi], axis=-1)
    return np.rint(255.0 * rgb).astype(np.uint8)


def _outline(mask: np.ndarray) -> np.ndarray:
    pad = np.pad(mask, 1, constant_values=False)
    inner = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return mask & ~inner


def render_heatmap(X, layers=(), scale: int = 1) -> np.ndarray:
    """RGB image (rows x cols x 3) of the column-standardized matrix."""
    Z = restandardize(np.array(_as_array(X), dtype=float))
    img = diverging_rgb(Z)
    img = np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)
    n, p = Z.shape
    for k, U in enumerate(layers):
        m = np.repeat(np.repeat(U.mask(n, p), scale, axis=0), scale, axis=1)
        img[_outline(m)] = OUTLINE_COLORS[k % len(OUTLINE_COLORS)]
    return img


def write_ppm(path, img: np.ndarray) -> None:
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())


def cmd_heatmap(args) -> int:
    if args.scale < 1:
        raise UsageError("--scale must be positive")
    X = read_csv(args.input, has_header=args.header)
    layers = []
    if args.result:
        layers, _ = load_result(args.result)
        for U in layers:
            if U.rows.size and (U.rows.max() >= X.n or U.cols.max() >= X.p):
                raise InputError("result indices fall outside the matrix")
    write_ppm(args.out, render_heatmap(X, layers, args.scale))
    return EXIT_OK


def _fit_options(sp, with_layers=True):
    sp.add_argument("--in", dest="input", required=True, help="input CSV matrix")
    sp.add_argument("--header", action="store_true", help="first CSV line holds feature names")
    sp.add_argument("--kind", choices=("mean", "variance"), default="mean")
    sp.add_argument("--base", choices=("kmeans", "hier"), default="kmeans")
    sp.add_argument("--null", choices=("beta", "permutation", "chisq"), default=None,
                    help="null model (default: beta for mean, chisq for variance)")
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--replicates", type=int, default=None, help="null replicates")
    sp.add_argument("--max-layers", type=int, default=10 if with_layers else 1)
    sp.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scbiclust", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--threads", type=int, default=None,
                    help="worker cap (default: $SCB_THREADS or 1)")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="extract biclusters from a CSV matrix")
    _fit_options(sp)
    sp.add_argument("--out", required=True, help="result JSON ('-' for stdout)")
    sp.add_argument("--no-standardize", action="store_true")
    sp.add_argument("--drop-constant", action="store_true")
    sp.add_argument("--no-timing", action="store_true", help="omit wall time (byte-stable output)")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("simulate", help="write one simulated data set")
    sp.add_argument("--scenario", type=int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True)
    sp.add_argument("--truth", default=None, help="also write the planted biclusters as JSON")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bench", help="run the simulation benchmark")
    sp.add_argument("--scenarios", default="1,2,3,4,5")
    sp.add_argument("--replicates", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-layers", type=int, default=None)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--no-timing", action="store_true")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("split-eval", help="split-half reproducibility of the first bicluster")
    _fit_options(sp, with_layers=False)
    sp.add_argument("--splits", type=int, default=10)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_split_eval)

    sp = sub.add_parser("heatmap", help="render a matrix (and biclusters) as a PPM image")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--result", default=None, help="fit result JSON to outline")
    sp.add_argument("--scale", type=int, default=1, help="pixels per matrix cell")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_heatmap)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INPUT
    if args.threads is None:
        args.threads = default_threads()
    elif args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NumericError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, ClusterTooSmall, OSError, ValueError, KeyError) as e:
        print(f"input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except BiclustError as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
