"""Command-line interface: ``blockclust <subcommand> ...``.

Exit codes: 0 success, 2 usage, 3 input parse error, 4 invalid configuration,
5 numerical failure.
"""

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import __version__
from .baselines import KmeansConfig, ifpca_lite, kmeans2, spectral_baseline
from .cfa import CFAPCA
from .exceptions import (
    ConfigurationError,
    DegenerateSpectrumError,
    NoFeaturesSelectedError,
    ParseError,
    UndefinedLossError,
)
from .io import NAN_POLICIES, difference_series, load_matrix, save_matrix
from .ma import ma_pca
from .metrics import hamming_clustering
from .minimax import phase_grid
from .recovery import PostClusteringRecovery
from .simulation import METHODS, PRESETS, SCHEMA_VERSION, SimConfig, run_sweep
from .tuning import TuningGrid, default_h_max, tune_cfa, tune_ma

EXIT_PARSE = 3
EXIT_CONFIG = 4
EXIT_NUMERIC = 5


def _dump_json(obj, path):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _write_text(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load(args):
    data = load_matrix(args.input, nan_policy=args.nan_policy, grid_shape=args.grid)
    return data.values, data.grid_shape


def _load_labels(path):
    with open(path) as fh:
        text = fh.read().strip()
    if text.startswith("{") or text.startswith("["):
        obj = json.loads(text)
        labels = obj["labels"] if isinstance(obj, dict) else obj
    else:
        labels = [float(t) for t in text.replace(",", " ").split()]
    return np.asarray(labels, dtype=np.int64)


def _cluster(method, X, shape, args):
    """Labels, block set and run info for one clustering method."""
    info = {"fallback": "none"}
    if method == "cfa":
        est = CFAPCA(
            h1=args.h1, h2=args.h2, threshold_scale=args.threshold_scale,
            enumeration=args.enumeration, min_length=args.min_length,
            grid_shape=shape, fallback_h3=args.h3,
        ).fit(X)
        info["fallback"] = est.fallback_
        if est.fallback_ != "none":
            info["note"] = "no features selected at the requested threshold"
        if est.fallback_ != "ma_pca":
            return est.labels_, est.blocks_, info
        labels = est.labels_
    elif method == "ma":
        labels = ma_pca(X, args.h3 or 1, shape)
    elif method == "spectral":
        labels = spectral_baseline(X)
    elif method == "kmeans":
        labels = kmeans2(X, KmeansConfig(seed=args.seed))
    else:
        labels = ifpca_lite(X)
    rec = PostClusteringRecovery(
        h1=args.h1, threshold_scale=args.recovery_scale,
        enumeration=args.recovery_enumeration, min_length=args.min_length, grid_shape=shape,
    )
    try:
        blocks = rec.fit(X, labels).blocks_
    except ConfigurationError as exc:
        info["recovery_error"] = str(exc)
        blocks = None
    return labels, blocks, info


def cmd_cluster(args):
    X, shape = _load(args)
    shape = shape or (X.shape[1],)
    labels, blocks, info = _cluster(args.method, X, shape, args)
    out = {
        "schema_version": SCHEMA_VERSION,
        "method": args.method,
        "n": int(X.shape[0]),
        "grid_shape": list(shape),
        "labels": [int(v) for v in labels],
        "blocks": blocks.to_json() if blocks is not None else [],
        "signals": blocks.support(shape) if blocks is not None else [],
        **info,
    }
    _dump_json(out, args.output)
    if args.signals:
        _write_text("".join(f"{i}\n" for i in out["signals"]), args.signals)
    return 0


def cmd_recover(args):
    X, shape = _load(args)
    shape = shape or (X.shape[1],)
    labels = _load_labels(args.labels)
    rec = PostClusteringRecovery(
        h1=args.h1, threshold_scale=args.threshold_scale,
        enumeration=args.enumeration, min_length=args.min_length, grid_shape=shape,
    ).fit(X, labels)
    out = {
        "schema_version": SCHEMA_VERSION,
        "grid_shape": list(shape),
        "threshold": rec.threshold_,
        "blocks": rec.blocks_.to_json(),
        "signals": rec.blocks_.support(shape),
    }
    _dump_json(out, args.output)
    return 0


def cmd_tune(args):
    X, shape = _load(args)
    side = shape[0] if shape else X.shape[1]
    h_max = args.h_max or default_h_max(side)
    grid = TuningGrid(h_max=h_max, epsilon=args.epsilon)
    fn = tune_ma if args.method == "ma" else tune_cfa
    res = fn(X, grid, shape, args.min_length, workers=args.threads)
    truth = _load_labels(args.truth_labels) if args.truth_labels else None
    other = "h3" if args.method == "ma" else "h2"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h1", other, "s_hat", "clu_loss", "selected"])
    for r in res.table:
        loss = repr(hamming_clustering(r["labels"], truth)) if truth is not None else ""
        chosen = int((r["h1"], r["h_other"]) == (res.h1, res.h_other))
        w.writerow([r["h1"], r["h_other"], r["s_hat"], loss, chosen])
    _write_text(buf.getvalue(), args.output)
    msg = f"selected h1={res.h1} {other}={res.h_other}"
    if res.no_signal:
        msg += " (no signal identified at any grid point)"
    print(msg, file=sys.stderr)
    return 0


def cmd_simulate(args):
    base = dict(PRESETS[args.preset]) if args.preset else {}
    overrides = {
        "p1": args.p1, "p2": args.p2, "theta": args.theta, "alpha": args.alpha,
        "beta": args.beta, "rho_min": args.rho_min, "rho_max": args.rho_max,
        "rho0": args.rho0, "tau_grid": args.tau, "reps": args.reps, "seed": args.seed,
        "methods": args.methods, "signal_layout": args.layout,
        "h1": args.h1, "h2": args.h2, "h3": args.h3,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    if "tau_grid" not in base:
        raise ConfigurationError("--tau is required unless a --preset supplies a grid")
    cfg = SimConfig(**base)
    result = run_sweep(cfg, workers=args.threads)
    _write_text(result.to_csv(), args.output)
    if args.truth:
        _dump_json(result.metadata(), args.truth)
    return 0


def cmd_phase(args):
    betas = np.linspace(*args.beta_range[:2], int(args.beta_range[2]))
    rs = np.linspace(*args.r_range[:2], int(args.r_range[2]))
    rows = phase_grid(args.theta, args.alpha, betas, rs)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "r", "class_clu", "class_sig"])
    for r in rows:
        w.writerow([repr(r["beta"]), repr(r["r"]), r["class_clu"], r["class_sig"]])
    _write_text(buf.getvalue(), args.output)
    return 0


def cmd_diff(args):
    data = load_matrix(args.input, nan_policy=args.nan_policy, grid_shape=args.grid)
    save_matrix(difference_series(data), args.output)
    return 0


def _input_args(p):
    p.add_argument("input", help="CSV (rows = observations) or .bin matrix file")
    p.add_argument("--grid", type=int, nargs=2, metavar=("P1", "P2"),
                   help="columns form a P1 x P2 grid (row-major)")
    p.add_argument("--nan-policy", choices=NAN_POLICIES, default="reject")


def _window_args(p, h1=4):
    p.add_argument("--h1", type=int, default=h1)
    p.add_argument("--min-length", type=int, choices=(1, 2), default=2)


def build_parser():
    ap = argparse.ArgumentParser(prog="blockclust", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="cluster observations and report signal blocks")
    _input_args(p)
    _window_args(p)
    p.add_argument("--method", choices=METHODS, default="cfa")
    p.add_argument("--h2", type=int, default=8)
    p.add_argument("--h3", type=int, default=None, help="moving-average window")
    p.add_argument("--threshold-scale", type=float, default=6.0)
    p.add_argument("--recovery-scale", type=float, default=4.0)
    p.add_argument("--enumeration", choices=("auto", "full", "dyadic"), default="auto")
    p.add_argument("--recovery-enumeration", choices=("auto", "full", "dyadic"), default="full")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-", help="JSON result (default stdout)")
    p.add_argument("--signals", help="write 1-based signal indices, one per line")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("recover", help="identify signal blocks given cluster labels")
    _input_args(p)
    _window_args(p)
    p.add_argument("--labels", required=True, help="JSON list/object or whitespace list of +-1")
    p.add_argument("--threshold-scale", type=float, default=4.0)
    p.add_argument("--enumeration", choices=("auto", "full", "dyadic"), default="full")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("tune", help="select window sizes by the identified-signal count")
    _input_args(p)
    p.add_argument("--method", choices=("ma", "cfa"), default="ma")
    p.add_argument("--h-max", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--min-length", type=int, choices=(1, 2), default=2)
    p.add_argument("--truth-labels", help="known labels, adds a loss column")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="Monte-Carlo loss sweep over signal strengths")
    p.add_argument("--preset", choices=sorted(PRESETS))
    for name, typ in (("p1", int), ("p2", int), ("theta", float), ("alpha", float),
                      ("beta", float), ("rho-min", float), ("rho-max", float),
                      ("rho0", float), ("h1", int), ("h2", int), ("h3", int)):
        p.add_argument(f"--{name}", type=typ, default=None)
    p.add_argument("--tau", type=float, nargs="+", default=None)
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--methods", nargs="+", choices=METHODS, default=None)
    p.add_argument("--layout", choices=("block", "scattered"), default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", default="-", help="sweep CSV")
    p.add_argument("--truth", help="JSON sidecar with configuration and true blocks")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("phase", help="phase-diagram classification grid")
    p.add_argument("--theta", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta-range", type=float, nargs=3, metavar=("LO", "HI", "NUM"),
                   required=True)
    p.add_argument("--r-range", type=float, nargs=3, metavar=("LO", "HI", "NUM"),
                   required=True)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("diff", help="successive row differences of a time-ordered panel")
    _input_args(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_diff)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (DegenerateSpectrumError, NoFeaturesSelectedError, UndefinedLossError,
            FloatingPointError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
