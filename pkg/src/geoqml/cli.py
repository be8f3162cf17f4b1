"""Command-line entry point: ``geoqml {manifold,quantum,bench,dataset}``.

Exit codes: 0 success, 2 malformed input or missing file, 3 invariant
violation (non-SPD matrix, non-orthonormal frame, unnormalized state),
4 training divergence. Every error writes exactly one stderr line of the form
``geoqml-error code=<n> kind=<ExceptionName>: <message>``.
"""

import argparse
import statistics
import sys
import time
import warnings

import numpy as np

from . import circuits, grassmann, infogeom, io, pipeline, spd, states
from .exceptions import (ConvergenceWarning, DivergenceError, EncodingError, InvariantError,
                         ParseError)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INVARIANT = 3
EXIT_DIVERGED = 4

BENCH_DEFAULTS = {
    "seeds": [1, 2, 3],
    "train_data": "synthetic",
    "test_data": "synthetic",
    "n_train": 400,
    "n_test": 100,
    "in_dim": 7,
    "out_dim": 32,
    "noise_sigma": 0.01,
    "n_qubits": 4,
    "layers": 3,
    "poly_degree": 2,
    "epsilon": 1e-3,
    "readout_weight": "all",
    "ridge_alpha": 1e-3,
    "optimizer": "vanilla",
    "epochs": 30,
    "eta": 0.1,
    "lam_reg": 1e-6,
    "metric_samples": 8,
}

# (key, lower bound, upper bound); bounds are inclusive, None means open
_BENCH_RANGES = {
    "n_train": (1, None), "n_test": (1, None), "in_dim": (1, None), "out_dim": (1, None),
    "noise_sigma": (0, None), "n_qubits": (1, circuits.MAX_STATE_QUBITS), "layers": (0, None),
    "poly_degree": (1, 4), "epsilon": (1e-300, None), "ridge_alpha": (0, None),
    "epochs": (0, None), "eta": (1e-300, None), "lam_reg": (0, None), "metric_samples": (1, None),
}


class _Fail(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code = code
        self.kind = kind


def _diagnostic(code, kind, message):
    text = " ".join(str(message).split())
    print(f"geoqml-error code={code} kind={kind}: {text}", file=sys.stderr)


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# manifold

def _cmd_manifold(args):
    if args.metric == "grassmann":
        frames = [grassmann.check_subspace(io.read_subspace_csv(p)) for p in args.files]
        if args.action == "mean":
            raise _Fail(EXIT_INPUT, "UsageError", "mean is only defined for SPD inputs")
        D = grassmann.pairwise_distances(frames)
    else:
        mats = [spd.check_spd(io.read_spd_csv(p), name=p) for p in args.files]
        if len({m.shape for m in mats}) > 1:
            raise _Fail(EXIT_INPUT, "DimensionError", "input matrices have different sizes")
        if args.action == "mean":
            if args.metric == "le":
                M = spd.log_euclidean_mean(mats)
            else:
                with warnings.catch_warnings():
                    warnings.simplefilter("error", ConvergenceWarning)
                    try:
                        M = spd.karcher_mean(mats, args.max_iter, args.tol)
                    except ConvergenceWarning as exc:
                        print(f"geoqml-warning kind=ConvergenceWarning: {exc}", file=sys.stderr)
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", ConvergenceWarning)
                            M = spd.karcher_mean(mats, args.max_iter, args.tol)
            _write_csv(io.write_spd_csv, args.output, M)
            return EXIT_OK
        dist = spd.dist_affine_invariant if args.metric == "ai" else spd.dist_log_euclidean
        k = len(mats)
        D = np.zeros((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                D[i, j] = D[j, i] = dist(mats[i], mats[j])
    _write_csv(io.write_matrix_csv, args.output, D, kind="distances", metric=args.metric)
    return EXIT_OK


def _write_csv(writer, path, M, **kw):
    writer(sys.stdout if path in (None, "-") else path, M, **kw)


# --------------------------------------------------------------------------
# quantum

def _parse_theta(text, expected):
    try:
        theta = np.array([float(t) for t in text.split(",") if t.strip()])
    except ValueError:
        raise _Fail(EXIT_INPUT, "UsageError", f"--theta is not a comma-separated list: {text!r}")
    if theta.size != expected:
        raise _Fail(EXIT_INPUT, "UsageError",
                    f"--theta has {theta.size} values, circuit has {expected} parameters")
    return theta


def _matrix_json(M):
    return [[float(v) for v in row] for row in np.atleast_2d(M)] if np.size(M) else []


def _cmd_quantum(args):
    with open(args.circuit) as fh:
        text = fh.read()
    circ = circuits.parse_circuit(text)
    if args.theta is not None:
        theta = _parse_theta(args.theta, circ.num_params)
    else:
        theta = np.random.default_rng(args.seed).uniform(0, 2 * np.pi, circ.num_params)
    state = states.zero_state(circ.num_qubits)
    if args.state:
        state = circuits.check_input_state(io.read_state_csv(args.state), circ)

    results = {}
    if args.fs_metric:
        results["fs_metric"] = _matrix_json(infogeom.fs_metric(circ, theta, state, method=args.method))
    if args.qgt:
        G = infogeom.quantum_geometric_tensor(circ, theta, state, method=args.method)
        results["qgt_real"] = _matrix_json(G.real)
        results["qgt_imag"] = _matrix_json(G.imag)
    if args.qfi:
        if circ.num_params:
            J, _ = infogeom.qfi_mixed(infogeom.circuit_density_family(circ, state), theta)
        else:
            J = np.zeros((0, 0))
        results["qfi"] = _matrix_json(J)
    if args.tangent_rank:
        ranks = infogeom.tangent_rank_draws(circ, state, args.draws, args.seed, method=args.method)
        results["tangent_rank"] = {
            "at_theta": infogeom.tangent_rank(circ, theta, state, method=args.method),
            "draws": ranks,
            "threshold": infogeom.RANK_THRESHOLD,
        }
    if args.entanglement_distance:
        psi = circuits.apply(circ, theta, state)
        search, _ = states.product_state_search(psi)
        results["entanglement_distance"] = {
            "schmidt": states.distance_to_nearest_product(psi),
            "search": search,
        }
    if args.kernel:
        X = np.loadtxt(args.kernel, delimiter=",", comments="#", ndmin=2)
        if X.shape[1] > 1 << circ.num_qubits:
            raise _Fail(EXIT_INPUT, "DimensionError",
                        f"{X.shape[1]} features do not fit {circ.num_qubits} qubits")
        G = circuits.kernel_gram(X, circ, theta)
        if args.gram_out:
            io.write_matrix_csv(args.gram_out, G, kind="gram")
        else:
            results["gram"] = _matrix_json(G)

    report = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "quantum",
        "input": {
            "circuit": circ.to_text(),
            "theta": [float(t) for t in theta],
            "seed": args.seed,
            "state": None if not args.state else
            [[float(a.real), float(a.imag)] for a in state],
            "method": args.method,
            "fd_step": infogeom.FD_STEP,
        },
        "results": results,
    }
    _emit(io.dumps_report(report), args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# bench

def load_bench_config(path=None, overrides=None):
    """Defaults, then the config file, then CLI overrides; validates ranges."""
    cfg = dict(BENCH_DEFAULTS)
    if path:
        with open(path) as fh:
            parsed = io.parse_config(fh.read())
        unknown = sorted(set(parsed) - set(cfg))
        if unknown:
            raise ParseError(f"unknown config key(s): {', '.join(unknown)}")
        cfg.update(parsed)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if not isinstance(cfg["seeds"], list):
        cfg["seeds"] = [cfg["seeds"]]
    if not cfg["seeds"] or not all(isinstance(s, int) and s >= 0 for s in cfg["seeds"]):
        raise ParseError("seeds must be non-negative integers")
    for key, (lo, hi) in _BENCH_RANGES.items():
        v = cfg[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"{key} must be numeric, got {v!r}")
        if (lo is not None and v < lo) or (hi is not None and v > hi):
            raise ParseError(f"{key}={v} is outside [{lo}, {hi if hi is not None else 'inf'}]")
    if cfg["optimizer"] not in ("vanilla", "natural_gradient"):
        raise ParseError(f"optimizer must be vanilla or natural_gradient, got {cfg['optimizer']!r}")
    rw = cfg["readout_weight"]
    if rw != "all" and not (isinstance(rw, int) and rw >= 1):
        raise ParseError(f"readout_weight must be 'all' or a positive integer, got {rw!r}")
    return cfg


def _bench_data(cfg, seed):
    if cfg["train_data"] == "synthetic":
        return pipeline.fem_train_test(seed, cfg["n_train"], cfg["n_test"], cfg["in_dim"],
                                       cfg["out_dim"], cfg["noise_sigma"])
    if cfg["test_data"] == "synthetic":
        raise ParseError("train_data is a file but test_data is not")
    return (io.read_dataset_csv(cfg["train_data"], "train"),
            io.read_dataset_csv(cfg["test_data"], "test"))


def _median(values):
    values = [v for v in values if v is not None]
    return statistics.median(values) if values else None


def run_bench(cfg):
    """Run every variant for every seed; returns ``(report, diverged)``."""
    vcfg = pipeline.VariantConfig(
        n_qubits=cfg["n_qubits"], layers=cfg["layers"], poly_degree=cfg["poly_degree"],
        epsilon=cfg["epsilon"], ridge_alpha=cfg["ridge_alpha"],
        readout_weight=None if cfg["readout_weight"] == "all" else cfg["readout_weight"])
    runs = {kind: [] for kind in pipeline.KINDS}
    timing = {kind: [] for kind in pipeline.KINDS}
    diverged = False
    start_all = time.perf_counter()
    for seed in cfg["seeds"]:
        train_ds, test_ds = _bench_data(cfg, seed)
        for kind in pipeline.KINDS:
            variant = pipeline.build_variant(kind, vcfg, train_ds.in_dim, train_ds.out_dim)
            start = time.perf_counter()
            try:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    model = pipeline.train(variant, train_ds, cfg["optimizer"], cfg["epochs"],
                                           cfg["eta"], seed, cfg["lam_reg"], cfg["metric_samples"])
                entry = {"seed": seed, "diverged": False}
                entry.update(pipeline.evaluate(model, test_ds).to_dict(timing=False))
            except DivergenceError as exc:
                diverged = True
                entry = {"seed": seed, "diverged": True, "diverged_epoch": exc.epoch}
            timing[kind].append(time.perf_counter() - start)
            runs[kind].append(entry)
    variants = []
    for kind in pipeline.KINDS:
        ok = [r for r in runs[kind] if not r["diverged"]]
        variants.append({
            "kind": kind,
            "label": pipeline.TABLE_LABELS[kind],
            "median_mse": _median([r.get("mse") for r in ok]),
            "median_r2": _median([r.get("r2") for r in ok]),
            "median_accuracy": _median([r.get("accuracy") for r in ok]),
            "runs": runs[kind],
        })
    report = {
        "schema_version": io.SCHEMA_VERSION,
        "command": "bench",
        "config": cfg,
        "config_hash": pipeline.config_hash(cfg),
        "seeds": list(cfg["seeds"]),
        "partial": diverged,
        "variants": variants,
        "timing": {"total_seconds": time.perf_counter() - start_all, "per_run_seconds": timing},
    }
    return report, diverged


def report_body(report):
    """The report without wall-clock fields; identical across reruns with the same config."""
    return {k: v for k, v in report.items() if k != "timing"}


def format_table(report):
    rows = [("Model", "median MSE", "median R2", "seconds")]
    per_run = report.get("timing", {}).get("per_run_seconds", {})
    for v in report["variants"]:
        fmt = (lambda x: "n/a" if x is None else f"{x:.4g}")
        secs = sum(per_run.get(v["kind"], [])) if per_run else None
        rows.append((v["label"], fmt(v["median_mse"]), fmt(v["median_r2"]), fmt(secs)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _cmd_bench(args):
    overrides = {"epochs": args.epochs, "optimizer": args.optimizer, "eta": args.eta}
    if args.seeds:
        overrides["seeds"] = [int(s) for s in args.seeds.split(",")]
    cfg = load_bench_config(args.config, overrides)
    report, diverged = run_bench(cfg)
    if args.no_timing:
        report = report_body(report)
    text = io.dumps_report(report)
    if args.output:
        _emit(text, args.output)
    if args.table:
        sys.stdout.write(format_table(report))
    elif not args.output:
        sys.stdout.write(text)
    if diverged:
        raise _Fail(EXIT_DIVERGED, "DivergenceError",
                    "training diverged for at least one run; partial report written")
    return EXIT_OK


# --------------------------------------------------------------------------
# dataset

def _cmd_dataset(args):
    if args.kind == "fem":
        ds = pipeline.synth_fem_dataset(args.seed, args.n_samples, args.in_dim, args.out_dim,
                                        args.noise, args.split)
    else:
        ds = pipeline.synth_blobs(args.seed, args.n_samples, args.in_dim, args.n_classes,
                                  args.separation, args.split)
    io.write_dataset_csv(args.output, ds)
    return EXIT_OK


# --------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Fail(EXIT_INPUT, "UsageError", f"{self.prog}: {message}")


def build_parser():
    parser = _Parser(prog="geoqml", description="Manifold geometry, quantum-state geometry and hybrid model benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    m = sub.add_parser("manifold", help="SPD / Grassmann distances and means from CSV files")
    m.add_argument("action", choices=("distance", "mean"))
    m.add_argument("files", nargs="+", help="'# spd' or '# subspace' CSV files")
    m.add_argument("--metric", choices=("ai", "le", "grassmann"), default="ai",
                   help="affine-invariant, log-Euclidean or Grassmann (default: ai)")
    m.add_argument("--max-iter", type=int, default=100, help="Karcher iterations (default: 100)")
    m.add_argument("--tol", type=float, default=1e-10, help="Karcher tolerance (default: 1e-10)")
    m.add_argument("-o", "--output", help="output CSV (default: stdout)")
    m.set_defaults(func=_cmd_manifold)

    q = sub.add_parser("quantum", help="geometry diagnostics for a circuit text file")
    q.add_argument("circuit", help="circuit file (QUBITS/PARAMS directives, one gate per line)")
    q.add_argument("--theta", help="comma-separated parameters (default: uniform draw from --seed)")
    q.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    q.add_argument("--state", help="input state CSV (default: |0...0>)")
    q.add_argument("--method", choices=("fd", "exact"), default="fd",
                   help="state derivative method (default: fd)")
    q.add_argument("--fs-metric", action="store_true", help="Fubini-Study metric")
    q.add_argument("--qgt", action="store_true", help="quantum geometric tensor")
    q.add_argument("--qfi", action="store_true", help="quantum Fisher information via SLDs")
    q.add_argument("--tangent-rank", action="store_true", help="metric rank over random draws")
    q.add_argument("--draws", type=int, default=20, help="draws for --tangent-rank (default: 20)")
    q.add_argument("--entanglement-distance", action="store_true",
                   help="Bures distance to the nearest product state (2 qubits)")
    q.add_argument("--kernel", help="CSV of feature rows; computes the fidelity Gram matrix")
    q.add_argument("--gram-out", help="write the Gram matrix here as CSV instead of JSON")
    q.add_argument("-o", "--output", help="output JSON (default: stdout)")
    q.set_defaults(func=_cmd_quantum)

    b = sub.add_parser("bench", help="run all four model variants and report MSE/R2")
    b.add_argument("--config", help="key = value config file (default: built-in synthetic setup)")
    b.add_argument("--seeds", help="comma-separated seeds overriding the config")
    b.add_argument("--epochs", type=int, help="override epochs")
    b.add_argument("--eta", type=float, help="override learning rate")
    b.add_argument("--optimizer", choices=("vanilla", "natural_gradient"), help="override optimizer")
    b.add_argument("--no-timing", action="store_true", help="omit the timing section")
    b.add_argument("--table", action="store_true", help="print a plain-text results table")
    b.add_argument("-o", "--output", help="output JSON report (default: stdout)")
    b.set_defaults(func=_cmd_bench)

    d = sub.add_parser("dataset", help="generate a synthetic dataset CSV")
    d.add_argument("--kind", choices=("fem", "blobs"), default="fem",
                   help="FEM-surrogate regression or Gaussian blobs (default: fem)")
    d.add_argument("--seed", type=int, default=0, help="RNG seed (default: 0)")
    d.add_argument("--n-samples", type=int, default=500, help="rows (default: 500)")
    d.add_argument("--in-dim", type=int, default=7, help="features (default: 7)")
    d.add_argument("--out-dim", type=int, default=32, help="fem targets (default: 32)")
    d.add_argument("--noise", type=float, default=0.01, help="fem noise sigma (default: 0.01)")
    d.add_argument("--n-classes", type=int, default=2, help="blob classes (default: 2)")
    d.add_argument("--separation", type=float, default=4.0, help="blob separation (default: 4)")
    d.add_argument("--split", choices=("train", "test"), default="train")
    d.add_argument("-o", "--output", required=True, help="output CSV")
    d.set_defaults(func=_cmd_dataset)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _Fail as exc:
        _diagnostic(exc.code, exc.kind, exc)
        return exc.code
    except OSError as exc:
        _diagnostic(EXIT_INPUT, type(exc).__name__, f"{exc.strerror or exc}: {exc.filename}")
        return EXIT_INPUT
    except (InvariantError, EncodingError) as exc:
        _diagnostic(EXIT_INVARIANT, type(exc).__name__, exc)
        return EXIT_INVARIANT
    except DivergenceError as exc:
        _diagnostic(EXIT_DIVERGED, "DivergenceError", exc)
        return EXIT_DIVERGED
    except ValueError as exc:
        _diagnostic(EXIT_INPUT, type(exc).__name__, exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
