"""Command-line front end.

Subcommands: ``simulate`` (config -> dataset file), ``estimate`` (fit one
estimator at fixed parameters), ``select`` (resampling-based parameter
selection), ``bench`` (Monte Carlo experiment -> CSV/JSON tables),
``inspect`` (dataset summary and threshold-pool preview).

Exit codes are a stable contract: 0 success, 2 validation error, 3 numerical
failure, 4 I/O error.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import __version__, bench, configio, dataio, heatmap
from .backend import backend_name
from .core import (
    DataFormatError,
    DimensionError,
    KroncovError,
    NumericalError,
    ParameterError,
)
from .covariance import (
    center_transform,
    robust_cov,
    sample_cov,
    tau_candidates,
)
from .nkp import kron_factorize_detailed
from .regularize import BAND, TAPER, baseline_regularize, mask_separable
from .simulate import simulate as run_simulate
from .tuning import DEFAULT_TAU_PERCENTILES, select as run_select

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

SCHEMA_VERSION = 1

_CLI_METHODS = (
    "sample",
    "band",
    "taper",
    "robust-band",
    "robust-taper",
    "baseline-band",
    "baseline-taper",
)


def _read_dataset(path):
    with open(path, "rb") as fh:
        head = fh.read(len(dataio.MAGIC))
    if head == dataio.MAGIC:
        return dataio.read_dataset(path)
    return dataio.read_dataset_csv(path)


def _write_matrix_csv(path, M):
    np.savetxt(path, np.asarray(M), delimiter=",", fmt="%.17g")


def cmd_simulate(args):
    cp = configio.load_config(args.config)
    cfg = configio.sim_config(cp)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    ds = run_simulate(cfg)
    if args.format == "csv":
        dataio.write_dataset_csv(ds, args.out)
    else:
        dataio.write_dataset(ds, args.out)
    print(f"wrote {args.out}: n={ds.n} p={ds.p} q={ds.q} tail={cfg.tail}")
    return EXIT_OK


def _validate_estimate_flags(args):
    m = args.method
    needs_two = m in ("band", "taper", "robust-band", "robust-taper")
    if needs_two and (args.k1 is None or args.k2 is None):
        raise ParameterError(f"method {m} requires --k1 and --k2")
    if m in ("baseline-band", "baseline-taper") and args.k1 is None:
        raise ParameterError(f"method {m} requires --k1 (single bandwidth)")
    if m in ("robust-band", "robust-taper") and args.tau is None:
        raise ParameterError(f"method {m} requires --tau")
    if args.tau is not None and m not in ("robust-band", "robust-taper"):
        raise ParameterError("--tau only applies to robust methods")


def cmd_estimate(args):
    _validate_estimate_flags(args)
    ds = _read_dataset(args.dataset)
    if ds.p * ds.q > 4096 and not args.large:
        raise DimensionError(
            f"pq = {ds.p * ds.q} needs --large (dense covariance is "
            f"{8 * (ds.p * ds.q) ** 2 / 1e9:.1f} GB)"
        )
    method = args.method
    mode = TAPER if method.endswith("taper") else BAND
    summary = {
        "schema_version": SCHEMA_VERSION,
        "backend": backend_name(),
        "method": method,
        "n": ds.n,
        "p": ds.p,
        "q": ds.q,
    }
    if method in ("robust-band", "robust-taper"):
        if args.center:
            ds = center_transform(ds)
        cov = robust_cov(ds, args.tau)
        summary["tau"] = args.tau
        summary["centered"] = bool(args.center)
    else:
        cov = sample_cov(ds, centered=True)
        summary["centered"] = True

    # all fitting happens before anything is written, so a validation or
    # numerical failure leaves no partial outputs behind
    dense_out = None
    sep = None
    if method == "sample":
        dense_out = cov.matrix.values
    elif method in ("baseline-band", "baseline-taper"):
        dense_out = baseline_regularize(cov, args.k1, mode).values
        summary["k"] = args.k1
    else:
        masked = mask_separable(cov, ds.p, ds.q, args.k1, args.k2, mode)
        sep, r1, residual = kron_factorize_detailed(masked)
        summary.update(
            {
                "k1": args.k1,
                "k2": args.k2,
                "sigma_leading": r1.sigma,
                "convention_tag": sep.convention_tag,
                "residual_frobenius": residual,
                "power_iterations": r1.iterations,
            }
        )

    os.makedirs(args.out, exist_ok=True)
    if dense_out is not None:
        _write_matrix_csv(os.path.join(args.out, "estimate.csv"), dense_out)
        if args.heatmap:
            heatmap.save_heatmap(
                dense_out, os.path.join(args.out, "estimate.png"), method
            )
    else:
        _write_matrix_csv(os.path.join(args.out, "sigma1.csv"), sep.sigma1.values)
        _write_matrix_csv(os.path.join(args.out, "sigma2.csv"), sep.sigma2.values)
        if args.heatmap:
            heatmap.save_heatmap(
                sep.sigma1.values,
                os.path.join(args.out, "sigma1.png"),
                f"{method} row factor (p x p)",
            )
            heatmap.save_heatmap(
                sep.sigma2.values,
                os.path.join(args.out, "sigma2.png"),
                f"{method} column factor (q x q)",
            )
    with open(os.path.join(args.out, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote estimate outputs to {args.out}")
    return EXIT_OK


def cmd_select(args):
    ds = _read_dataset(args.dataset)
    cp = configio.load_config(args.config)
    cfg = configio.tuning_config(cp)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    res = run_select(ds, cfg, threads=args.threads)
    out = {
        "schema_version": SCHEMA_VERSION,
        "backend": backend_name(),
        "estimator": res.estimator,
        "selected": {"k1": res.k1_hat, "k2": res.k2_hat, "tau": res.tau_hat},
        "grid1": list(res.grid1),
        "grid2": list(res.grid2),
        "tau_pool": list(res.tau_pool),
        "scores": res.score_records(),
        "split_indices": [
            {"train": list(tr), "test": list(te)} for tr, te in res.split_indices
        ],
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    sel = f"k1={res.k1_hat} k2={res.k2_hat}"
    if res.tau_hat is not None:
        sel += f" tau={res.tau_hat:.6g}"
    print(f"selected {sel}; wrote {args.out}")
    return EXIT_OK


def cmd_bench(args):
    cp = configio.load_config(args.spec)
    spec = configio.experiment_spec(cp)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    if args.large:
        spec = dataclasses.replace(spec, large=True)
    table = bench.run_experiment(spec, threads=args.threads)
    csv_path, json_path = bench.write_outputs(table, args.out)
    if args.plot:
        heatmap.save_error_bars(table, args.plot)
    if table.failures:
        print(f"warning: {len(table.failures)} replications failed and were excluded")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def cmd_inspect(args):
    ds = _read_dataset(args.dataset)
    pcts = (
        tuple(float(x) for x in args.percentiles.split(","))
        if args.percentiles
        else DEFAULT_TAU_PERCENTILES
    )
    taus = tau_candidates(ds, pcts)
    flat = np.abs(ds.data)
    print(f"n={ds.n} p={ds.p} q={ds.q} entries={ds.data.size}")
    print(
        f"|entry|: min={flat.min():.6g} mean={flat.mean():.6g} "
        f"max={flat.max():.6g}"
    )
    print("threshold pool (percentile -> tau):")
    shown = set()
    for pct in sorted(pcts, reverse=True):
        t = tau_candidates(ds, [pct])[0]
        print(f"  {pct:>9.4f} -> {t:.6g}")
        shown.add(t)
    print(f"distinct candidates: {len(taus)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kroncov",
        description="Separable covariance estimation for matrix-valued data",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="draw a dataset from a config")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--format", choices=("binary", "csv"), default="binary")
    p_sim.set_defaults(func=cmd_simulate)

    p_est = sub.add_parser("estimate", help="fit one estimator at fixed parameters")
    p_est.add_argument("--dataset", required=True)
    p_est.add_argument("--method", required=True, choices=_CLI_METHODS)
    p_est.add_argument("--k1", type=int, default=None)
    p_est.add_argument("--k2", type=int, default=None)
    p_est.add_argument("--tau", type=float, default=None)
    p_est.add_argument("--center", action="store_true",
                       help="apply the zero-mean transform before robust fits")
    p_est.add_argument("--out", required=True, help="output directory")
    p_est.add_argument("--heatmap", action="store_true")
    p_est.add_argument("--large", action="store_true")
    p_est.set_defaults(func=cmd_estimate)

    p_sel = sub.add_parser("select", help="resampling-based parameter selection")
    p_sel.add_argument("--dataset", required=True)
    p_sel.add_argument("--config", required=True)
    p_sel.add_argument("--out", required=True)
    p_sel.add_argument("--seed", type=int, default=None)
    p_sel.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_sel.set_defaults(func=cmd_select)

    p_ben = sub.add_parser("bench", help="run a Monte Carlo experiment")
    p_ben.add_argument("--spec", required=True)
    p_ben.add_argument("--out", required=True, help="output path prefix")
    p_ben.add_argument("--seed", type=int, default=None)
    p_ben.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p_ben.add_argument("--large", action="store_true")
    p_ben.add_argument("--plot", default=None, help="optional bar-plot PNG path")
    p_ben.set_defaults(func=cmd_bench)

    p_ins = sub.add_parser("inspect", help="dataset summary and threshold pool")
    p_ins.add_argument("--dataset", required=True)
    p_ins.add_argument("--percentiles", default=None)
    p_ins.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParameterError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(f"diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DataFormatError as exc:
        print(f"file format error: {exc}", file=sys.stderr)
        return EXIT_IO
    except KroncovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
