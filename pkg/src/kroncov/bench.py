"""Monte Carlo experiment runner.

Per replication: draw a dataset, tune each requested method by resampling,
fit it on the full sample and measure the error against the known truth in
the requested norms.  Replications use independent child RNG streams keyed
by replication index, so results do not depend on worker count or execution
order; aggregation is by replication index.

Wall-clock timings are collected per replication but kept out of the CSV
table, which must be byte-identical across reruns of the same seed.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .backend import backend_name
from .core import (
    DimensionError,
    KroncovError,
    ParameterError,
    Rng,
    norm_diff_separable,
    norm_diff_separable_vs_dense,
)
from .covariance import robust_cov, sample_cov
from .nkp import kron_factorize
from .regularize import baseline_regularize, mask_separable
from .simulate import SimConfig, simulate, truth_covariance
from .tuning import (
    BAND_EST,
    BASELINE_BAND,
    BASELINE_TAPER,
    ROBUST_BAND,
    ROBUST_TAPER,
    TAPER_EST,
    TuningConfig,
    estimator_mode,
    select,
)

SCHEMA_VERSION = 1

SAMPLE = "sample"
PROPOSED_BAND = "proposed_band"
PROPOSED_TAPER = "proposed_taper"

METHOD_ORDER = (
    SAMPLE,
    BASELINE_BAND,
    BASELINE_TAPER,
    PROPOSED_BAND,
    PROPOSED_TAPER,
    ROBUST_BAND,
    ROBUST_TAPER,
)

_METHOD_ESTIMATOR = {
    BASELINE_BAND: BASELINE_BAND,
    BASELINE_TAPER: BASELINE_TAPER,
    PROPOSED_BAND: BAND_EST,
    PROPOSED_TAPER: TAPER_EST,
    ROBUST_BAND: ROBUST_BAND,
    ROBUST_TAPER: ROBUST_TAPER,
}

METRICS = ("frob", "l1", "op")

DESK_DIM_LIMIT = 4096  # beyond this, dense estimate paths need large=True


class BenchError(KroncovError):
    """Experiment-level failure (e.g. too many failed replications)."""


@dataclass(frozen=True)
class ExperimentSpec:
    sim: SimConfig
    reps: int = 100
    methods: tuple = (SAMPLE, PROPOSED_BAND, PROPOSED_TAPER)
    metrics: tuple = METRICS
    tuning: dict = field(default_factory=dict)
    seed: int = 0
    large: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ParameterError("reps must be >= 1")
        if not self.methods:
            raise ParameterError("methods must be nonempty")
        for m in self.methods:
            if m not in METHOD_ORDER:
                raise ParameterError(f"unknown method {m!r}")
        for m in self.metrics:
            if m not in METRICS:
                raise ParameterError(f"unknown metric {m!r}")
        dense_needed = any(
            m in (SAMPLE, BASELINE_BAND, BASELINE_TAPER) for m in self.methods
        )
        if dense_needed and self.sim.p * self.sim.q > DESK_DIM_LIMIT and not self.large:
            raise DimensionError(
                f"dense estimator paths at pq = {self.sim.p * self.sim.q} need "
                f"large=True (memory is O((pq)^2), about "
                f"{8 * (self.sim.p * self.sim.q) ** 2 / 1e9:.1f} GB per matrix)"
            )


def _tuning_seed(spec, rep_index, method):
    # independent, reproducible split streams per (rep, method)
    key = (rep_index, METHOD_ORDER.index(method))
    return int(np.random.SeedSequence(spec.seed, spawn_key=key).generate_state(1)[0])


def _tuning_config(spec, method, seed):
    return TuningConfig(estimator=_METHOD_ESTIMATOR[method], seed=seed, **spec.tuning)


def _dense_metrics(truth, estimate, metrics):
    return {m: norm_diff_separable_vs_dense(truth, estimate, m) for m in metrics}


def _separable_metrics(truth, sep, metrics):
    return {m: norm_diff_separable(sep, truth, m) for m in metrics}


def run_replication(spec, rep_index, truth=None):
    """One full replication; returns {method: record} with metrics and fits."""
    if truth is None:
        truth = truth_covariance(spec.sim)
    rng = Rng(spec.seed).child(rep_index)
    ds = simulate(spec.sim, rng.child(0))
    out = {}
    for method in METHOD_ORDER:
        if method not in spec.methods:
            continue
        t0 = time.perf_counter()
        rec = {}
        if method == SAMPLE:
            est = sample_cov(ds, centered=True).matrix.values
            rec.update(_dense_metrics(truth, est, spec.metrics))
        elif method in (BASELINE_BAND, BASELINE_TAPER):
            cfg = _tuning_config(spec, method, _tuning_seed(spec, rep_index, method))
            res = select(ds, cfg)
            fit = baseline_regularize(
                sample_cov(ds, centered=True).matrix,
                res.k1_hat,
                estimator_mode(cfg.estimator),
            )
            rec.update(_dense_metrics(truth, fit.values, spec.metrics))
            rec["k_hat"] = float(res.k1_hat)
        else:
            cfg = _tuning_config(spec, method, _tuning_seed(spec, rep_index, method))
            res = select(ds, cfg)
            if method in (ROBUST_BAND, ROBUST_TAPER):
                cov = robust_cov(ds, res.tau_hat)
                rec["tau_hat"] = float(res.tau_hat)
            else:
                cov = sample_cov(ds, centered=True)
            masked = mask_separable(
                cov, ds.p, ds.q, res.k1_hat, res.k2_hat, estimator_mode(cfg.estimator)
            )
            sep = kron_factorize(masked)
            rec.update(_separable_metrics(truth, sep, spec.metrics))
            rec["k1_hat"] = float(res.k1_hat)
            rec["k2_hat"] = float(res.k2_hat)
        rec["runtime_s"] = time.perf_counter() - t0
        out[method] = rec
    return out


@dataclass
class ResultTable:
    spec: ExperimentSpec
    methods: tuple
    metrics: tuple
    means: dict  # (method, key) -> mean over successful reps
    stderrs: dict  # (method, key) -> sample std / sqrt(reps)
    per_rep: list  # [(rep_index, {method: record})]
    failures: list  # [(rep_index, message)]

    def keys_for(self, method):
        keys = list(self.metrics)
        if method in (BASELINE_BAND, BASELINE_TAPER):
            keys.append("k_hat")
        elif method not in (SAMPLE,):
            keys.extend(["k1_hat", "k2_hat"])
            if method in (ROBUST_BAND, ROBUST_TAPER):
                keys.append("tau_hat")
        return keys

    def rep_values(self, method, key):
        return np.array(
            [recs[method][key] for _, recs in self.per_rep if method in recs]
        )

    def to_csv(self):
        """Deterministic CSV: one row per (method, statistic), two decimals
        for error norms and bandwidths, four for thresholds."""
        lines = ["method,metric,mean,stderr"]
        for method in self.methods:
            for key in self.keys_for(method):
                fmt = "{:.4f}" if key == "tau_hat" else "{:.2f}"
                mean = fmt.format(self.means[(method, key)])
                se = fmt.format(self.stderrs[(method, key)])
                lines.append(f"{method},{key},{mean},{se}")
        return "\n".join(lines) + "\n"

    def to_json_dict(self):
        sim = self.spec.sim
        return {
            "schema_version": SCHEMA_VERSION,
            "backend": backend_name(),
            "experiment": {
                "n": sim.n,
                "p": sim.p,
                "q": sim.q,
                "model1": {"kind": sim.model1.kind, "rho": sim.model1.rho},
                "model2": {"kind": sim.model2.kind, "rho": sim.model2.rho},
                "tail": sim.tail,
                "df": sim.df,
                "t_mode": sim.t_mode,
                "reps": self.spec.reps,
                "seed": self.spec.seed,
                "methods": list(self.methods),
                "metrics": list(self.metrics),
            },
            "aggregates": {
                method: {
                    key: {
                        "mean": self.means[(method, key)],
                        "stderr": self.stderrs[(method, key)],
                    }
                    for key in self.keys_for(method)
                }
                for method in self.methods
            },
            "per_rep": [
                {
                    "rep": rep,
                    "methods": {
                        m: {k: v for k, v in rec.items() if k != "runtime_s"}
                        for m, rec in recs.items()
                    },
                }
                for rep, recs in self.per_rep
            ],
            "failures": [{"rep": r, "error": msg} for r, msg in self.failures],
            # informational, not part of the deterministic surface
            "timings": {
                method: {
                    "mean_runtime_s": float(np.mean(self.rep_values(method, "runtime_s")))
                    if any(method in recs for _, recs in self.per_rep)
                    else None
                }
                for method in self.methods
            },
        }


def run_experiment(spec, threads=1):
    """Run all replications and aggregate; deterministic given spec."""
    truth = truth_covariance(spec.sim)

    def one(rep):
        try:
            return rep, run_replication(spec, rep, truth), None
        except Exception as exc:  # noqa: BLE001 - record and exclude
            return rep, None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(spec.reps)))
    else:
        results = [one(rep) for rep in range(spec.reps)]

    per_rep = [(rep, recs) for rep, recs, err in results if err is None]
    failures = [(rep, err) for rep, _, err in results if err is not None]
    if len(failures) > 0.1 * spec.reps:
        raise BenchError(
            f"{len(failures)} of {spec.reps} replications failed; first: "
            f"{failures[0][1]}"
        )

    methods = tuple(m for m in METHOD_ORDER if m in spec.methods)
    means, stderrs = {}, {}
    table = ResultTable(spec, methods, tuple(spec.metrics), means, stderrs,
                        per_rep, failures)
    for method in methods:
        for key in table.keys_for(method):
            vals = table.rep_values(method, key)
            means[(method, key)] = float(np.mean(vals))
            stderrs[(method, key)] = (
                float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
            )
    return table


def write_outputs(table, out_prefix):
    """Write <prefix>.csv and <prefix>.json; returns the two paths."""
    import json

    csv_path = f"{out_prefix}.csv"
    json_path = f"{out_prefix}.json"
    with open(csv_path, "w") as fh:
        fh.write(table.to_csv())
    with open(json_path, "w") as fh:
        json.dump(table.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path
