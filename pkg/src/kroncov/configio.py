"""Flat ``key = value`` config files with ``[section]`` headers.

Sections and keys:

``[simulate]``  n, p, q, tail (gaussian|student_t), df, t_mode (scale|covariance), seed
``[model1]``    kind (ma1|ar1), rho        -- row-direction covariance (dim p)
``[model2]``    kind, rho                  -- column-direction covariance (dim q)
``[tuning]``    estimator, splits, n1, k1_grid, k2_grid, tau_percentiles,
                tau_pool, center_train, seed
``[experiment]`` reps, methods, metrics, seed, large

Grids accept ``lo:hi`` (inclusive), ``lo:hi:step`` or comma lists; list keys
take comma-separated values.  ``#`` starts a comment.
"""

import configparser

from .bench import METHOD_ORDER, METRICS, ExperimentSpec
from .core import ParameterError
from .simulate import CovModel, SimConfig
from .tuning import ESTIMATORS, TuningConfig


def load_config(path):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        try:
            cp.read_file(fh, source=str(path))
        except configparser.Error as exc:
            raise ParameterError(f"config error: {exc}") from exc
    return cp


_REQUIRED = object()


def _get(cp, section, key, cast, default=_REQUIRED):
    if not cp.has_option(section, key):
        if default is _REQUIRED:
            raise ParameterError(f"config is missing required key [{section}] {key}")
        return default
    raw = cp.get(section, key).strip()
    try:
        return cast(raw)
    except (ValueError, ParameterError) as exc:
        raise ParameterError(f"config key [{section}] {key}: {exc}") from exc


def _bool(raw):
    v = raw.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


def parse_grid(raw):
    """'lo:hi', 'lo:hi:step' or comma list of nonnegative ints."""
    raw = raw.strip()
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) == 2:
            lo, hi, step = int(parts[0]), int(parts[1]), 1
        elif len(parts) == 3:
            lo, hi, step = (int(x) for x in parts)
        else:
            raise ValueError(f"bad grid spec {raw!r}")
        if step < 1 or hi < lo:
            raise ValueError(f"bad grid spec {raw!r}")
        return tuple(range(lo, hi + 1, step))
    return tuple(int(x) for x in raw.split(","))


def _float_list(raw):
    return tuple(float(x) for x in raw.split(","))


def _str_list(raw):
    return tuple(x.strip() for x in raw.split(",") if x.strip())


def _model(cp, section, dim):
    kind = _get(cp, section, "kind", str).lower()
    rho = _get(cp, section, "rho", float)
    return CovModel(kind=kind, dim=dim, rho=rho)


def sim_config(cp):
    for section in ("simulate", "model1", "model2"):
        if not cp.has_section(section):
            raise ParameterError(f"config is missing the [{section}] section")
    n = _get(cp, "simulate", "n", int)
    p = _get(cp, "simulate", "p", int)
    q = _get(cp, "simulate", "q", int)
    return SimConfig(
        n=n,
        p=p,
        q=q,
        model1=_model(cp, "model1", p),
        model2=_model(cp, "model2", q),
        tail=_get(cp, "simulate", "tail", str, "gaussian").lower(),
        df=_get(cp, "simulate", "df", float, 3.0),
        t_mode=_get(cp, "simulate", "t_mode", str, "scale").lower(),
        seed=_get(cp, "simulate", "seed", int, 0),
    )


def tuning_template(cp):
    """TuningConfig keyword template from [tuning]; estimator/seed excluded
    (the bench runner assigns those per method and replication)."""
    if not cp.has_section("tuning"):
        return {}
    kw = {}
    if cp.has_option("tuning", "splits"):
        kw["splits"] = _get(cp, "tuning", "splits", int)
    if cp.has_option("tuning", "n1"):
        kw["n1"] = _get(cp, "tuning", "n1", int)
    if cp.has_option("tuning", "k1_grid"):
        kw["grid1"] = _get(cp, "tuning", "k1_grid", parse_grid)
    if cp.has_option("tuning", "k2_grid"):
        kw["grid2"] = _get(cp, "tuning", "k2_grid", parse_grid)
    if cp.has_option("tuning", "tau_percentiles"):
        kw["tau_percentiles"] = _get(cp, "tuning", "tau_percentiles", _float_list)
    if cp.has_option("tuning", "tau_pool"):
        kw["tau_pool"] = _get(cp, "tuning", "tau_pool", _float_list)
    if cp.has_option("tuning", "center_train"):
        kw["center_train"] = _get(cp, "tuning", "center_train", _bool)
    return kw


def tuning_config(cp):
    """Full TuningConfig from [tuning] (estimator required here)."""
    est = _get(cp, "tuning", "estimator", str).lower()
    if est not in ESTIMATORS:
        raise ParameterError(
            f"config key [tuning] estimator: unknown estimator {est!r} "
            f"(choose from {', '.join(ESTIMATORS)})"
        )
    kw = tuning_template(cp)
    kw["seed"] = _get(cp, "tuning", "seed", int, 0)
    return TuningConfig(estimator=est, **kw)


def experiment_spec(cp):
    if not cp.has_section("experiment"):
        raise ParameterError("config is missing the [experiment] section")
    sim = sim_config(cp)
    methods = _get(cp, "experiment", "methods", _str_list)
    for m in methods:
        if m not in METHOD_ORDER:
            raise ParameterError(
                f"config key [experiment] methods: unknown method {m!r} "
                f"(choose from {', '.join(METHOD_ORDER)})"
            )
    metrics = _get(cp, "experiment", "metrics", _str_list, METRICS)
    return ExperimentSpec(
        sim=sim,
        reps=_get(cp, "experiment", "reps", int, 100),
        methods=tuple(methods),
        metrics=tuple(metrics),
        tuning=tuning_template(cp),
        seed=_get(cp, "experiment", "seed", int, 0),
        large=_get(cp, "experiment", "large", _bool, False),
    )
