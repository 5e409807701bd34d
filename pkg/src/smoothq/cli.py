"""Command-line interface.

Subcommands:

* ``fit``      one penalized fit at a fixed penalty level
* ``cv``       cross-validated regularization path
* ``flam``     fused-lasso additive model
* ``simulate`` benchmark-grid replications with metric aggregates
* ``bench``    error/time scaling curves with n = 2p

Every command writes a primary result file (JSON by default, ``--format
csv`` for a flat table) and, where a curve is produced, a long-format plot
CSV plus a rendered PNG next to it (``--no-figures`` skips the PNG).  All
randomness flows from ``--seed`` through counter-based generator streams, so
identical invocations produce identical outputs.
"""

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataio import (FLOAT_FMT, IngestError, covariate_names, emit_plot_data,
                     ingest_csv)
from .flam import fit_flam
from .kernels import KERNELS, SmoothingSpec, default_bandwidth
from .objective import Dataset
from .penalties import GroupStructure, PenaltyTemplate
from .simulation import (MethodSpec, SimDesign, group_structure, generate,
                         run_replications)
from .solver import SolverError
from .tuning import LambdaPath, cross_validate, fit_path, lambda_max
from . import figures

PENALTIES = ("lasso", "elastic_net", "group_lasso", "sparse_group_lasso")


class ConfigError(ValueError):
    """Mutually inconsistent command-line options."""


@dataclass
class RunConfig:
    """Validated invocation settings for one subcommand."""

    command: str
    input: str = None
    response: str = "y"
    tau: float = 0.5
    kernel: str = "gaussian"
    bandwidth: float = None
    penalty: str = "lasso"
    alpha: float = 1.0
    lam: float = None
    n_lambda: int = 50
    min_ratio: float = 0.01
    groups: tuple = None
    folds: int = 10
    seed: int = 0
    threads: int = 1
    output: str = None
    fmt: str = "json"
    figures: bool = True
    design: str = "sparse"
    noise: str = "normal"
    n: int = None
    p: int = None
    reps: int = None
    sizes: tuple = (50, 100)

    def validate(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("--tau must lie in (0, 1)")
        if self.kernel not in KERNELS:
            raise ConfigError(f"--kernel must be one of {', '.join(KERNELS)}")
        if self.penalty not in PENALTIES:
            raise ConfigError(f"--penalty must be one of {', '.join(PENALTIES)}")
        if self.command in ("fit", "flam") and self.lam is None:
            raise ConfigError(f"{self.command} requires --lambda")
        if self.lam is not None and self.lam < 0:
            raise ConfigError("--lambda must be non-negative")
        if self.command in ("fit", "cv", "flam") and not self.input:
            raise ConfigError(f"{self.command} requires an input CSV")
        if self.penalty in ("group_lasso", "sparse_group_lasso"):
            if self.command in ("fit", "cv") and self.groups is None:
                raise ConfigError(f"--penalty {self.penalty} requires --groups")
        elif self.groups is not None:
            raise ConfigError(f"--groups only applies to group penalties")
        if self.command == "simulate" and None in (self.n, self.p, self.reps):
            raise ConfigError("simulate requires --n, --p and --reps")
        if self.fmt not in ("json", "csv"):
            raise ConfigError("--format must be json or csv")
        if self.threads < 1 or self.folds < 2 or self.n_lambda < 1:
            raise ConfigError("--threads >= 1, --folds >= 2, --nlambda >= 1")
        if not 0.0 < self.min_ratio < 1.0:
            raise ConfigError("--lambda-min-ratio must lie in (0, 1)")

    def template(self, p: int = None) -> PenaltyTemplate:
        groups = None
        if self.penalty in ("group_lasso", "sparse_group_lasso"):
            if self.groups is not None:
                groups = GroupStructure(self.groups)
            elif p is not None:
                groups = group_structure(p)
        return PenaltyTemplate(kind=self.penalty, alpha=self.alpha, groups=groups)

    def smoothing(self, n: int, p: int) -> SmoothingSpec:
        h = self.bandwidth
        if h is None:
            h = default_bandwidth(n, p, self.tau)
        return SmoothingSpec(tau=self.tau, h=h, kernel=self.kernel)

    def out_path(self) -> Path:
        if self.output:
            return Path(self.output)
        return Path(f"smoothq_{self.command}.{self.fmt}")


def _parse_groups(text):
    try:
        sizes = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--groups expects comma-separated sizes, got {text!r}") from None
    if not sizes or any(s <= 0 for s in sizes):
        raise argparse.ArgumentTypeError("group sizes must be positive")
    return sizes


def _parse_sizes(text):
    try:
        sizes = tuple(int(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"--sizes expects comma-separated values, got {text!r}") from None
    if not sizes or any(s <= 1 for s in sizes):
        raise argparse.ArgumentTypeError("sizes must exceed 1")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smoothq",
        description="Penalized smoothed quantile regression")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=False):
        p.add_argument("--tau", type=float, default=0.5,
                       help="quantile level in (0, 1), default 0.5")
        p.add_argument("--kernel", default="gaussian", choices=KERNELS)
        p.add_argument("--bandwidth", type=float, default=None,
                       help="smoothing bandwidth; default uses the (n, p, tau) rule")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--output", default=None, help="result file path")
        p.add_argument("--format", dest="fmt", default="json",
                       choices=("json", "csv"))
        p.add_argument("--no-figures", dest="figures", action="store_false",
                       help="skip PNG rendering next to the plot CSV")
        if data:
            p.add_argument("input", help="input CSV with a header row")
            p.add_argument("--response", default="y",
                           help="name of the response column (default y)")

    def penalty_flags(p):
        p.add_argument("--penalty", default="lasso",
                       type=lambda s: s.replace("-", "_"),
                       help=f"one of {', '.join(PENALTIES)}")
        p.add_argument("--alpha", type=float, default=1.0,
                       help="elastic-net mix in [0, 1]; 1 is the lasso")
        p.add_argument("--groups", type=_parse_groups, default=None,
                       help="comma-separated group sizes over the covariates")

    p_fit = sub.add_parser("fit", help="one fit at a fixed penalty level")
    common(p_fit, data=True)
    penalty_flags(p_fit)
    p_fit.add_argument("--lambda", dest="lam", type=float, required=True)

    p_cv = sub.add_parser("cv", help="cross-validated regularization path")
    common(p_cv, data=True)
    penalty_flags(p_cv)
    p_cv.add_argument("--nlambda", dest="n_lambda", type=int, default=50)
    p_cv.add_argument("--lambda-min-ratio", dest="min_ratio", type=float,
                      default=0.01)
    p_cv.add_argument("--folds", type=int, default=10)

    p_flam = sub.add_parser("flam", help="fused-lasso additive model")
    common(p_flam, data=True)
    p_flam.add_argument("--lambda", dest="lam", type=float, required=True)

    p_sim = sub.add_parser("simulate", help="benchmark-grid replications")
    common(p_sim)
    penalty_flags(p_sim)
    p_sim.add_argument("--design", default="sparse",
                       choices=("sparse", "dense", "grouped"))
    p_sim.add_argument("--noise", default="normal", choices=("normal", "t"))
    p_sim.add_argument("--n", type=int, required=True)
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--reps", type=int, required=True)
    p_sim.add_argument("--nlambda", dest="n_lambda", type=int, default=50)
    p_sim.add_argument("--lambda-min-ratio", dest="min_ratio", type=float,
                       default=0.01)
    p_sim.add_argument("--folds", type=int, default=10)

    p_bench = sub.add_parser("bench", help="error/time scaling with n = 2p")
    common(p_bench)
    penalty_flags(p_bench)
    p_bench.add_argument("--sizes", type=_parse_sizes, default=(50, 100),
                         help="comma-separated covariate counts, n = 2p each")
    p_bench.add_argument("--reps", type=int, default=1)
    p_bench.add_argument("--nlambda", dest="n_lambda", type=int, default=50)
    p_bench.add_argument("--lambda-min-ratio", dest="min_ratio", type=float,
                         default=0.01)
    p_bench.add_argument("--folds", type=int, default=10)

    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    fields_ = {f for f in RunConfig.__dataclass_fields__}
    kwargs = {k: v for k, v in vars(args).items() if k in fields_ and v is not None}
    config = RunConfig(**kwargs)
    # booleans and explicit Nones fall through the filter above
    config.figures = getattr(args, "figures", True)
    config.bandwidth = getattr(args, "bandwidth", None)
    config.lam = getattr(args, "lam", None)
    config.groups = getattr(args, "groups", None)
    config.output = getattr(args, "output", None)
    config.validate()
    return config


def _write_result(config: RunConfig, result: dict, coef_names=None):
    path = config.out_path()
    path.parent.mkdir(parents=True, exist_ok=True)
    if config.fmt == "json":
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(result, handle, indent=2)
            handle.write("\n")
    else:
        import csv as _csv
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = _csv.writer(handle)
            if "coefficients" in result and coef_names is not None:
                writer.writerow(["name", "value"])
                for name, value in zip(coef_names, result["coefficients"]):
                    writer.writerow([name, FLOAT_FMT % value])
            else:
                writer.writerow(["key", "value"])
                for key, value in _flatten(result):
                    writer.writerow([key, value])
    return path


def _flatten(obj, prefix=""):
    rows = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            rows.extend(_flatten(v, f"{prefix}{k}." if isinstance(v, (dict, list))
                                 else f"{prefix}{k}"))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            rows.extend(_flatten(v, f"{prefix}{i}." if isinstance(v, (dict, list))
                                 else f"{prefix}{i}"))
    else:
        rows.append((prefix, obj))
    return rows


def _result_core(spec, lam, fit) -> dict:
    return {
        "coefficients": [float(b) for b in fit.beta],
        "lambda": float(lam),
        "tau": spec.tau,
        "h": spec.h,
        "kernel": spec.kernel,
        "iterations": int(fit.iterations),
        "objective": fit.objective,
    }


def _names_for(config: RunConfig) -> list:
    return ["intercept"] + covariate_names(config.input, config.response)


def _cmd_fit(config: RunConfig) -> int:
    data = ingest_csv(config.input, config.response)
    print(f"ingested {config.input}: n={data.n}, d={data.dim}")
    spec = config.smoothing(data.n, data.dim - 1)
    template = config.template(p=data.dim - 1)
    fit = fit_path(data, spec, template, LambdaPath(np.array([config.lam])))[0]
    result = _result_core(spec, config.lam, fit)
    result["converged"] = bool(fit.converged)
    path = _write_result(config, result, _names_for(config))
    print(f"wrote {path}")
    return 0


def _cmd_cv(config: RunConfig) -> int:
    data = ingest_csv(config.input, config.response)
    print(f"ingested {config.input}: n={data.n}, d={data.dim}")
    spec = config.smoothing(data.n, data.dim - 1)
    template = config.template(p=data.dim - 1)
    lam_hi = lambda_max(data, spec, template)
    path_grid = LambdaPath.geometric(lam_hi, config.n_lambda, config.min_ratio)
    cv = cross_validate(data, spec, template, path_grid, k=config.folds,
                        seed=config.seed, threads=config.threads)
    result = _result_core(spec, cv.selected_lambda, cv.refit)
    result["folds"] = config.folds
    result["selected_index"] = cv.selected_index
    out = _write_result(config, result, _names_for(config))

    rows = []
    for lam, m, s in zip(cv.lambdas, cv.mean_loss, cv.se_loss):
        rows.append((lam, "cv", "mean_loss", m))
        rows.append((lam, "cv", "se_loss", s))
    plot_path = out.with_name(out.stem + "_plot.csv")
    emit_plot_data(rows, plot_path)
    written = [out, plot_path]
    if config.figures:
        fig_path = out.with_suffix(".png")
        figures.render_validation_curve(rows, fig_path)
        written.append(fig_path)
    print("wrote " + ", ".join(str(w) for w in written))
    return 0


def _cmd_flam(config: RunConfig) -> int:
    data = ingest_csv(config.input, config.response)
    print(f"ingested {config.input}: n={data.n}, d={data.dim}")
    names = covariate_names(config.input, config.response)
    X = data.X[:, 1:]
    spec = config.smoothing(data.n, max(X.shape[1], 1))
    fit = fit_flam(data.y, X, config.lam, spec)
    result = {
        "theta0": fit.theta0,
        "coefficients": [fit.theta0],
        "lambda": fit.lam,
        "tau": spec.tau,
        "h": spec.h,
        "kernel": spec.kernel,
        "iterations": int(fit.cycles),
        "objective": float(fit.objective_trace[-1]),
        "converged": bool(fit.converged),
    }
    out = _write_result(config, result, ["theta0"])

    rows = []
    for j, name in enumerate(names):
        for x, v in zip(fit.sorted_x[:, j], fit.sorted_theta[:, j]):
            rows.append((x, name, "theta", v))
    plot_path = out.with_name(out.stem + "_plot.csv")
    emit_plot_data(rows, plot_path)
    written = [out, plot_path]
    if config.figures:
        fig_path = out.with_suffix(".png")
        figures.render_step_functions(rows, fig_path)
        written.append(fig_path)
    print("wrote " + ", ".join(str(w) for w in written))
    return 0


def _sim_design(config: RunConfig) -> SimDesign:
    return SimDesign(n=config.n, p=config.p, pattern=config.design,
                     noise=config.noise, tau=config.tau, seed=config.seed)


def _sim_method(config: RunConfig, p: int) -> MethodSpec:
    return MethodSpec(template=config.template(p=p), kernel=config.kernel,
                      bandwidth=config.bandwidth, folds=config.folds,
                      n_lambda=config.n_lambda, min_ratio=config.min_ratio)


def _cmd_simulate(config: RunConfig) -> int:
    design = _sim_design(config)
    method = _sim_method(config, config.p)
    summary = run_replications(design, method, config.reps,
                               threads=config.threads)
    result = {
        "design": config.design,
        "noise": config.noise,
        "n": config.n,
        "p": config.p,
        "tau": config.tau,
        "kernel": config.kernel,
        "penalty": config.penalty,
        "reps": summary.reps,
        "metrics": {"mean": summary.mean, "se": summary.se},
    }
    out = _write_result(config, result)

    series = f"{config.design}-{config.penalty}"
    rows = []
    for i, metrics in enumerate(summary.per_rep):
        for key, value in metrics.as_dict().items():
            rows.append((i, series, key, value))
    plot_path = out.with_name(out.stem + "_plot.csv")
    emit_plot_data(rows, plot_path)
    written = [out, plot_path]
    if config.figures:
        fig_path = out.with_suffix(".png")
        figures.render_metric_curves(rows, fig_path, xlabel="replication",
                                     title=series, log_y_metrics=())
        written.append(fig_path)
    print("wrote " + ", ".join(str(w) for w in written))
    return 0


def _cmd_bench(config: RunConfig) -> int:
    rows = []
    results = []
    for p in config.sizes:
        design = SimDesign(n=2 * p, p=p, pattern=config.design,
                           noise=config.noise, tau=config.tau, seed=config.seed)
        method = _sim_method(config, p)
        errors, seconds = [], []
        for rep in range(config.reps):
            start = time.perf_counter()
            data, beta_star = generate(design, stream=rep)
            spec = method.smoothing(design.n, design.p, design.tau)
            lam_hi = lambda_max(data, spec, method.template)
            grid = LambdaPath.geometric(lam_hi, config.n_lambda, config.min_ratio)
            cv = cross_validate(data, spec, method.template, grid,
                                k=config.folds, seed=config.seed,
                                threads=config.threads)
            seconds.append(time.perf_counter() - start)
            errors.append(float(np.linalg.norm(cv.refit.beta - beta_star)))
        series = config.penalty
        rows.append((p, series, "l2_error", float(np.mean(errors))))
        rows.append((p, series, "seconds", float(np.mean(seconds))))
        results.append({"p": p, "n": 2 * p,
                        "l2_error": float(np.mean(errors)),
                        "seconds": float(np.mean(seconds))})
        print(f"p={p}: error {np.mean(errors):.4f}, {np.mean(seconds):.2f}s")
    result = {"design": config.design, "noise": config.noise,
              "tau": config.tau, "penalty": config.penalty,
              "reps": config.reps, "curve": results}
    out = _write_result(config, result)
    plot_path = out.with_name(out.stem + "_plot.csv")
    emit_plot_data(rows, plot_path)
    written = [out, plot_path]
    if config.figures:
        fig_path = out.with_suffix(".png")
        figures.render_metric_curves(rows, fig_path, xlabel="p",
                                     title="scaling with n = 2p")
        written.append(fig_path)
    print("wrote " + ", ".join(str(w) for w in written))
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "cv": _cmd_cv,
    "flam": _cmd_flam,
    "simulate": _cmd_simulate,
    "bench": _cmd_bench,
}


def run(config: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit status."""
    try:
        return _COMMANDS[config.command](config)
    except (IngestError, SolverError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
