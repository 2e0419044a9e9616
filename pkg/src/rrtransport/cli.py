"""Command-line front end: estimate on CSVs, run simulation grids.

Commands::

    rrtransport estimate --data D.csv [--schema S.cfg] --scenario {1|2|3}
        --method {if|or|ipw|ipw_alt|a4star|trial_target} [--folds K]
        [--seed S] [--level 0.95] --out PATH [--format {csv|json}]
    rrtransport simulate --config C.cfg --out PATH [--threads N]
    rrtransport rate-sim --config C.cfg --out PATH [--threads N]

Exit codes: 0 success, 2 config error, 3 data/structural error,
4 numerical error.  Failures print one JSON object on stderr with keys
code, module, message, and never leave a partial results file (output is
written to a temporary file and atomically renamed).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import config as cfgmod
from .crossfit import crossfit_predictions, make_folds
from .data import load_csv, validate
from .errors import ConfigError, RRTransportError
from .estimators import (
    METHOD_TRIAL_TARGET,
    SCENARIO1_METHODS,
    estimate_scenario1,
    estimate_scenario2,
    estimate_scenario3,
    estimate_trial_target,
)
from .glm import LINEAR, LOGISTIC, FeatureSpec
from .inference import wald_inference
from .nuisance import KnownConstant, NuisanceSpec
from .simulate import (
    CORRECTNESS_CONFIGS,
    DgmConfig,
    McExperiment,
    MetricsTable,
    RateExperiment,
    run_mc_experiment,
    run_rate_experiment,
)

METHODS = (*SCENARIO1_METHODS, METHOD_TRIAL_TARGET)


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rrtransport-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _schema_from_config(tree: dict) -> dict | None:
    cols = cfgmod.get_path(tree, "columns")
    if cols is None:
        return None
    schema = {
        "y": cfgmod.get_path(tree, "columns.y", "y"),
        "s": cfgmod.get_path(tree, "columns.s", "s"),
        "a": cfgmod.get_path(tree, "columns.a", "a"),
        "x": list(cfgmod.get_path(tree, "columns.x", [])),
        "w": list(cfgmod.get_path(tree, "columns.w", [])),
    }
    return schema


def _feature_spec_from_config(node: dict, columns: list[str], family_default: str) -> FeatureSpec:
    names = node.get("covariates")
    if names is None:
        indices = tuple(range(len(columns)))
    else:
        missing = [c for c in names if c not in columns]
        if missing:
            raise ConfigError(f"nuisance covariates {missing} not in schema", module="cli")
        indices = tuple(columns.index(c) for c in names)
    intercept = bool(node.get("intercept", True))
    family = str(node.get("family", family_default))
    if family not in (LOGISTIC, LINEAR):
        raise ConfigError(f"unknown family {family!r}", module="cli")
    return FeatureSpec(indices, intercept, family)


def _nuisance_spec_from_config(
    tree: dict | None, data, scenario: int, method: str
) -> NuisanceSpec:
    binary_outcome = bool(np.all((data.y == 0.0) | (data.y == 1.0)))
    outcome_family = LOGISTIC if binary_outcome else LINEAR
    base = NuisanceSpec.glm_defaults(
        data.p,
        scenario,
        q_extra=data.q if scenario == 3 else 0,
        outcome_family=outcome_family,
        with_mu01=method == METHOD_TRIAL_TARGET,
    )
    entries = dict(base.entries)
    if tree is None:
        return NuisanceSpec(entries)
    nuis = cfgmod.get_path(tree, "nuisance", {})
    x_names = list(cfgmod.get_path(tree, "columns.x", [f"x{j+1}" for j in range(data.p)]))
    w_names = list(cfgmod.get_path(tree, "columns.w", [f"w{j+1}" for j in range(data.q)]))
    for name, node in nuis.items():
        if name not in entries and name not in ("mu01", "pi", "mu00"):
            raise ConfigError(f"unknown nuisance {name!r} in config", module="cli")
        if isinstance(node, str):
            if node.startswith("known:"):
                try:
                    entries[name] = KnownConstant(float(node.split(":", 1)[1]))
                except ValueError:
                    raise ConfigError(f"bad known value in {name!r}", module="cli") from None
                continue
            raise ConfigError(
                f"nuisance {name!r}: only 'known:<value>' or a key tree is allowed "
                "outside simulation mode",
                module="cli",
            )
        columns = x_names + w_names if name in ("mu00w", "pi_w") else x_names
        family_default = (
            LOGISTIC if name in ("q", "tau", "pi", "pi_w") else
            LINEAR if name == "m_nested" else outcome_family
        )
        entries[name] = _feature_spec_from_config(node, columns, family_default)
    return NuisanceSpec(entries)


def _run_estimate(args) -> int:
    tree = cfgmod.load_config(args.schema) if args.schema else None
    schema = _schema_from_config(tree) if tree else None
    data = load_csv(args.data, schema)
    scenario = args.scenario
    report = validate(data, scenario)
    for violation in report.violations:
        print(f"warning: positivity: {violation}", file=sys.stderr)
    for note in report.warnings:
        print(f"warning: {note}", file=sys.stderr)
    method = args.method
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}", module="cli")
    if method in SCENARIO1_METHODS and method != "if" and scenario != 1:
        raise ConfigError(f"method {method!r} requires scenario 1", module="cli")
    fit_scenario = 2 if method == METHOD_TRIAL_TARGET else scenario
    spec = _nuisance_spec_from_config(tree, data, fit_scenario, method)
    folds = make_folds(data, args.folds, args.seed)
    preds = crossfit_predictions(data, spec, folds, fit_scenario)
    if method == METHOD_TRIAL_TARGET:
        points, ifs = estimate_trial_target(data, preds)
    elif scenario == 1:
        points, ifs = estimate_scenario1(data, preds, method)
    elif scenario == 2:
        points, ifs = estimate_scenario2(data, preds)
    else:
        points, ifs = estimate_scenario3(data, preds)
    if ifs is not None:
        record = wald_inference(points, ifs, args.level).to_dict()
    else:
        record = {
            "method": points.method,
            "scenario": points.scenario,
            "alpha": points.alpha,
            "beta": points.beta,
            "phi": points.phi,
            "psi": points.psi,
            "level": args.level,
            "n": data.n,
        }
    if args.format == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        keys = list(record)
        vals = ["" if record[k] is None else repr(record[k]) if isinstance(record[k], float) else str(record[k]) for k in keys]
        text = ",".join(keys) + "\n" + ",".join(vals) + "\n"
    _atomic_write(args.out, text)
    return 0


def _experiment_from_config(tree: dict) -> tuple[McExperiment, int, int]:
    case = int(cfgmod.get_path(tree, "dgm.case", 2))
    n0 = cfgmod.get_path(tree, "dgm.n0", 5000)
    n1_values = cfgmod.get_path(tree, "dgm.n1", [1000])
    if not isinstance(n1_values, list):
        n1_values = [n1_values]
    n0_values = n0 if isinstance(n0, list) else [n0] * len(n1_values)
    if len(n0_values) != len(n1_values):
        raise ConfigError("dgm.n0 list must match dgm.n1", module="cli")
    sizes = tuple((int(a), int(b)) for a, b in zip(n1_values, n0_values))
    configs = tuple(cfgmod.get_path(tree, "grid.configs", ["all_correct"]))
    for name in configs:
        if name not in CORRECTNESS_CONFIGS:
            raise ConfigError(f"unknown correctness config {name!r}", module="cli")
    estimators = tuple(cfgmod.get_path(tree, "grid.estimators", ["if", "or", "ipw"]))
    experiment = McExperiment(
        base=DgmConfig(case=case),
        sizes=sizes,
        configs=configs,
        estimators=estimators,
        folds=int(cfgmod.get_path(tree, "folds", 1)),
        level=float(cfgmod.get_path(tree, "level", 0.95)),
        truth_reps=cfgmod.get_path(tree, "truth_reps"),
        corrupt_q=bool(cfgmod.get_path(tree, "corrupt_q", False)),
    )
    reps = int(cfgmod.get_path(tree, "reps", required=True))
    seed = int(cfgmod.get_path(tree, "seed", 0))
    return experiment, reps, seed


def _write_table(table: MetricsTable, out: str, fmt: str | None) -> None:
    if fmt is None:
        fmt = "json" if out.endswith(".json") else "csv"
    text = table.to_json_text() if fmt == "json" else table.to_csv_text()
    _atomic_write(out, text)


def _print_cell_summaries(table: MetricsTable, reps_requested: int) -> None:
    if reps_requested == 1:
        print("warning: reps = 1, SD columns are degenerate", file=sys.stderr)
    for row in table.rows():
        print(
            f"{row['estimator']:<8} {row['config']:<16} n1={row['n1']:<6} "
            f"n0={row['n0']:<6} |bias|={row['abs_bias']:.5f} sd={row['sd']:.5f} "
            f"sqrt_n_rmse={row['sqrt_n_rmse']:.4f} coverage={row['coverage']}"
        )


def _run_simulate(args) -> int:
    tree = cfgmod.load_config(args.config)
    experiment, reps, seed = _experiment_from_config(tree)
    table = run_mc_experiment(experiment, reps, seed, workers=args.threads)
    _write_table(table, args.out, args.format)
    _print_cell_summaries(table, reps)
    return 0


def _run_rate_sim(args) -> int:
    tree = cfgmod.load_config(args.config)
    n_values = cfgmod.get_path(tree, "n", [1000, 2000, 5000])
    r_values = cfgmod.get_path(tree, "r", None)
    if r_values is None:
        r_values = [round(0.10 + 0.05 * k, 2) for k in range(9)]
    h = float(cfgmod.get_path(tree, "h", 2.2))
    reps = int(cfgmod.get_path(tree, "reps", required=True))
    seed = int(cfgmod.get_path(tree, "seed", 0))
    if not isinstance(n_values, list):
        n_values = [n_values]
    if not isinstance(r_values, list):
        r_values = [r_values]
    experiment = RateExperiment.grid(
        tuple(int(n) for n in n_values), tuple(float(r) for r in r_values), h
    )
    table = run_rate_experiment(experiment, reps, seed, workers=args.threads)
    _write_table(table, args.out, args.format)
    _print_cell_summaries(table, reps)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rrtransport",
        description="Counterfactual means in a target population under "
        "relative-effect transportability",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate on a CSV dataset")
    est.add_argument("--data", required=True)
    est.add_argument("--schema", default=None, help="column/nuisance config file")
    est.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    est.add_argument("--method", default="if", choices=METHODS)
    est.add_argument("--folds", type=int, default=2)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--level", type=float, default=0.95)
    est.add_argument("--out", required=True)
    est.add_argument("--format", default="json", choices=("csv", "json"))
    est.set_defaults(func=_run_estimate)

    sim = sub.add_parser("simulate", help="run a double-robustness grid")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True)
    sim.add_argument("--format", default=None, choices=("csv", "json"))
    sim.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sim.set_defaults(func=_run_simulate)

    rate = sub.add_parser("rate-sim", help="run the rate-robustness grid")
    rate.add_argument("--config", required=True)
    rate.add_argument("--out", required=True)
    rate.add_argument("--format", default=None, choices=("csv", "json"))
    rate.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    rate.set_defaults(func=_run_rate_sim)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RRTransportError as exc:
        print(json.dumps(exc.to_json_dict()), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
