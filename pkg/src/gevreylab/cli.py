"""Experiment runner: config parsing, dispatch, run persistence.

Subcommands
-----------
    gevreylab check lemmas        combinatorial bound sweeps
    gevreylab check inequalities  commutator/product witnesses
    gevreylab run free            free-evolution norm table + Gevrey fit
    gevreylab run gauge           gauge solver checks, table and fits
    gevreylab fit decay           moment-decay radicals of a profile
    gevreylab fit gevrey          refit an existing record's table

Configs are TOML (``--config file.toml``); flags override file values.
Unknown keys are errors, never silently absorbed.  Outputs land in
``--out`` (or $GEVREYLAB_OUT, or ./runs): a canonical JSON record, a CSV
for table-producing experiments, and a timing sidecar.  With a fixed
(config, seed) the record and CSV are bit-identical across runs; wall
clock goes only to the sidecar, which is excluded from that contract.

CSV schema (fixed column order), one row per (m, alpha, t):
    experiment_id, t, m, alpha, theta, value, radical, path, warning
"""

from __future__ import annotations

import argparse
import json
import math
import os
import time
import warnings

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, asdict, replace
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, gauge, oracles, witnesses
from .galilean import GevreyParams, commutation_inequality_check
from .grid import Field, Grid1D, l2_norm
from .profiles import PROFILE_KINDS, _PROFILE_PARAMS, class_exponent, profile

EXPERIMENTS = ("free", "gauge", "lemmas", "inequalities", "decay-fit")

CSV_COLUMNS = ("experiment_id", "t", "m", "alpha", "theta", "value", "radical", "path", "warning")


@dataclass
class RunConfig:
    experiment: str
    name: str = ""
    num_points: int = 2048
    length: float = 80.0
    profile_kind: str = "gaussian"
    profile_params: dict = field(default_factory=dict)
    a: float = 1.0
    theta: float = 2.0
    s: float = 1.0
    r: float = 0.5
    eps: float = 1.0
    sigma: float | None = None
    times: tuple[float, ...] = (0.5, 1.0)
    m_max: int = 0
    alpha_max: int = 8
    max_order: int = 6
    fit_alpha_min: int = 4
    fit_alpha_max: int | None = None
    spread_max: float | None = None
    seed: int = 0
    trials: int = 200
    strict: bool = False
    quadrature: str = "corrected"
    residual_max: float = 1e-6
    output_dir: str = ""

    def __post_init__(self) -> None:
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}")
        n = self.num_points
        if n < 16 or n & (n - 1):
            raise ValueError("num_points must be a power of two >= 16")
        if self.profile_kind not in PROFILE_KINDS:
            raise ValueError(f"profile kind must be one of {PROFILE_KINDS}")
        extras = set(self.profile_params) - set(_PROFILE_PARAMS[self.profile_kind])
        if extras:
            raise ValueError(f"unknown profile parameters: {sorted(extras)}")
        if self.experiment in ("free", "gauge") and any(t == 0.0 for t in self.times):
            raise ValueError("times must be nonzero for free/gauge diagnostics")
        if not self.name:
            self.name = self.experiment
        self.times = tuple(float(t) for t in self.times)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["times"] = list(self.times)
        return d


_TOML_SECTIONS = {
    "grid": {"num_points": "num_points", "length": "length"},
    "profile": None,  # special-cased: kind plus profile parameters
    "physics": {k: k for k in ("a", "theta", "s", "r", "eps", "sigma")},
    "schedule": {
        "times": "times",
        "m_max": "m_max",
        "alpha_max": "alpha_max",
        "l": "max_order",
    },
    "fit": {
        "alpha_min": "fit_alpha_min",
        "alpha_max": "fit_alpha_max",
        "spread_max": "spread_max",
    },
    "run": {
        k: k
        for k in (
            "seed",
            "trials",
            "strict",
            "quadrature",
            "residual_max",
            "output_dir",
        )
    },
}


def load_config_file(path: str | Path) -> dict:
    """Flat config-field dict from a TOML file; unknown keys are errors."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    out: dict = {}
    for key, value in doc.items():
        if key in ("experiment", "name"):
            out[key] = value
        elif key in _TOML_SECTIONS:
            section = doc[key]
            if not isinstance(section, dict):
                raise ValueError(f"section [{key}] must be a table")
            if key == "profile":
                params = dict(section)
                kind = params.pop("kind", None)
                if kind is None:
                    raise ValueError("[profile] needs a 'kind'")
                out["profile_kind"] = kind
                out["profile_params"] = params
            else:
                mapping = _TOML_SECTIONS[key]
                for k, v in section.items():
                    if k not in mapping:
                        raise ValueError(f"unknown key '{k}' in section [{key}]")
                    out[mapping[k]] = v
        else:
            raise ValueError(f"unknown top-level key '{key}' in config")
    return out


# ----------------------------------------------------------------------
# experiment pipelines
# ----------------------------------------------------------------------


def _build_profile(config: RunConfig) -> Field:
    grid = Grid1D(config.num_points, config.length)
    return profile(grid, config.profile_kind, **config.profile_params)


def _run_lemmas(config: RunConfig, results: dict, failures: list) -> None:
    fact = oracles.sweep_factorial(dim_max=3, order_max=6, parts_max=4)
    summ = oracles.sweep_summation(trials=config.trials, seed=config.seed)
    bili = oracles.sweep_bilinear(trials=config.trials, seed=config.seed)
    results["factorial"] = {"trials": fact.trials, "violations": len(fact.violations)}
    results["summation"] = {"trials": summ.trials, "violations": len(summ.violations)}
    results["bilinear"] = {"trials": bili.trials, "violations": len(bili.violations)}
    for label, sweep in (("factorial", fact), ("summation", summ), ("bilinear", bili)):
        if not sweep.ok:
            failures.append(f"{label} sweep: {len(sweep.violations)} violations")


def _run_inequalities(config: RunConfig, results: dict, failures: list) -> None:
    grid = Grid1D(config.num_points, config.length)
    reports = {}
    for tag, seed in (("corpus-a", config.seed), ("corpus-b", config.seed + 1)):
        kp = witnesses.kato_ponce_witness(grid, config.theta, config.trials, seed)
        entries = {"kato-ponce": kp.sup_ratio}
        for k in (2, 3, 4):
            chain, leib = witnesses.leibniz_witness(grid, k, 2, config.theta, config.trials, seed)
            entries[f"chain-k{k}"] = chain.sup_ratio ** (1.0 / k)
            entries[f"leibniz-k{k}"] = leib.sup_ratio ** (1.0 / k)
        reports[tag] = entries
    results["sup_ratios"] = reports
    for key in reports["corpus-a"]:
        ra, rb = reports["corpus-a"][key], reports["corpus-b"][key]
        if not (math.isfinite(ra) and math.isfinite(rb)):
            failures.append(f"{key}: non-finite sup ratio")
        elif max(ra, rb) > 2.0 * min(ra, rb):
            failures.append(f"{key}: sup ratio unstable across corpora ({ra:.3g} vs {rb:.3g})")


def _table_results(table: diagnostics.NormTable) -> dict:
    return {
        "theta": table.theta,
        "s": table.s,
        "sigma": table.sigma,
        "present_fraction": table.present_fraction(),
        "rows": [
            {
                "m": r.time_order,
                "alpha": r.space_order,
                "t": r.t,
                "value": r.value,
                "radical": r.radical,
                "path": r.path,
                "warning": r.warning,
            }
            for r in table.rows
        ],
    }


def _fit_results(fit: diagnostics.GevreyFit) -> dict:
    return {
        "rho": fit.rho,
        "M": fit.big_m,
        "spread": fit.spread,
        "s": fit.s,
        "sigma": fit.sigma,
        "alpha_window": list(fit.alpha_window),
    }


def _fit_window(config: RunConfig) -> tuple[int, int]:
    hi = config.fit_alpha_max if config.fit_alpha_max is not None else config.alpha_max
    return (min(config.fit_alpha_min, hi), hi)


def _run_free(config: RunConfig, results: dict, failures: list) -> None:
    u0 = _build_profile(config)
    sigma = config.sigma if config.sigma is not None else config.s
    table = diagnostics.norm_table_free(
        u0,
        config.eps,
        config.s,
        config.theta,
        config.times,
        config.m_max,
        config.alpha_max,
        sigma=sigma,
        strict=config.strict,
    )
    results["class_exponent"] = class_exponent(config.profile_kind, **config.profile_params)
    results["table"] = _table_results(table)
    fit = diagnostics.gevrey_fit(table, config.s, sigma, _fit_window(config))
    results["fit"] = _fit_results(fit)
    if table.present_fraction() < 0.9:
        failures.append(f"only {table.present_fraction():.0%} of table rows present")
    if config.spread_max is not None and fit.spread > config.spread_max:
        failures.append(f"radical spread {fit.spread:.3f} exceeds {config.spread_max}")
    results["_csv_table"] = table


def _run_gauge(config: RunConfig, results: dict, failures: list) -> None:
    u0 = _build_profile(config)
    checks = []
    mass0 = l2_norm(u0)
    for t in config.times:
        u = gauge.solve_special(u0, config.a, t, quadrature=config.quadrature, strict=config.strict)
        u_t = gauge.time_derivative_special(u0, config.a, t, quadrature=config.quadrature)
        residual = gauge.residual_special(u, u_t, config.a)
        mass_drift = abs(l2_norm(u) - mass0) / mass0
        checks.append({"t": t, "residual": residual, "mass_drift": mass_drift})
        if residual > config.residual_max:
            failures.append(f"t={t}: residual {residual:.3e} > {config.residual_max:.1e}")
        if mass_drift > 1e-12:
            failures.append(f"t={t}: mass drift {mass_drift:.3e} > 1e-12")
    roundtrip = l2_norm(gauge.gauge_inverse(gauge.gauge_forward(u0, config.a), config.a) - u0)
    results["solver_checks"] = checks
    results["gauge_roundtrip"] = roundtrip
    if roundtrip > 1e-12 * mass0:
        failures.append(f"gauge round-trip error {roundtrip:.3e}")

    refinement = gauge.residual_refinement_report(
        lambda grid: profile(grid, config.profile_kind, **config.profile_params),
        config.num_points // 2,
        config.length,
        config.a,
        max(config.times),
        quadrature="trapezoid",
    )
    results["refinement"] = refinement
    if refinement["ratio"] < 3.5:
        failures.append(
            f"residual refinement ratio {refinement['ratio']:.2f} below second order"
        )

    sigma = config.sigma if config.sigma is not None else max(1.0, config.s)
    table = diagnostics.norm_table_gauge(
        u0,
        config.a,
        config.theta,
        config.times,
        config.alpha_max,
        m_max=config.m_max,
        s=config.s,
        sigma=sigma,
        quadrature=config.quadrature,
        strict=config.strict,
    )
    results["table"] = _table_results(table)
    window = _fit_window(config)
    fit_sigma = diagnostics.gevrey_fit(table, config.s, sigma, window)
    fit_s = diagnostics.gevrey_fit(table, config.s, config.s, window)
    results["fit"] = _fit_results(fit_sigma)
    results["fit_sigma_equals_s"] = _fit_results(fit_s)
    if config.spread_max is not None and fit_sigma.spread > config.spread_max:
        failures.append(f"radical spread {fit_sigma.spread:.3f} exceeds {config.spread_max}")
    results["_csv_table"] = table


def _run_decay_fit(config: RunConfig, results: dict, failures: list) -> None:
    u0 = _build_profile(config)
    fit = diagnostics.decay_fit(
        u0, config.eps, config.s, config.theta, config.alpha_max, strict=config.strict
    )
    results["q_values"] = list(fit.q_values)
    results["q"] = fit.q
    results["class_defect"] = fit.class_defect
    spread_max = config.spread_max if config.spread_max is not None else 3.0
    # Spread over the measurement window only: q_0 divides the profile norm
    # by the weighted norm, which at an endpoint class (weighted profile
    # non-decaying) scales with the domain size rather than the decay rate.
    lo = min(config.fit_alpha_min, config.alpha_max)
    window = fit.q_values[lo:]
    spread = max(window) / min(window)
    results["spread"] = spread
    results["spread_window"] = [lo, config.alpha_max]
    if spread > spread_max:
        failures.append(f"moment radicals spread {spread:.3f} exceeds {spread_max}")
    results["_csv_decay"] = fit


_PIPELINES = {
    "lemmas": _run_lemmas,
    "inequalities": _run_inequalities,
    "free": _run_free,
    "gauge": _run_gauge,
    "decay-fit": _run_decay_fit,
}


def run(config: RunConfig) -> dict:
    """Execute the experiment; returns the RunRecord as a plain dict.

    The record echoes the full config (sufficient to reproduce the run),
    carries per-row tables and fits, every warning raised, and the
    assertion outcome.  Timings are returned under "_timings" and are
    serialized to a sidecar file only, keeping the record deterministic.
    """
    results: dict = {}
    failures: list[str] = []
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        _PIPELINES[config.experiment](config, results, failures)
    elapsed = time.perf_counter() - start

    csv_table = results.pop("_csv_table", None)
    csv_decay = results.pop("_csv_decay", None)
    record = {
        "tool": {"name": "gevreylab", "version": __version__},
        "config": config.to_dict(),
        "results": results,
        "warnings": sorted({str(w.message) for w in caught}),
        "assertions": {"passed": not failures, "failures": failures},
        "_timings": {"total_seconds": elapsed},
        "_csv": _csv_text(config, csv_table, csv_decay),
    }
    return record


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(config: RunConfig, table, decay) -> str | None:
    rows = []
    if table is not None:
        for r in table.rows:
            rows.append(
                (config.name, r.t, r.time_order, r.space_order, table.theta, r.value, r.radical, r.path, r.warning)
            )
    elif decay is not None:
        for alpha, q in enumerate(decay.q_values):
            rows.append((config.name, 0.0, 0, alpha, config.theta, None, q, "moment", decay.class_defect))
    else:
        return None
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def write_outputs(record: dict, out_dir: str | Path) -> list[Path]:
    """Persist the record (and CSV, when present) plus the timing sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = record["config"]["name"]
    written = []
    serializable = {k: v for k, v in record.items() if not k.startswith("_")}
    record_path = out / f"{name}.record.json"
    record_path.write_text(record_to_json(serializable))
    written.append(record_path)
    if record.get("_csv") is not None:
        csv_path = out / f"{name}.csv"
        csv_path.write_text(record["_csv"])
        written.append(csv_path)
    timing_path = out / f"{name}.timings.json"
    timing_path.write_text(json.dumps(record["_timings"], indent=2) + "\n")
    written.append(timing_path)
    return written


def record_to_json(record: dict) -> str:
    """Canonical serialization: fixed field order, round-trippable floats."""
    return json.dumps(record, indent=2, allow_nan=False) + "\n"


def record_from_json(text: str) -> dict:
    return json.loads(text)


def table_from_record(record: dict) -> diagnostics.NormTable:
    """Rebuild the NormTable embedded in a free/gauge record."""
    block = record["results"]["table"]
    rows = tuple(
        diagnostics.NormTableRow(
            r["m"], r["alpha"], r["t"], r["value"], r["radical"], r["path"], r["warning"]
        )
        for r in block["rows"]
    )
    return diagnostics.NormTable(
        record["config"]["experiment"], block["theta"], block["s"], block["sigma"], rows
    )


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML config file; flags override its values")
    p.add_argument("--name", help="experiment id used for output file names")
    p.add_argument("--num-points", type=int, dest="num_points")
    p.add_argument("--length", type=float)
    p.add_argument("--profile", dest="profile_kind", choices=PROFILE_KINDS)
    p.add_argument("--width", type=float, help="gaussian profile width")
    p.add_argument("--scale", type=float, help="sech profile scale")
    p.add_argument("--profile-eps", type=float, help="exp-bracket profile epsilon")
    p.add_argument("--profile-s", type=float, help="exp-bracket profile exponent")
    p.add_argument("--power", type=float, help="poly profile power")
    p.add_argument("--a", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--m-max", type=int, dest="m_max")
    p.add_argument("--alpha-max", type=int, dest="alpha_max")
    p.add_argument("--l", type=int, dest="max_order")
    p.add_argument("--fit-alpha-min", type=int, dest="fit_alpha_min")
    p.add_argument("--fit-alpha-max", type=int, dest="fit_alpha_max")
    p.add_argument("--spread-max", type=float, dest="spread_max")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--strict", action="store_true", default=None)
    p.add_argument("--quadrature", choices=gauge.QUADRATURES)
    p.add_argument("--residual-max", type=float, dest="residual_max")
    p.add_argument("--out", dest="output_dir", help="output directory")


_PROFILE_FLAGS = {
    "width": "width",
    "scale": "scale",
    "profile_eps": "eps",
    "profile_s": "s",
    "power": "power",
}


def build_config(args: argparse.Namespace, experiment: str) -> RunConfig:
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    file_experiment = values.pop("experiment", None)
    if file_experiment is not None and file_experiment != experiment:
        raise ValueError(
            f"config file declares experiment '{file_experiment}' but the "
            f"subcommand asks for '{experiment}'"
        )
    profile_params = dict(values.get("profile_params", {}))
    for flag, key in _PROFILE_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            profile_params[key] = v
    for f_ in (
        "name", "num_points", "length", "profile_kind", "a", "theta", "s", "r",
        "eps", "sigma", "times", "m_max", "alpha_max", "max_order",
        "fit_alpha_min", "fit_alpha_max", "spread_max", "seed", "trials",
        "strict", "quadrature", "residual_max", "output_dir",
    ):
        v = getattr(args, f_, None)
        if v is not None:
            values[f_] = v
    values["profile_params"] = profile_params
    if "times" in values:
        values["times"] = tuple(values["times"])
    return RunConfig(experiment=experiment, **values)


def _parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="gevreylab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    top = parser.add_subparsers(dest="command", required=True)

    check = top.add_parser("check", help="run verification sweeps")
    check_sub = check.add_subparsers(dest="target", required=True)
    for target, experiment in (("lemmas", "lemmas"), ("inequalities", "inequalities")):
        p = check_sub.add_parser(target)
        p.set_defaults(experiment=experiment)
        _add_common_flags(p)

    runp = top.add_parser("run", help="run a solver experiment")
    run_sub = runp.add_subparsers(dest="target", required=True)
    for target in ("free", "gauge"):
        p = run_sub.add_parser(target)
        p.set_defaults(experiment=target)
        _add_common_flags(p)

    fit = top.add_parser("fit", help="fit constants from data")
    fit_sub = fit.add_subparsers(dest="target", required=True)
    p = fit_sub.add_parser("decay")
    p.set_defaults(experiment="decay-fit")
    _add_common_flags(p)
    p = fit_sub.add_parser("gevrey")
    p.add_argument("--in", dest="record_path", required=True, help="existing record.json")
    p.add_argument("--s", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--fit-alpha-min", type=int, dest="fit_alpha_min")
    p.add_argument("--fit-alpha-max", type=int, dest="fit_alpha_max")
    p.set_defaults(experiment=None)

    return parser.parse_args(argv)


def _default_out_dir(config_dir: str) -> str:
    return config_dir or os.environ.get("GEVREYLAB_OUT", "runs")


def _fit_gevrey_main(args: argparse.Namespace) -> int:
    record = record_from_json(Path(args.record_path).read_text())
    table = table_from_record(record)
    s = args.s if args.s is not None else table.s
    sigma = args.sigma if args.sigma is not None else table.sigma
    lo = args.fit_alpha_min if args.fit_alpha_min is not None else record["results"]["fit"]["alpha_window"][0]
    hi = args.fit_alpha_max if args.fit_alpha_max is not None else record["results"]["fit"]["alpha_window"][1]
    fit = diagnostics.gevrey_fit(table, s, sigma, (lo, hi))
    print(record_to_json(_fit_results(fit)), end="")
    return 0


def main(argv=None) -> int:
    args = _parse_args(argv)
    if args.command == "fit" and args.target == "gevrey":
        return _fit_gevrey_main(args)
    try:
        config = build_config(args, args.experiment)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}")
        return 1
    record = run(config)
    out_dir = _default_out_dir(config.output_dir)
    written = write_outputs(record, out_dir)
    for path in written:
        print(f"wrote {path}")
    assertions = record["assertions"]
    if assertions["passed"]:
        print("all assertions held")
        return 0
    print("violations:")
    for f_ in assertions["failures"]:
        print(f"  - {f_}")
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
