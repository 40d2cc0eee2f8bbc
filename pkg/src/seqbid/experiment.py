"""Randomized benchmark suite: generate instances, solve, compare, report.

Each experiment draws one instance, solves its discretized copy exactly as the
gold standard, then runs every configured solver and scores it against the
gold standard on the integer endowment lattice.  Aggregates over experiments
land in one CSV shaped like a results table (one row per run, mean state
counts and mean/mean-max squared errors) plus per-stage error curves suitable
for plotting.

Everything is driven by one master seed: experiment i generates from a child
seed derived from (master_seed, i), so a rerun with the same configuration
reproduces every file byte for byte.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, replace
from math import sqrt
from pathlib import Path
from typing import Optional

import numpy as np

from .continuous import (
    GridSolution,
    MaximizerConfig,
    UniformFixed,
    Vg1,
    Vg2,
    error_bound,
)
from .continuous import solve_grid
from .core import (
    Bundle,
    MODE_CONTINUOUS,
    ProblemSpec,
    TruncatedGaussian,
    ensure_valid,
    to_discrete,
)
from .discrete import DiscreteSolution, solve_discrete
from .io import (
    save_spec,
    write_delta_ledger,
    write_discrete_solution,
    write_error_report,
    write_grid_solution,
)
from .pwl import PwlFunction, RefinementBudget
from .simulate import ErrorReport, StageErrors, compare_solutions

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs for random instance generation.

    Bundles draw their members from a pool of n_resources; resources that end
    up in no bundle are dropped and the rest renumbered, so the generated
    instance's stage count is the size of the union.  Sizes round a normal
    draw and clamp to [1, n_resources]; values clamp to stay positive.
    bid_var and value_var are variances, not deviations.
    """

    n_resources: int = 10
    n_bundles: int = 4
    bundle_size_mean: float = 3.0
    bundle_size_std: float = 1.0
    value_mean: float = 15.0
    value_var: float = 2.0
    bid_mean_range: tuple[float, float] = (3.0, 6.0)
    bid_var: float = 0.5
    endowment: float = 30.0
    residual_slope: float = 0.7
    seed: int = 0


def generate_instance(params: GeneratorParams) -> ProblemSpec:
    """One random continuous-mode instance; same params give the same spec."""
    rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    sizes = np.clip(
        np.rint(rng.normal(params.bundle_size_mean, params.bundle_size_std,
                           params.n_bundles)),
        1, params.n_resources,
    ).astype(int)
    members = [
        np.sort(rng.choice(params.n_resources, size=s, replace=False) + 1)
        for s in sizes
    ]
    values = np.maximum(
        rng.normal(params.value_mean, sqrt(params.value_var), params.n_bundles),
        1e-6,
    )
    lo, hi = params.bid_mean_range
    bid_means = rng.uniform(lo, hi, params.n_resources)

    kept = sorted(set().union(*(set(m.tolist()) for m in members)))
    renumber = {old: new + 1 for new, old in enumerate(kept)}
    bundles = tuple(
        Bundle(frozenset(renumber[i] for i in mem.tolist()), float(v))
        for mem, v in zip(members, values)
    )
    dists = tuple(
        TruncatedGaussian(float(bid_means[old - 1]), sqrt(params.bid_var))
        for old in kept
    )
    spec = ProblemSpec(
        n=len(kept),
        bundles=bundles,
        endowment=float(params.endowment),
        residual=PwlFunction.linear(params.residual_slope, 0.0, params.endowment),
        distributions=dists,
        mode=MODE_CONTINUOUS,
    )
    return ensure_valid(spec)


@dataclass(frozen=True)
class RunSpec:
    """One solver configuration inside a suite."""

    kind: str  # "discrete" | "fixed" | "vg1" | "vg2"
    g: int = 0
    max_knots: int = 0
    threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("discrete", "fixed", "vg1", "vg2"):
            raise ValueError(f"unknown run kind {self.kind!r}")
        if self.kind == "fixed" and self.g < 2:
            raise ValueError("fixed-grid runs need g >= 2")
        if self.kind in ("vg1", "vg2") and self.max_knots < 2:
            raise ValueError("adaptive runs need max_knots >= 2")

    @property
    def name(self) -> str:
        if self.kind == "discrete":
            return "Discrete"
        if self.kind == "fixed":
            return f"G{self.g}"
        tag = f"{self.kind.upper()}-{self.max_knots}"
        return f"{tag}-{self.threshold:g}" if self.threshold else tag

    def strategy(self):
        if self.kind == "fixed":
            return UniformFixed(self.g)
        budget = RefinementBudget(self.max_knots, self.threshold)
        return Vg1(budget) if self.kind == "vg1" else Vg2(budget)


def default_runs() -> tuple[RunSpec, ...]:
    return (
        RunSpec("discrete"),
        RunSpec("fixed", g=5),
        RunSpec("fixed", g=10),
        RunSpec("fixed", g=15),
    )


@dataclass(frozen=True)
class ExperimentConfig:
    n_experiments: int = 20
    runs: tuple[RunSpec, ...] = field(default_factory=default_runs)
    output_dir: str = "suite-out"
    master_seed: int = 0
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    maximizer: MaximizerConfig = field(default_factory=MaximizerConfig)


def config_from_dict(data: dict) -> ExperimentConfig:
    cfg = ExperimentConfig()
    runs = tuple(
        RunSpec(
            kind=r["kind"],
            g=int(r.get("g", 0)),
            max_knots=int(r.get("max_knots", 0)),
            threshold=float(r.get("threshold", 0.0)),
        )
        for r in data["runs"]
    ) if "runs" in data else cfg.runs
    gen = data.get("generator", {})
    gen_params = GeneratorParams(
        n_resources=int(gen.get("n_resources", 10)),
        n_bundles=int(gen.get("n_bundles", 4)),
        bundle_size_mean=float(gen.get("bundle_size_mean", 3.0)),
        bundle_size_std=float(gen.get("bundle_size_std", 1.0)),
        value_mean=float(gen.get("value_mean", 15.0)),
        value_var=float(gen.get("value_var", 2.0)),
        bid_mean_range=tuple(gen.get("bid_mean_range", (3.0, 6.0))),  # type: ignore[arg-type]
        bid_var=float(gen.get("bid_var", 0.5)),
        endowment=float(gen.get("endowment", 30.0)),
        residual_slope=float(gen.get("residual_slope", 0.7)),
        seed=int(gen.get("seed", 0)),
    )
    mx = data.get("maximizer", {})
    maximizer = MaximizerConfig(
        samples_per_segment=int(mx.get("samples_per_segment", 32)),
        refine_tolerance=float(mx.get("refine_tolerance", 1e-4)),
    )
    return ExperimentConfig(
        n_experiments=int(data.get("n_experiments", 20)),
        runs=runs,
        output_dir=str(data.get("output_dir", "suite-out")),
        master_seed=int(data.get("master_seed", 0)),
        generator=gen_params,
        maximizer=maximizer,
    )


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "n_experiments": config.n_experiments,
        "master_seed": config.master_seed,
        "runs": [
            {"kind": r.kind, "g": r.g, "max_knots": r.max_knots,
             "threshold": r.threshold}
            for r in config.runs
        ],
        "generator": {
            "n_resources": config.generator.n_resources,
            "n_bundles": config.generator.n_bundles,
            "bundle_size_mean": config.generator.bundle_size_mean,
            "bundle_size_std": config.generator.bundle_size_std,
            "value_mean": config.generator.value_mean,
            "value_var": config.generator.value_var,
            "bid_mean_range": list(config.generator.bid_mean_range),
            "bid_var": config.generator.bid_var,
            "endowment": config.generator.endowment,
            "residual_slope": config.generator.residual_slope,
        },
        "maximizer": {
            "samples_per_segment": config.maximizer.samples_per_segment,
            "refine_tolerance": config.maximizer.refine_tolerance,
        },
    }


def derive_seed(master_seed: int, index: int) -> int:
    """Child seed for experiment `index`, stable across runs and platforms."""
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])


def _self_report(gold: DiscreteSolution) -> ErrorReport:
    """The gold standard compared against itself: zero everywhere."""
    per_stage = []
    for t in range(gold.n):
        states = sum(
            gold.endowment + 1
            for mask in gold.stage_bids[t]
            if (t, mask) not in gold.settled
        )
        per_stage.append(StageErrors(t, 0.0, 0.0, 0.0, 0.0, states))
    return ErrorReport(per_stage, 0.0, 0.0, 0.0, 0.0, gold.state_count)


@dataclass
class SuiteResult:
    output_dir: Path
    aggregate: dict[str, dict[str, float]]
    failures: list[int]


def run_experiment_suite(config: ExperimentConfig) -> SuiteResult:
    """Run every experiment and write all report files under the output dir.

    A solver failure aborts that experiment, is logged, and leaves the rest
    of the suite running; failed experiments are excluded from aggregates and
    recorded in the manifest.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_names = [r.name for r in config.runs]
    states_acc: dict[str, list[float]] = {name: [] for name in run_names}
    report_acc: dict[str, list[ErrorReport]] = {name: [] for name in run_names}
    ledger_acc: dict[str, list] = {name: [] for name in run_names}
    manifest_experiments = []
    failures: list[int] = []

    for i in range(config.n_experiments):
        seed = derive_seed(config.master_seed, i)
        exp_dir = out / f"exp_{i:02d}"
        try:
            instance = generate_instance(replace(config.generator, seed=seed))
            twin = to_discrete(instance)
            gold = solve_discrete(twin)
            exp_dir.mkdir(exist_ok=True)
            save_spec(instance, exp_dir / "instance.json")
            for run in config.runs:
                if run.kind == "discrete":
                    write_discrete_solution(gold, exp_dir / "Discrete_solution.csv")
                    report = _self_report(gold)
                    states_acc[run.name].append(float(gold.state_count))
                else:
                    sol = solve_grid(instance, run.strategy(), config.maximizer)
                    write_grid_solution(sol, exp_dir / f"{run.name}_solution.csv")
                    write_delta_ledger(sol.ledger, exp_dir / f"{run.name}_ledger.csv")
                    report = compare_solutions(gold, sol.values, instance,
                                               config.maximizer)
                    states_acc[run.name].append(float(sol.state_count))
                    ledger_acc[run.name].append(sol.ledger)
                write_error_report(report, exp_dir / f"{run.name}_errors.csv")
                report_acc[run.name].append(report)
            manifest_experiments.append(
                {"index": i, "seed": seed, "n": instance.n, "status": "ok"}
            )
        except Exception as err:  # noqa: BLE001 - suite must survive bad draws
            log.exception("experiment %d failed", i)
            failures.append(i)
            manifest_experiments.append(
                {"index": i, "seed": seed, "n": None,
                 "status": f"error: {type(err).__name__}: {err}"}
            )

    aggregate: dict[str, dict[str, float]] = {}
    for name in run_names:
        reports = report_acc[name]
        if not reports:
            continue
        aggregate[name] = {
            "states": float(np.mean(states_acc[name])),
            "mean_sq_value_error": float(np.mean([r.mean_value_err for r in reports])),
            "mean_max_sq_value_error": float(np.mean([r.max_value_err for r in reports])),
            "mean_sq_policy_error": float(np.mean([r.mean_policy_err for r in reports])),
            "mean_max_sq_policy_error": float(np.mean([r.max_policy_err for r in reports])),
        }

    with open(out / "aggregate.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "states", "mean_sq_value_error", "mean_max_sq_value_error",
                    "mean_sq_policy_error", "mean_max_sq_policy_error"])
        for name in run_names:
            if name in aggregate:
                a = aggregate[name]
                w.writerow([name, a["states"], a["mean_sq_value_error"],
                            a["mean_max_sq_value_error"], a["mean_sq_policy_error"],
                            a["mean_max_sq_policy_error"]])

    with open(out / "per_stage_errors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "stage", "mean_value_err", "max_value_err",
                    "mean_policy_err", "max_policy_err", "experiments"])
        for name in run_names:
            by_stage: dict[int, list[StageErrors]] = {}
            for report in report_acc[name]:
                for s in report.per_stage:
                    if s.states:
                        by_stage.setdefault(s.stage, []).append(s)
            for stage in sorted(by_stage):
                rows = by_stage[stage]
                w.writerow([
                    name, stage,
                    float(np.mean([r.mean_value_err for r in rows])),
                    float(np.mean([r.max_value_err for r in rows])),
                    float(np.mean([r.mean_policy_err for r in rows])),
                    float(np.mean([r.max_policy_err for r in rows])),
                    len(rows),
                ])

    with open(out / "bounds.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "stage", "mean_delta", "mean_cumulative_bound"])
        for name in run_names:
            ledgers = ledger_acc[name]
            if not ledgers:
                continue
            max_n = max(led.n for led in ledgers)
            for t in range(max_n + 1):
                with_stage = [led for led in ledgers if led.n >= t]
                w.writerow([
                    name, t,
                    float(np.mean([led.deltas[t] for led in with_stage])),
                    float(np.mean([error_bound(led, t) for led in with_stage])),
                ])

    manifest = config_to_dict(config)
    manifest["experiments"] = manifest_experiments
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return SuiteResult(out, aggregate, failures)
