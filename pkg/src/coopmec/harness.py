"""Seeded Monte-Carlo experiment runner with CSV output.

One experiment sweeps a single generator parameter over a value list, draws
`realizations` scenarios per value (seed = seed_base + realization index, the
same seeds for every sweep value so curves are paired), runs each selected
algorithm, and aggregates per (algorithm, value).  Per-run records are kept
next to the aggregates so every figure can be re-derived; floats are written
with repr() so a rerun of the same spec is byte-identical.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from . import decentral, icrbi, matching, oracle
from .errors import ConfigError, InfeasibleAssignment, NonConvergence, UnknownAlgorithm
from .model import Assignment, Scenario, ue_total_power, validate_constraints
from .scenario import GenConfig, generate

ARTIFACT = "coopmec 0.1.0"
ALGORITHMS = ("icrbi", "maxtask", "minpw", "decentral", "noncope")
SWEEP_VARS = ("f0_max", "n", "w", "phi0")


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: algorithms, base generator config, one swept variable."""

    algorithms: tuple[str, ...]
    base: GenConfig
    sweep_var: str = "f0_max"
    sweep_values: tuple[float, ...] = ()
    realizations: int = 100
    out: str | None = None
    seed_base: int = 0
    step_rule: str = "diminish"
    x0: float = 0.1
    eps: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        var = "n" if self.sweep_var == "N" else self.sweep_var
        object.__setattr__(self, "sweep_var", var)
        values = tuple(self.sweep_values) or (getattr(self.base, var),)
        object.__setattr__(self, "sweep_values", values)
        if not self.algorithms:
            raise ConfigError("no algorithms selected")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise UnknownAlgorithm(f"algorithm {a!r}")
        if var not in SWEEP_VARS:
            raise ConfigError(f"sweep variable {var!r} not one of {SWEEP_VARS}")
        if self.realizations < 1:
            raise ConfigError("realizations must be >= 1")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.step_rule not in icrbi.STEP_RULES:
            raise UnknownAlgorithm(f"step rule {self.step_rule!r}")


@dataclass(frozen=True)
class RunRecord:
    """One (algorithm, sweep value, realization) outcome."""

    algorithm: str
    sweep_value: float
    realization: int
    seed: int
    total_cost: float
    accomplished: int
    ratio: float
    ue_power_w: float
    overhead: int
    converged: bool
    iterations: int


@dataclass(frozen=True)
class MetricRow:
    """Aggregate over all realizations of one (algorithm, sweep value)."""

    algorithm: str
    sweep_value: float
    mean_total_cost: float
    mean_accomplished: float
    accomplished_ratio: float
    mean_ue_power_w: float
    mean_overhead: float
    realizations: int


def apply_sweep(cfg: GenConfig, var: str, value) -> GenConfig:
    if var == "n":
        if value != int(value):
            raise ConfigError(f"task count must be integral, got {value!r}")
        value = int(value)
    return dataclasses.replace(cfg, **{var: value})


def run_algorithm(sc: Scenario, algorithm: str, step_rule: str = "diminish",
                  x0: float = 0.1, eps: float | None = None,
                  max_iter: int = 2000) -> tuple[Assignment, dict]:
    """Dispatch one solver; extras report overhead/convergence bookkeeping.

    A non-converged iterative run still yields its repaired assignment,
    flagged converged=False."""
    if algorithm == "icrbi":
        try:
            asg, trace = icrbi.solve(sc, step_rule=step_rule, x0=x0, eps=eps,
                                     max_iter=max_iter)
            converged, iters = True, trace.iterations
        except NonConvergence as exc:
            asg, trace = exc.assignment, exc.trace
            converged, iters = False, exc.trace.iterations
        overhead = decentral.overhead_report("icrbi", {"n": sc.n})
        extras = {"overhead": overhead, "converged": converged,
                  "iterations": iters, "trace": trace}
    elif algorithm in matching.CRITERIA:
        asg, state = matching.run(sc, criterion=algorithm)
        counters = {"n": sc.n,
                    "n_h": sc.n - len(matching.local_seed_set(sc)),
                    "n_mec": sum(1 for d in asg.target.values() if d == 0)}
        extras = {"overhead": decentral.overhead_report(algorithm, counters),
                  "converged": True, "iterations": len(state.trace),
                  "trace": state}
    elif algorithm == "decentral":
        asg, log = decentral.run(sc)
        extras = {"overhead": decentral.overhead_report("decentral", log.counters()),
                  "converged": True, "iterations": log.rounds, "trace": log}
    elif algorithm == "noncope":
        asg = oracle.non_cope(sc)
        extras = {"overhead": 0, "converged": True, "iterations": 0, "trace": None}
    else:
        raise UnknownAlgorithm(f"algorithm {algorithm!r}")
    violations = validate_constraints(sc, asg)
    if violations:
        raise InfeasibleAssignment(violations)
    return asg, extras


def run_experiment(spec: ExperimentSpec) -> tuple[list[MetricRow], list[RunRecord]]:
    """Execute the full sweep; write CSVs + metadata when spec.out is set."""
    records: list[RunRecord] = []
    for value in spec.sweep_values:
        cfg = apply_sweep(spec.base, spec.sweep_var, value)
        for r in range(spec.realizations):
            seed = spec.seed_base + r
            sc = generate(dataclasses.replace(cfg, seed=seed))
            for algo in spec.algorithms:
                asg, extras = run_algorithm(sc, algo, step_rule=spec.step_rule,
                                            x0=spec.x0, eps=spec.eps)
                records.append(RunRecord(
                    algorithm=algo, sweep_value=float(value), realization=r,
                    seed=seed, total_cost=asg.cost.total,
                    accomplished=asg.accomplished,
                    ratio=asg.accomplished / sc.n,
                    ue_power_w=ue_total_power(sc, asg),
                    overhead=extras["overhead"], converged=extras["converged"],
                    iterations=extras["iterations"]))
    table = aggregate(spec, records)
    if spec.out is not None:
        write_outputs(spec, table, records)
    return table, records


def aggregate(spec: ExperimentSpec, records: list[RunRecord]) -> list[MetricRow]:
    """Means per (algorithm, sweep value), summed in record (= seed) order."""
    table = []
    for algo in spec.algorithms:
        for value in spec.sweep_values:
            grp = [r for r in records
                   if r.algorithm == algo and r.sweep_value == float(value)]
            m = len(grp)
            if m != spec.realizations:
                raise ConfigError(f"{algo} at {value}: {m} records, "
                                  f"expected {spec.realizations}")
            table.append(MetricRow(
                algorithm=algo, sweep_value=float(value),
                mean_total_cost=sum(r.total_cost for r in grp) / m,
                mean_accomplished=sum(r.accomplished for r in grp) / m,
                accomplished_ratio=sum(r.ratio for r in grp) / m,
                mean_ue_power_w=sum(r.ue_power_w for r in grp) / m,
                mean_overhead=sum(r.overhead for r in grp) / m,
                realizations=m))
    return table


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


METRICS_HEADER = ("algorithm,sweep_var,sweep_value,mean_total_cost,"
                  "mean_accomplished,accomplished_ratio,mean_ue_power_w,"
                  "mean_overhead,realizations")
RUNS_HEADER = ("algorithm,sweep_var,sweep_value,realization,seed,total_cost,"
               "accomplished,ratio,ue_power_w,overhead,converged,iterations")


def write_outputs(spec: ExperimentSpec, table: list[MetricRow],
                  records: list[RunRecord]) -> dict[str, Path]:
    out = Path(spec.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"metrics": out / "metrics.csv", "runs": out / "runs.csv",
             "meta": out / "run_meta.txt"}
    with open(paths["metrics"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(METRICS_HEADER + "\n")
        for row in table:
            fh.write(",".join([row.algorithm, spec.sweep_var,
                               _fmt(row.sweep_value), _fmt(row.mean_total_cost),
                               _fmt(row.mean_accomplished),
                               _fmt(row.accomplished_ratio),
                               _fmt(row.mean_ue_power_w), _fmt(row.mean_overhead),
                               str(row.realizations)]) + "\n")
    with open(paths["runs"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RUNS_HEADER + "\n")
        for r in records:
            fh.write(",".join([r.algorithm, spec.sweep_var, _fmt(r.sweep_value),
                               str(r.realization), str(r.seed),
                               _fmt(r.total_cost), str(r.accomplished),
                               _fmt(r.ratio), _fmt(r.ue_power_w),
                               str(r.overhead), _fmt(r.converged),
                               str(r.iterations)]) + "\n")
    with open(paths["meta"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"artifact = {ARTIFACT}\n")
        fh.write(f"algorithms = {', '.join(spec.algorithms)}\n")
        fh.write(f"sweep_var = {spec.sweep_var}\n")
        fh.write("sweep_values = " + ", ".join(_fmt(float(v)) for v in spec.sweep_values) + "\n")
        fh.write(f"realizations = {spec.realizations}\n")
        fh.write(f"seed_base = {spec.seed_base}\n")
        fh.write(f"step_rule = {spec.step_rule}\n")
        fh.write(f"x0 = {_fmt(spec.x0)}\n")
        fh.write(f"eps = {'auto' if spec.eps is None else _fmt(spec.eps)}\n")
        fh.write("[base config]\n")
        for f in dataclasses.fields(spec.base):
            fh.write(f"{f.name} = {getattr(spec.base, f.name)!r}\n")
    return paths


def convergence_trace(spec: ExperimentSpec) -> dict[str, Path]:
    """Per-iteration cost series on one scenario (seed = spec.seed_base).

    The iterative solver writes its own trace format; the matching and
    decentralized algorithms emit (step, total_cost) series.  The baseline
    has no iterations and is rejected."""
    out = Path(spec.out if spec.out is not None else ".")
    out.mkdir(parents=True, exist_ok=True)
    sc = generate(dataclasses.replace(spec.base, seed=spec.seed_base))
    paths: dict[str, Path] = {}
    for algo in spec.algorithms:
        if algo == "noncope":
            raise UnknownAlgorithm("the baseline has no iteration trace")
        if algo == "icrbi":
            try:
                _, trace = icrbi.solve(sc, step_rule=spec.step_rule, x0=spec.x0,
                                       eps=spec.eps)
            except NonConvergence as exc:
                trace = exc.trace
            path = out / f"icrbi_{spec.step_rule}_{_fmt(spec.x0)}.csv"
            trace.to_csv(path)
        else:
            if algo == "decentral":
                _, log = decentral.run(sc)
                series = log.cost_series
                with open(out / "decentral_events.txt", "w", encoding="utf-8",
                          newline="\n") as fh:
                    for line in log.lines():
                        fh.write(line + "\n")
                paths["decentral_events"] = out / "decentral_events.txt"
            else:
                _, state = matching.run(sc, criterion=algo)
                series = state.cost_series
            path = out / f"{algo}.csv"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write("step,total_cost\n")
                for i, c in enumerate(series):
                    fh.write(f"{i},{c!r}\n")
        paths[algo] = path
    return paths
