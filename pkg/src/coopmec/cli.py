"""Command-line front end.

Subcommands:
  gen           materialise scenario files from a generator config
  run           Monte-Carlo sweep -> metrics.csv / runs.csv / run_meta.txt
  trace         per-iteration cost series of the iterative solvers
  oracle-check  compare every algorithm against the exhaustive optimum
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import harness, oracle, scenario
from .errors import ConfigError, CoopMecError
from .harness import ALGORITHMS, ExperimentSpec
from .icrbi import STEP_RULES

ORACLE_SLACK = 0.005          # relative margin an algorithm may beat the grid by


def _parse_algos(raw: list[str] | None, default: tuple[str, ...]) -> tuple[str, ...]:
    if not raw:
        return default
    out: list[str] = []
    for chunk in raw:
        out += [a for a in chunk.split(",") if a]
    return tuple(out)


def _parse_sweep(text: str) -> tuple[str, tuple[float, ...]]:
    var, sep, rest = text.partition("=")
    if not sep or not rest:
        raise ConfigError(f"--sweep expects var=v1,v2,... got {text!r}")
    try:
        values = tuple(float(v) for v in rest.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad sweep value in {text!r}: {exc}") from None
    return var, values


def _parse_step_rule(text: str) -> tuple[str, float]:
    rule, sep, x = text.partition(":")
    if rule not in STEP_RULES:
        raise ConfigError(f"--step-rule expects one of {STEP_RULES}, got {rule!r}")
    try:
        x0 = float(x) if sep else 0.1
    except ValueError:
        raise ConfigError(f"bad step scale in {text!r}") from None
    return rule, x0


def _load_config(path: str | None) -> scenario.GenConfig:
    return scenario.read_config(path) if path else scenario.GenConfig()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="generator config file")
    p.add_argument("--algo", action="append",
                   help=f"algorithms, comma separated (default varies); "
                        f"known: {','.join(ALGORITHMS)}")
    p.add_argument("--realizations", type=int, default=None)
    p.add_argument("--seed", type=int, default=0, help="seed base")
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--step-rule", default="diminish:0.1",
                   help="diminish:<x> or square:<x>")
    p.add_argument("--eps", type=float, default=None,
                   help="iterative-solver settlement threshold")


def cmd_gen(args) -> int:
    cfg = _load_config(args.config)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    count = args.realizations or 1
    for r in range(count):
        seed = args.seed + r
        sc = scenario.generate(dataclasses.replace(cfg, seed=seed))
        path = out / f"scenario_{seed}.txt"
        scenario.write_scenario(sc, path)
        print(path)
    return 0


def _build_spec(args, default_algos: tuple[str, ...]) -> ExperimentSpec:
    cfg = _load_config(args.config)
    rule, x0 = _parse_step_rule(args.step_rule)
    sweep_var, sweep_values = ("f0_max", ())
    if getattr(args, "sweep", None):
        sweep_var, sweep_values = _parse_sweep(args.sweep)
    return ExperimentSpec(
        algorithms=_parse_algos(args.algo, default_algos), base=cfg,
        sweep_var=sweep_var, sweep_values=sweep_values,
        realizations=args.realizations or 100, out=args.out,
        seed_base=args.seed, step_rule=rule, x0=x0, eps=args.eps)


def cmd_run(args) -> int:
    spec = _build_spec(args, ALGORITHMS)
    table, records = harness.run_experiment(spec)
    print(f"{'algorithm':<10} {'value':>14} {'mean cost':>12} {'ratio':>7} "
          f"{'UE power':>10} {'overhead':>9}")
    for row in table:
        print(f"{row.algorithm:<10} {row.sweep_value:>14.6g} "
              f"{row.mean_total_cost:>12.4f} {row.accomplished_ratio:>7.3f} "
              f"{row.mean_ue_power_w:>10.4f} {row.mean_overhead:>9.1f}")
    if spec.out:
        print(f"wrote {spec.out}/metrics.csv, runs.csv, run_meta.txt "
              f"({len(records)} runs)")
    return 0


def cmd_trace(args) -> int:
    defaults = ("icrbi", "maxtask", "minpw", "decentral")
    spec = _build_spec(args, defaults)
    for name, path in harness.convergence_trace(spec).items():
        print(f"{name}: {path}")
    return 0


def cmd_oracle_check(args) -> int:
    cfg = _load_config(args.config)
    if cfg.n > oracle.BRUTE_FORCE_LIMIT:
        cfg = dataclasses.replace(cfg, n=3)
    algos = _parse_algos(args.algo, ALGORITHMS)
    rule, x0 = _parse_step_rule(args.step_rule)
    count = args.realizations or 20
    worst: dict[str, float] = {a: 0.0 for a in algos}
    for r in range(count):
        seed = args.seed + r
        sc = scenario.generate(dataclasses.replace(cfg, seed=seed))
        ref = oracle.brute_force(sc).cost.total
        parts = [f"seed={seed} oracle={ref:.6f}"]
        for algo in algos:
            asg, _ = harness.run_algorithm(sc, algo, step_rule=rule, x0=x0,
                                           eps=args.eps)
            gap = (asg.cost.total - ref) / ref
            worst[algo] = min(worst[algo], gap)
            parts.append(f"{algo}={asg.cost.total:.6f} ({gap:+.3%})")
        print("  ".join(parts))
    bad = {a: g for a, g in worst.items() if g < -ORACLE_SLACK}
    if bad:
        for a, g in bad.items():
            print(f"FAIL: {a} beat the oracle by {-g:.3%} (> {ORACLE_SLACK:.1%})")
        return 1
    print(f"ok: no algorithm beats the oracle by more than {ORACLE_SLACK:.1%}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="coopmec",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="write scenario files")
    _add_common(p_gen)
    p_gen.set_defaults(fn=cmd_gen)

    p_run = sub.add_parser("run", help="Monte-Carlo sweep")
    _add_common(p_run)
    p_run.add_argument("--sweep", help="var=v1,v2,... (f0_max, n, w, phi0)")
    p_run.set_defaults(fn=cmd_run)

    p_trace = sub.add_parser("trace", help="per-iteration cost series")
    _add_common(p_trace)
    p_trace.set_defaults(fn=cmd_trace)

    p_oc = sub.add_parser("oracle-check", help="compare against brute force")
    _add_common(p_oc)
    p_oc.set_defaults(fn=cmd_oracle_check)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CoopMecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
