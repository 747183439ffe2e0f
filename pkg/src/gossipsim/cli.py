"""Experiment front door: declarative plan files, preset grids, and CSV
plus manifest outputs.

A plan is flat key=value text; whitespace separates assignments, and a
bracketed comma list makes a key swept, e.g.:

    n=100 f=30 S=[1,4,8,16,32] topology=erdos_renyi
    strategy=random churn=1.0 replicates=10

The cross-product of swept keys defines the experiment cells. Each cell
writes `<family>_n<n>_f<f>_S<S>_<strategy>_<churn>.csv` and a matching
`.manifest`; a plan-level `summary.csv` collects final-round metrics.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .data import load_data_dir
from .engine import (CHURN_FREE_SCHEDULE, CHURN_SCHEDULE, CSV_HEADER, Seeds,
                     SimConfig, _atomic_write, run_replicated,
                     write_manifest, write_metrics_csv)
from .topology import FAMILIES, TopologySpec
from .attack import STRATEGIES

DATA_DIR_ENV = "GOSSIPSIM_DATA_DIR"

EXIT_OK = 0
EXIT_CELL_FAILED = 1
EXIT_CONFIG_ERROR = 2

_INT_KEYS = ("n", "f", "S", "replicates", "rounds", "eval_every", "seed")
_FLOAT_KEYS = ("churn",)
_STR_KEYS = ("topology", "strategy")
_SWEEPABLE = ("n", "f", "S", "topology", "strategy", "churn")
_ALL_KEYS = _INT_KEYS + _FLOAT_KEYS + _STR_KEYS

_DEFAULTS = {
    "n": 100, "f": 0, "S": 8, "topology": "erdos_renyi",
    "strategy": "random", "churn": 1.0, "replicates": 10,
    "rounds": None, "eval_every": None, "seed": 0,
}


class PlanError(Exception):
    """Plan text is syntactically or semantically invalid."""


@dataclass
class ExperimentPlan:
    """Resolved experiment cells plus shared run settings."""

    cells: list           # list of dicts with scalar values per cell
    replicates: int
    seed: int
    rounds: int | None    # None: pick schedule from each cell's churn
    eval_every: int | None

    def __len__(self):
        return len(self.cells)


def _parse_value(key: str, raw: str, lineno: int):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise PlanError(f"line {lineno}: {key} expects a number, "
                        f"got {raw!r}") from None
    return raw


def parse_plan(text: str) -> ExperimentPlan:
    """Parse and validate plan text into resolved experiment cells."""
    values: dict = dict(_DEFAULTS)
    swept: dict = {}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        for token in line.split():
            if "=" not in token:
                raise PlanError(f"line {lineno}: expected key=value, "
                                f"got {token!r}")
            key, raw = token.split("=", 1)
            if key not in _ALL_KEYS:
                raise PlanError(f"line {lineno}: unknown key {key!r}")
            if key in seen:
                raise PlanError(f"line {lineno}: duplicate key {key!r}")
            seen.add(key)
            if raw.startswith("[") and raw.endswith("]"):
                if key not in _SWEEPABLE:
                    raise PlanError(f"line {lineno}: {key} cannot be swept")
                items = [s for s in raw[1:-1].split(",") if s]
                if not items:
                    raise PlanError(f"line {lineno}: empty sweep for {key}")
                swept[key] = [_parse_value(key, s, lineno) for s in items]
            else:
                values[key] = _parse_value(key, raw, lineno)

    sweep_keys = sorted(swept)
    cells = []
    for combo in itertools.product(*(swept[k] for k in sweep_keys)):
        cell = {k: values[k] for k in _SWEEPABLE}
        cell.update(dict(zip(sweep_keys, combo)))
        _validate_cell(cell)
        cells.append(cell)
    if not cells:
        cell = {k: values[k] for k in _SWEEPABLE}
        _validate_cell(cell)
        cells = [cell]
    return ExperimentPlan(cells=cells, replicates=values["replicates"],
                          seed=values["seed"], rounds=values["rounds"],
                          eval_every=values["eval_every"])


def _validate_cell(cell: dict) -> None:
    if cell["topology"] not in FAMILIES:
        raise PlanError(f"unknown topology {cell['topology']!r} "
                        f"(choose from {', '.join(FAMILIES)})")
    if cell["strategy"] not in STRATEGIES:
        raise PlanError(f"unknown strategy {cell['strategy']!r}")
    if cell["f"] > cell["n"]:
        raise PlanError(f"f exceeds n ({cell['f']} > {cell['n']})")
    if cell["S"] < 1:
        raise PlanError(f"S must be >= 1, got {cell['S']}")
    if not 0.0 < cell["churn"] <= 1.0:
        raise PlanError(f"churn must be in (0, 1], got {cell['churn']}")
    if cell["topology"] == "random_regular" and (cell["n"] * 20) % 2:
        raise PlanError(f"odd n*k for random_regular (n={cell['n']}, k=20)")
    if cell["topology"] in ("fanout", "random_regular", "watts_strogatz") \
            and cell["n"] <= 20:
        raise PlanError(f"n={cell['n']} too small for degree-20 topology")


def cell_name(cell: dict) -> str:
    return (f"{cell['topology']}_n{cell['n']}_f{cell['f']}_S{cell['S']}_"
            f"{cell['strategy']}_{cell['churn']}")


def cell_config(cell: dict, plan: ExperimentPlan) -> SimConfig:
    churn = cell["churn"]
    default_rounds, default_eval = (CHURN_FREE_SCHEDULE if churn >= 1.0
                                    else CHURN_SCHEDULE)
    return SimConfig(
        n=cell["n"], f=cell["f"], num_partitions=cell["S"],
        topology=TopologySpec(cell["topology"]),
        strategy=cell["strategy"], churn_online_prob=churn,
        rounds=plan.rounds or default_rounds,
        eval_every=plan.eval_every or default_eval,
        seeds=Seeds.from_master(plan.seed),
    )


# ------------------------------------------------------------- presets
#
# Ready-made grids for the four standard studies: the churn-free random-
# placement partition sweep, the classical-vs-random placement comparison
# on hub-heavy topologies, the churn attacker-count grid on zipf, and the
# churn counterpart of the partition sweep.

_SWEEP_S = "S=[1,4,8,16,32]"
_FOUR_FAMILIES = "topology=[erdos_renyi,fanout,random_regular,watts_strogatz]"

PRESETS = {
    "churnfree-random-sweep": [
        f"n=100 f=30 {_SWEEP_S} {_FOUR_FAMILIES} strategy=random churn=1.0",
        f"n=150 f=45 {_SWEEP_S} {_FOUR_FAMILIES} strategy=random churn=1.0",
    ],
    "placement-comparison": [
        f"n=150 f=45 {_SWEEP_S} topology=[watts_strogatz,zipf] "
        f"strategy=[classical,random] churn=1.0",
    ],
    "churn-f-grid": [
        "n=150 S=8 f=[0,5,15,20,25,40,45] topology=zipf "
        "strategy=[classical,random] churn=0.2",
    ],
    "churn-random-sweep": [
        f"n=100 f=30 {_SWEEP_S} {_FOUR_FAMILIES} strategy=random churn=0.2",
        f"n=150 f=45 {_SWEEP_S} {_FOUR_FAMILIES} strategy=random churn=0.2",
    ],
}


def preset_plan(name: str, seed: int | None = None,
                replicates: int | None = None) -> ExperimentPlan:
    if name not in PRESETS:
        raise PlanError(f"unknown preset {name!r} "
                        f"(choose from {', '.join(sorted(PRESETS))})")
    cells = []
    base = None
    for text in PRESETS[name]:
        part = parse_plan(text)
        cells.extend(part.cells)
        base = part
    plan = ExperimentPlan(cells=cells, replicates=base.replicates,
                          seed=base.seed, rounds=base.rounds,
                          eval_every=base.eval_every)
    if seed is not None:
        plan.seed = seed
    if replicates is not None:
        plan.replicates = replicates
    return plan


# ------------------------------------------------------------ execution

def execute_plan(plan: ExperimentPlan, training, test, out_dir,
                 workers: int = 1) -> int:
    """Run every cell, fail-soft; returns the process exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = [cell_name(c) for c in plan.cells]
    if len(set(names)) != len(names):
        raise PlanError("plan cells do not have distinct output names")

    summary_rows = []
    failures = 0
    for cell, name in zip(plan.cells, names):
        config = cell_config(cell, plan)
        print(f"[{name}] running {plan.replicates} replicate(s), "
              f"{config.rounds} rounds", flush=True)
        try:
            series = run_replicated(config, plan.replicates, training, test,
                                    workers=workers)
        except Exception as exc:  # fail-soft: record and continue
            failures += 1
            print(f"[{name}] FAILED: {exc}", file=sys.stderr, flush=True)
            summary_rows.append(f"{name},FAILED,,,,,")
            continue
        write_metrics_csv(out_dir / f"{name}.csv", series)
        write_manifest(out_dir / f"{name}.manifest", series)
        fin = series.final()
        summary_rows.append(
            f"{name},{fin['round']},{fin['mean_test_acc']:.6f},"
            f"{fin['std_test_acc']:.6f},{fin['mean_backdoor_acc']:.6f},"
            f"{fin['std_backdoor_acc']:.6f},{fin['messages_sent']:.1f}")
        print(f"[{name}] final test={fin['mean_test_acc']:.4f} "
              f"backdoor={fin['mean_backdoor_acc']:.4f}", flush=True)

    _atomic_write(out_dir / "summary.csv",
                  "cell," + CSV_HEADER + "\n" + "\n".join(summary_rows) + "\n")
    return EXIT_CELL_FAILED if failures else EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="gossipsim",
        description="Gossip-learning poisoning experiments.")
    ap.add_argument("--plan", help="plan file (flat key=value text)")
    ap.add_argument("--preset", help="named experiment grid: "
                    + ", ".join(sorted(PRESETS)))
    ap.add_argument("--data-dir", default=os.environ.get(DATA_DIR_ENV),
                    help=f"directory of IDX dataset files "
                         f"(or ${DATA_DIR_ENV})")
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--workers", type=int, default=1,
                    help="parallel replicate workers")
    ap.add_argument("--seed", type=int, default=None,
                    help="override the plan's master seed")
    args = ap.parse_args(argv)

    try:
        if bool(args.plan) == bool(args.preset):
            raise PlanError("give exactly one of --plan or --preset")
        if args.preset:
            plan = preset_plan(args.preset, seed=args.seed)
        else:
            plan = parse_plan(Path(args.plan).read_text())
            if args.seed is not None:
                plan.seed = args.seed
        if not args.data_dir:
            raise PlanError(f"no dataset directory: use --data-dir or "
                            f"set ${DATA_DIR_ENV} (gossipsim-datagen "
                            f"creates a synthetic corpus)")
        training, test = load_data_dir(args.data_dir)
    except (PlanError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    return execute_plan(plan, training, test, args.out, workers=args.workers)


if __name__ == "__main__":
    raise SystemExit(main())
