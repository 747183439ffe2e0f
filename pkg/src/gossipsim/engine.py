"""Round-based simulation loop and replicated-run aggregation.

One round: sample which nodes are online, deliver the previous round's
buffered messages to online recipients (offline recipients drop them),
let every online node take its periodic tick, buffer all newly emitted
messages for the next round, and periodically evaluate the honest nodes
on the clean and backdoor sets. Everything is deterministic given the
config's seeds.
"""

from __future__ import annotations

import multiprocessing
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import __version__
from .attack import PlacementStrategy, select_byzantine
from .data import (DEFAULT_TRIGGER, Dataset, TriggerPattern,
                   build_eval_sets, poison_shard, shard_iid)
from .model import Hyperparams, batch_accuracy
from .protocol import (DEFAULT_TOKENS, NodeState, TokenPolicy, init_node,
                       on_receive, on_tick)
from .topology import TopologySpec, graph_fingerprint

SEED_NAMES = ("graph", "shard", "poison", "eval", "protocol", "churn")


@dataclass(frozen=True)
class Seeds:
    """Independent seeds for each source of randomness in a run."""

    graph: int
    shard: int
    poison: int
    eval: int
    protocol: int
    churn: int

    @staticmethod
    def from_master(master: int) -> "Seeds":
        state = np.random.SeedSequence(master).generate_state(len(SEED_NAMES))
        return Seeds(*(int(s) for s in state))

    def for_replicate(self, rep: int) -> "Seeds":
        """Replicate 0 is the base run; higher replicates remix every seed
        except eval, so all replicates share the same evaluation sets."""
        if rep == 0:
            return self
        remixed = {}
        for name in SEED_NAMES:
            value = getattr(self, name)
            if name == "eval":
                remixed[name] = value
            else:
                remixed[name] = int(np.random.SeedSequence(
                    [value, rep]).generate_state(1)[0])
        return Seeds(**remixed)

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in SEED_NAMES}


@dataclass
class SimConfig:
    """Complete description of one experiment cell."""

    n: int
    f: int
    num_partitions: int
    topology: TopologySpec
    strategy: str = "random"
    churn_online_prob: float = 1.0
    rounds: int = 1500
    eval_every: int = 25
    shard_size: int = 250
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    tokens: TokenPolicy = DEFAULT_TOKENS
    seeds: Seeds = field(default_factory=lambda: Seeds.from_master(0))
    poison_fraction: float = 0.2
    target_label: int = 0
    byzantine_always_online: bool = False
    train_batch_size: int = 10
    trigger: TriggerPattern = DEFAULT_TRIGGER
    train_on_tick: bool = False  # train each online round instead of
                                 # on every received message
    train_batches: int | None = 1   # per training event; None: full epoch

    def __post_init__(self):
        if not 0 <= self.f <= self.n:
            raise ValueError(f"f={self.f} outside [0, n={self.n}]")
        if self.rounds < 1 or self.eval_every < 1:
            raise ValueError("rounds and eval_every must be >= 1")
        if not 0.0 < self.churn_online_prob <= 1.0:
            raise ValueError("churn_online_prob must be in (0, 1]")
        PlacementStrategy(self.strategy)  # validates


# Default schedules: churn-free runs plateau well inside 1500 rounds; with
# 20% liveness exchanges are ~5x rarer, so churn runs get 6000 rounds.
CHURN_FREE_SCHEDULE = (1500, 25)
CHURN_SCHEDULE = (6000, 100)


@dataclass
class MetricsRecord:
    round: int
    mean_test_acc: float
    mean_backdoor_acc: float
    messages_sent: int


@dataclass
class RunManifest:
    """Flat, audit-friendly description of what a run actually executed."""

    entries: dict

    def to_text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.entries.items())


def evaluate_honest(nodes, clean_eval: Dataset,
                    backdoor_eval: Dataset) -> tuple:
    """Mean accuracy of honest-node models on each set. Offline nodes
    keep their frozen models and still count."""
    honest = [nd for nd in nodes if not nd.byzantine]
    if not honest:
        raise ValueError("no honest nodes to evaluate")
    stacked = np.stack([nd.params.values for nd in honest])
    test_acc = batch_accuracy(stacked, clean_eval).mean()
    backdoor_acc = batch_accuracy(stacked, backdoor_eval).mean()
    return float(test_acc), float(backdoor_acc)


def run(config: SimConfig, training: Dataset, test: Dataset,
        clean_eval: Dataset | None = None,
        backdoor_eval: Dataset | None = None) -> tuple:
    """Execute one simulation; returns (records, manifest)."""
    seeds = config.seeds
    rng_graph = np.random.default_rng(seeds.graph)
    rng_shard = np.random.default_rng(seeds.shard)
    rng_poison = np.random.default_rng(seeds.poison)
    rng_protocol = np.random.default_rng(seeds.protocol)
    rng_churn = np.random.default_rng(seeds.churn)

    if clean_eval is None or backdoor_eval is None:
        clean_eval, backdoor_eval = build_eval_sets(
            test, np.random.default_rng(seeds.eval),
            target_label=config.target_label, trigger=config.trigger)

    graph = config.topology.build(config.n, rng_graph)
    assignment = shard_iid(training, config.n, config.shard_size, rng_shard)
    byz = select_byzantine(graph, config.f,
                           PlacementStrategy(config.strategy), rng_poison)

    nodes = []
    for v in range(config.n):
        shard = training.subset(assignment.shards[v], "local-shard")
        if v in byz.members:
            shard = poison_shard(shard, config.poison_fraction,
                                 config.target_label, rng_poison,
                                 config.trigger)
        nodes.append(init_node(v, shard, config.num_partitions,
                               v in byz.members))

    byz_ids = np.array(sorted(byz.members), dtype=np.int64)
    records = []
    messages_sent = 0
    buffered = []

    def snapshot(round_index):
        test_acc, backdoor_acc = evaluate_honest(
            nodes, clean_eval, backdoor_eval)
        records.append(MetricsRecord(round_index, test_acc, backdoor_acc,
                                     messages_sent))

    snapshot(0)
    for round_index in range(1, config.rounds + 1):
        online = rng_churn.random(config.n) < config.churn_online_prob
        if config.byzantine_always_online and len(byz_ids):
            online[byz_ids] = True

        outgoing = []
        for send in buffered:
            dest = send.destination
            if not online[dest]:
                continue  # dropped: recipient offline this round
            reply = on_receive(nodes[dest], send.msg, graph.neighbors[dest],
                               config.hyperparams, rng_protocol,
                               config.tokens, config.train_batch_size,
                               0 if config.train_on_tick
                               else config.train_batches)
            if reply is not None:
                outgoing.append(reply)
        for v in range(config.n):
            if not online[v]:
                continue
            send = on_tick(nodes[v], graph.neighbors[v], rng_protocol,
                           config.tokens,
                           config.hyperparams if config.train_on_tick
                           else None,
                           config.train_batch_size,
                           config.train_batches)
            if send is not None:
                outgoing.append(send)

        messages_sent += len(outgoing)
        buffered = outgoing
        if round_index % config.eval_every == 0:
            snapshot(round_index)

    manifest = RunManifest({
        "version": __version__,
        "topology": config.topology.label(),
        "family": config.topology.family,
        "n": config.n,
        "f": config.f,
        "partitions": config.num_partitions,
        "strategy": config.strategy,
        "churn_online_prob": config.churn_online_prob,
        "rounds": config.rounds,
        "eval_every": config.eval_every,
        "shard_size": config.shard_size,
        "learning_rate": config.hyperparams.learning_rate,
        "l2_penalty": config.hyperparams.l2_penalty,
        "token_cap": config.tokens.cap,
        "token_refill": config.tokens.refill,
        "train_batch_size": config.train_batch_size,
        "train_batches": config.train_batches,
        "train_on_tick": config.train_on_tick,
        "poison_fraction": config.poison_fraction,
        "target_label": config.target_label,
        "byzantine_always_online": config.byzantine_always_online,
        **{f"seed_{k}": v for k, v in seeds.as_dict().items()},
        "byzantine_ids": ",".join(str(v) for v in byz_ids),
        "graph_hash": graph_fingerprint(graph),
        "messages_total": messages_sent,
    })
    return records, manifest


@dataclass
class ReplicatedSeries:
    """Pointwise mean/stddev of metrics across replicate runs."""

    rounds: np.ndarray
    mean_test_acc: np.ndarray
    std_test_acc: np.ndarray
    mean_backdoor_acc: np.ndarray
    std_backdoor_acc: np.ndarray
    mean_messages: np.ndarray
    replicates: int
    manifests: list

    def final(self) -> dict:
        return {
            "round": int(self.rounds[-1]),
            "mean_test_acc": float(self.mean_test_acc[-1]),
            "std_test_acc": float(self.std_test_acc[-1]),
            "mean_backdoor_acc": float(self.mean_backdoor_acc[-1]),
            "std_backdoor_acc": float(self.std_backdoor_acc[-1]),
            "messages_sent": float(self.mean_messages[-1]),
        }

    def tail_mean(self, points: int = 4) -> tuple:
        """Mean of the last few evaluation points; a steadier plateau
        readout than the single final record."""
        k = min(points, len(self.rounds))
        return (float(self.mean_test_acc[-k:].mean()),
                float(self.mean_backdoor_acc[-k:].mean()))


_POOL_DATA = {}


def _run_one(config: SimConfig):
    d = _POOL_DATA
    return run(config, d["training"], d["test"], d["clean"], d["backdoor"])


def run_replicated(config: SimConfig, replicates: int, training: Dataset,
                   test: Dataset, workers: int = 1) -> ReplicatedSeries:
    """Run independent replicates differing only in derived sub-seeds and
    aggregate them pointwise. The evaluation sets are drawn once."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    clean_eval, backdoor_eval = build_eval_sets(
        test, np.random.default_rng(config.seeds.eval),
        target_label=config.target_label, trigger=config.trigger)
    configs = [replace(config, seeds=config.seeds.for_replicate(r))
               for r in range(replicates)]

    _POOL_DATA.update(training=training, test=test, clean=clean_eval,
                      backdoor=backdoor_eval)
    try:
        if workers > 1 and replicates > 1:
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(min(workers, replicates)) as pool:
                results = pool.map(_run_one, configs)
        else:
            results = [_run_one(c) for c in configs]
    finally:
        _POOL_DATA.clear()

    all_records = [recs for recs, _ in results]
    manifests = [man for _, man in results]
    rounds = np.array([rec.round for rec in all_records[0]])
    test_mat = np.array([[rec.mean_test_acc for rec in recs]
                         for recs in all_records])
    back_mat = np.array([[rec.mean_backdoor_acc for rec in recs]
                         for recs in all_records])
    msg_mat = np.array([[rec.messages_sent for rec in recs]
                        for recs in all_records], dtype=np.float64)
    return ReplicatedSeries(
        rounds=rounds,
        mean_test_acc=test_mat.mean(axis=0),
        std_test_acc=test_mat.std(axis=0),
        mean_backdoor_acc=back_mat.mean(axis=0),
        std_backdoor_acc=back_mat.std(axis=0),
        mean_messages=msg_mat.mean(axis=0),
        replicates=replicates,
        manifests=manifests,
    )


CSV_HEADER = ("round,mean_test_acc,std_test_acc,"
              "mean_backdoor_acc,std_backdoor_acc,messages_sent")


def _atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as f:
        f.write(text)
    os.replace(tmp, path)


def write_metrics_csv(path, series: ReplicatedSeries) -> None:
    lines = [CSV_HEADER]
    for i in range(len(series.rounds)):
        lines.append(
            f"{int(series.rounds[i])},"
            f"{series.mean_test_acc[i]:.6f},{series.std_test_acc[i]:.6f},"
            f"{series.mean_backdoor_acc[i]:.6f},"
            f"{series.std_backdoor_acc[i]:.6f},"
            f"{series.mean_messages[i]:.1f}")
    _atomic_write(path, "\n".join(lines) + "\n")


def write_manifest(path, series: ReplicatedSeries) -> None:
    """Cell manifest: the base replicate's manifest plus per-replicate
    attacker memberships for auditability."""
    base = dict(series.manifests[0].entries)
    base["replicates"] = series.replicates
    for i, man in enumerate(series.manifests):
        base[f"byzantine_ids_rep{i}"] = man.entries["byzantine_ids"]
    _atomic_write(path, RunManifest(base).to_text())
