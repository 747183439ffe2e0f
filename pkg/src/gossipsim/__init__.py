"""Deterministic simulator of partitioned, token-metered gossip learning
under backdoor data poisoning by Byzantine nodes."""

__version__ = "0.1.0"

from .data import (Dataset, Sample, ShardAssignment, TriggerPattern,
                   apply_trigger, build_eval_sets, load_data_dir,
                   load_dataset, load_idx, poison_shard, shard_iid)
from .model import (Hyperparams, ParamVector, PartitionMsg, accuracy,
                    extract_partition, local_update, loss_and_gradient,
                    merge_partition, predict, slice_bounds)
from .topology import (Graph, TopologySpec, degree, gen_erdos_renyi,
                       gen_fanout, gen_random_regular, gen_watts_strogatz,
                       gen_zipf, is_connected)
from .attack import ByzantineSet, PlacementStrategy, select_byzantine
from .protocol import (NodeState, OutboundSend, TokenPolicy, init_node,
                       on_receive, on_tick)
from .engine import (MetricsRecord, Seeds, SimConfig, evaluate_honest, run,
                     run_replicated, write_metrics_csv)

__all__ = [
    "__version__",
    "Dataset", "Sample", "ShardAssignment", "TriggerPattern",
    "apply_trigger", "build_eval_sets", "load_data_dir", "load_dataset",
    "load_idx", "poison_shard", "shard_iid",
    "Hyperparams", "ParamVector", "PartitionMsg", "accuracy",
    "extract_partition", "local_update", "loss_and_gradient",
    "merge_partition", "predict", "slice_bounds",
    "Graph", "TopologySpec", "degree", "gen_erdos_renyi", "gen_fanout",
    "gen_random_regular", "gen_watts_strogatz", "gen_zipf", "is_connected",
    "ByzantineSet", "PlacementStrategy", "select_byzantine",
    "NodeState", "OutboundSend", "TokenPolicy", "init_node", "on_receive",
    "on_tick",
    "MetricsRecord", "Seeds", "SimConfig", "evaluate_honest", "run",
    "run_replicated", "write_metrics_csv",
]
