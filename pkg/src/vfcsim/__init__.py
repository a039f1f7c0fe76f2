"""Discrete-event simulator for three-tier vehicular fog computing.

Vehicles stream through a square service area, generating compute tasks
that a scheduler places on the vehicle itself, one of a grid of fog
nodes, or a remote cloud. A tabular q-learning scheduler is trained
against fcfs, round-robin, and weighted-fair-queueing baselines, and
runs are scored on processing time, servicing time, service ratio,
a cumulative composite reward, and per-edge accumulated profit.
"""

from .agent import (
    ACTIONS,
    NUM_ACTIONS,
    Action,
    Bundle,
    HyperParams,
    QTable,
    Tier,
    action_from_ordinal,
    epsilon_at,
    greedy_policy,
    init_q_values,
    select_action,
    update_q_value,
)
from .config import build_config, dump_config, load_config, parse_config_text
from .engine import (
    CheckpointError,
    EpisodeResult,
    EvalResult,
    Event,
    EventKind,
    RunConfig,
    SimParams,
    TrainingResult,
    build_nodes,
    build_scheduler,
    derive_seed,
    load_tables,
    run_episode,
    run_evaluation,
    run_training,
    save_tables,
    write_event_log,
)
from .errors import ConfigError, ValidationError
from .link import (
    BITS_PER_MB,
    LinkParams,
    LinkRangeError,
    Position,
    dbm_to_mw,
    processing_time,
    shannon_rate,
    snr_at_distance,
    upload_time,
)
from .metrics import (
    EdgeRewardLog,
    EpisodeAggregate,
    MetricsReport,
    TaskLedger,
    TaskRecord,
    aap,
    apt,
    asr,
    ast,
    build_report,
    cumulative_reward,
)
from .rewards import (
    QualitySample,
    ResponseSample,
    RewardWeights,
    UtilizationSample,
    WastageSample,
    qos_reward,
    quality,
    resource_utilization,
    resource_wastage,
    response_time_reward,
    total_reward,
)
from .schedulers import (
    Allocation,
    DecisionContext,
    FcfsScheduler,
    NodeView,
    Placement,
    QLearningScheduler,
    RoundRobinScheduler,
    Scheduler,
    WfqScheduler,
    WfqState,
)
from .state_space import (
    NUM_STATES,
    AppType,
    DiscreteState,
    Level,
    ResponseLevel,
    SlaLevel,
    StateSpaceConfig,
    TelemetrySnapshot,
    discretize,
    snapshot_ordinal,
    state_from_index,
    state_index,
)
from .traffic import SCENARIOS, Scenario, VehicleSpec, load_trace_csv, sample_vehicles

__version__ = "0.1.0"

__all__ = [
    "ACTIONS",
    "AppType",
    "Action",
    "Allocation",
    "BITS_PER_MB",
    "Bundle",
    "CheckpointError",
    "ConfigError",
    "DecisionContext",
    "DiscreteState",
    "EdgeRewardLog",
    "EpisodeAggregate",
    "EpisodeResult",
    "EvalResult",
    "Event",
    "EventKind",
    "FcfsScheduler",
    "HyperParams",
    "Level",
    "LinkParams",
    "LinkRangeError",
    "MetricsReport",
    "NUM_ACTIONS",
    "NUM_STATES",
    "NodeView",
    "Placement",
    "Position",
    "QLearningScheduler",
    "QTable",
    "QualitySample",
    "ResponseLevel",
    "ResponseSample",
    "RewardWeights",
    "RoundRobinScheduler",
    "RunConfig",
    "SCENARIOS",
    "Scenario",
    "Scheduler",
    "SimParams",
    "SlaLevel",
    "StateSpaceConfig",
    "TaskLedger",
    "TaskRecord",
    "TelemetrySnapshot",
    "Tier",
    "TrainingResult",
    "UtilizationSample",
    "ValidationError",
    "VehicleSpec",
    "WastageSample",
    "WfqScheduler",
    "WfqState",
    "aap",
    "action_from_ordinal",
    "apt",
    "asr",
    "ast",
    "build_config",
    "build_nodes",
    "build_report",
    "build_scheduler",
    "cumulative_reward",
    "dbm_to_mw",
    "derive_seed",
    "discretize",
    "dump_config",
    "epsilon_at",
    "greedy_policy",
    "init_q_values",
    "load_config",
    "load_tables",
    "load_trace_csv",
    "parse_config_text",
    "processing_time",
    "qos_reward",
    "quality",
    "resource_utilization",
    "resource_wastage",
    "response_time_reward",
    "run_episode",
    "run_evaluation",
    "run_training",
    "sample_vehicles",
    "save_tables",
    "select_action",
    "shannon_rate",
    "snapshot_ordinal",
    "snr_at_distance",
    "state_from_index",
    "state_index",
    "total_reward",
    "update_q_value",
    "upload_time",
    "write_event_log",
]
