"""Discrete-event simulation of a three-tier vehicular fog system.

A pre-drawn vehicle population moves rectilinearly (reflecting at the area
boundary) across a grid of fog nodes. Every decision interval each active
vehicle may emit a task; the scheduler under test places it on the vehicle
itself, a fog node, or the cloud. Fog nodes grant CPU shares (the single
hard capacity constraint) and run FIFO queues; every task resolves to
serviced or dropped no later than min(arrival + deadline, vehicle exit),
enforced by an internal expiry event, so ledgers always conserve tasks.

Events dispatch in (time, sequence) order from a single heap, and all
randomness flows through one seeded generator per episode, which makes
runs bit-reproducible for a given configuration, scheduler and seed.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

from .agent import (
    HyperParams,
    NUM_ACTIONS,
    QTable,
    Tier,
    epsilon_at,
    init_q_values,
    update_q_value,
)
from .errors import ValidationError
from .link import BITS_PER_MB, LinkParams, Position, shannon_rate, snr_at_distance
from .metrics import (
    EdgeRewardLog,
    EpisodeAggregate,
    MetricsReport,
    TaskLedger,
    TaskRecord,
    build_report,
)
from .rewards import (
    QualitySample,
    ResponseSample,
    RewardWeights,
    UtilizationSample,
    WastageSample,
    qos_reward,
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
)
from .state_space import NUM_STATES, StateSpaceConfig, TelemetrySnapshot, snapshot_ordinal
from .traffic import Scenario, VehicleSpec, sample_vehicles


class EventKind(IntEnum):
    VEHICLE_ENTER = 0
    VEHICLE_EXIT = 1
    TASK_ARRIVAL = 2
    UPLOAD_DONE = 3
    EXECUTION_DONE = 4
    SNAPSHOT = 5
    # internal bookkeeping kind: resolves tasks that silently outlived
    # min(arrival + deadline, vehicle exit)
    TASK_EXPIRE = 6


@dataclass(frozen=True, slots=True)
class Event:
    """Public face of one dispatched event (the hot loop uses bare tuples)."""

    time: float
    sequence: int
    kind: EventKind


# task lifecycle stages
_PLACED = 0
_UPLOADING = 1
_QUEUED = 2
_EXECUTING = 3
_DONE = 4


@dataclass
class SimParams:
    """Geometry, fleet, node and task-population constants."""

    fog_nodes: int = 9
    area_m: float = 3000.0
    cloud_cpu_hz: float = 1.0e10
    vehicle_cpu_min_hz: float = 2.0e9
    vehicle_cpu_max_hz: float = 6.0e9
    node_cpu_min_hz: float = 3.0e9
    node_cpu_max_hz: float = 1.0e10
    node_cpu_init: float = 0.20
    node_mem_init: float = 0.15
    node_disk_init: float = 0.10
    node_mem_mb: float = 1024.0
    node_storage_mb: float = 4096.0
    rolling_window: int = 20
    rate_window_s: float = 10.0
    demand_ema_alpha: float = 0.2
    decision_interval_s: float = 1.0
    arrival_prob: float = 0.05
    eval_episodes: int = 1
    bundle_small: float = 1.0
    bundle_medium: float = 1.5
    bundle_large: float = 2.0
    app_type_mips_scale: float = 600.0
    task_size_mb_min: float = 5.0
    task_size_mb_max: float = 10.0
    task_demand_mips_min: float = 100.0
    task_demand_mips_max: float = 500.0
    task_deadline_s_min: float = 5.0
    task_deadline_s_max: float = 10.0
    min_dwell_s: float = 1.0
    topology_seed: int = 20231
    wfq_weights: str = "cpu"

    def validate(self) -> None:
        if self.fog_nodes < 1:
            raise ValidationError(f"fog_nodes={self.fog_nodes!r} must be >= 1")
        positives = (
            ("area_m", self.area_m),
            ("cloud_cpu_hz", self.cloud_cpu_hz),
            ("vehicle_cpu_min_hz", self.vehicle_cpu_min_hz),
            ("node_cpu_min_hz", self.node_cpu_min_hz),
            ("node_mem_mb", self.node_mem_mb),
            ("node_storage_mb", self.node_storage_mb),
            ("rate_window_s", self.rate_window_s),
            ("decision_interval_s", self.decision_interval_s),
            ("app_type_mips_scale", self.app_type_mips_scale),
            ("task_size_mb_min", self.task_size_mb_min),
            ("task_demand_mips_min", self.task_demand_mips_min),
            ("task_deadline_s_min", self.task_deadline_s_min),
            ("min_dwell_s", self.min_dwell_s),
            ("bundle_small", self.bundle_small),
        )
        for name, v in positives:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
                raise ValidationError(f"{name} must be positive, got {v!r}")
        ordered = (
            ("vehicle_cpu_min_hz", self.vehicle_cpu_min_hz, "vehicle_cpu_max_hz", self.vehicle_cpu_max_hz),
            ("node_cpu_min_hz", self.node_cpu_min_hz, "node_cpu_max_hz", self.node_cpu_max_hz),
            ("task_size_mb_min", self.task_size_mb_min, "task_size_mb_max", self.task_size_mb_max),
            ("task_demand_mips_min", self.task_demand_mips_min, "task_demand_mips_max", self.task_demand_mips_max),
            ("task_deadline_s_min", self.task_deadline_s_min, "task_deadline_s_max", self.task_deadline_s_max),
        )
        for lo_name, lo, hi_name, hi in ordered:
            if hi < lo:
                raise ValidationError(f"{hi_name}={hi!r} below {lo_name}={lo!r}")
        fractions = (
            ("node_cpu_init", self.node_cpu_init),
            ("node_mem_init", self.node_mem_init),
            ("node_disk_init", self.node_disk_init),
            ("arrival_prob", self.arrival_prob),
        )
        for name, v in fractions:
            if not (isinstance(v, (int, float)) and 0.0 <= v <= 1.0):
                raise ValidationError(f"{name}={v!r} outside [0, 1]")
        if self.node_cpu_init >= 1.0:
            raise ValidationError("node_cpu_init must leave grantable capacity below 1.0")
        if self.rolling_window < 1:
            raise ValidationError(f"rolling_window={self.rolling_window!r} must be >= 1")
        if not (0.0 < self.demand_ema_alpha <= 1.0):
            raise ValidationError(f"demand_ema_alpha={self.demand_ema_alpha!r} outside (0, 1]")
        if self.eval_episodes < 1:
            raise ValidationError(f"eval_episodes={self.eval_episodes!r} must be >= 1")
        if not (1.0 <= self.bundle_small <= self.bundle_medium <= self.bundle_large):
            raise ValidationError(
                "bundle factors must satisfy 1 <= small <= medium <= large, got "
                f"{self.bundle_small!r}, {self.bundle_medium!r}, {self.bundle_large!r}"
            )
        if not (self.wfq_weights in ("cpu", "equal") or _parse_weight_list(self.wfq_weights)):
            raise ValidationError(
                f"wfq_weights must be 'cpu', 'equal' or a comma list of positives, got {self.wfq_weights!r}"
            )


def _parse_weight_list(text: str) -> list[float] | None:
    try:
        weights = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        return None
    if not weights or any(not (math.isfinite(w) and w > 0.0) for w in weights):
        return None
    return weights


@dataclass
class RunConfig:
    """Everything a run needs, grouped by module."""

    state: StateSpaceConfig = field(default_factory=StateSpaceConfig)
    weights: RewardWeights = field(default_factory=RewardWeights)
    latency_floor: float = 1e-3
    quality_desired: float = 0.9
    agent: HyperParams = field(default_factory=HyperParams)
    link: LinkParams = field(default_factory=LinkParams)
    sim: SimParams = field(default_factory=SimParams)
    scenario: Scenario | None = None

    def validate(self) -> None:
        self.state.validate()
        self.weights.validate()
        self.agent.validate()
        self.link.validate()
        self.sim.validate()
        if not (math.isfinite(self.latency_floor) and self.latency_floor > 0.0):
            raise ValidationError(f"latency_floor must be positive, got {self.latency_floor!r}")
        if not (0.0 <= self.quality_desired <= 1.0):
            raise ValidationError(f"quality_desired={self.quality_desired!r} outside [0, 1]")
        if self.scenario is not None:
            self.scenario.validate()


@dataclass(slots=True)
class Task:
    """One offloadable job and its running lifecycle bookkeeping."""

    task_id: int
    vehicle: "VehicleState"
    size_bits: float
    demand_mips: float
    deadline: float
    arrival: float
    bound: float
    cycles: float
    mem_frac: float
    disk_frac: float
    bw_frac: float
    stage: int = _PLACED
    tier: int = -1
    exec_node: int = -1
    decision_node: int = -1
    state_ordinal: int = -1
    action_ordinal: int = -1
    cpu_share: float = 0.0
    eff_cpu: float = 0.0
    bundle: float = 1.0
    proc_planned: float = 0.0
    upload_planned: float = 0.0
    upload: float = 0.0
    wait: float = 0.0
    proc: float = 0.0
    upload_done_time: float = 0.0
    mem_alloc: float = 0.0
    disk_alloc: float = 0.0
    bw_alloc: float = 0.0


class VehicleState:
    """Kinematics and the vehicle's own FIFO CPU."""

    __slots__ = ("spec", "exit_time", "vx", "vy", "busy_until")

    def __init__(self, spec: VehicleSpec):
        self.spec = spec
        self.exit_time = spec.entry_time + spec.dwell
        self.vx = spec.speed * math.cos(spec.heading)
        self.vy = spec.speed * math.sin(spec.heading)
        self.busy_until = spec.entry_time

    def position_at(self, t: float, area: float) -> tuple[float, float]:
        dt = t - self.spec.entry_time
        return (
            _reflect(self.spec.x + self.vx * dt, area),
            _reflect(self.spec.y + self.vy * dt, area),
        )


def _reflect(p: float, limit: float) -> float:
    """Fold a coordinate back into [0, limit] (mirror at both walls)."""
    m = p % (2.0 * limit)
    return m if m <= limit else 2.0 * limit - m


class NodeState:
    """One fog node: capacity commitments, FIFO queue, rolling telemetry."""

    __slots__ = (
        "node_id", "x", "y", "cpu_freq", "baseline", "cpu_commit", "mem_commit",
        "disk_commit", "bw_commit", "run_queue", "resp_window", "resp_sum",
        "dl_window", "dl_sum", "outcome_window", "outcome_sum", "arrivals",
        "demand_ema", "window_size",
    )

    def __init__(self, node_id: int, x: float, y: float, cpu_freq: float, sim: SimParams):
        self.node_id = node_id
        self.x = x
        self.y = y
        self.cpu_freq = cpu_freq
        self.baseline = sim.node_cpu_init
        self.cpu_commit = sim.node_cpu_init
        self.mem_commit = sim.node_mem_init
        self.disk_commit = sim.node_disk_init
        self.bw_commit = 0.0
        self.run_queue: deque[Task] = deque()
        self.window_size = sim.rolling_window
        self.resp_window: deque[float] = deque()
        self.resp_sum = 0.0
        self.dl_window: deque[float] = deque()
        self.dl_sum = 0.0
        self.outcome_window: deque[int] = deque()
        self.outcome_sum = 0
        self.arrivals: deque[float] = deque()
        self.demand_ema = 0.0

    def record_arrival(self, now: float, window_s: float, ema_alpha: float) -> None:
        arrivals = self.arrivals
        arrivals.append(now)
        cutoff = now - window_s
        while arrivals[0] <= cutoff:
            arrivals.popleft()
        rate = len(arrivals) / window_s
        self.demand_ema = ema_alpha * rate + (1.0 - ema_alpha) * self.demand_ema

    def record_response(self, response: float, deadline: float) -> None:
        if len(self.resp_window) == self.window_size:
            self.resp_sum -= self.resp_window.popleft()
            self.dl_sum -= self.dl_window.popleft()
        self.resp_window.append(response)
        self.resp_sum += response
        self.dl_window.append(deadline)
        self.dl_sum += deadline

    def record_outcome(self, ok: bool) -> None:
        if len(self.outcome_window) == self.window_size:
            self.outcome_sum -= self.outcome_window.popleft()
        v = 1 if ok else 0
        self.outcome_window.append(v)
        self.outcome_sum += v

    def reliability(self) -> float:
        n = len(self.outcome_window)
        return self.outcome_sum / n if n else 1.0

    def recent_response(self) -> float:
        n = len(self.resp_window)
        return self.resp_sum / n if n else 0.0

    def sla_met(self) -> bool:
        n = len(self.resp_window)
        if n == 0:
            return True
        return self.resp_sum <= self.dl_sum

    def commit_cpu(self, share: float) -> None:
        new = self.cpu_commit + share
        if new > 1.0 + 1e-9:
            raise RuntimeError(
                f"node {self.node_id}: cpu share overflow ({new!r} > 1.0)"
            )
        self.cpu_commit = new if new <= 1.0 else 1.0

    def release_cpu(self, share: float) -> None:
        new = self.cpu_commit - share
        if new < self.baseline - 1e-9:
            raise RuntimeError(
                f"node {self.node_id}: cpu share underflow ({new!r} < baseline)"
            )
        self.cpu_commit = new if new >= self.baseline else self.baseline


@dataclass
class EpisodeResult:
    ledger: TaskLedger
    aggregate: EpisodeAggregate
    edge_log: EdgeRewardLog
    events: list[dict] | None
    epsilon: float


@dataclass
class TrainingResult:
    curve: list[dict]
    tables: dict[int, QTable]


@dataclass
class EvalResult:
    report: MetricsReport
    ledger: TaskLedger
    aggregates: list[EpisodeAggregate]
    edge_log: EdgeRewardLog
    events: list[dict] | None


class CheckpointError(RuntimeError):
    """Raised when persisting trained tables fails; carries the curve."""

    def __init__(self, message: str, curve: list[dict]):
        super().__init__(message)
        self.curve = curve


def derive_seed(master_seed: int, index: int) -> int:
    """Stream seed for episode or run `index` under a master seed."""
    return master_seed * 1_000_003 + index


def build_nodes(cfg: RunConfig) -> list[NodeState]:
    """Fog grid: node i sits at the center of cell i of a k x k grid.

    Per-node CPU frequencies come from the dedicated topology seed so the
    infrastructure is identical across training and evaluation runs.
    """
    sim = cfg.sim
    n = sim.fog_nodes
    k = math.ceil(math.sqrt(n))
    cell = sim.area_m / k
    trng = random.Random(sim.topology_seed)
    freqs = [trng.uniform(sim.node_cpu_min_hz, sim.node_cpu_max_hz) for _ in range(n)]
    nodes = []
    for i in range(n):
        row, col = divmod(i, k)
        nodes.append(
            NodeState(i, (col + 0.5) * cell, (row + 0.5) * cell, freqs[i], sim)
        )
    return nodes


def resolve_wfq_weights(cfg: RunConfig, nodes: list[NodeState]) -> list[float]:
    mode = cfg.sim.wfq_weights
    if mode == "equal":
        return [1.0] * len(nodes)
    if mode == "cpu":
        return [node.cpu_freq / 1e9 for node in nodes]
    weights = _parse_weight_list(mode)
    if weights is None or len(weights) != len(nodes):
        raise ValidationError(
            f"wfq_weights list must name {len(nodes)} positive weights, got {mode!r}"
        )
    return weights


def build_scheduler(
    cfg: RunConfig,
    name: str,
    tables: dict[int, QTable] | None = None,
    epsilon: float = 0.0,
) -> Scheduler:
    nodes = build_nodes(cfg)
    if name == "fcfs":
        return FcfsScheduler()
    if name == "rr":
        return RoundRobinScheduler(cfg.sim.fog_nodes)
    if name == "wfq":
        return WfqScheduler(resolve_wfq_weights(cfg, nodes))
    if name == "qlearn":
        if tables is None:
            raise ValidationError(
                "qlearn evaluation needs a trained checkpoint (q-tables missing)"
            )
        bundles = (cfg.sim.bundle_small, cfg.sim.bundle_medium, cfg.sim.bundle_large)
        return QLearningScheduler(tables, cfg.agent, random.Random(0), bundles, epsilon)
    raise ValidationError(f"unknown scheduler {name!r}")


class _Episode:
    """Mutable state of one episode run (split out of run_episode for clarity)."""

    def __init__(
        self,
        cfg: RunConfig,
        scheduler: Scheduler,
        seed: int,
        arrival_prob: float,
        train: bool,
        collect_events: bool,
        vehicles: list[VehicleSpec] | None,
        episode_index: int,
    ):
        cfg.validate()
        if cfg.scenario is None:
            raise ValidationError("run config has no scenario")
        self.cfg = cfg
        self.sim = cfg.sim
        self.link = cfg.link
        self.scheduler = scheduler
        self.train = train and scheduler.uses_state
        self.collect_events = collect_events
        self.episode_index = episode_index
        self.rng = random.Random(seed)
        self.nodes = build_nodes(cfg)
        self.area = self.sim.area_m
        if vehicles is None:
            vehicles = sample_vehicles(
                cfg.scenario,
                self.rng,
                self.area,
                self.sim.vehicle_cpu_min_hz,
                self.sim.vehicle_cpu_max_hz,
                min_dwell=self.sim.min_dwell_s,
            )
        self.vehicle_specs = vehicles
        self.arrival_prob = arrival_prob
        self.heap: list[tuple[float, int, int, object]] = []
        self.seq = 0
        self.active: dict[int, VehicleState] = {}
        self.ledger = TaskLedger()
        self.edge_log = EdgeRewardLog()
        self.events: list[dict] | None = [] if collect_events else None
        self.task_counter = 0
        self.resolved = 0
        self.comp_sums = [0.0, 0.0, 0.0, 0.0]
        self.reward_sum = 0.0
        self.visit_counts: dict[tuple[int, int, int], int] | None = (
            {} if (self.train and cfg.agent.alpha_schedule == "harmonic") else None
        )
        scheduler.on_episode_start()
        if scheduler.uses_state:
            scheduler.rng = self.rng

    # -- plumbing ---------------------------------------------------------

    def push(self, time: float, kind: int, payload: object) -> None:
        heapq.heappush(self.heap, (time, self.seq, kind, payload))
        self.seq += 1

    def log(self, time: float, kind: str, task_id: int, node_id: int, detail: dict) -> None:
        if self.events is not None:
            detail["episode"] = self.episode_index
            self.events.append(
                {"time": time, "kind": kind, "task_id": task_id, "node_id": node_id, "detail": detail}
            )

    # -- setup ------------------------------------------------------------

    def schedule_all(self) -> None:
        for spec in self.vehicle_specs:
            self.push(spec.entry_time, EventKind.VEHICLE_ENTER, spec)
        scenario = self.cfg.scenario
        interval = self.sim.decision_interval_s
        ticks = int(scenario.duration / interval)
        if ticks > self.cfg.agent.max_time_steps:
            ticks = self.cfg.agent.max_time_steps
        for i in range(ticks):
            self.push(i * interval, EventKind.SNAPSHOT, None)

    # -- telemetry --------------------------------------------------------

    def snapshot(self, node: NodeState, task: Task, available: int) -> TelemetrySnapshot:
        sim = self.sim
        at_weight = task.demand_mips / sim.app_type_mips_scale
        dl_span = sim.task_deadline_s_max - sim.task_deadline_s_min
        if dl_span > 0.0:
            op_req = (sim.task_deadline_s_max - task.deadline) / dl_span
            op_req = 0.0 if op_req < 0.0 else (1.0 if op_req > 1.0 else op_req)
        else:
            op_req = 0.0
        return TelemetrySnapshot(
            cpu_usage=_clamp01(node.cpu_commit),
            mem_usage=_clamp01(node.mem_commit),
            disk_usage=_clamp01(node.disk_commit),
            net_bw_usage=_clamp01(node.bw_commit),
            request_rate=len(node.arrivals) / sim.rate_window_s,
            app_type_weight=at_weight if at_weight <= 1.0 else 1.0,
            expected_demand=node.demand_ema,
            recent_response_time=node.recent_response(),
            sla_met=node.sla_met(),
            op_requirement=op_req,
            available_nodes=available,
            storage_availability=_clamp01(1.0 - node.disk_commit),
        )

    def state_for(self, node: NodeState, task: Task, x: float, y: float) -> int:
        available = 0
        range_sq = self.link.v2i_range_m * self.link.v2i_range_m
        for nd in self.nodes:
            dx = nd.x - x
            dy = nd.y - y
            if dx * dx + dy * dy <= range_sq:
                available += 1
        return snapshot_ordinal(self.snapshot(node, task, available), self.cfg.state)

    # -- event handlers ---------------------------------------------------

    def run(self) -> EpisodeResult:
        self.schedule_all()
        heap = self.heap
        while heap:
            time, _seq, kind, payload = heapq.heappop(heap)
            if kind == EventKind.TASK_ARRIVAL:
                self.on_task_arrival(time, payload)
            elif kind == EventKind.UPLOAD_DONE:
                self.on_upload_done(time, payload)
            elif kind == EventKind.EXECUTION_DONE:
                self.on_execution_done(time, payload)
            elif kind == EventKind.TASK_EXPIRE:
                self.on_task_expire(time, payload)
            elif kind == EventKind.SNAPSHOT:
                self.on_snapshot(time)
            elif kind == EventKind.VEHICLE_ENTER:
                self.on_vehicle_enter(time, payload)
            else:
                self.on_vehicle_exit(time, payload)
        if self.resolved != self.task_counter:
            raise RuntimeError(
                f"task conservation violated: {self.resolved} resolved of {self.task_counter}"
            )
        tasks = self.ledger.k_total
        if tasks:
            agg = EpisodeAggregate(
                wastage=self.comp_sums[0] / tasks,
                utilization=self.comp_sums[1] / tasks,
                response=self.comp_sums[2] / tasks,
                qos=self.comp_sums[3] / tasks,
                reward_sum=self.reward_sum,
                tasks=tasks,
                serviced=self.ledger.k_serviced,
            )
        else:
            agg = EpisodeAggregate(0.0, 0.0, 0.0, 0.0, 0.0, 0, 0)
        eps = self.scheduler.epsilon if self.scheduler.uses_state else 0.0
        return EpisodeResult(self.ledger, agg, self.edge_log, self.events, eps)

    def on_vehicle_enter(self, now: float, spec: VehicleSpec) -> None:
        veh = VehicleState(spec)
        self.active[spec.vehicle_id] = veh
        self.push(veh.exit_time, EventKind.VEHICLE_EXIT, spec.vehicle_id)
        self.log(now, "VehicleEnter", -1, -1, {"vehicle": spec.vehicle_id})

    def on_vehicle_exit(self, now: float, vehicle_id: int) -> None:
        self.active.pop(vehicle_id, None)
        self.log(now, "VehicleExit", -1, -1, {"vehicle": vehicle_id})

    def on_snapshot(self, now: float) -> None:
        p = self.arrival_prob
        if p <= 0.0:
            return
        rng = self.rng
        sim = self.sim
        mb = BITS_PER_MB
        for veh in self.active.values():
            if veh.exit_time <= now:
                continue
            if rng.random() >= p:
                continue
            size_mb = rng.uniform(sim.task_size_mb_min, sim.task_size_mb_max)
            demand = rng.uniform(sim.task_demand_mips_min, sim.task_demand_mips_max)
            deadline = rng.uniform(sim.task_deadline_s_min, sim.task_deadline_s_max)
            size_bits = size_mb * mb
            bound = now + deadline
            if veh.exit_time < bound:
                bound = veh.exit_time
            task = Task(
                task_id=self.task_counter,
                vehicle=veh,
                size_bits=size_bits,
                demand_mips=demand,
                deadline=deadline,
                arrival=now,
                bound=bound,
                cycles=size_bits * self.link.cycles_per_bit,
                mem_frac=_clamp01(size_mb / sim.node_mem_mb),
                disk_frac=_clamp01(size_mb / sim.node_storage_mb),
                bw_frac=_clamp01((size_bits / deadline) / self.link.wired_rate_bps),
            )
            self.task_counter += 1
            self.push(now, EventKind.TASK_ARRIVAL, task)

    def on_task_arrival(self, now: float, task: Task) -> None:
        veh = task.vehicle
        x, y = veh.position_at(now, self.area)
        link = self.link
        range_sq = link.v2i_range_m * link.v2i_range_m
        slack = task.bound - now

        views: list[NodeView] = []
        decision: NodeState | None = None
        decision_d2 = math.inf
        reachable_count = 0
        for node in self.nodes:
            dx = node.x - x
            dy = node.y - y
            d2 = dx * dx + dy * dy
            if d2 < decision_d2:
                decision_d2 = d2
                decision = node
            reachable = d2 <= range_sq
            if reachable:
                reachable_count += 1
                dist = math.sqrt(d2)
                rate = shannon_rate(link.v2i_bandwidth_hz, snr_at_distance(link, dist))
                up = task.size_bits / rate
                remaining = slack - up
                req_share = (
                    (task.cycles / remaining) / node.cpu_freq if remaining > 0.0 else math.inf
                )
            else:
                dist = math.sqrt(d2)
                req_share = math.inf
            free = 1.0 - node.cpu_commit
            views.append(
                NodeView(
                    node_id=node.node_id,
                    cpu_freq_hz=node.cpu_freq,
                    free_share=free if free > 0.0 else 0.0,
                    max_share=1.0 - node.baseline,
                    reachable=reachable,
                    distance_m=dist,
                    req_share=req_share,
                    weight=1.0,
                )
            )

        task.decision_node = decision.node_id
        decision.record_arrival(now, self.sim.rate_window_s, self.sim.demand_ema_alpha)
        self.log(
            now, "TaskArrival", task.task_id, decision.node_id,
            {
                "vehicle": veh.spec.vehicle_id,
                "size_bits": task.size_bits,
                "demand_mips": task.demand_mips,
                "deadline": task.deadline,
            },
        )

        requirement = Allocation(
            cpu_mips=(task.cycles / slack) / 1e6,
            mem_mb=task.size_bits / BITS_PER_MB,
            bw_mbps=(task.size_bits / slack) / 1e6,
        )
        ctx = DecisionContext(
            time=now,
            task_id=task.task_id,
            requirement=requirement,
            nodes=views,
        )
        scheduler = self.scheduler
        if scheduler.uses_state:
            task.state_ordinal = self.state_for(decision, task, x, y)
            ctx.state_ordinal = task.state_ordinal
            scheduler.decision_node = decision.node_id

        placement = scheduler.select(ctx)
        self.push(task.bound, EventKind.TASK_EXPIRE, task)
        if placement is None:
            if scheduler.uses_state:
                task.action_ordinal = scheduler.last_action_ordinal
            self.drop(task, now)
            return
        task.action_ordinal = placement.action_ordinal
        self.place(task, placement, views, now)

    def place(self, task: Task, placement: Placement, views: list[NodeView], now: float) -> None:
        task.tier = int(placement.tier)
        task.bundle = placement.bundle_factor
        veh = task.vehicle
        if placement.tier == Tier.LOCAL:
            start = veh.busy_until if veh.busy_until > now else now
            proc = task.cycles / veh.spec.local_cpu_hz
            completion = start + proc
            if completion > task.bound:
                self.drop(task, now)
                return
            veh.busy_until = completion
            task.wait = start - now
            task.proc = proc
            task.stage = _EXECUTING
            self.push(completion, EventKind.EXECUTION_DONE, task)
            return

        if placement.tier == Tier.CLOUD:
            relay = self.nodes[placement.node_id]
            view = views[placement.node_id]
            rate = shannon_rate(
                self.link.v2i_bandwidth_hz, snr_at_distance(self.link, view.distance_m)
            )
            v2i = task.size_bits / rate
            wired = task.size_bits / self.link.wired_rate_bps
            task.upload_planned = v2i + wired
            task.exec_node = placement.node_id
            task.eff_cpu = _clamp01((task.cycles / (task.bound - task.arrival)) / self.sim.cloud_cpu_hz)
            task.bw_alloc = _clamp01(task.bw_frac * placement.bundle_factor)
            relay.bw_commit += task.bw_alloc
            task.stage = _UPLOADING
            task.proc_planned = task.cycles / self.sim.cloud_cpu_hz
            self.push(now + task.upload_planned, EventKind.UPLOAD_DONE, task)
            return

        # fog tier
        node = self.nodes[placement.node_id]
        view = views[placement.node_id]
        rate = shannon_rate(
            self.link.v2i_bandwidth_hz, snr_at_distance(self.link, view.distance_m)
        )
        task.upload_planned = task.size_bits / rate
        task.exec_node = placement.node_id
        task.cpu_share = placement.cpu_share
        task.eff_cpu = view.req_share if view.req_share <= view.max_share else view.max_share
        task.proc_planned = task.cycles / (placement.cpu_share * node.cpu_freq)
        task.bw_alloc = _clamp01(task.bw_frac * placement.bundle_factor)
        node.bw_commit += task.bw_alloc
        task.stage = _UPLOADING
        self.push(now + task.upload_planned, EventKind.UPLOAD_DONE, task)

    def on_upload_done(self, now: float, task: Task) -> None:
        if task.stage != _UPLOADING:
            return
        node = self.nodes[task.exec_node]
        node.bw_commit -= task.bw_alloc
        task.upload = task.upload_planned
        task.upload_done_time = now
        self.log(now, "UploadDone", task.task_id, task.exec_node,
                 {"tier": "cloud" if task.tier == Tier.CLOUD else "fog"})

        if task.tier == Tier.CLOUD:
            completion = now + task.proc_planned
            if completion > task.bound:
                self.drop(task, now)
                return
            task.proc = task.proc_planned
            task.wait = 0.0
            task.stage = _EXECUTING
            self.push(completion, EventKind.EXECUTION_DONE, task)
            return

        if now + task.proc_planned > task.bound:
            self.drop(task, now)
            return
        # fog: data is resident until the task leaves the node
        task.mem_alloc = _clamp01(task.mem_frac * task.bundle)
        task.disk_alloc = _clamp01(task.disk_frac * task.bundle)
        node.mem_commit += task.mem_alloc
        node.disk_commit += task.disk_alloc
        if task.cpu_share <= (1.0 - node.cpu_commit) + 1e-12:
            self.start_execution(node, task, now)
        else:
            task.stage = _QUEUED
            node.run_queue.append(task)

    def start_execution(self, node: NodeState, task: Task, now: float) -> None:
        node.commit_cpu(task.cpu_share)
        task.wait = now - task.upload_done_time
        task.proc = task.proc_planned
        task.stage = _EXECUTING
        self.push(now + task.proc_planned, EventKind.EXECUTION_DONE, task)

    def on_execution_done(self, now: float, task: Task) -> None:
        tier = task.tier
        if tier == Tier.FOG:
            node = self.nodes[task.exec_node]
            stats_node = node
        else:
            node = None
            stats_node = self.nodes[task.decision_node]

        util = UtilizationSample(
            ncu=_clamp01(stats_node.cpu_commit),
            nmu=_clamp01(stats_node.mem_commit),
            nnbu=_clamp01(stats_node.bw_commit),
        )
        if node is not None:
            node.release_cpu(task.cpu_share)
            node.mem_commit -= task.mem_alloc
            node.disk_commit -= task.disk_alloc

        t_current = now - task.arrival
        stats_node.record_response(t_current, task.deadline)
        stats_node.record_outcome(True)

        weights = self.cfg.weights
        if tier == Tier.LOCAL:
            wastage = 0.0
        else:
            actual_cpu = task.cpu_share if tier == Tier.FOG else _clamp01(task.eff_cpu * task.bundle)
            wastage = resource_wastage(
                [
                    WastageSample(
                        actual_cpu=_clamp01(actual_cpu),
                        efficient_cpu=_clamp01(task.eff_cpu),
                        actual_mem=_clamp01(task.mem_frac * task.bundle),
                        efficient_mem=task.mem_frac,
                        actual_bw=_clamp01(task.bw_frac * task.bundle),
                        efficient_bw=task.bw_frac,
                    )
                ]
            )
        utilization = resource_utilization(util, weights)
        response = response_time_reward(ResponseSample(t_current, task.deadline))
        throughput = (task.size_bits / t_current) / self.link.wired_rate_bps if t_current > 0.0 else 1.0
        qos = qos_reward(
            QualitySample(
                latency=t_current,
                throughput=throughput if throughput <= 1.0 else 1.0,
                reliability=stats_node.reliability(),
            ),
            weights,
            self.cfg.latency_floor,
            self.cfg.quality_desired,
        )
        reward = total_reward(wastage, utilization, response, qos, weights)
        self.finish(task, now, True, reward, (wastage, utilization, response, qos))
        if node is not None:
            self.drain(node, now)

    def on_task_expire(self, now: float, task: Task) -> None:
        if task.stage == _DONE:
            return
        if task.stage == _EXECUTING:
            # admission only allows completion <= bound; when completion
            # falls exactly on the bound this expiry event dispatches
            # first (lower sequence number), so verify and stand down
            if task.tier == Tier.LOCAL:
                completion = task.arrival + task.wait + task.proc
            elif task.tier == Tier.FOG:
                completion = task.upload_done_time + task.wait + task.proc
            else:
                completion = task.upload_done_time + task.proc
            if completion > task.bound + 1e-9:
                raise RuntimeError(f"task {task.task_id} executing past its bound")
            return
        if task.stage == _UPLOADING:
            node = self.nodes[task.exec_node]
            node.bw_commit -= task.bw_alloc
        elif task.stage == _QUEUED:
            node = self.nodes[task.exec_node]
            node.mem_commit -= task.mem_alloc
            node.disk_commit -= task.disk_alloc
        self.drop(task, now)

    def drain(self, node: NodeState, now: float) -> None:
        queue = node.run_queue
        while queue:
            head = queue[0]
            if head.stage != _QUEUED:
                queue.popleft()
                continue
            if now + head.proc_planned > head.bound:
                queue.popleft()
                node.mem_commit -= head.mem_alloc
                node.disk_commit -= head.disk_alloc
                self.drop(head, now)
                continue
            if head.cpu_share <= (1.0 - node.cpu_commit) + 1e-12:
                queue.popleft()
                self.start_execution(node, head, now)
                continue
            break

    def drop(self, task: Task, now: float) -> None:
        """Resolve a task as dropped: wastage 1, other components 0."""
        weights = self.cfg.weights
        reward = -weights.w1
        task.stage = _DONE
        stats_node = self.nodes[task.decision_node]
        stats_node.record_outcome(False)
        self.finish(task, now, False, reward, (1.0, 0.0, 0.0, 0.0))

    def finish(
        self,
        task: Task,
        now: float,
        serviced: bool,
        reward: float,
        components: tuple[float, float, float, float],
    ) -> None:
        task.stage = _DONE
        self.resolved += 1
        cs = self.comp_sums
        cs[0] += components[0]
        cs[1] += components[1]
        cs[2] += components[2]
        cs[3] += components[3]
        self.reward_sum += reward
        self.edge_log.add(task.decision_node, int(now), reward)
        record = TaskRecord(
            task_id=task.task_id,
            arrival=task.arrival,
            upload=task.upload if serviced else 0.0,
            wait=task.wait if serviced else 0.0,
            proc=task.proc if serviced else 0.0,
            completion=now,
            serviced=serviced,
            local=task.tier == Tier.LOCAL,
            tier=task.tier,
            node_id=task.exec_node,
            reward=reward,
            components=components,
        )
        self.ledger.append(record)
        self.log(
            now,
            "ExecutionDone" if serviced else "TaskDropped",
            task.task_id,
            task.exec_node,
            {
                "serviced": serviced,
                "tier": task.tier,
                "local": task.tier == Tier.LOCAL,
                "arrival": task.arrival,
                "upload": record.upload,
                "wait": record.wait,
                "proc": record.proc,
                "reward": reward,
                "components": list(components),
                "decision_node": task.decision_node,
            },
        )
        if self.train and task.action_ordinal >= 0:
            veh = task.vehicle
            t = now if now < veh.exit_time else veh.exit_time
            x, y = veh.position_at(t, self.area)
            decision = self.nodes[task.decision_node]
            next_state = self.state_for(decision, task, x, y)
            table = self.scheduler.tables[task.decision_node]
            alpha = None
            if self.visit_counts is not None:
                key = (task.decision_node, task.state_ordinal, task.action_ordinal)
                visits = self.visit_counts.get(key, 0)
                self.visit_counts[key] = visits + 1
                alpha = 1.0 / (1.0 + visits)
            update_q_value(
                table,
                task.state_ordinal,
                task.action_ordinal,
                next_state,
                reward,
                self.cfg.agent,
                alpha,
            )


def _clamp01(v: float) -> float:
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


def run_episode(
    cfg: RunConfig,
    scheduler: Scheduler,
    seed: int,
    arrival_prob: float | None = None,
    *,
    train: bool = False,
    collect_events: bool = False,
    vehicles: list[VehicleSpec] | None = None,
    episode_index: int = 0,
) -> EpisodeResult:
    """Simulate one traffic episode under the given scheduler."""
    prob = cfg.sim.arrival_prob if arrival_prob is None else arrival_prob
    if not (0.0 <= prob <= 1.0):
        raise ValidationError(f"arrival_prob={prob!r} outside [0, 1]")
    episode = _Episode(cfg, scheduler, seed, prob, train, collect_events, vehicles, episode_index)
    return episode.run()


def run_training(
    cfg: RunConfig,
    master_seed: int,
    arrival_prob: float | None = None,
    checkpoint_dir: str | Path | None = None,
) -> TrainingResult:
    """Train per-node Q agents for cfg.agent.episodes episodes.

    Traffic is reseeded per episode from the master seed; epsilon follows
    the linear decay schedule. Final tables go to checkpoint_dir when
    given; a write failure raises CheckpointError carrying the curve.
    """
    cfg.validate()
    tables = {i: init_q_values(NUM_STATES, NUM_ACTIONS) for i in range(cfg.sim.fog_nodes)}
    bundles = (cfg.sim.bundle_small, cfg.sim.bundle_medium, cfg.sim.bundle_large)
    scheduler = QLearningScheduler(tables, cfg.agent, random.Random(0), bundles)
    curve: list[dict] = []
    for episode in range(cfg.agent.episodes):
        scheduler.epsilon = epsilon_at(episode, cfg.agent)
        result = run_episode(
            cfg,
            scheduler,
            derive_seed(master_seed, episode),
            arrival_prob,
            train=True,
            episode_index=episode,
        )
        agg = result.aggregate
        curve.append(
            {
                "episode": episode,
                "epsilon": scheduler.epsilon,
                "tasks": agg.tasks,
                "serviced": agg.serviced,
                "reward_sum": agg.reward_sum,
            }
        )
    if checkpoint_dir is not None:
        try:
            save_tables(tables, checkpoint_dir)
        except OSError as exc:
            raise CheckpointError(f"checkpoint write failed: {exc}", curve) from exc
    return TrainingResult(curve, tables)


def run_evaluation(
    cfg: RunConfig,
    scheduler_name: str,
    seed: int,
    tables: dict[int, QTable] | None = None,
    arrival_prob: float | None = None,
    episodes: int | None = None,
    collect_events: bool = False,
) -> EvalResult:
    """Evaluate a scheduler over one or more greedy episodes."""
    cfg.validate()
    n_episodes = cfg.sim.eval_episodes if episodes is None else episodes
    if n_episodes < 1:
        raise ValidationError(f"episodes={n_episodes!r} must be >= 1")
    scheduler = build_scheduler(cfg, scheduler_name, tables)
    ledger = TaskLedger()
    edge_log = EdgeRewardLog()
    aggregates: list[EpisodeAggregate] = []
    events: list[dict] | None = [] if collect_events else None
    for episode in range(n_episodes):
        result = run_episode(
            cfg,
            scheduler,
            derive_seed(seed, episode),
            arrival_prob,
            collect_events=collect_events,
            episode_index=episode,
        )
        ledger.records.extend(result.ledger.records)
        edge_log.merge(result.edge_log)
        aggregates.append(result.aggregate)
        if events is not None and result.events is not None:
            events.extend(result.events)
    report = build_report(ledger, aggregates, edge_log, cfg.sim.fog_nodes)
    return EvalResult(report, ledger, aggregates, edge_log, events)


def save_tables(tables: dict[int, QTable], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for node_id, table in sorted(tables.items()):
        table.save(directory / f"qtable_node{node_id}.tsv")


def load_tables(directory: str | Path, num_nodes: int) -> dict[int, QTable]:
    directory = Path(directory)
    tables: dict[int, QTable] = {}
    for node_id in range(num_nodes):
        path = directory / f"qtable_node{node_id}.tsv"
        if not path.exists():
            raise ValidationError(f"checkpoint incomplete: missing {path}")
        tables[node_id] = QTable.load(path)
    return tables


def write_event_log(events: list[dict], path: str | Path) -> None:
    """Newline-delimited JSON, one event per line, stable key order."""
    path = Path(path)
    with path.open("w") as fh:
        for event in events:
            fh.write(json.dumps(event, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
