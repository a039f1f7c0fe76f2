"""Allocation policies: FCFS, Round-Robin, WFQ and the Q-learning agent.

Every scheduler consumes the same DecisionContext (a snapshot of node
availability plus the task's resource requirement) and emits a Placement
or None when no infrastructure can take the task. Baselines allocate
exactly the requirement; the learned policy scales it by a bundle factor.

Shared fallback rule: a task whose CPU requirement exceeds the grantable
share of every reachable node can never start on the fog tier and is
routed to the cloud through the nearest reachable node.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .agent import ACTIONS, Action, Bundle, HyperParams, QTable, Tier, select_action
from .errors import ValidationError


@dataclass(slots=True)
class Allocation:
    """Granted resources: CPU rate (MIPS), memory (MB), bandwidth (Mbps)."""

    cpu_mips: float
    mem_mb: float
    bw_mbps: float


@dataclass(slots=True)
class NodeView:
    """One fog node as seen at decision time."""

    node_id: int
    cpu_freq_hz: float
    free_share: float      # CPU share grantable right now
    max_share: float       # CPU share the node can ever grant
    reachable: bool        # within V2I range of the vehicle
    distance_m: float
    req_share: float       # this task's CPU-share requirement on this node
    weight: float          # WFQ weight


@dataclass(slots=True)
class DecisionContext:
    """Inputs common to all schedulers for one task decision."""

    time: float
    task_id: int
    requirement: Allocation
    nodes: list[NodeView]
    state_ordinal: int = -1   # filled when the scheduler uses telemetry
    local_feasible: bool = True


@dataclass(slots=True)
class Placement:
    """A scheduling decision: where the task runs and with what grant."""

    tier: Tier
    node_id: int              # fog execution node, or cloud relay; -1 for local
    allocation: Allocation
    cpu_share: float          # share on the fog node; 0 for local/cloud
    bundle_factor: float
    action_ordinal: int = -1  # set by the learned policy


def _nearest_reachable(nodes: list[NodeView]) -> NodeView | None:
    best: NodeView | None = None
    for nv in nodes:
        if nv.reachable and (best is None or nv.distance_m < best.distance_m):
            best = nv
    return best


def _fits_somewhere(nodes: list[NodeView]) -> bool:
    """True if at least one reachable node could ever grant the requirement."""
    return any(nv.reachable and nv.req_share <= nv.max_share for nv in nodes)


def _cloud_placement(ctx: DecisionContext, bundle_factor: float = 1.0) -> Placement | None:
    relay = _nearest_reachable(ctx.nodes)
    if relay is None:
        return None
    req = ctx.requirement
    alloc = Allocation(
        req.cpu_mips * bundle_factor, req.mem_mb * bundle_factor, req.bw_mbps * bundle_factor
    )
    return Placement(Tier.CLOUD, relay.node_id, alloc, 0.0, bundle_factor)


def _fog_placement(ctx: DecisionContext, node: NodeView, bundle_factor: float = 1.0) -> Placement:
    req = ctx.requirement
    share = node.req_share * bundle_factor
    if share > node.max_share:
        share = node.max_share
    alloc = Allocation(
        share * node.cpu_freq_hz / 1e6, req.mem_mb * bundle_factor, req.bw_mbps * bundle_factor
    )
    return Placement(Tier.FOG, node.node_id, alloc, share, bundle_factor)


class Scheduler:
    """Interface shared by all policies."""

    name = "base"
    uses_state = False

    def select(self, ctx: DecisionContext) -> Placement | None:
        raise NotImplementedError

    def on_episode_start(self) -> None:
        """Reset any per-episode bookkeeping (cursors, virtual clocks)."""


class FcfsScheduler(Scheduler):
    """First-come-first-served: tasks are placed strictly in arrival order.

    The first reachable node (by node ID) with enough free capacity takes
    the task; if every reachable node is busy, the task joins the FIFO
    queue of the first reachable node that could ever run it.
    """

    name = "fcfs"

    def select(self, ctx: DecisionContext) -> Placement | None:
        if not _fits_somewhere(ctx.nodes):
            return _cloud_placement(ctx)
        for nv in ctx.nodes:
            if nv.reachable and nv.req_share <= nv.free_share:
                return _fog_placement(ctx, nv)
        for nv in ctx.nodes:
            if nv.reachable and nv.req_share <= nv.max_share:
                return _fog_placement(ctx, nv)
        return None


class RoundRobinScheduler(Scheduler):
    """Cycle a cursor over node IDs, skipping busy or unreachable nodes."""

    name = "rr"

    def __init__(self, num_nodes: int):
        if num_nodes < 1:
            raise ValidationError(f"num_nodes={num_nodes!r} must be >= 1")
        self.num_nodes = num_nodes
        self.cursor = 0

    def on_episode_start(self) -> None:
        self.cursor = 0

    def select(self, ctx: DecisionContext) -> Placement | None:
        if not _fits_somewhere(ctx.nodes):
            return _cloud_placement(ctx)
        n = len(ctx.nodes)
        for step in range(n):
            nv = ctx.nodes[(self.cursor + step) % n]
            if nv.reachable and nv.req_share <= nv.free_share:
                self.cursor = (nv.node_id + 1) % n
                return _fog_placement(ctx, nv)
        # Full cycle without free capacity: queue at the first runnable
        # node from the cursor, still advancing the rotation.
        for step in range(n):
            nv = ctx.nodes[(self.cursor + step) % n]
            if nv.reachable and nv.req_share <= nv.max_share:
                self.cursor = (nv.node_id + 1) % n
                return _fog_placement(ctx, nv)
        return None


@dataclass
class WfqState:
    """Per-node weights and monotone virtual finish times."""

    weights: list[float]
    virtual_finish: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        for w in self.weights:
            if not w > 0.0:
                raise ValidationError(f"wfq weight must be positive, got {w!r}")
        if not self.virtual_finish:
            self.virtual_finish = [0.0] * len(self.weights)
        if len(self.virtual_finish) != len(self.weights):
            raise ValidationError("wfq weights and virtual_finish lengths differ")


class WfqScheduler(Scheduler):
    """Weighted fair queuing across fog nodes.

    The task goes to the eligible node with the smallest virtual finish
    time (ties to the lowest node ID), whose clock then advances by the
    task's compute demand divided by the node weight. Long-run task
    shares converge to the weight ratios.
    """

    name = "wfq"

    def __init__(self, weights: list[float]):
        self.state = WfqState(list(weights))

    def on_episode_start(self) -> None:
        self.state.virtual_finish = [0.0] * len(self.state.weights)

    def select(self, ctx: DecisionContext) -> Placement | None:
        if not _fits_somewhere(ctx.nodes):
            return _cloud_placement(ctx)
        vft = self.state.virtual_finish
        best: NodeView | None = None
        for nv in ctx.nodes:
            if not (nv.reachable and nv.req_share <= nv.max_share):
                continue
            if best is None or vft[nv.node_id] < vft[best.node_id]:
                best = nv
        if best is None:
            return None
        # compute demand in MIPS stands in for the packet length
        vft[best.node_id] += ctx.requirement.cpu_mips / self.state.weights[best.node_id]
        return _fog_placement(ctx, best)


class QLearningScheduler(Scheduler):
    """Epsilon-greedy policy over per-node Q-tables.

    The decision node's table picks a (tier, bundle) action; the fog tier
    resolves to the least-loaded reachable node and the bundle factor
    scales the allocated resources above the bare requirement.
    """

    name = "qlearn"
    uses_state = True

    def __init__(
        self,
        tables: dict[int, QTable],
        params: HyperParams,
        rng: random.Random,
        bundle_factors: tuple[float, float, float] = (1.0, 1.5, 2.0),
        epsilon: float = 0.0,
    ):
        if not tables:
            raise ValidationError("qlearn scheduler needs at least one q-table")
        self.tables = tables
        self.params = params
        self.rng = rng
        self.bundle_factors = bundle_factors
        self.epsilon = epsilon
        self.decision_node = -1       # set by the engine before each select()
        self.last_action_ordinal = -1  # survives a failed resolution for the drop update

    def select(self, ctx: DecisionContext) -> Placement | None:
        table = self.tables[self.decision_node]
        action = select_action(table, ctx.state_ordinal, self.epsilon, self.rng)
        self.last_action_ordinal = action.ordinal
        factor = self.bundle_factors[action.bundle]
        placement = self._resolve(ctx, action, factor)
        if placement is not None:
            placement.action_ordinal = action.ordinal
        return placement

    def _resolve(self, ctx: DecisionContext, action: Action, factor: float) -> Placement | None:
        if action.tier == Tier.LOCAL:
            req = ctx.requirement
            return Placement(Tier.LOCAL, -1, Allocation(req.cpu_mips, req.mem_mb, req.bw_mbps),
                             0.0, 1.0, action.ordinal)
        if action.tier == Tier.CLOUD:
            return _cloud_placement(ctx, factor)
        # least-loaded viable node; iteration order makes ties go to the
        # lowest node ID
        best: NodeView | None = None
        for nv in ctx.nodes:
            if not (nv.reachable and nv.req_share <= nv.max_share):
                continue
            if best is None or nv.free_share > best.free_share:
                best = nv
        if best is None:
            return None
        return _fog_placement(ctx, best, factor)
