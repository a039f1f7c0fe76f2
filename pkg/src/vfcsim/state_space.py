"""Discretization of node and task telemetry into the tabular state space.

Twelve observed variables are reduced to coarse levels: eleven of them to
three levels and the SLA flag to two, giving 3**11 * 2 = 354294 states.
Continuous readings are normalized into [0, 1] (dividing by a per-variable
cap where one applies) and mapped through two thresholds; values landing
exactly on a threshold take the upper level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import ValidationError


class Level(IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2


class AppType(IntEnum):
    LIGHT = 0
    MEDIUM = 1
    HEAVY = 2


class ResponseLevel(IntEnum):
    FAST = 0
    MEDIUM = 1
    SLOW = 2


class SlaLevel(IntEnum):
    FULFILLED = 0
    NOT_FULFILLED = 1


# Fields normalized by a cap defaulting to 1.0 (already fractions).
FRACTION_FIELDS = (
    "cpu_usage",
    "mem_usage",
    "disk_usage",
    "net_bw_usage",
    "app_type_weight",
    "op_requirement",
    "storage_availability",
)


@dataclass(slots=True)
class TelemetrySnapshot:
    """Raw observation of one fog node plus the task under decision.

    Fraction fields live in [0, 1]. Rates are in tasks/second, the
    response time in seconds, available_nodes is a count.
    """

    cpu_usage: float
    mem_usage: float
    disk_usage: float
    net_bw_usage: float
    request_rate: float
    app_type_weight: float
    expected_demand: float
    recent_response_time: float
    sla_met: bool
    op_requirement: float
    available_nodes: int
    storage_availability: float


def _default_caps() -> dict[str, float]:
    return {name: 1.0 for name in FRACTION_FIELDS}


@dataclass
class StateSpaceConfig:
    """Thresholds and normalization constants for discretization."""

    low_threshold: float = 1.0 / 3.0
    high_threshold: float = 2.0 / 3.0
    rate_scale: float = 1.0
    response_fast: float = 5.0
    response_slow: float = 10.0
    node_count_low: int = 1
    node_count_high: int = 2
    caps: dict[str, float] = field(default_factory=_default_caps)

    def validate(self) -> None:
        if not (0.0 < self.low_threshold < self.high_threshold < 1.0):
            raise ValidationError(
                "thresholds must satisfy 0 < low_threshold < high_threshold < 1, "
                f"got low_threshold={self.low_threshold!r} high_threshold={self.high_threshold!r}"
            )
        if not (self.rate_scale > 0.0 and math.isfinite(self.rate_scale)):
            raise ValidationError(f"rate_scale must be positive, got {self.rate_scale!r}")
        if not (0.0 < self.response_fast < self.response_slow):
            raise ValidationError(
                "response thresholds must satisfy 0 < response_fast < response_slow, "
                f"got response_fast={self.response_fast!r} response_slow={self.response_slow!r}"
            )
        if not (0 < self.node_count_low < self.node_count_high):
            raise ValidationError(
                "node count thresholds must satisfy 0 < node_count_low < node_count_high, "
                f"got node_count_low={self.node_count_low!r} node_count_high={self.node_count_high!r}"
            )
        for name in FRACTION_FIELDS:
            cap = self.caps.get(name)
            if cap is None or not (cap > 0.0 and math.isfinite(cap)):
                raise ValidationError(f"caps[{name!r}] must be positive and finite, got {cap!r}")


@dataclass(frozen=True, slots=True)
class DiscreteState:
    """One point of the tabular state space."""

    cu: Level
    mu: Level
    dsu: Level
    nbu: Level
    nr: Level
    at: AppType
    ed: Level
    rt: ResponseLevel
    sla: SlaLevel
    or_: Level
    ncn: Level
    asd: Level


# Field order fixes the mixed-radix encoding; the SLA flag is the single
# binary digit. All-lowest maps to ordinal 0.
_RADICES = (3, 3, 3, 3, 3, 3, 3, 3, 2, 3, 3, 3)
NUM_STATES = 354294  # 3**11 * 2

assert math.prod(_RADICES) == NUM_STATES


def _check_fraction(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    if value < 0.0 or value > 1.0:
        raise ValidationError(f"{name}={value!r} outside [0, 1]")


def _check_nonnegative(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        raise ValidationError(f"{name} must be finite, got {value!r}")
    if value < 0.0:
        raise ValidationError(f"{name}={value!r} must be >= 0")


def _tri(value: float, low: float, high: float) -> int:
    if value < low:
        return 0
    if value < high:
        return 1
    return 2


def discretize(snapshot: TelemetrySnapshot, config: StateSpaceConfig) -> DiscreteState:
    """Map a raw telemetry snapshot to its discrete state.

    Raises ValidationError naming the offending field when a fraction
    leaves [0, 1], a rate or response time is negative, or anything is
    non-finite.
    """
    low = config.low_threshold
    high = config.high_threshold
    caps = config.caps

    _check_fraction("cpu_usage", snapshot.cpu_usage)
    _check_fraction("mem_usage", snapshot.mem_usage)
    _check_fraction("disk_usage", snapshot.disk_usage)
    _check_fraction("net_bw_usage", snapshot.net_bw_usage)
    _check_fraction("app_type_weight", snapshot.app_type_weight)
    _check_fraction("op_requirement", snapshot.op_requirement)
    _check_fraction("storage_availability", snapshot.storage_availability)
    _check_nonnegative("request_rate", snapshot.request_rate)
    _check_nonnegative("expected_demand", snapshot.expected_demand)
    _check_nonnegative("recent_response_time", snapshot.recent_response_time)
    if snapshot.available_nodes < 0:
        raise ValidationError(f"available_nodes={snapshot.available_nodes!r} must be >= 0")

    rate_scale = config.rate_scale
    rt_val = snapshot.recent_response_time
    if rt_val < config.response_fast:
        rt = ResponseLevel.FAST
    elif rt_val < config.response_slow:
        rt = ResponseLevel.MEDIUM
    else:
        rt = ResponseLevel.SLOW

    n = snapshot.available_nodes
    if n < config.node_count_low:
        ncn = Level.LOW
    elif n < config.node_count_high:
        ncn = Level.MEDIUM
    else:
        ncn = Level.HIGH

    return DiscreteState(
        cu=Level(_tri(snapshot.cpu_usage / caps["cpu_usage"], low, high)),
        mu=Level(_tri(snapshot.mem_usage / caps["mem_usage"], low, high)),
        dsu=Level(_tri(snapshot.disk_usage / caps["disk_usage"], low, high)),
        nbu=Level(_tri(snapshot.net_bw_usage / caps["net_bw_usage"], low, high)),
        nr=Level(_tri(snapshot.request_rate / rate_scale, low, high)),
        at=AppType(_tri(snapshot.app_type_weight / caps["app_type_weight"], low, high)),
        ed=Level(_tri(snapshot.expected_demand / rate_scale, low, high)),
        rt=rt,
        sla=SlaLevel.FULFILLED if snapshot.sla_met else SlaLevel.NOT_FULFILLED,
        or_=Level(_tri(snapshot.op_requirement / caps["op_requirement"], low, high)),
        ncn=ncn,
        asd=Level(_tri(snapshot.storage_availability / caps["storage_availability"], low, high)),
    )


def state_index(state: DiscreteState) -> int:
    """Bijective mixed-radix encoding of a DiscreteState into [0, NUM_STATES)."""
    idx = state.cu
    idx = idx * 3 + state.mu
    idx = idx * 3 + state.dsu
    idx = idx * 3 + state.nbu
    idx = idx * 3 + state.nr
    idx = idx * 3 + state.at
    idx = idx * 3 + state.ed
    idx = idx * 3 + state.rt
    idx = idx * 2 + state.sla
    idx = idx * 3 + state.or_
    idx = idx * 3 + state.ncn
    idx = idx * 3 + state.asd
    return int(idx)


def state_from_index(ordinal: int) -> DiscreteState:
    """Inverse of state_index."""
    if not (0 <= ordinal < NUM_STATES):
        raise ValidationError(f"state ordinal {ordinal!r} outside [0, {NUM_STATES})")
    digits = []
    rem = ordinal
    for radix in reversed(_RADICES):
        digits.append(rem % radix)
        rem //= radix
    digits.reverse()
    (cu, mu, dsu, nbu, nr, at, ed, rt, sla, or_, ncn, asd) = digits
    return DiscreteState(
        cu=Level(cu),
        mu=Level(mu),
        dsu=Level(dsu),
        nbu=Level(nbu),
        nr=Level(nr),
        at=AppType(at),
        ed=Level(ed),
        rt=ResponseLevel(rt),
        sla=SlaLevel(sla),
        or_=Level(or_),
        ncn=Level(ncn),
        asd=Level(asd),
    )


def snapshot_ordinal(snapshot: TelemetrySnapshot, config: StateSpaceConfig) -> int:
    """Fused discretize + state_index used on the simulator hot path.

    Equivalent to state_index(discretize(snapshot, config)) by construction
    (covered by a property test) but avoids building the intermediate
    DiscreteState.
    """
    low = config.low_threshold
    high = config.high_threshold
    caps = config.caps

    _check_fraction("cpu_usage", snapshot.cpu_usage)
    _check_fraction("mem_usage", snapshot.mem_usage)
    _check_fraction("disk_usage", snapshot.disk_usage)
    _check_fraction("net_bw_usage", snapshot.net_bw_usage)
    _check_fraction("app_type_weight", snapshot.app_type_weight)
    _check_fraction("op_requirement", snapshot.op_requirement)
    _check_fraction("storage_availability", snapshot.storage_availability)
    _check_nonnegative("request_rate", snapshot.request_rate)
    _check_nonnegative("expected_demand", snapshot.expected_demand)
    _check_nonnegative("recent_response_time", snapshot.recent_response_time)
    if snapshot.available_nodes < 0:
        raise ValidationError(f"available_nodes={snapshot.available_nodes!r} must be >= 0")

    rate_scale = config.rate_scale
    rt_val = snapshot.recent_response_time
    if rt_val < config.response_fast:
        rt = 0
    elif rt_val < config.response_slow:
        rt = 1
    else:
        rt = 2

    n = snapshot.available_nodes
    if n < config.node_count_low:
        ncn = 0
    elif n < config.node_count_high:
        ncn = 1
    else:
        ncn = 2

    idx = _tri(snapshot.cpu_usage / caps["cpu_usage"], low, high)
    idx = idx * 3 + _tri(snapshot.mem_usage / caps["mem_usage"], low, high)
    idx = idx * 3 + _tri(snapshot.disk_usage / caps["disk_usage"], low, high)
    idx = idx * 3 + _tri(snapshot.net_bw_usage / caps["net_bw_usage"], low, high)
    idx = idx * 3 + _tri(snapshot.request_rate / rate_scale, low, high)
    idx = idx * 3 + _tri(snapshot.app_type_weight / caps["app_type_weight"], low, high)
    idx = idx * 3 + _tri(snapshot.expected_demand / rate_scale, low, high)
    idx = idx * 3 + rt
    idx = idx * 2 + (0 if snapshot.sla_met else 1)
    idx = idx * 3 + _tri(snapshot.op_requirement / caps["op_requirement"], low, high)
    idx = idx * 3 + ncn
    idx = idx * 3 + _tri(snapshot.storage_availability / caps["storage_availability"], low, high)
    return idx
