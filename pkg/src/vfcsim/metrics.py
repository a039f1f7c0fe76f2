"""Evaluation metrics over completed runs.

Five quantities summarize a run: average processing time (APT) and average
service time (AST) over serviced tasks, service ratio (ASR), cumulative
reward (CR) over per-episode normalized criteria, and average accumulated
reward per edge node (AAP). Degenerate inputs (no tasks served, constant
criterion series) resolve to defined values and are flagged rather than
raising.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field

from .errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass(slots=True)
class TaskRecord:
    """Final accounting of one task's lifecycle."""

    task_id: int
    arrival: float
    upload: float
    wait: float
    proc: float
    completion: float
    serviced: bool
    local: bool
    tier: int
    node_id: int
    reward: float
    components: tuple[float, float, float, float]


@dataclass
class TaskLedger:
    """Append-only collection of task records for one evaluation."""

    records: list[TaskRecord] = field(default_factory=list)

    def append(self, record: TaskRecord) -> None:
        self.records.append(record)

    @property
    def k_total(self) -> int:
        return len(self.records)

    @property
    def k_serviced(self) -> int:
        return sum(1 for r in self.records if r.serviced)

    @property
    def k_local(self) -> int:
        return sum(1 for r in self.records if r.serviced and r.local)

    @property
    def k_dropped(self) -> int:
        return sum(1 for r in self.records if not r.serviced)


@dataclass
class EdgeRewardLog:
    """Reward mass accumulated per (edge node, time period)."""

    rewards: dict[tuple[int, int], float] = field(default_factory=dict)

    def add(self, node_id: int, period: int, reward: float) -> None:
        key = (node_id, period)
        self.rewards[key] = self.rewards.get(key, 0.0) + reward

    def merge(self, other: "EdgeRewardLog") -> None:
        for key, r in other.rewards.items():
            self.rewards[key] = self.rewards.get(key, 0.0) + r

    def total(self) -> float:
        return sum(self.rewards.values())


@dataclass(slots=True)
class EpisodeAggregate:
    """Per-episode means of the four reward criteria plus totals."""

    wastage: float
    utilization: float
    response: float
    qos: float
    reward_sum: float
    tasks: int
    serviced: int


@dataclass
class MetricsReport:
    apt: float
    ast: float
    asr: float
    cr: float
    aap: float
    k_total: int
    k_serviced: int
    k_local: int
    k_dropped: int
    flags: tuple[str, ...] = ()


def apt(ledger: TaskLedger) -> float:
    """Mean processing time over serviced tasks; 0 when none served."""
    total = 0.0
    n = 0
    for r in ledger.records:
        if r.serviced:
            total += r.proc
            n += 1
    if n == 0:
        logger.info("apt: no serviced tasks, reporting 0")
        return 0.0
    return total / n


def ast(ledger: TaskLedger) -> float:
    """Mean processing + upload time over serviced tasks; 0 when none served."""
    total = 0.0
    n = 0
    for r in ledger.records:
        if r.serviced:
            total += r.proc + r.upload
            n += 1
    if n == 0:
        logger.info("ast: no serviced tasks, reporting 0")
        return 0.0
    return total / n


def asr(ledger: TaskLedger) -> float:
    """Fraction of generated tasks that completed; 0 when none generated."""
    k = ledger.k_total
    if k == 0:
        logger.info("asr: no tasks generated, reporting 0")
        return 0.0
    return ledger.k_serviced / k


def _normalize_series(values: list[float], invert: bool, name: str, flags: list[str]) -> list[float]:
    lo = min(values)
    hi = max(values)
    if hi == lo:
        flags.append(f"cr:{name}-constant")
        logger.info("cumulative_reward: %s series constant, normalized to 1.0", name)
        return [1.0] * len(values)
    if invert:
        return [(hi - v) / (hi - lo) for v in values]
    return [(v - lo) / (hi - lo) for v in values]


def cumulative_reward(episodes: list[EpisodeAggregate]) -> tuple[float, tuple[str, ...]]:
    """Sum of min-max normalized criteria accumulated over episodes.

    Wastage is inverted (lower is better) before normalization; the other
    criteria enter directly. Each episode then contributes the sum of its
    four normalized scores. Constant series normalize to 1.0 and are
    flagged. Returns (cr, flags).
    """
    if not episodes:
        logger.info("cumulative_reward: no episodes, reporting 0")
        return 0.0, ("cr:empty",)
    flags: list[str] = []
    nw = _normalize_series([e.wastage for e in episodes], True, "wastage", flags)
    nu = _normalize_series([e.utilization for e in episodes], False, "utilization", flags)
    nr = _normalize_series([e.response for e in episodes], False, "response", flags)
    nq = _normalize_series([e.qos for e in episodes], False, "qos", flags)
    cr = 0.0
    for i in range(len(episodes)):
        cr += nw[i] + nu[i] + nr[i] + nq[i]
    return cr, tuple(flags)


def aap(edge_log: EdgeRewardLog, num_edges: int) -> float:
    """Mean accumulated reward per edge node."""
    if num_edges < 1:
        raise ValidationError(f"num_edges={num_edges!r} must be >= 1")
    return edge_log.total() / num_edges


def build_report(
    ledger: TaskLedger,
    episodes: list[EpisodeAggregate],
    edge_log: EdgeRewardLog,
    num_edges: int,
) -> MetricsReport:
    flags: list[str] = []
    if ledger.k_total == 0:
        flags.append("no-tasks")
    elif ledger.k_serviced == 0:
        flags.append("no-serviced-tasks")
    cr, cr_flags = cumulative_reward(episodes)
    flags.extend(cr_flags)
    total = ledger.k_total
    serviced = ledger.k_serviced
    conserved = serviced + ledger.k_dropped
    if conserved != total:
        raise ValidationError(f"ledger conservation violated: {serviced}+{ledger.k_dropped} != {total}")
    return MetricsReport(
        apt=apt(ledger),
        ast=ast(ledger),
        asr=asr(ledger),
        cr=cr,
        aap=aap(edge_log, num_edges),
        k_total=total,
        k_serviced=serviced,
        k_local=ledger.k_local,
        k_dropped=ledger.k_dropped,
        flags=tuple(flags),
    )


RUN_CSV_COLUMNS = (
    "scheduler",
    "scenario",
    "seed",
    "arrival_prob",
    "apt",
    "ast",
    "asr",
    "cr",
    "aap",
    "k_total",
    "k_serviced",
    "k_local",
    "k_dropped",
)


def run_csv_row(
    report: MetricsReport,
    scheduler: str,
    scenario: str,
    seed: int,
    arrival_prob: float,
) -> list[str]:
    return [
        scheduler,
        scenario,
        str(seed),
        repr(float(arrival_prob)),
        repr(report.apt),
        repr(report.ast),
        repr(report.asr),
        repr(report.cr),
        repr(report.aap),
        str(report.k_total),
        str(report.k_serviced),
        str(report.k_local),
        str(report.k_dropped),
    ]


def mean_std(values: list[float]) -> tuple[float, float]:
    """Sample mean and standard deviation (0.0 for fewer than two values)."""
    if not values:
        return 0.0, 0.0
    m = statistics.fmean(values)
    s = statistics.stdev(values) if len(values) > 1 else 0.0
    return m, s
