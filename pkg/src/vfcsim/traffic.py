"""Traffic scenarios and synthetic vehicle generation.

Each scenario is summarized by trace statistics: average/variance of dwell
time (ADT/VDT), vehicle count (ANV/VNV) and speed (ASV/VSV) over a fixed
observation window. Synthetic traffic draws vehicle entries as a Poisson
process at rate ANV/ADT, dwell times from Normal(ADT, VDT) truncated at
1 s, and speeds from Normal(ASV, VSV) truncated at 0 (variances are
variances, not standard deviations). Truncation resamples, so the
moments stay close to the scenario statistics.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .errors import ValidationError


@dataclass(frozen=True)
class Scenario:
    """Summary statistics of one traffic window."""

    name: str
    trace_count: int
    adt: float
    vdt: float
    anv: float
    vnv: float
    asv: float
    vsv: float
    duration: float = 300.0

    def validate(self) -> None:
        positives = (
            ("adt", self.adt),
            ("anv", self.anv),
            ("asv", self.asv),
            ("duration", self.duration),
        )
        for name, v in positives:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
                raise ValidationError(f"scenario {name} must be positive, got {v!r}")
        nonneg = (("vdt", self.vdt), ("vnv", self.vnv), ("vsv", self.vsv))
        for name, v in nonneg:
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"scenario {name} must be >= 0, got {v!r}")

    @property
    def entry_rate(self) -> float:
        """Vehicle entries per second sustaining ANV concurrent vehicles."""
        return self.anv / self.adt


SCENARIOS: dict[str, Scenario] = {
    "NO.1": Scenario("NO.1", 718, adt=198.3, vdt=123.8, anv=474.6, vnv=11.6, asv=5.22, vsv=2.61),
    "NO.2": Scenario("NO.2", 862, adt=188.5, vdt=125.1, anv=541.6, vnv=5.38, asv=5.59, vsv=2.73),
    "NO.3": Scenario("NO.3", 928, adt=196.5, vdt=122.5, anv=608.0, vnv=7.76, asv=4.60, vsv=2.40),
    "NO.4": Scenario("NO.4", 359, adt=173.7, vdt=124.1, anv=207.9, vnv=3.93, asv=7.30, vsv=3.16),
}


@dataclass(slots=True)
class VehicleSpec:
    """One vehicle's trajectory seed: entry, dwell, kinematics, local CPU."""

    vehicle_id: int
    entry_time: float
    dwell: float
    speed: float
    heading: float
    x: float
    y: float
    local_cpu_hz: float


def sample_dwell(scenario: Scenario, rng: random.Random, min_dwell: float = 1.0) -> float:
    """Normal(ADT, VDT) dwell, resampled until it clears min_dwell."""
    std = math.sqrt(scenario.vdt)
    while True:
        d = rng.gauss(scenario.adt, std)
        if d >= min_dwell:
            return d


def sample_speed(scenario: Scenario, rng: random.Random) -> float:
    """Normal(ASV, VSV) speed, resampled until nonnegative."""
    std = math.sqrt(scenario.vsv)
    while True:
        s = rng.gauss(scenario.asv, std)
        if s >= 0.0:
            return s


def sample_entry_times(
    scenario: Scenario, rng: random.Random, duration: float | None = None
) -> list[float]:
    """Poisson entry process at rate ANV/ADT over [0, duration)."""
    horizon = scenario.duration if duration is None else duration
    rate = scenario.entry_rate
    times: list[float] = []
    t = rng.expovariate(rate)
    while t < horizon:
        times.append(t)
        t += rng.expovariate(rate)
    return times


def sample_vehicles(
    scenario: Scenario,
    rng: random.Random,
    area_m: float,
    cpu_min_hz: float,
    cpu_max_hz: float,
    count: int | None = None,
    min_dwell: float = 1.0,
) -> list[VehicleSpec]:
    """Draw a full vehicle population for one episode.

    With count given, exactly that many vehicles are drawn with entry
    times from the same Poisson process extended as far as needed (used
    for statistics checks); otherwise entries fill the scenario window.
    """
    scenario.validate()
    if count is None:
        entries = sample_entry_times(scenario, rng)
    else:
        rate = scenario.entry_rate
        entries = []
        t = 0.0
        for _ in range(count):
            t += rng.expovariate(rate)
            entries.append(t)
    vehicles = []
    for i, entry in enumerate(entries):
        vehicles.append(
            VehicleSpec(
                vehicle_id=i,
                entry_time=entry,
                dwell=sample_dwell(scenario, rng, min_dwell),
                speed=sample_speed(scenario, rng),
                heading=rng.uniform(0.0, 2.0 * math.pi),
                x=rng.uniform(0.0, area_m),
                y=rng.uniform(0.0, area_m),
                local_cpu_hz=rng.uniform(cpu_min_hz, cpu_max_hz),
            )
        )
    return vehicles


TRACE_COLUMNS = ("vehicle_id", "entry_time", "dwell", "speed", "x", "y")


def load_trace_csv(
    path: str | Path,
    rng: random.Random,
    cpu_min_hz: float,
    cpu_max_hz: float,
) -> list[VehicleSpec]:
    """Read recorded vehicle traces instead of sampling synthetic ones.

    The CSV must carry the columns vehicle_id, entry_time, dwell, speed,
    x, y. Headings and local CPU capacities are not part of the trace
    format and are drawn from the run RNG.
    """
    path = Path(path)
    vehicles: list[VehicleSpec] = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not set(TRACE_COLUMNS).issubset(reader.fieldnames):
            raise ValidationError(
                f"{path}: trace CSV must have columns {', '.join(TRACE_COLUMNS)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                spec = VehicleSpec(
                    vehicle_id=int(row["vehicle_id"]),
                    entry_time=float(row["entry_time"]),
                    dwell=float(row["dwell"]),
                    speed=float(row["speed"]),
                    heading=rng.uniform(0.0, 2.0 * math.pi),
                    x=float(row["x"]),
                    y=float(row["y"]),
                    local_cpu_hz=rng.uniform(cpu_min_hz, cpu_max_hz),
                )
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: bad trace row: {exc}") from exc
            if spec.entry_time < 0.0 or spec.dwell <= 0.0 or spec.speed < 0.0:
                raise ValidationError(f"{path}:{lineno}: negative entry/dwell/speed")
            vehicles.append(spec)
    vehicles.sort(key=lambda v: (v.entry_time, v.vehicle_id))
    return vehicles
