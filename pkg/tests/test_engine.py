"""End-to-end engine behavior: worked examples, invariants, determinism."""

import json
import math

import pytest

from vfcsim.agent import NUM_ACTIONS, Tier, init_q_values
from vfcsim.engine import (
    NodeState,
    VehicleState,
    _reflect,
    build_nodes,
    build_scheduler,
    derive_seed,
    load_tables,
    resolve_wfq_weights,
    run_episode,
    run_evaluation,
    run_training,
    save_tables,
    write_event_log,
)
from vfcsim.config import build_config
from vfcsim.errors import ValidationError
from vfcsim.schedulers import Scheduler, _cloud_placement
from vfcsim.state_space import NUM_STATES
from vfcsim.traffic import VehicleSpec


def vehicle(vid=0, entry=0.0, dwell=100.0, speed=0.0, heading=0.0,
            x=1500.0, y=1500.0, cpu=1.0e9):
    return VehicleSpec(vid, entry, dwell, speed, heading, x, y, cpu)


def pinned_cfg(**sets):
    base = {
        "scenario.name": "NO.4",
        "scenario.duration": "1",
        "sim.arrival_prob": "1.0",
        "sim.task_size_mb_min": "5",
        "sim.task_size_mb_max": "5",
        "sim.task_deadline_s_min": "25",
        "sim.task_deadline_s_max": "25",
    }
    base.update({k: str(v) for k, v in sets.items()})
    return build_config(base)


class CloudStub(Scheduler):
    """Forces the cloud tier through the nearest relay."""

    name = "stub-cloud"

    def select(self, ctx):
        return _cloud_placement(ctx)


# -- geometry ------------------------------------------------------------------

def test_reflect_folds_into_range():
    assert _reflect(3050.0, 3000.0) == 2950.0
    assert _reflect(-50.0, 3000.0) == 50.0
    assert _reflect(1234.0, 3000.0) == 1234.0
    assert _reflect(6000.0, 3000.0) == 0.0


def test_vehicle_position_reflects_at_walls():
    spec = vehicle(x=2900.0, speed=10.0, heading=0.0)
    veh = VehicleState(spec)
    x, y = veh.position_at(15.0, 3000.0)
    assert x == pytest.approx(2950.0)
    assert y == 1500.0
    # heading pi moves toward the low wall and bounces back
    spec = vehicle(x=50.0, speed=10.0, heading=math.pi)
    veh = VehicleState(spec)
    x, _ = veh.position_at(10.0, 3000.0)
    assert x == pytest.approx(50.0, abs=1e-9)


def test_nine_node_grid_centers():
    cfg = build_config({})
    nodes = build_nodes(cfg)
    assert len(nodes) == 9
    centers = {(n.x, n.y) for n in nodes}
    assert centers == {(x, y) for x in (500.0, 1500.0, 2500.0) for y in (500.0, 1500.0, 2500.0)}
    assert (nodes[0].x, nodes[0].y) == (500.0, 500.0)
    assert (nodes[4].x, nodes[4].y) == (1500.0, 1500.0)
    for n in nodes:
        assert 3.0e9 <= n.cpu_freq <= 1.0e10


def test_node_frequencies_stable_across_builds():
    cfg = build_config({})
    a = [n.cpu_freq for n in build_nodes(cfg)]
    b = [n.cpu_freq for n in build_nodes(cfg)]
    assert a == b


def test_node_capacity_guards():
    cfg = build_config({})
    node = NodeState(0, 0.0, 0.0, 5e9, cfg.sim)
    node.commit_cpu(0.8)
    assert node.cpu_commit == pytest.approx(1.0)
    with pytest.raises(RuntimeError, match="overflow"):
        node.commit_cpu(0.01)
    node.release_cpu(0.8)
    with pytest.raises(RuntimeError, match="underflow"):
        node.release_cpu(0.01)


def test_wfq_weight_resolution():
    cfg = build_config({"sim.wfq_weights": "equal"})
    assert resolve_wfq_weights(cfg, build_nodes(cfg)) == [1.0] * 9
    cfg = build_config({})
    nodes = build_nodes(cfg)
    assert resolve_wfq_weights(cfg, nodes) == [n.cpu_freq / 1e9 for n in nodes]
    cfg = build_config({"sim.fog_nodes": "2", "sim.wfq_weights": "2.0,1.0"})
    assert resolve_wfq_weights(cfg, build_nodes(cfg)) == [2.0, 1.0]
    with pytest.raises(ValidationError, match="wfq_weights"):
        cfg = build_config({"sim.wfq_weights": "2.0,1.0"})  # 9 nodes, 2 weights
        resolve_wfq_weights(cfg, build_nodes(cfg))


def test_build_scheduler_names():
    cfg = build_config({})
    assert build_scheduler(cfg, "fcfs").name == "fcfs"
    assert build_scheduler(cfg, "rr").name == "rr"
    assert build_scheduler(cfg, "wfq").name == "wfq"
    with pytest.raises(ValidationError, match="checkpoint"):
        build_scheduler(cfg, "qlearn")
    with pytest.raises(ValidationError, match="unknown scheduler"):
        build_scheduler(cfg, "sjf")


def test_derive_seed_spreads():
    seeds = {derive_seed(m, e) for m in range(3) for e in range(50)}
    assert len(seeds) == 150
    assert derive_seed(1, 2) == derive_seed(1, 2)


# -- worked examples -----------------------------------------------------------------

def test_local_execution_worked_example():
    # 5 MB at 500 cycles/bit on the vehicle's own 1 GHz core: 20 s
    cfg = pinned_cfg()
    tables = {i: init_q_values(NUM_STATES, NUM_ACTIONS) for i in range(9)}
    sched = build_scheduler(cfg, "qlearn", tables)  # empty tables pick Local/Small
    result = run_episode(cfg, sched, 3, vehicles=[vehicle()])
    led = result.ledger
    assert led.k_total == 1
    rec = led.records[0]
    assert rec.serviced and rec.local
    assert rec.upload == 0.0
    assert rec.wait == 0.0
    assert rec.proc == pytest.approx(20.0, rel=1e-12)
    assert rec.completion == pytest.approx(rec.arrival + 20.0, rel=1e-12)
    assert rec.components[0] == 0.0  # local runs waste nothing


def test_local_queue_serializes_on_vehicle_cpu():
    cfg = pinned_cfg(**{"scenario.duration": "2", "sim.task_deadline_s_min": "60",
                        "sim.task_deadline_s_max": "60"})
    tables = {i: init_q_values(NUM_STATES, NUM_ACTIONS) for i in range(9)}
    sched = build_scheduler(cfg, "qlearn", tables)
    result = run_episode(cfg, sched, 3, vehicles=[vehicle()])
    led = result.ledger
    assert led.k_total == 2
    first, second = sorted(led.records, key=lambda r: r.arrival)
    assert first.serviced and second.serviced
    assert second.wait == pytest.approx(first.completion - second.arrival, rel=1e-12)
    assert second.completion == pytest.approx(first.completion + 20.0, rel=1e-12)


def test_cloud_two_leg_upload_worked_example():
    # noise floor tuned so snr(100 m) = 3: the V2I leg carries 5 MB at
    # 40 Mb/s in 1.0 s, the backhaul adds 0.8 s, the 10 GHz cloud core 2.0 s
    noise_dbm = 10.0 * math.log10(1e-3 / 3.0)
    cfg = pinned_cfg(**{
        "link.noise_power_dbm": repr(noise_dbm),
        "sim.task_deadline_s_min": "10",
        "sim.task_deadline_s_max": "10",
    })
    result = run_episode(cfg, CloudStub(), 3, vehicles=[vehicle(x=1600.0, y=1500.0)],
                         collect_events=True)
    led = result.ledger
    assert led.k_total == 1
    rec = led.records[0]
    assert rec.serviced and not rec.local
    assert rec.tier == Tier.CLOUD
    assert rec.upload == pytest.approx(1.8, rel=1e-9)
    assert rec.wait == 0.0
    assert rec.proc == pytest.approx(2.0, rel=1e-12)
    assert rec.completion == pytest.approx(3.8, rel=1e-9)
    kinds = [e["kind"] for e in result.events]
    assert kinds.count("UploadDone") == 1
    up = next(e for e in result.events if e["kind"] == "UploadDone")
    assert up["time"] == pytest.approx(1.8, rel=1e-9)


def test_fog_fifo_queue_waits_for_release():
    class FogStub(Scheduler):
        name = "stub-fog"

        def select(self, ctx):
            from vfcsim.schedulers import Allocation, Placement
            nv = ctx.nodes[4]
            return Placement(Tier.FOG, 4, Allocation(
                0.5 * nv.cpu_freq_hz / 1e6, ctx.requirement.mem_mb, ctx.requirement.bw_mbps,
            ), 0.5, 1.0)

    cfg = pinned_cfg(**{"sim.task_deadline_s_min": "40", "sim.task_deadline_s_max": "40"})
    result = run_episode(
        cfg, FogStub(), 3,
        vehicles=[vehicle(0), vehicle(1)],
    )
    led = result.ledger
    assert led.k_total == 2
    first, second = sorted(led.records, key=lambda r: r.task_id)
    assert first.serviced and second.serviced
    # two 0.5 shares exceed the grantable 0.8: strict FIFO, head runs first
    assert first.completion < second.completion
    assert first.wait == 0.0
    assert second.wait == pytest.approx(first.proc, abs=1e-9)
    for rec in (first, second):
        assert rec.completion == pytest.approx(
            rec.arrival + rec.upload + rec.wait + rec.proc, rel=1e-12
        )


# -- conservation and structural invariants ----------------------------------------

def run_short(scheduler_name="fcfs", seed=7, collect=True, **sets):
    base = {"scenario.duration": "60"}
    base.update({k: str(v) for k, v in sets.items()})
    cfg = build_config({"scenario.name": "NO.4", **base})
    sched = build_scheduler(cfg, scheduler_name)
    return cfg, run_episode(cfg, sched, seed, collect_events=collect)


def test_every_task_resolves():
    _, result = run_short()
    led = result.ledger
    assert led.k_total > 100
    assert led.k_serviced + led.k_dropped == led.k_total
    arrivals = [e for e in result.events if e["kind"] == "TaskArrival"]
    finishes = [e for e in result.events if e["kind"] in ("ExecutionDone", "TaskDropped")]
    assert len(arrivals) == led.k_total
    assert len(finishes) == led.k_total
    assert len({e["task_id"] for e in finishes}) == led.k_total


def test_event_times_never_decrease():
    _, result = run_short()
    times = [e["time"] for e in result.events]
    assert all(a <= b for a, b in zip(times, times[1:]))


def test_task_events_inside_vehicle_lifetime():
    _, result = run_short()
    entry = {}
    exits = {}
    owner = {}
    for e in result.events:
        if e["kind"] == "VehicleEnter":
            entry[e["detail"]["vehicle"]] = e["time"]
        elif e["kind"] == "VehicleExit":
            exits[e["detail"]["vehicle"]] = e["time"]
        elif e["kind"] == "TaskArrival":
            owner[e["task_id"]] = e["detail"]["vehicle"]
    assert owner
    for e in result.events:
        if e["kind"] in ("UploadDone", "ExecutionDone", "TaskDropped"):
            vid = owner[e["task_id"]]
            assert entry[vid] - 1e-9 <= e["time"]
            assert e["time"] <= exits.get(vid, float("inf")) + 1e-9


def test_completion_identity_on_serviced_records():
    for name in ("fcfs", "rr", "wfq"):
        _, result = run_short(name)
        for rec in result.ledger.records:
            if rec.serviced:
                assert rec.completion == pytest.approx(
                    rec.arrival + rec.upload + rec.wait + rec.proc, rel=1e-9,
                )


def test_heavy_load_respects_capacity_guards():
    # the commit guards turn any overflow into a RuntimeError, so a clean
    # run is the assertion
    for name in ("fcfs", "rr", "wfq"):
        _, result = run_short(name, **{"sim.arrival_prob": "0.7"})
        assert result.ledger.k_total > 1000


def test_same_seed_reproduces_bit_identical_events():
    _, a = run_short()
    _, b = run_short()
    assert json.dumps(a.events, sort_keys=True) == json.dumps(b.events, sort_keys=True)
    assert repr(a.ledger.records) == repr(b.ledger.records)
    assert a.edge_log.rewards == b.edge_log.rewards


def test_different_seeds_differ():
    _, a = run_short(seed=1)
    _, b = run_short(seed=2)
    assert a.ledger.k_total != b.ledger.k_total or repr(a.ledger.records) != repr(b.ledger.records)


def test_zero_traffic_yields_empty_report(quiet_cfg):
    sched = build_scheduler(quiet_cfg, "fcfs")
    result = run_episode(quiet_cfg, sched, 5)
    assert result.ledger.k_total == 0
    assert result.aggregate.tasks == 0
    assert result.aggregate.reward_sum == 0.0


def test_no_vehicles_at_all(tiny_cfg):
    sched = build_scheduler(tiny_cfg, "fcfs")
    result = run_episode(tiny_cfg, sched, 5, vehicles=[])
    assert result.ledger.k_total == 0


def test_certain_arrivals_generate_one_task_per_tick():
    cfg = pinned_cfg(**{"scenario.duration": "10"})
    vehicles = [vehicle(i) for i in range(3)]
    result = run_episode(cfg, build_scheduler(cfg, "fcfs"), 3, vehicles=vehicles)
    assert result.ledger.k_total == 30


def test_arrival_prob_validation(tiny_cfg):
    sched = build_scheduler(tiny_cfg, "fcfs")
    with pytest.raises(ValidationError, match="arrival_prob"):
        run_episode(tiny_cfg, sched, 1, arrival_prob=1.5)
    with pytest.raises(ValidationError, match="arrival_prob"):
        run_episode(tiny_cfg, sched, 1, arrival_prob=-0.1)


# -- training and evaluation drivers ---------------------------------------------------

def test_training_curve_shape(tiny_cfg):
    tiny_cfg.agent.episodes = 2
    result = run_training(tiny_cfg, 1)
    assert [r["episode"] for r in result.curve] == [0, 1]
    assert result.curve[0]["epsilon"] == 0.1
    assert result.curve[1]["epsilon"] == pytest.approx(0.01)
    assert set(result.tables) == set(range(9))
    for row in result.curve:
        assert row["tasks"] >= row["serviced"] >= 0


def test_training_writes_checkpoint(tiny_cfg, tmp_path):
    tiny_cfg.agent.episodes = 2
    run_training(tiny_cfg, 1, checkpoint_dir=tmp_path)
    files = sorted(p.name for p in tmp_path.glob("qtable_node*.tsv"))
    assert files == [f"qtable_node{i}.tsv" for i in range(9)]
    tables = load_tables(tmp_path, 9)
    assert set(tables) == set(range(9))


def test_table_round_trip_through_save_load(tmp_path):
    tables = {i: init_q_values(NUM_STATES, NUM_ACTIONS) for i in range(2)}
    tables[0].set(5, 3, 0.25)
    save_tables(tables, tmp_path)
    back = load_tables(tmp_path, 2)
    assert back[0].get(5, 3) == 0.25
    assert len(back[1]) == 0


def test_load_tables_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="checkpoint incomplete"):
        load_tables(tmp_path, 3)


def test_evaluation_merges_episodes(tiny_cfg):
    result = run_evaluation(tiny_cfg, "fcfs", 3, episodes=2)
    assert len(result.aggregates) == 2
    assert result.report.k_total == sum(a.tasks for a in result.aggregates)
    single = run_evaluation(tiny_cfg, "fcfs", 3)
    assert len(single.aggregates) == 1
    # one episode cannot rank itself: all four criteria flagged constant
    assert single.report.cr == 4.0
    assert sum(1 for f in single.report.flags if f.endswith("-constant")) == 4


def test_evaluation_deterministic(tiny_cfg):
    a = run_evaluation(tiny_cfg, "wfq", 9)
    b = run_evaluation(tiny_cfg, "wfq", 9)
    assert repr(a.report) == repr(b.report)


def test_qlearn_training_learns_nonzero_entries(tiny_cfg):
    tiny_cfg.agent.episodes = 3
    result = run_training(tiny_cfg, 2)
    assert sum(len(t) for t in result.tables.values()) > 0


def test_write_event_log_round_trip(tmp_path):
    _, result = run_short()
    path = tmp_path / "events.ndjson"
    write_event_log(result.events, path)
    lines = path.read_text().splitlines()
    assert len(lines) == len(result.events)
    parsed = [json.loads(line) for line in lines]
    assert parsed == json.loads(json.dumps(result.events))
    # keys are sorted for byte-stable diffs
    assert lines[0].index('"detail"') < lines[0].index('"kind"')
