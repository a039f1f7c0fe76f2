"""Metric worked examples and report assembly tests."""

import random

import pytest

from vfcsim.errors import ValidationError
from vfcsim.metrics import (
    RUN_CSV_COLUMNS,
    EdgeRewardLog,
    EpisodeAggregate,
    TaskLedger,
    TaskRecord,
    aap,
    apt,
    asr,
    ast,
    build_report,
    cumulative_reward,
    mean_std,
    run_csv_row,
)


def record(task_id=0, proc=1.0, upload=0.0, wait=0.0, serviced=True, local=False,
           reward=0.1, arrival=0.0):
    completion = arrival + upload + wait + proc if serviced else arrival
    return TaskRecord(
        task_id=task_id,
        arrival=arrival,
        upload=upload if serviced else 0.0,
        wait=wait if serviced else 0.0,
        proc=proc if serviced else 0.0,
        completion=completion,
        serviced=serviced,
        local=local,
        tier=0 if local else 1,
        node_id=-1 if local else 0,
        reward=reward,
        components=(0.0, 0.5, 0.5, 0.5),
    )


def ledger_of(*records):
    led = TaskLedger()
    for r in records:
        led.append(r)
    return led


def aggregate(wastage=0.1, utilization=0.5, response=0.5, qos=0.5, reward_sum=1.0,
              tasks=10, serviced=8):
    return EpisodeAggregate(wastage, utilization, response, qos, reward_sum, tasks, serviced)


# -- simple means ------------------------------------------------------------

def test_apt_mean_of_serviced_processing():
    led = ledger_of(record(0, proc=2.0), record(1, proc=4.0))
    assert apt(led) == 3.0


def test_apt_ignores_dropped():
    led = ledger_of(record(0, proc=2.0), record(1, proc=99.0, serviced=False))
    assert apt(led) == 2.0


def test_apt_empty_is_zero():
    assert apt(TaskLedger()) == 0.0
    assert apt(ledger_of(record(0, serviced=False))) == 0.0


def test_ast_adds_upload_leg():
    led = ledger_of(record(0, proc=2.0, upload=1.0), record(1, proc=4.0, upload=1.0))
    assert ast(led) == 4.0


def test_ast_equals_apt_when_all_local():
    led = ledger_of(record(0, proc=2.0, local=True), record(1, proc=3.0, local=True))
    assert ast(led) == apt(led) == 2.5


def test_asr_worked_example():
    records = [record(i) for i in range(78)]
    records += [record(78 + i, serviced=False) for i in range(22)]
    led = ledger_of(*records)
    assert asr(led) == pytest.approx(0.78, abs=1e-12)
    assert led.k_total == 100
    assert led.k_serviced == 78
    assert led.k_dropped == 22


def test_asr_empty_is_zero():
    assert asr(TaskLedger()) == 0.0


def test_metrics_permutation_invariant():
    rng = random.Random(13)
    records = [record(i, proc=rng.uniform(1, 5), upload=rng.uniform(0, 2),
                      serviced=rng.random() < 0.8) for i in range(200)]
    led = ledger_of(*records)
    shuffled = records[:]
    rng.shuffle(shuffled)
    led2 = ledger_of(*shuffled)
    assert apt(led) == pytest.approx(apt(led2), rel=1e-12)
    assert ast(led) == pytest.approx(ast(led2), rel=1e-12)
    assert asr(led) == asr(led2)


# -- cumulative reward ----------------------------------------------------------

def test_cr_empty_flags():
    cr, flags = cumulative_reward([])
    assert cr == 0.0
    assert flags == ("cr:empty",)


def test_cr_single_episode_all_constant():
    cr, flags = cumulative_reward([aggregate()])
    assert cr == 4.0
    assert len(flags) == 4
    assert all(f.endswith("-constant") for f in flags)


def test_cr_identical_episodes_double():
    one, _ = cumulative_reward([aggregate()])
    two, _ = cumulative_reward([aggregate(), aggregate()])
    assert two == 2.0 * one == 8.0


def test_cr_two_episode_split():
    # episode B dominates on every criterion (less wastage included)
    a = aggregate(wastage=0.4, utilization=0.2, response=0.3, qos=0.1)
    b = aggregate(wastage=0.1, utilization=0.9, response=0.8, qos=0.7)
    cr, flags = cumulative_reward([a, b])
    # each criterion normalizes to {0, 1} across the two episodes
    assert cr == pytest.approx(4.0, abs=1e-12)
    assert flags == ()


def test_cr_wastage_inverted():
    # only wastage varies: the thriftier episode scores 1
    a = aggregate(wastage=0.5)
    b = aggregate(wastage=0.1)
    cr, flags = cumulative_reward([a, b])
    # three constant criteria contribute 1.0 to both episodes
    assert cr == pytest.approx(3.0 + 3.0 + 1.0, abs=1e-12)
    assert "cr:utilization-constant" in flags


def test_cr_interpolates_middle_episode():
    mid = aggregate(utilization=0.5, wastage=0.3, response=0.5, qos=0.5)
    lo = aggregate(utilization=0.0, wastage=0.3, response=0.5, qos=0.5)
    hi = aggregate(utilization=1.0, wastage=0.3, response=0.5, qos=0.5)
    cr, _ = cumulative_reward([lo, mid, hi])
    # utilization contributes 0, 0.5, 1; constants contribute 3 each
    assert cr == pytest.approx(9.0 + 1.5, abs=1e-12)


# -- edge rewards -------------------------------------------------------------------

def test_aap_worked_example():
    log = EdgeRewardLog()
    log.add(0, 0, 1.0)
    log.add(0, 1, 2.0)
    log.add(0, 2, 3.0)
    assert aap(log, 1) == 6.0


def test_aap_mean_over_edges():
    log = EdgeRewardLog()
    log.add(0, 0, 1.0)
    log.add(1, 0, 1.0)
    assert aap(log, 2) == 1.0


def test_aap_same_period_accumulates():
    log = EdgeRewardLog()
    log.add(0, 5, 0.25)
    log.add(0, 5, 0.25)
    assert log.rewards[(0, 5)] == 0.5


def test_aap_can_be_negative():
    log = EdgeRewardLog()
    log.add(0, 0, -0.3)
    assert aap(log, 3) == pytest.approx(-0.1, abs=1e-12)


def test_aap_requires_edges():
    with pytest.raises(ValidationError):
        aap(EdgeRewardLog(), 0)


def test_edge_log_merge_adds_subtotals():
    a = EdgeRewardLog()
    a.add(0, 0, 1.0)
    b = EdgeRewardLog()
    b.add(0, 0, 2.0)
    b.add(1, 4, 5.0)
    a.merge(b)
    assert a.rewards == {(0, 0): 3.0, (1, 4): 5.0}
    assert a.total() == 8.0


# -- report assembly ------------------------------------------------------------------

def test_build_report_counts_and_flags():
    led = ledger_of(record(0, local=True), record(1, serviced=False))
    report = build_report(led, [aggregate()], EdgeRewardLog(), 9)
    assert report.k_total == 2
    assert report.k_serviced == 1
    assert report.k_local == 1
    assert report.k_dropped == 1
    assert report.asr == 0.5


def test_build_report_empty_run():
    report = build_report(TaskLedger(), [], EdgeRewardLog(), 9)
    assert report.apt == 0.0
    assert report.ast == 0.0
    assert report.asr == 0.0
    assert report.cr == 0.0
    assert report.aap == 0.0
    assert "no-tasks" in report.flags
    assert "cr:empty" in report.flags


def test_build_report_no_serviced_flag():
    led = ledger_of(record(0, serviced=False))
    report = build_report(led, [aggregate()], EdgeRewardLog(), 9)
    assert "no-serviced-tasks" in report.flags


def test_run_csv_row_shape():
    led = ledger_of(record(0, proc=2.0))
    report = build_report(led, [aggregate()], EdgeRewardLog(), 9)
    row = run_csv_row(report, "fcfs", "NO.1", 7, 0.05)
    assert len(row) == len(RUN_CSV_COLUMNS) == 13
    assert row[0] == "fcfs"
    assert row[2] == "7"
    assert row[3] == repr(0.05)
    assert row[4] == repr(report.apt)
    assert row[9] == "1"


def test_mean_std():
    m, s = mean_std([2.0, 4.0])
    assert m == 3.0
    assert s == pytest.approx(1.4142135623730951)
    m, s = mean_std([5.0])
    assert (m, s) == (5.0, 0.0)
