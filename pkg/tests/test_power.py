import numpy as np
import pytest

from dcwsn.geometry import Deployment, make_deployment
from dcwsn.power import (DEFAULT_PROFILE, PowerProfile, mw_slots_to_w100, operational_power, task_power,
                         transitions_per_cycle, tx_power)
from dcwsn.radii import LOGLOG, rgg_radius
from dcwsn.rng import make_rng
from dcwsn.routing import send_greedy
from dcwsn.schedules import Schedule, ScheduleArray, assign_always_awake, assign_random_selection


def test_profile_defaults():
    p = PowerProfile()
    assert (p.sleep_mw, p.startup_mw, p.shutdown_mw, p.awake_rx_mw, p.tx_ref_mw) == (0.015, 15, 15, 32, 50)
    assert p.ref_radius == rgg_radius(200_000, LOGLOG)
    with pytest.raises(ValueError):
        PowerProfile(sleep_mw=0)


def test_tx_power_examples():
    ref = DEFAULT_PROFILE.ref_radius
    assert tx_power(ref) == 50.0
    assert tx_power(2 * ref) == pytest.approx(200.0)
    assert tx_power(ref / np.sqrt(0.09)) == pytest.approx(555.5556, abs=1e-3)
    for a in (0.5, 2, 3):
        assert tx_power(a * 0.01) == pytest.approx(a * a * tx_power(0.01))
    with pytest.raises(ValueError):
        tx_power(0.0)


def test_operational_worked_values():
    always = Schedule((1 << 100) - 1, 100)
    dcc = Schedule.from_slots(range(5), 100)
    dcr = Schedule.from_slots([0, 20, 40, 60, 80], 100)
    assert operational_power(always, 100) == pytest.approx(3200.0)
    assert operational_power(dcc, 100) == pytest.approx(191.425)
    assert operational_power(dcr, 100) == pytest.approx(311.425)
    assert mw_slots_to_w100(operational_power(dcc, 100)) == pytest.approx(0.19, abs=0.01)
    assert transitions_per_cycle(dcc) == 2 and transitions_per_cycle(dcr) == 10 and transitions_per_cycle(always) == 0
    assert operational_power(dcc, 100, transitions_per_cycle=10) == pytest.approx(311.425)


def test_task_power_one_hop_baseline():
    dep = Deployment(np.array([[0.0, 0.0], [0.001, 0.0]]))
    sched = assign_always_awake(2)
    r = DEFAULT_PROFILE.ref_radius
    tr = send_greedy(dep, sched, r, 0, 1)
    rep = task_power(tr, r, sched)
    assert rep.tx_only_mw_slots == pytest.approx(50.0)
    assert rep.operational_mw_slots == pytest.approx(2 * 32.0)  # two nodes awake for slot 0
    assert rep.total_mw_slots == rep.tx_only_mw_slots + rep.operational_mw_slots


def test_task_power_source_only():
    from dcwsn.schedules import Schedule
    dep = Deployment(np.array([[0.0, 0.0], [0.5, 0.0]]))
    arr = ScheduleArray.from_schedules([Schedule.from_slots([1, 4, 7], 10), Schedule.from_slots([0], 10)])
    r = 0.01
    tr = send_greedy(dep, arr, r, 0, 1, max_slots=20)
    rep = task_power(tr, r, arr)
    assert not tr.delivered and tr.n_prime == 0
    assert rep.tx_only_mw_slots == pytest.approx(3 * tx_power(r))


def test_task_power_mismatch():
    dep = make_deployment(100, seed=1)
    sched = assign_random_selection(len(dep), 100, 5, make_rng(1))
    tr = send_greedy(dep, sched, 0.3, 0, 5)
    with pytest.raises(ValueError):
        task_power(tr, 0.2, sched)
    with pytest.raises(ValueError):
        task_power(tr, 0.3, assign_always_awake(5))


def test_operational_sum_matches_per_node():
    dep = make_deployment(50, seed=2)
    sched = assign_random_selection(len(dep), 20, 3, make_rng(2))
    tr = send_greedy(dep, sched, 0.6, 0, 7)
    rep = task_power(tr, 0.6, sched)
    window = tr.completion_slot + 1
    expect = sum(operational_power(sched[i], window) for i in range(len(sched)))
    assert rep.operational_mw_slots == pytest.approx(expect)
