"""Energy accounting for Send(M, S, D).

Power is tracked per slot in milliwatts, so energies come out in mW-slots; the
``*_w100`` helpers convert to watts over a 100-slot window, the unit of the
per-node operating figures this model is calibrated against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from dcwsn.radii import LOGLOG, rgg_radius
from dcwsn.routing import RoutingTrace
from dcwsn.schedules import Schedule, ScheduleArray

REF_N = 200_000


@dataclass(frozen=True)
class PowerProfile:
    sleep_mw: float = 0.015
    startup_mw: float = 15.0
    shutdown_mw: float = 15.0
    awake_rx_mw: float = 32.0
    tx_ref_mw: float = 50.0
    ref_radius: float = field(default_factory=lambda: rgg_radius(REF_N, LOGLOG))

    def __post_init__(self):
        for name in ("sleep_mw", "startup_mw", "shutdown_mw", "awake_rx_mw", "tx_ref_mw", "ref_radius"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_PROFILE = PowerProfile()


def tx_power(r: float, profile: PowerProfile = DEFAULT_PROFILE) -> float:
    """Per-slot transmit power for radius ``r``, quadratic in ``r``."""
    if r <= 0:
        raise ValueError("r must be positive")
    return profile.tx_ref_mw * (r / profile.ref_radius) ** 2


def transitions_per_cycle(schedule: Schedule) -> int:
    """One wake-up plus one shutdown per maximal awake run; none when always awake."""
    return 2 * schedule.runs()


def operational_power(schedule: Schedule, slots: int, transitions_per_cycle: int | None = None,
                      profile: PowerProfile = DEFAULT_PROFILE) -> float:
    """Energy to keep one node running for the first ``slots`` slots, without transmissions.

    Transitions are charged pro rata per cycle; the count is exact when
    ``slots`` is a multiple of L.
    """
    if transitions_per_cycle is None:
        transitions_per_cycle = 2 * schedule.runs()
    L = schedule.L
    full, rest = divmod(slots, L)
    awake = full * schedule.d + sum(1 for k in range(rest) if schedule.bits >> k & 1)
    sleep = slots - awake
    up = down = transitions_per_cycle / 2 * slots / L
    return (awake * profile.awake_rx_mw + sleep * profile.sleep_mw
            + up * profile.startup_mw + down * profile.shutdown_mw)


def mw_slots_to_w100(value: float) -> float:
    """mW-slots accumulated over 100 slots -> W (the '3.2 W per node' convention)."""
    return value / 1000.0


@dataclass(frozen=True)
class PowerReport:
    tx_only_mw_slots: float
    operational_mw_slots: float
    per_node_tx: dict[int, float]

    @property
    def total_mw_slots(self) -> float:
        return self.tx_only_mw_slots + self.operational_mw_slots


def _operational_all(schedules: ScheduleArray, slots: int, profile: PowerProfile) -> float:
    awake = schedules.to_bool()
    L = schedules.L
    full, rest = divmod(slots, L)
    awake_slots = full * awake.sum(axis=1) + awake[:, :rest].sum(axis=1)
    runs = (awake & ~np.roll(awake, 1, axis=1)).sum(axis=1)
    runs[awake.all(axis=1)] = 0
    per_transition = runs * slots / L  # each run costs one startup and one shutdown per cycle
    total = (awake_slots.sum() * profile.awake_rx_mw
             + (len(schedules) * slots - awake_slots.sum()) * profile.sleep_mw
             + per_transition.sum() * (profile.startup_mw + profile.shutdown_mw))
    return float(total)


def task_power(trace: RoutingTrace, r: float, schedules: ScheduleArray,
               profile: PowerProfile = DEFAULT_PROFILE) -> PowerReport:
    """Transmission energy of every node that sent M plus the operating energy of all
    nodes over slots ``0..completion_slot``."""
    if len(schedules) != trace.n_nodes or abs(r - trace.r) > 1e-12 * max(1.0, r):
        raise ValueError("trace was produced with a different deployment, schedule set or radius")
    p = tx_power(r, profile)
    per_node = {v: c * p for v, c in trace.tx_slot_count.items()}
    window = trace.completion_slot + 1
    return PowerReport(sum(per_node.values()), _operational_all(schedules, window, profile), per_node)
