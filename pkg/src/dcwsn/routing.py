"""Slot-synchronous Send(M, S, D) under greedy directional and relaxed greedy flooding.

Timing conventions:

* slot ``t`` is global; node ``u`` is awake in ``t`` iff bit ``t mod L`` of its
  schedule is set, and a transmission in ``t`` reaches exactly the awake nodes
  within ``r`` (no interference);
* a node triggered at slot ``t0`` transmits in each of its awake slots in
  ``(t0, t0 + L]``, i.e. d slots; the source does the same over ``[0, L)``;
* when every node is always awake, a triggered node transmits once, in
  ``t0 + 1`` (the source in slot 0);
* a receiver's trigger is, among the senders that qualify it in that slot, the
  one closest to D, then the lowest index; delivery is the first slot D hears M.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from dcwsn.geometry import Deployment, SpatialIndex, build_index, distance, radius_query
from dcwsn.schedules import ScheduleArray

STRICT = 1.0
RELAXED = 1.2


@dataclass
class RoutingTrace:
    source: int
    dest: int
    r: float
    relax_factor: float
    n_nodes: int
    delivered: bool = False
    completion_slot: int = 0
    path: list[int] = field(default_factory=list)
    retransmitters: list[int] = field(default_factory=list)
    tx_slot_count: dict[int, int] = field(default_factory=dict)
    # node -> (sender, slot) of its qualifying reception
    triggers: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def hop_count(self) -> int | None:
        return len(self.path) - 1 if self.delivered else None

    @property
    def n_prime(self) -> int:
        return len(self.retransmitters)

    @property
    def total_tx_slots(self) -> int:
        return sum(self.tx_slot_count.values())


def hop_lower_bound(s, d, r: float) -> int:
    """Fewest hops any path of links no longer than ``r`` needs between points ``s`` and ``d``."""
    if r <= 0:
        raise ValueError("r must be positive")
    return max(0, math.ceil(distance(s, d) / r - 1e-9))


def pick_destination(deployment: Deployment, source: int = 0, dist: float = 0.1, angle: float = 0.0) -> int:
    """Node closest to the point at ``dist`` from the source in direction ``angle``."""
    sx, sy = deployment.points[source]
    tx, ty = sx + dist * math.cos(angle), sy + dist * math.sin(angle)
    d2 = (deployment.points[:, 0] - tx) ** 2 + (deployment.points[:, 1] - ty) ** 2
    d2[source] = np.inf
    return int(np.argmin(d2))


def _tx_slots(awake: np.ndarray, t0: int, L: int) -> np.ndarray:
    """Awake slots in (t0, t0 + L] for a node with wake bitmap ``awake``."""
    k = np.flatnonzero(awake)
    return t0 + 1 + (k - (t0 + 1)) % L


def send_greedy(deployment: Deployment, schedules: ScheduleArray, r: float, source: int, dest: int,
                relax_factor: float = STRICT, max_slots: int | None = None,
                idx: SpatialIndex | None = None) -> RoutingTrace:
    """Flood M from ``source`` toward ``dest``.

    A node retransmits after its first reception from a sender farther from D
    than itself (``relax_factor == 1``) or, relaxed, from a sender whose
    distance to D is at least its own divided by ``relax_factor``.
    """
    m = len(deployment)
    if len(schedules) != m:
        raise ValueError(f"{len(schedules)} schedules for {m} nodes")
    for node in (source, dest):
        if not 0 <= node < m:
            raise ValueError(f"node index {node} out of range [0, {m})")
    if source == dest:
        raise ValueError("source and destination must differ")
    if relax_factor < 1:
        raise ValueError("relax_factor must be >= 1")
    L = schedules.L
    if max_slots is None:
        max_slots = 100 * L
    if max_slots < L:
        raise ValueError("max_slots must be at least one cycle")
    if idx is None:
        idx = build_index(deployment)

    trace = RoutingTrace(source, dest, r, relax_factor, m)
    if r <= 0:
        trace.completion_slot = max_slots
        return trace

    pts = deployment.points
    to_dest = np.hypot(pts[:, 0] - pts[dest, 0], pts[:, 1] - pts[dest, 1])
    single_slot = schedules.all_awake
    strict = relax_factor == STRICT

    has_msg = np.zeros(m, dtype=bool)
    has_msg[source] = True
    agenda: dict[int, list[int]] = defaultdict(list)
    neighbors: dict[int, np.ndarray] = {}

    def enqueue(node: int, t0: int) -> None:
        if single_slot:
            slots = [t0 + 1]
        else:
            slots = _tx_slots(schedules.to_bool_row(node), t0, L).tolist()
        for s in slots:
            agenda[s].append(node)

    if single_slot:
        agenda[0].append(source)
    else:
        for s in np.flatnonzero(schedules.to_bool_row(source)).tolist():
            agenda[s].append(source)

    for t in range(max_slots):
        senders = agenda.pop(t, None)
        if not senders:
            if not agenda:
                break
            continue
        senders.sort(key=lambda v: (to_dest[v], v))
        newly: dict[int, int] = {}
        reached_dest_from = None
        for v in senders:
            trace.tx_slot_count[v] = trace.tx_slot_count.get(v, 0) + 1
            nb = neighbors.get(v)
            if nb is None:
                nb = neighbors[v] = radius_query(idx, v, r)
            if len(nb) == 0:
                continue
            heard = nb[schedules.awake_at(t, nb)]
            if reached_dest_from is None and np.any(heard == dest):
                reached_dest_from = v
            fresh = heard[~has_msg[heard]]
            if len(fresh) == 0:
                continue
            if strict:
                ok = fresh[to_dest[fresh] < to_dest[v]]
            else:
                ok = fresh[to_dest[fresh] <= relax_factor * to_dest[v]]
            for u in ok.tolist():
                if u not in newly:
                    newly[u] = v
        if reached_dest_from is not None:
            trace.delivered = True
            trace.completion_slot = t
            path = [dest, reached_dest_from]
            while path[-1] != source:
                path.append(trace.triggers[path[-1]][0])
            trace.path = path[::-1]
            return trace
        for u, v in newly.items():
            has_msg[u] = True
            trace.triggers[u] = (v, t)
            trace.retransmitters.append(u)
            enqueue(u, t)

    trace.completion_slot = max_slots
    return trace
