"""Rejection search for a k-schedule family usable at the plain RGG radius.

A valid family has every pair of schedules sharing a slot and jointly covers
all L slots; nodes then pick uniformly among the k schedules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from dcwsn.schedules import FAMILY, Schedule, ScheduleArray, SchemeSpec, assign_random_selection


def default_k(L: int) -> int:
    return max(2, math.ceil(2 * math.log(L)))


def _check_words(words: np.ndarray, L: int) -> tuple[bool, bool]:
    k = len(words)
    iu, iv = np.triu_indices(k, 1)
    pairwise = bool(np.bitwise_and(words[iu], words[iv]).any(axis=1).all()) if k > 1 else True
    union = np.bitwise_or.reduce(words, axis=0)
    full = ScheduleArray(union[None, :], L).to_bool()[0].all()
    return pairwise, bool(full)


def check_family(schedules) -> tuple[bool, bool]:
    """``(pairwise_overlap, full_coverage)`` for a list of schedules or a ScheduleArray."""
    arr = schedules if isinstance(schedules, ScheduleArray) else ScheduleArray.from_schedules(list(schedules))
    return _check_words(arr.words, arr.L)


@dataclass(frozen=True)
class ScheduleFamily:
    schedules: tuple[Schedule, ...]
    attempts: int = 1

    def __post_init__(self):
        pairwise, full = check_family(self.schedules)
        if not (pairwise and full):
            raise ValueError("family must overlap pairwise and cover every slot")

    @property
    def k(self) -> int:
        return len(self.schedules)

    @property
    def L(self) -> int:
        return self.schedules[0].L

    @property
    def d(self) -> int:
        return self.schedules[0].d

    def scheme(self) -> SchemeSpec:
        return SchemeSpec(FAMILY, self.L, self.d, family=self.schedules)

    def to_text(self) -> str:
        return "\n".join(s.to_text() for s in self.schedules)


@dataclass(frozen=True)
class SearchExhausted:
    """Search gave up; counts say which property kept failing."""

    L: int
    d: int
    k: int
    attempts: int
    overlap_failures: int
    coverage_failures: int

    @property
    def overlap_failure_rate(self) -> float:
        return self.overlap_failures / self.attempts

    @property
    def coverage_failure_rate(self) -> float:
        return self.coverage_failures / self.attempts


def search_family(L: int, d: int, k: int | None = None, max_attempts: int = 1000,
                  rng: np.random.Generator | None = None) -> ScheduleFamily | SearchExhausted:
    """Draw k independent uniform d-subsets per attempt until one passes :func:`check_family`."""
    if k is None:
        k = default_k(L)
    if k < 1 or d < 1 or d > L:
        raise ValueError("need k >= 1 and 1 <= d <= L")
    if rng is None:
        raise ValueError("rng required")
    overlap_fail = coverage_fail = 0
    for attempt in range(1, max_attempts + 1):
        cand = assign_random_selection(k, L, d, rng)
        pairwise, full = _check_words(cand.words, L)
        if pairwise and full:
            return ScheduleFamily(tuple(cand[i] for i in range(k)), attempts=attempt)
        overlap_fail += not pairwise
        coverage_fail += not full
    return SearchExhausted(L, d, k, max_attempts, overlap_fail, coverage_fail)


def family_failure_rates(L: int, d: int, k: int, samples: int, rng: np.random.Generator) -> tuple[float, float]:
    """Empirical probabilities that a random k-family fails pairwise overlap / full coverage."""
    overlap_fail = coverage_fail = 0
    for _ in range(samples):
        pairwise, full = _check_words(assign_random_selection(k, L, d, rng).words, L)
        overlap_fail += not pairwise
        coverage_fail += not full
    return overlap_fail / samples, coverage_fail / samples


def bound_overlap(k: int, delta: float, d: int) -> float:
    """Lower bound on P(all k schedules overlap pairwise): 1 - k(k+1)/2 * exp(-delta d)."""
    return max(0.0, 1.0 - k * (k + 1) / 2 * math.exp(-delta * d))


def bound_coverage(L: int, delta: float, k: int) -> float:
    """Lower bound on P(every slot is covered): 1 - L exp(-delta k)."""
    return max(0.0, 1.0 - L * math.exp(-delta * k))


def assign_from_family(family: ScheduleFamily, n: int, rng: np.random.Generator) -> ScheduleArray:
    return family.scheme().assign(n, rng)
