"""Duty-cycled communication graphs and connected-component statistics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from dcwsn.geometry import Deployment, SpatialIndex, build_index, iter_pairs_within
from dcwsn.rng import make_rng
from dcwsn.schedules import ScheduleArray, VBModel, interval_model


class UnionFind:
    """Disjoint sets with path compression and union by rank."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        parent = self.parent
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, x: int, y: int) -> bool:
        x, y = self.find(x), self.find(y)
        if x == y:
            return False
        rank = self.rank
        if rank[x] < rank[y]:
            x, y = y, x
        self.parent[y] = x
        if rank[x] == rank[y]:
            rank[x] += 1
        return True

    def union_edges(self, u, v) -> None:
        find, parent, rank = self.find, self.parent, self.rank
        for a, b in zip(u.tolist(), v.tolist()):
            ra, rb = find(a), find(b)
            if ra == rb:
                continue
            if rank[ra] < rank[rb]:
                ra, rb = rb, ra
            parent[rb] = ra
            if rank[ra] == rank[rb]:
                rank[ra] += 1

    def labels(self) -> np.ndarray:
        return np.array([self.find(i) for i in range(len(self.parent))], dtype=np.int64)


@dataclass(eq=False)
class DCGraph:
    """Undirected graph over a deployment; ``edges`` holds each pair once with u < v."""

    n_nodes: int
    r: float
    edges: np.ndarray
    connection_source: str = "schedules"
    _csr: tuple | None = field(default=None, repr=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def _adjacency(self):
        if self._csr is None:
            u, v = self.edges[:, 0], self.edges[:, 1]
            src = np.concatenate([u, v])
            dst = np.concatenate([v, u])
            order = np.lexsort((dst, src))
            indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
            np.cumsum(np.bincount(src, minlength=self.n_nodes), out=indptr[1:])
            self._csr = (indptr, dst[order])
        return self._csr

    def neighbors(self, u: int) -> np.ndarray:
        indptr, idx = self._adjacency()
        return idx[indptr[u]:indptr[u + 1]]

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_nodes)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(map(tuple, self.edges.tolist()))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v"])
            w.writerows(self.edges.tolist())


def _sorted_edges(blocks) -> np.ndarray:
    if not blocks:
        return np.empty((0, 2), dtype=np.int64)
    e = np.concatenate(blocks)
    e = np.column_stack([e.min(axis=1), e.max(axis=1)])
    return e[np.lexsort((e[:, 1], e[:, 0]))]


def iter_dc_edges(idx: SpatialIndex, schedules: ScheduleArray, r: float):
    """Stream edge blocks: within ``r`` and sharing an awake slot."""
    for u, v in iter_pairs_within(idx, r):
        keep = schedules.overlap(u, v)
        if keep.any():
            yield u[keep], v[keep]


def iter_vb_edges(idx: SpatialIndex, model: VBModel, marks, r: float):
    for u, v in iter_pairs_within(idx, r):
        keep = np.asarray(model.predicate(marks[u], marks[v]), dtype=bool)
        if keep.any():
            yield u[keep], v[keep]


def build_dc_graph(deployment: Deployment, schedules: ScheduleArray, r: float,
                   idx: SpatialIndex | None = None) -> DCGraph:
    if len(schedules) != len(deployment):
        raise ValueError(f"{len(schedules)} schedules for {len(deployment)} nodes")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if idx is None:
        idx = build_index(deployment)
    blocks = [np.column_stack([u, v]) for u, v in iter_dc_edges(idx, schedules, r)]
    return DCGraph(len(deployment), r, _sorted_edges(blocks), "schedules")


def build_vb_graph(deployment: Deployment, model: VBModel, r: float, idx: SpatialIndex | None = None,
                   rng: np.random.Generator | None = None, marks=None) -> DCGraph:
    """Draw one mark per node (unless ``marks`` is given) and keep in-range pairs whose marks connect."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if marks is None:
        if rng is None:
            raise ValueError("need rng or marks")
        marks = model.sample(len(deployment), rng)
    if idx is None:
        idx = build_index(deployment)
    blocks = [np.column_stack([u, v]) for u, v in iter_vb_edges(idx, model, marks, r)]
    return DCGraph(len(deployment), r, _sorted_edges(blocks), "vb_model")


def build_rgg(deployment: Deployment, r: float, idx: SpatialIndex | None = None) -> DCGraph:
    if idx is None:
        idx = build_index(deployment)
    blocks = [np.column_stack([u, v]) for u, v in iter_pairs_within(idx, r)]
    return DCGraph(len(deployment), r, _sorted_edges(blocks), "rgg")


# --------------------------------------------------------------------------
# components
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentStats:
    n_nodes: int
    component_count: int
    largest_size: int
    second_largest_size: int
    isolated_count: int
    origin_component_size: int

    @property
    def largest_fraction(self) -> float:
        return self.largest_size / self.n_nodes

    FIELDS = ("n_nodes", "component_count", "largest_size", "largest_fraction",
              "second_largest_size", "isolated_count", "origin_component_size")

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def stats_from_labels(labels: np.ndarray) -> ComponentStats:
    _, inverse, sizes = np.unique(labels, return_inverse=True, return_counts=True)
    ordered = np.sort(sizes)[::-1]
    return ComponentStats(
        n_nodes=len(labels),
        component_count=len(sizes),
        largest_size=int(ordered[0]),
        second_largest_size=int(ordered[1]) if len(ordered) > 1 else 0,
        isolated_count=int(np.count_nonzero(sizes == 1)),
        origin_component_size=int(sizes[inverse[0]]),
    )


def component_labels(g: DCGraph) -> np.ndarray:
    uf = UnionFind(g.n_nodes)
    uf.union_edges(g.edges[:, 0], g.edges[:, 1])
    return uf.labels()


def components(g: DCGraph) -> ComponentStats:
    return stats_from_labels(component_labels(g))


def streaming_components(n_nodes: int, edge_blocks) -> ComponentStats:
    """Component statistics straight from an edge-block stream, without storing the edges."""
    uf = UnionFind(n_nodes)
    for u, v in edge_blocks:
        uf.union_edges(u, v)
    return stats_from_labels(uf.labels())


def dc_component_stats(deployment: Deployment, schedules: ScheduleArray, r: float,
                       idx: SpatialIndex | None = None) -> ComponentStats:
    if len(schedules) != len(deployment):
        raise ValueError(f"{len(schedules)} schedules for {len(deployment)} nodes")
    if idx is None:
        idx = build_index(deployment)
    return streaming_components(len(deployment), iter_dc_edges(idx, schedules, r))


# --------------------------------------------------------------------------
# isolated nodes
# --------------------------------------------------------------------------

TORUS = "torus"
UNIT_AREA_DISK = "disk"


def _unit_area_points(m: int, domain: str, rng: np.random.Generator) -> np.ndarray:
    if domain == TORUS:
        return rng.random((m, 2))
    if domain == UNIT_AREA_DISK:
        rad = np.sqrt(rng.random(m)) / math.sqrt(math.pi)
        th = rng.uniform(0, 2 * math.pi, m)
        return np.column_stack([rad * np.cos(th), rad * np.sin(th)])
    raise ValueError(f"unknown domain {domain!r}")


def _torus_images(pts: np.ndarray, r: float):
    """Copies of points near the unit-square border shifted by +-1, for wrap-around distances."""
    if r >= 0.5:
        raise ValueError("torus queries need r < 0.5")
    owners, images = [np.arange(len(pts))], [pts]
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            if sx == sy == 0:
                continue
            mask = np.ones(len(pts), dtype=bool)
            if sx == 1:
                mask &= pts[:, 0] < r
            elif sx == -1:
                mask &= pts[:, 0] > 1 - r
            if sy == 1:
                mask &= pts[:, 1] < r
            elif sy == -1:
                mask &= pts[:, 1] > 1 - r
            sel = np.flatnonzero(mask)
            owners.append(sel)
            images.append(pts[sel] + (sx, sy))
    return np.concatenate(images), np.concatenate(owners)


def isolated_count(n: int, r: float, model: VBModel, rng: np.random.Generator,
                   domain: str = TORUS) -> int:
    """Isolated nodes in one VB-RGG(n, r, gamma) instance on a unit-area domain.

    In a unit-area domain the expected number of points within ``r`` of a node is
    ``n * pi * r^2``, which is the normalization under which
    ``pi r^2 gamma = (ln n + c)/n`` gives mean degree ``ln n + c``. The torus has
    no boundary; the disk keeps its boundary effects.
    """
    pts = _unit_area_points(n, domain, rng)
    marks = model.sample(n, rng)
    if domain == TORUS and r >= 0.5:
        if n > 5000:
            raise ValueError("torus radius >= 0.5 only supported for small n")
        diff = np.abs(pts[:, None, :] - pts[None, :, :])
        diff = np.minimum(diff, 1.0 - diff)
        near = (diff ** 2).sum(axis=2) <= r * r
        u, v = np.nonzero(np.triu(near, 1))
        ok = np.asarray(model.predicate(marks[u], marks[v]), dtype=bool)
        linked = np.zeros(n, dtype=bool)
        linked[u[ok]] = True
        linked[v[ok]] = True
        return int(n - np.count_nonzero(linked))
    if domain == TORUS:
        allpts, owner = _torus_images(pts, r)
    else:
        allpts, owner = pts, np.arange(n)
    idx = build_index(allpts)
    has_neighbor = np.zeros(n, dtype=bool)
    for a, b in iter_pairs_within(idx, r):
        ua, ub = owner[a], owner[b]
        keep = ua != ub
        # an image pair and its original pair both appear; either one suffices
        ua, ub = ua[keep], ub[keep]
        if len(ua) == 0:
            continue
        ok = np.asarray(model.predicate(marks[ua], marks[ub]), dtype=bool)
        has_neighbor[ua[ok]] = True
        has_neighbor[ub[ok]] = True
    return int(n - np.count_nonzero(has_neighbor))


@dataclass(frozen=True)
class IsolatedTrials:
    counts: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.counts))

    @property
    def variance(self) -> float:
        return float(np.var(self.counts, ddof=1)) if len(self.counts) > 1 else 0.0


def isolated_node_trial(n: int, r: float, gamma: float, trials: int, seed: int = 0,
                        model: VBModel | None = None, domain: str = TORUS) -> IsolatedTrials:
    """Isolated-node counts over ``trials`` fresh VB-RGG(n, r, gamma) instances.

    ``model`` defaults to the circular-interval mark model with the requested
    gamma; trial ``t`` uses stream ``(seed, t)``.
    """
    if model is None:
        model = interval_model(gamma)
    counts = [isolated_count(n, r, model, make_rng(seed, t), domain) for t in range(trials)]
    return IsolatedTrials(np.array(counts, dtype=np.int64))
