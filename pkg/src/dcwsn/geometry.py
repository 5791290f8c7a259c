"""Point generation in the unit disk and a kd-tree for fixed-radius neighbor queries."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from dcwsn.rng import make_rng

DEFAULT_WEDGE_ANGLE = 2 * math.pi / 1024
DEFAULT_LEAF_CAPACITY = 32


class Point(NamedTuple):
    x: float
    y: float


def distance(p, q) -> float:
    return math.hypot(p[0] - q[0], p[1] - q[1])


@dataclass(frozen=True, eq=False)
class Deployment:
    """``n`` sensor positions plus the origin node, stored as an ``(n + 1, 2)`` array.

    Row 0 is always the origin. The array is marked read-only so instances can be
    shared between threads.
    """

    points: np.ndarray
    seed: int | None = None
    sampler: str = "wedge"

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64, order="C")
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 1:
            raise ValueError("points must be an (m, 2) array with m >= 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points) - 1

    def __len__(self) -> int:
        return len(self.points)

    def __getitem__(self, i: int) -> Point:
        x, y = self.points[i]
        return Point(float(x), float(y))

    def to_csv(self, path=None) -> str:
        """``index,x,y`` rows at 17 significant digits (exact float round-trip)."""
        lines = ["index,x,y"]
        lines += [f"{i},{x:.17g},{y:.17g}" for i, (x, y) in enumerate(self.points.tolist())]
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, path) -> "Deployment":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        pts = np.array([[float(r["x"]), float(r["y"])] for r in rows], dtype=np.float64)
        return cls(pts)

    def to_bytes(self) -> bytes:
        return self.points.astype("<f8").tobytes()


def _with_origin(xy: np.ndarray) -> np.ndarray:
    return np.vstack([np.zeros((1, 2)), xy])


def sample_uniform_disk(n: int, seed: int = 0, wedge_angle: float = DEFAULT_WEDGE_ANGLE,
                        rng: np.random.Generator | None = None) -> Deployment:
    """Place ``n`` points in the unit disk by the thin-triangle method.

    Each point picks an angle uniformly, then a uniform point in the triangle with
    corners at the origin and at the unit-circle points for that angle and the
    angle plus ``wedge_angle``.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0 < wedge_angle <= math.pi / 8:
        raise ValueError(f"wedge_angle must lie in (0, pi/8], got {wedge_angle}")
    if rng is None:
        rng = make_rng(seed)
    theta = rng.uniform(0.0, 2 * math.pi, n)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    ax, ay = np.cos(theta), np.sin(theta)
    bx, by = np.cos(theta + wedge_angle), np.sin(theta + wedge_angle)
    xy = np.column_stack([u * ax + v * bx, u * ay + v * by])
    return Deployment(_with_origin(xy), seed=seed, sampler="wedge")


def sample_polar_disk(n: int, seed: int = 0, rng: np.random.Generator | None = None) -> Deployment:
    """Exact uniform sampler (radius = sqrt(U)); alternative to the wedge method."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if rng is None:
        rng = make_rng(seed)
    rad = np.sqrt(rng.random(n))
    theta = rng.uniform(0.0, 2 * math.pi, n)
    xy = np.column_stack([rad * np.cos(theta), rad * np.sin(theta)])
    return Deployment(_with_origin(xy), seed=seed, sampler="polar")


def make_deployment(n: int, seed: int = 0, sampler: str = "wedge",
                    rng: np.random.Generator | None = None) -> Deployment:
    if sampler == "wedge":
        return sample_uniform_disk(n, seed, rng=rng)
    if sampler == "polar":
        return sample_polar_disk(n, seed, rng=rng)
    raise ValueError(f"unknown sampler {sampler!r}")


# --------------------------------------------------------------------------
# kd-tree
# --------------------------------------------------------------------------

@dataclass(eq=False)
class SpatialIndex:
    """Array-backed kd-tree with axis-alternating median splits.

    ``order`` is a permutation of point indices; every node (and in particular
    every leaf) owns the contiguous slice ``order[start[k]:end[k]]``.
    """

    points: np.ndarray
    leaf_capacity: int
    order: np.ndarray = field(repr=False)
    start: np.ndarray = field(repr=False)
    end: np.ndarray = field(repr=False)
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)
    bbox: np.ndarray = field(repr=False)  # (nodes, 4): xmin, xmax, ymin, ymax
    leaves: np.ndarray = field(repr=False)
    _nodes: list | None = field(default=None, repr=False, compare=False)

    @property
    def n_points(self) -> int:
        return len(self.points)

    def leaf_contents(self) -> list[np.ndarray]:
        return [self.order[self.start[k]:self.end[k]] for k in self.leaves]

    def node_table(self) -> list:
        """Per-node ``(xmin, xmax, ymin, ymax, left, right, start, end)`` as plain Python
        values; scalar numpy access dominates single-point queries otherwise."""
        if self._nodes is None:
            self._nodes = list(zip(*self.bbox.T.tolist(), self.left.tolist(), self.right.tolist(),
                                   self.start.tolist(), self.end.tolist()))
        return self._nodes


def build_index(deployment, leaf_capacity: int = DEFAULT_LEAF_CAPACITY) -> SpatialIndex:
    if leaf_capacity < 1:
        raise ValueError("leaf_capacity must be >= 1")
    pts = deployment.points if isinstance(deployment, Deployment) else np.asarray(deployment, dtype=np.float64)
    m = len(pts)
    order = np.arange(m)
    start, end, left, right, bbox, leaves = [], [], [], [], [], []

    def new_node(s, e):
        start.append(s)
        end.append(e)
        left.append(-1)
        right.append(-1)
        if e > s:
            sub = pts[order[s:e]]
            lo, hi = sub.min(axis=0), sub.max(axis=0)
            bbox.append((lo[0], hi[0], lo[1], hi[1]))
        else:
            bbox.append((np.inf, -np.inf, np.inf, -np.inf))
        return len(start) - 1

    root = new_node(0, m)
    stack = [(root, 0)]
    while stack:
        k, depth = stack.pop()
        s, e = start[k], end[k]
        if e - s <= leaf_capacity:
            leaves.append(k)
            continue
        axis = depth % 2
        mid = (e - s) // 2
        seg = order[s:e]
        part = np.argpartition(pts[seg, axis], mid)
        order[s:e] = seg[part]
        lk = new_node(s, s + mid)
        rk = new_node(s + mid, e)
        left[k], right[k] = lk, rk
        stack.append((rk, depth + 1))
        stack.append((lk, depth + 1))

    leaves_arr = np.array(sorted(leaves, key=lambda k: start[k]), dtype=np.int64)
    return SpatialIndex(
        points=pts,
        leaf_capacity=leaf_capacity,
        order=order,
        start=np.array(start, dtype=np.int64),
        end=np.array(end, dtype=np.int64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        bbox=np.array(bbox, dtype=np.float64),
        leaves=leaves_arr,
    )


def query_point(idx: SpatialIndex, x: float, y: float, r: float) -> np.ndarray:
    """Sorted indices of all points within distance ``r`` of ``(x, y)``."""
    r2 = r * r
    nodes = idx.node_table()
    spans = []
    stack = [0]
    while stack:
        xmin, xmax, ymin, ymax, lo, hi, a, b = nodes[stack.pop()]
        dx = xmin - x if x < xmin else (x - xmax if x > xmax else 0.0)
        dy = ymin - y if y < ymin else (y - ymax if y > ymax else 0.0)
        if dx * dx + dy * dy > r2:
            continue
        if lo < 0:
            spans.append(idx.order[a:b])
        else:
            stack.append(lo)
            stack.append(hi)
    if not spans:
        return np.empty(0, dtype=np.int64)
    cand = np.concatenate(spans)
    p = idx.points[cand]
    d2 = (p[:, 0] - x) ** 2 + (p[:, 1] - y) ** 2
    return np.sort(cand[d2 <= r2])


def radius_query(idx: SpatialIndex, center_index: int, r: float) -> np.ndarray:
    """Indices ``j != center_index`` with distance to the center at most ``r``."""
    if not 0 <= center_index < idx.n_points:
        raise ValueError(f"center_index {center_index} out of range [0, {idx.n_points})")
    if r < 0:
        raise ValueError("r must be nonnegative")
    x, y = idx.points[center_index]
    hits = query_point(idx, float(x), float(y), r)
    return hits[hits != center_index]


def iter_pairs_within(idx: SpatialIndex, r: float) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield blocks ``(u, v)`` covering every unordered pair within distance ``r`` once.

    Works leaf by leaf so memory stays bounded by one leaf neighborhood; the
    streaming graph builders rely on this.
    """
    if r < 0:
        raise ValueError("r must be nonnegative")
    r2 = r * r
    leaves = idx.leaves
    lb = idx.bbox[leaves]
    starts, ends = idx.start[leaves], idx.end[leaves]
    pts, order = idx.points, idx.order
    for a in range(len(leaves)):
        box = lb[a]
        dx = np.maximum(0.0, np.maximum(lb[a:, 0] - box[1], box[0] - lb[a:, 1]))
        dy = np.maximum(0.0, np.maximum(lb[a:, 2] - box[3], box[2] - lb[a:, 3]))
        near = np.flatnonzero(dx * dx + dy * dy <= r2) + a
        ia = order[starts[a]:ends[a]]
        if len(near) == 0 or len(ia) == 0:
            continue
        ib = np.concatenate([order[starts[b]:ends[b]] for b in near])
        pa, pb = pts[ia], pts[ib]
        d2 = (pa[:, 0, None] - pb[None, :, 0]) ** 2 + (pa[:, 1, None] - pb[None, :, 1]) ** 2
        mask = d2 <= r2
        # leaf a pairs with itself first in ib; keep only its strict upper triangle
        na = len(ia)
        mask[:, :na] &= np.triu(np.ones((na, na), dtype=bool), 1)
        iu, iv = np.nonzero(mask)
        if len(iu):
            yield ia[iu], ib[iv]


def pairs_within(idx: SpatialIndex, r: float) -> np.ndarray:
    """All unordered pairs ``(u, v)`` with ``u < v`` within distance ``r``, as an (m, 2) array."""
    blocks = [np.column_stack([np.minimum(u, v), np.maximum(u, v)]) for u, v in iter_pairs_within(idx, r)]
    if not blocks:
        return np.empty((0, 2), dtype=np.int64)
    return np.concatenate(blocks)
