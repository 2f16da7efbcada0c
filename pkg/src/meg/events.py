"""Event streams with dyadic marks and their per-node / per-edge index."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class GraphShape:
    """Node ranges of the graph.

    Directed graphs use one node set acting both as sources and destinations
    (``n_src == n_dst``); bipartite graphs have disjoint source and
    destination sets. The adjacency matrix of observed edges is the edge set
    of the index built from the training events.
    """

    n_src: int
    n_dst: int
    bipartite: bool = False

    def __post_init__(self):
        if self.n_src < 1 or self.n_dst < 1:
            raise ValidationError("graph must have at least one node per side")
        if not self.bipartite and self.n_src != self.n_dst:
            raise ValidationError("directed graph requires n_src == n_dst")

    @classmethod
    def directed(cls, n: int) -> "GraphShape":
        return cls(n, n, bipartite=False)

    @classmethod
    def bipartite_graph(cls, n_src: int, n_dst: int) -> "GraphShape":
        return cls(n_src, n_dst, bipartite=True)

    @property
    def n_pairs(self) -> int:
        return self.n_src * self.n_dst


@dataclass(frozen=True)
class EventLog:
    """Time-ordered dyadic events on [0, horizon].

    Node ids are dense 0-based integers. Events at identical timestamps keep
    their array order as a stable total order. ``tie_offset`` is the delay dt
    after which an event starts contributing to intensities (0 for
    continuous-time data, the recording resolution for discretised data).
    """

    times: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    horizon: float
    tie_offset: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "times", np.ascontiguousarray(self.times, dtype=np.float64))
        object.__setattr__(self, "src", np.ascontiguousarray(self.src, dtype=np.int64))
        object.__setattr__(self, "dst", np.ascontiguousarray(self.dst, dtype=np.int64))
        if not (self.times.ndim == self.src.ndim == self.dst.ndim == 1):
            raise ValidationError("times, src, dst must be one-dimensional")
        if not (len(self.times) == len(self.src) == len(self.dst)):
            raise ValidationError("times, src, dst must have equal length")
        if self.tie_offset < 0:
            raise ValidationError("tie_offset must be >= 0")
        if len(self.times):
            if self.times[0] < 0:
                raise ValidationError("event times must be >= 0")
            if np.any(np.diff(self.times) < 0):
                raise ValidationError("event times must be nondecreasing")
            if self.times[-1] > self.horizon:
                raise ValidationError(
                    f"event at t={self.times[-1]} exceeds horizon T={self.horizon}"
                )

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other) -> bool:
        if not isinstance(other, EventLog):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.tie_offset == other.tie_offset
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
        )


@dataclass(frozen=True)
class EdgeEvents:
    """Events on one edge with their positions inside the node sequences."""

    times: np.ndarray   # event times on the edge, ordered
    u_src: np.ndarray   # 0-based positions within the source node's sequence
    u_dst: np.ndarray   # 0-based positions within the destination node's sequence

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class EventIndex:
    """Per-node and per-edge view of an event log.

    ``src_times[i]`` holds the ordered arrival times with source node i,
    ``dst_times[j]`` the arrivals with destination j, and ``edges[(i, j)]``
    the events on edge (i, j) together with the alignment indices locating
    each edge event inside the two node sequences. The observed-edge
    adjacency is exactly ``edges.keys()``.
    """

    shape: GraphShape
    src_times: list[np.ndarray]
    dst_times: list[np.ndarray]
    edges: dict[tuple[int, int], EdgeEvents]
    horizon: float
    tie_offset: float
    m: int = field(default=0)

    @property
    def n_src_events(self) -> np.ndarray:
        return np.array([len(t) for t in self.src_times], dtype=np.int64)

    @property
    def n_dst_events(self) -> np.ndarray:
        return np.array([len(t) for t in self.dst_times], dtype=np.int64)

    def first_edge_time(self, edge: tuple[int, int]) -> float:
        ev = self.edges.get(edge)
        return float(ev.times[0]) if ev is not None and len(ev) else np.inf

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def _cumcount(ids: np.ndarray) -> np.ndarray:
    """Position of each element within its id group, preserving order."""
    m = ids.size
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    sizes = np.diff(np.r_[starts, m])
    cum_sorted = np.arange(m, dtype=np.int64) - np.repeat(starts, sizes)
    out = np.empty(m, dtype=np.int64)
    out[order] = cum_sorted
    return out


def build_event_index(log: EventLog, shape: GraphShape) -> EventIndex:
    """Build the per-node / per-edge index of ``log`` in one pass.

    Raises ValidationError naming the first event whose node id falls
    outside the ranges declared by ``shape``.
    """
    m = len(log)
    bad = np.flatnonzero(
        (log.src < 0) | (log.src >= shape.n_src) | (log.dst < 0) | (log.dst >= shape.n_dst)
    )
    if bad.size:
        k = int(bad[0])
        raise ValidationError(
            f"event {k} (t={log.times[k]}, src={log.src[k]}, dst={log.dst[k]}) "
            f"has node id outside the graph ranges"
        )

    u_src = _cumcount(log.src)
    u_dst = _cumcount(log.dst)

    src_times: list[np.ndarray] = [np.empty(0)] * shape.n_src
    dst_times: list[np.ndarray] = [np.empty(0)] * shape.n_dst
    for node, times in _group_by(log.src, log.times, shape.n_src).items():
        src_times[node] = times
    for node, times in _group_by(log.dst, log.times, shape.n_dst).items():
        dst_times[node] = times

    edges: dict[tuple[int, int], EdgeEvents] = {}
    if m:
        code = log.src * shape.n_dst + log.dst
        order = np.argsort(code, kind="stable")
        sorted_code = code[order]
        starts = np.flatnonzero(np.r_[True, sorted_code[1:] != sorted_code[:-1]])
        bounds = np.r_[starts, m]
        for b, e in zip(bounds[:-1], bounds[1:]):
            rows = order[b:e]
            i = int(log.src[rows[0]])
            j = int(log.dst[rows[0]])
            edges[(i, j)] = EdgeEvents(
                times=log.times[rows],
                u_src=u_src[rows],
                u_dst=u_dst[rows],
            )

    return EventIndex(
        shape=shape,
        src_times=src_times,
        dst_times=dst_times,
        edges=edges,
        horizon=log.horizon,
        tie_offset=log.tie_offset,
        m=m,
    )


def _group_by(ids: np.ndarray, times: np.ndarray, n: int) -> dict[int, np.ndarray]:
    out: dict[int, np.ndarray] = {}
    if ids.size == 0:
        return out
    order = np.argsort(ids, kind="stable")
    sorted_ids = ids[order]
    starts = np.flatnonzero(np.r_[True, sorted_ids[1:] != sorted_ids[:-1]])
    bounds = np.r_[starts, ids.size]
    for b, e in zip(bounds[:-1], bounds[1:]):
        out[int(sorted_ids[b])] = times[order[b:e]]
    return out
