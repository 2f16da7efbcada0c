"""Time-rescaling p-values and Kolmogorov-Smirnov goodness-of-fit.

Each event's p-value is exp(-dLambda) with dLambda the compensator increment
on its edge since the previous event there (or since the edge's activation
for a first event). Under a correctly specified model the p-values are
standard uniform, so their KS distance from Uniform(0, 1) measures fit;
new edges, the anomaly-detection target, are flagged per event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .events import EventLog, GraphShape, build_event_index
from .intensity import EdgeRecursion
from .model import ModelSpec, Params, TauMatrix


@dataclass
class ScoreReport:
    """Per-event p-values with global and per-edge summaries."""

    times: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    pvalues: np.ndarray
    new_edge: np.ndarray          # True when the edge has no training events
    tau_infinite: np.ndarray      # True when scored under tau = inf (p := 1)
    ks: float = math.nan
    per_edge: list[tuple[tuple[int, int], int, float]] = field(default_factory=list)
    qq: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    def __len__(self) -> int:
        return len(self.pvalues)


def ks_statistic(pvalues) -> float:
    """One-sample KS statistic of the values against Uniform(0, 1)."""
    p = np.sort(np.asarray(pvalues, dtype=np.float64))
    m = len(p)
    if m == 0:
        raise ValidationError("KS statistic of an empty sample is undefined")
    if p[0] < 0 or p[-1] > 1:
        raise ValidationError("p-values must lie in [0, 1]")
    grid = np.arange(1, m + 1) / m
    return float(np.maximum(grid - p, p - (grid - 1.0 / m)).max())


def qq_points(pvalues, n_points: int = 1000) -> np.ndarray:
    """(theoretical, empirical) quantile pairs at evenly spaced probabilities."""
    probs = (np.arange(1, n_points + 1) - 0.5) / n_points
    emp = np.quantile(np.asarray(pvalues, dtype=np.float64), probs)
    return np.column_stack([probs, emp])


def per_edge_ks(report: ScoreReport) -> list[tuple[tuple[int, int], int, float]]:
    """KS per edge over that edge's p-values, with the edge's event count."""
    groups: dict[tuple[int, int], list[float]] = {}
    for t, i, j, p in zip(report.times, report.src, report.dst, report.pvalues):
        groups.setdefault((int(i), int(j)), []).append(float(p))
    return [(edge, len(ps), ks_statistic(ps)) for edge, ps in sorted(groups.items())]


def score_events(params: Params, spec: ModelSpec, tau: TauMatrix,
                 train: EventLog, test: EventLog, T_train: float, T: float,
                 shape: GraphShape) -> ScoreReport:
    """Score every test event in (T_train, T] under parameters fit on train.

    The recursion is advanced silently through the training events, then
    each test event receives p = exp(-dLambda). Edges absent from training
    are flagged as new; under the mle strategy their activation is their
    first test event (forcing p = 1 there), and under the adjacency strategy
    they stay inactive and are emitted with p = 1 and the tau_infinite flag
    so that event counts reconcile.
    """
    if len(test) and test.times[0] <= T_train:
        raise ValidationError("test events must lie strictly after the training window")
    if len(train) and train.times[-1] > T_train:
        raise ValidationError("training events must lie inside the training window")
    if test.tie_offset != train.tie_offset:
        raise ValidationError("train and test logs disagree on tie_offset")

    combined = EventLog(
        np.concatenate([train.times, test.times]),
        np.concatenate([train.src, test.src]),
        np.concatenate([train.dst, test.dst]),
        horizon=T,
        tie_offset=train.tie_offset,
    )
    index = build_event_index(combined, shape)

    train_edges = set(zip(train.src.tolist(), train.dst.tolist()))
    n_train = len(train)

    pvalues = np.ones(len(test))
    new_edge = np.zeros(len(test), dtype=bool)
    tau_inf = np.zeros(len(test), dtype=bool)

    # order of each combined event within its edge sequence
    test_rows: dict[tuple[int, int], list[tuple[int, int]]] = {}
    edge_counter: dict[tuple[int, int], int] = {}
    for row in range(len(combined)):
        edge = (int(combined.src[row]), int(combined.dst[row]))
        k = edge_counter.get(edge, 0)
        edge_counter[edge] = k + 1
        if row >= n_train:
            test_rows.setdefault(edge, []).append((row - n_train, k))

    for edge, rows in sorted(test_rows.items()):
        is_new = edge not in train_edges
        tau_edge = tau[edge]
        if is_new:
            if tau.strategy == "mle":
                tau_edge = float(index.edges[edge].times[0])
            elif tau.strategy == "zero":
                tau_edge = 0.0
        if math.isinf(tau_edge):
            for out_row, _ in rows:
                pvalues[out_row] = 1.0
                new_edge[out_row] = is_new
                tau_inf[out_row] = True
            continue
        eff_tau = tau if tau[edge] == tau_edge else _override(tau, edge, tau_edge)
        state = EdgeRecursion(params, index, eff_tau, spec, edge)
        first_k = rows[0][1]
        for k in range(first_k):
            state.increment(k)  # consume the training prefix silently
        for out_row, k in rows:
            inc = state.increment(k)
            pvalues[out_row] = math.exp(-inc)
            new_edge[out_row] = is_new
    report = ScoreReport(
        times=test.times.copy(),
        src=test.src.copy(),
        dst=test.dst.copy(),
        pvalues=pvalues,
        new_edge=new_edge,
        tau_infinite=tau_inf,
    )
    if len(test):
        report.ks = ks_statistic(pvalues)
        report.per_edge = per_edge_ks(report)
        report.qq = qq_points(pvalues)
    return report


def _override(tau: TauMatrix, edge: tuple[int, int], value: float) -> TauMatrix:
    entries = dict(tau.entries)
    entries[edge] = value
    return TauMatrix(default=tau.default, entries=entries, strategy=tau.strategy)
