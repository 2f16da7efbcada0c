"""File formats: event CSVs, parameter files, score reports, label tables.

Event files are CSV with header ``time,source,destination``; times are
decimal seconds relative to the file's epoch (declared in a leading comment
line). Node labels are arbitrary strings mapped to dense integer ids in
first-appearance order; the mapping is persisted next to fitted parameters
so runs are reproducible byte for byte.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IngestError, ValidationError
from .events import EventLog, GraphShape
from .model import ModelSpec, Params, TauMatrix


@dataclass(frozen=True)
class LabelTable:
    """External node labels per side; directed graphs share one namespace."""

    bipartite: bool
    src_labels: tuple[str, ...]
    dst_labels: tuple[str, ...]

    def to_dict(self) -> dict:
        if self.bipartite:
            return {"kind": "bipartite", "sources": list(self.src_labels),
                    "destinations": list(self.dst_labels)}
        return {"kind": "directed", "nodes": list(self.src_labels)}

    @classmethod
    def from_dict(cls, data: dict) -> "LabelTable":
        if data["kind"] == "bipartite":
            return cls(True, tuple(data["sources"]), tuple(data["destinations"]))
        nodes = tuple(data["nodes"])
        return cls(False, nodes, nodes)


@dataclass
class IngestResult:
    log: EventLog
    shape: GraphShape
    labels: LabelTable
    n_duplicates: int


def ingest(path, kind: str = "directed", dt: float = 0.0) -> IngestResult:
    """Parse, validate and canonicalise an event CSV.

    Exact-duplicate (time, source, destination) triplets are dropped and
    counted; events are stably sorted by time; labels become dense ids in
    first-appearance order.
    """
    if kind not in ("directed", "bipartite"):
        raise IngestError(f"unknown graph kind {kind!r}")
    times: list[float] = []
    srcs: list[str] = []
    dsts: list[str] = []
    horizon = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    with fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("horizon:"):
                    horizon = float(body.split(":", 1)[1])
                continue
            if not header_seen:
                if [c.strip() for c in line.split(",")] != ["time", "source", "destination"]:
                    raise IngestError(f"{path}:{lineno}: expected header time,source,destination")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise IngestError(f"{path}:{lineno}: expected 3 fields, got {len(parts)}")
            try:
                t = float(parts[0])
            except ValueError:
                raise IngestError(f"{path}:{lineno}: bad time value {parts[0]!r}") from None
            if not math.isfinite(t) or t < 0:
                raise IngestError(f"{path}:{lineno}: time must be finite and >= 0")
            times.append(t)
            srcs.append(parts[1].strip())
            dsts.append(parts[2].strip())
        if not header_seen:
            raise IngestError(f"{path}: missing header line")

    order = np.argsort(np.asarray(times), kind="stable")
    seen: set[tuple[float, str, str]] = set()
    kept: list[int] = []
    n_dup = 0
    for row in order:
        key = (times[row], srcs[row], dsts[row])
        if key in seen:
            n_dup += 1
            continue
        seen.add(key)
        kept.append(int(row))

    if kind == "directed":
        labels: list[str] = []
        lut: dict[str, int] = {}
        for row in kept:
            for lab in (srcs[row], dsts[row]):
                if lab not in lut:
                    lut[lab] = len(labels)
                    labels.append(lab)
        src_ids = np.array([lut[srcs[row]] for row in kept], dtype=np.int64)
        dst_ids = np.array([lut[dsts[row]] for row in kept], dtype=np.int64)
        n = max(len(labels), 1)
        shape = GraphShape.directed(n)
        table = LabelTable(False, tuple(labels), tuple(labels))
    else:
        s_labels: list[str] = []
        s_lut: dict[str, int] = {}
        d_labels: list[str] = []
        d_lut: dict[str, int] = {}
        for row in kept:
            if srcs[row] not in s_lut:
                s_lut[srcs[row]] = len(s_labels)
                s_labels.append(srcs[row])
            if dsts[row] not in d_lut:
                d_lut[dsts[row]] = len(d_labels)
                d_labels.append(dsts[row])
        src_ids = np.array([s_lut[srcs[row]] for row in kept], dtype=np.int64)
        dst_ids = np.array([d_lut[dsts[row]] for row in kept], dtype=np.int64)
        shape = GraphShape.bipartite_graph(max(len(s_labels), 1), max(len(d_labels), 1))
        table = LabelTable(True, tuple(s_labels), tuple(d_labels))

    t_arr = np.array([times[row] for row in kept], dtype=np.float64)
    if horizon is None:
        horizon = float(t_arr[-1]) if len(t_arr) else 0.0
    log = EventLog(t_arr, src_ids, dst_ids, horizon=horizon, tie_offset=dt)
    return IngestResult(log=log, shape=shape, labels=table, n_duplicates=n_dup)


def write_events_csv(path, log: EventLog, labels: LabelTable | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# epoch: 0\n")
        fh.write(f"# horizon: {log.horizon!r}\n")
        fh.write("time,source,destination\n")
        for t, i, j in zip(log.times, log.src, log.dst):
            s = labels.src_labels[i] if labels else str(int(i))
            d = labels.dst_labels[j] if labels else str(int(j))
            fh.write(f"{float(t)!r},{s},{d}\n")


@dataclass
class SplitResult:
    train: EventLog
    test: EventLog
    train_edges: int
    test_edges: int
    shared_edges: int
    new_edges: int


def split(log: EventLog, t_star: float) -> SplitResult:
    """Train/test split at T*: events with t <= T* train, t > T* test."""
    if not (0 < t_star < log.horizon):
        raise ValidationError(f"split time {t_star} outside (0, {log.horizon})")
    mask = log.times <= t_star
    train = EventLog(log.times[mask], log.src[mask], log.dst[mask],
                     horizon=t_star, tie_offset=log.tie_offset)
    test = EventLog(log.times[~mask], log.src[~mask], log.dst[~mask],
                    horizon=log.horizon, tie_offset=log.tie_offset)
    if len(train) == 0 or len(test) == 0:
        warnings.warn("degenerate split: one side is empty", stacklevel=2)
    tr = set(zip(train.src.tolist(), train.dst.tolist()))
    te = set(zip(test.src.tolist(), test.dst.tolist()))
    return SplitResult(
        train=train,
        test=test,
        train_edges=len(tr),
        test_edges=len(te),
        shared_edges=len(tr & te),
        new_edges=len(te - tr),
    )


_PARAMS_FORMAT = "meg-params-v1"


def save_params(path, params: Params, spec: ModelSpec, shape: GraphShape,
                tau: TauMatrix, labels: LabelTable | None = None) -> None:
    doc = {
        "format": _PARAMS_FORMAT,
        "shape": {"n_src": shape.n_src, "n_dst": shape.n_dst, "bipartite": shape.bipartite},
        "model_spec": spec.to_dict(),
        "params": params.to_dict(),
        "tau": tau.to_dict(),
        "labels": labels.to_dict() if labels else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_params(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != _PARAMS_FORMAT:
        raise IngestError(f"{path}: not a {_PARAMS_FORMAT} file")
    shape = GraphShape(**doc["shape"])
    spec = ModelSpec.from_dict(doc["model_spec"])
    params = Params.from_dict(doc["params"])
    tau = TauMatrix.from_dict(doc["tau"])
    labels = LabelTable.from_dict(doc["labels"]) if doc.get("labels") else None
    params.validate(shape, spec)
    return params, spec, shape, tau, labels


def write_scores_csv(path, report, labels: LabelTable | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("time,source,destination,pvalue,new_edge\n")
        for t, i, j, p, new in zip(report.times, report.src, report.dst,
                                   report.pvalues, report.new_edge):
            s = labels.src_labels[i] if labels else str(int(i))
            d = labels.dst_labels[j] if labels else str(int(j))
            fh.write(f"{float(t)!r},{s},{d},{float(p)!r},{int(new)}\n")


def write_per_edge_csv(path, report, labels: LabelTable | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source,destination,n_events,ks\n")
        for (i, j), n, ks in report.per_edge:
            s = labels.src_labels[i] if labels else str(int(i))
            d = labels.dst_labels[j] if labels else str(int(j))
            fh.write(f"{s},{d},{n},{float(ks)!r}\n")


def write_qq_csv(path, qq: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theoretical,empirical\n")
        for a, b in qq:
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def write_ks_summary(path, entries: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in entries.items():
            fh.write(f"{key}: {value}\n")
