"""Command-line entry point: simulate, fit, score and evaluate runs.

Every command reads a JSON config file; the flags shared across commands
can override its values. Outputs are plain CSV / JSON / key-value files in
the chosen output directory, deterministic under a fixed seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as megio
from .errors import MegError, ValidationError
from .events import EventLog, GraphShape, build_event_index
from .fit_adam import AdamConfig, adam_fit, default_init
from .fit_em import em_fit
from .model import ModelSpec, Params, TauMatrix, estimate_tau
from .score import score_events
from .simulate import SimConfig, simulate


@dataclass
class RunConfig:
    """Settings for one command, merged from the config file and CLI flags."""

    out: str = "."
    seed: int = 0
    reproducible: bool = False
    dt: float = 0.0
    events: str | None = None
    graph: str = "directed"
    split: float | None = None
    main: str = "hawkes"
    interaction: str = "absent"
    d: int = 1
    tau: str = "mle"
    method: str = "adam"
    eta: float = 0.1
    restarts: int = 1
    max_iter: int = 2000
    tol: float = 1e-6
    warm_start: bool = True
    init_scale: str = "flat"
    em_max_iter: int = 200
    em_tol: float = 1e-6
    params_file: str | None = None
    params: dict | None = None
    horizon: float | None = None
    max_events: int = 1_000_000
    ks_threshold: float | None = None

    @classmethod
    def load(cls, path: str | None, overrides: dict) -> "RunConfig":
        data = {}
        if path:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _model_spec(cfg: RunConfig) -> ModelSpec:
    return ModelSpec(main=cfg.main, interaction=cfg.interaction, d=cfg.d,
                     tau_strategy=cfg.tau)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_model(cfg: RunConfig):
    """Model inputs for simulate/score: from a params file or inline config."""
    if cfg.params_file:
        return megio.load_params(cfg.params_file)
    if cfg.params is None:
        raise ValidationError("need params_file or inline params")
    inline = cfg.params
    shape_d = inline["shape"]
    shape = GraphShape(n_src=shape_d["n_src"], n_dst=shape_d["n_dst"],
                       bipartite=shape_d.get("bipartite", False))
    spec = ModelSpec.from_dict(inline["model_spec"])
    params = Params.from_dict(inline["values"])
    params.validate(shape, spec)
    tau = TauMatrix.from_dict(inline["tau"]) if "tau" in inline \
        else TauMatrix(default=0.0, entries={}, strategy="zero")
    return params, spec, shape, tau, None


def cmd_simulate(cfg: RunConfig) -> int:
    params, spec, shape, tau, labels = _load_model(cfg)
    if cfg.horizon is None:
        raise ValidationError("simulate requires a horizon")
    sim = simulate(params, tau, spec, shape,
                   SimConfig(horizon=cfg.horizon, seed=cfg.seed, max_events=cfg.max_events))
    out = _outdir(cfg)
    megio.write_events_csv(out / "events.csv", sim, labels)
    print(f"simulated {len(sim)} events over [0, {cfg.horizon}] -> {out / 'events.csv'}")
    return 0


def _ingest_train(cfg: RunConfig):
    if not cfg.events:
        raise ValidationError("missing events path")
    result = megio.ingest(cfg.events, kind=cfg.graph, dt=cfg.dt)
    if cfg.split is not None:
        parts = megio.split(result.log, cfg.split)
        return result, parts.train, parts.test, parts
    return result, result.log, None, None


def cmd_fit(cfg: RunConfig) -> int:
    result, train, _, parts = _ingest_train(cfg)
    spec = _model_spec(cfg)
    index = build_event_index(train, result.shape)
    tau = estimate_tau(index, result.shape, cfg.tau)
    rng = np.random.default_rng(cfg.seed)
    init = default_init(index, result.shape, spec, rng=rng,
                        interaction_scale=cfg.init_scale)
    if cfg.method == "adam":
        adam_cfg = AdamConfig(step_size=cfg.eta, max_iter=cfg.max_iter, tol=cfg.tol,
                              restarts=cfg.restarts, hawkes_warm_start=cfg.warm_start)
        report = adam_fit(index, tau, spec, result.shape, init, adam_cfg, rng=rng)
    elif cfg.method == "em":
        report = em_fit(index, tau, spec, result.shape, init,
                        max_iter=cfg.em_max_iter, tol=cfg.em_tol)
    else:
        raise ValidationError(f"unknown fit method {cfg.method!r}")
    out = _outdir(cfg)
    megio.save_params(out / "params.json", report.params, spec, result.shape, tau,
                      result.labels)
    with open(out / "fit_report.json", "w", encoding="utf-8") as fh:
        json.dump({
            "method": report.method,
            "log_likelihood": report.log_likelihood,
            "converged": report.converged,
            "iterations": report.iterations,
            "best_restart": report.best_restart,
            "restart_log_likelihoods": report.restart_log_likelihoods,
            "held_parameters": report.held_parameters,
            "trace": report.trace,
            "n_duplicates_dropped": result.n_duplicates,
            "split": None if parts is None else {
                "train_edges": parts.train_edges, "test_edges": parts.test_edges,
                "shared_edges": parts.shared_edges, "new_edges": parts.new_edges,
            },
        }, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"fit ({report.method}) logL={report.log_likelihood:.6f} "
          f"converged={report.converged} -> {out / 'params.json'}")
    return 0


def _scores(cfg: RunConfig, which: str):
    params, spec, shape, tau, labels = megio.load_params(cfg.params_file)
    if not cfg.events:
        raise ValidationError("missing events path")
    result = megio.ingest(cfg.events, kind=cfg.graph, dt=cfg.dt)
    if result.shape.n_src > shape.n_src or result.shape.n_dst > shape.n_dst:
        raise ValidationError("event file contains nodes unknown to the fitted model")
    log = result.log
    if cfg.split is None:
        raise ValidationError(f"{which} requires a split time")
    parts = megio.split(log, cfg.split)
    return params, spec, shape, tau, labels, parts, log


def cmd_score(cfg: RunConfig) -> int:
    params, spec, shape, tau, labels, parts, log = _scores(cfg, "score")
    report = score_events(params, spec, tau, parts.train, parts.test,
                          cfg.split, log.horizon, shape)
    out = _outdir(cfg)
    megio.write_scores_csv(out / "scores.csv", report, labels)
    megio.write_per_edge_csv(out / "per_edge_ks.csv", report, labels)
    megio.write_qq_csv(out / "qq.csv", report.qq)
    megio.write_ks_summary(out / "ks_summary.txt", {
        "events": len(report),
        "new_edge_events": int(report.new_edge.sum()),
        "ks": report.ks,
    })
    print(f"scored {len(report)} events, KS={report.ks:.4f} -> {out / 'scores.csv'}")
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    params, spec, shape, tau, labels, parts, log = _scores(cfg, "evaluate")
    empty_train = EventLog(np.zeros(0), np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64), horizon=0.0,
                           tie_offset=log.tie_offset)
    train_report = score_events(params, spec, tau, empty_train, parts.train,
                                0.0, cfg.split, shape)
    test_report = score_events(params, spec, tau, parts.train, parts.test,
                               cfg.split, log.horizon, shape)
    out = _outdir(cfg)
    megio.write_qq_csv(out / "qq_train.csv", train_report.qq)
    megio.write_qq_csv(out / "qq_test.csv", test_report.qq)
    entries = {
        "train_events": len(train_report),
        "test_events": len(test_report),
        "train_ks": train_report.ks,
        "test_ks": test_report.ks,
        "new_edges": parts.new_edges,
    }
    if cfg.ks_threshold is not None:
        entries["ks_below_threshold"] = bool(test_report.ks <= cfg.ks_threshold)
    megio.write_ks_summary(out / "ks_summary.txt", entries)
    print(f"train KS {train_report.ks:.4f}  test KS {test_report.ks:.4f} "
          f"-> {out / 'ks_summary.txt'}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "score": cmd_score,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meg",
                                     description="Mutually exciting point-process graphs")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="JSON config file")
        p.add_argument("--events", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dt", type=float, default=None)
        p.add_argument("--split", type=float, default=None)
        p.add_argument("--graph", choices=["directed", "bipartite"], default=None)
        p.add_argument("--main", choices=["absent", "poisson", "markov", "hawkes"],
                       default=None)
        p.add_argument("--interaction", choices=["absent", "poisson", "markov", "hawkes"],
                       default=None)
        p.add_argument("--d", type=int, default=None)
        p.add_argument("--tau", choices=["mle", "zero", "adjacency"], default=None)
        p.add_argument("--method", choices=["adam", "em"], default=None)
        p.add_argument("--eta", type=float, default=None)
        p.add_argument("--restarts", type=int, default=None)
        p.add_argument("--params-file", dest="params_file", default=None)
        p.add_argument("--horizon", type=float, default=None)
        p.add_argument("--reproducible", action="store_const", const=True, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        cfg = RunConfig.load(args.config, overrides)
        return _COMMANDS[args.command](cfg)
    except MegError as exc:
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
