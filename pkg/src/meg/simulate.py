"""Exact simulation of the graph point process by thinning.

Between events every intensity is nonincreasing, so the total intensity
just after the current time dominates until the next accepted event. The
dominating rate is refreshed after every accepted event and every rejected
candidate; pairs with a finite positive activation time are handled by
capping candidate jumps at the next activation barrier.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SimulationTruncated, ValidationError
from .events import EventLog, GraphShape
from .model import Kind, ModelSpec, Params, TauMatrix


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    seed: int = 0
    max_events: int = 1_000_000

    def __post_init__(self):
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if self.max_events <= 0:
            raise ValidationError("max_events must be positive")


class _State:
    """Mutable excitation state of every component during simulation."""

    def __init__(self, params: Params, spec: ModelSpec, shape: GraphShape):
        self.params = params
        self.spec = spec
        self.t = 0.0
        self.base = np.zeros((shape.n_src, shape.n_dst))
        if spec.main.present:
            self.base += params.alpha[:, None] + params.beta[None, :]
        if spec.interaction.present:
            self.base += params.gamma @ params.gamma_p.T
        self.main_kind = spec.main
        self.int_kind = spec.interaction
        if spec.main.excites:
            self.delta_s = params.mu + params.phi
            self.delta_d = params.mu_p + params.phi_p
            if spec.main is Kind.HAWKES:
                self.S_src = np.zeros(shape.n_src)
                self.S_dst = np.zeros(shape.n_dst)
            else:
                self.last_src = np.full(shape.n_src, -np.inf)
                self.last_dst = np.full(shape.n_dst, -np.inf)
        if spec.interaction.excites:
            # per-pair decay rates and jump sizes, one slab per latent dimension
            self.delta_int = (params.nu + params.theta)[:, None, :] \
                * (params.nu_p + params.theta_p)[None, :, :]
            self.jump_int = params.nu[:, None, :] * params.nu_p[None, :, :]
            if spec.interaction is Kind.HAWKES:
                self.S_int = np.zeros_like(self.delta_int)
            else:
                self.last_int = np.full((shape.n_src, shape.n_dst), -np.inf)

    def lam(self, t: float) -> np.ndarray:
        """Intensity matrix at time t >= state time, decayed but not settled."""
        out = self.base.copy()
        if self.main_kind.excites:
            if self.main_kind is Kind.HAWKES:
                out += (self.params.mu * self.S_src * np.exp(-self.delta_s * (t - self.t)))[:, None]
                out += (self.params.mu_p * self.S_dst * np.exp(-self.delta_d * (t - self.t)))[None, :]
            else:
                src = np.where(np.isfinite(self.last_src),
                               self.params.mu * np.exp(-self.delta_s * (t - self.last_src)), 0.0)
                dst = np.where(np.isfinite(self.last_dst),
                               self.params.mu_p * np.exp(-self.delta_d * (t - self.last_dst)), 0.0)
                out += src[:, None] + dst[None, :]
        if self.int_kind.excites:
            if self.int_kind is Kind.HAWKES:
                out += (self.jump_int * self.S_int
                        * np.exp(-self.delta_int * (t - self.t))).sum(axis=2)
            else:
                gaps = t - self.last_int
                live = np.isfinite(self.last_int)
                contrib = np.where(live[:, :, None],
                                   self.jump_int * np.exp(-self.delta_int
                                                          * np.where(live, gaps, 0.0)[:, :, None]),
                                   0.0)
                out += contrib.sum(axis=2)
        return out

    def settle(self, t: float) -> None:
        """Decay the running sums to time t."""
        if self.main_kind is Kind.HAWKES:
            self.S_src *= np.exp(-self.delta_s * (t - self.t))
            self.S_dst *= np.exp(-self.delta_d * (t - self.t))
        if self.int_kind is Kind.HAWKES:
            self.S_int *= np.exp(-self.delta_int * (t - self.t))
        self.t = t

    def register(self, i: int, j: int) -> None:
        """Apply the jumps of an event on edge (i, j) at the state time."""
        if self.main_kind is Kind.HAWKES:
            self.S_src[i] += 1.0
            self.S_dst[j] += 1.0
        elif self.main_kind is Kind.MARKOV:
            self.last_src[i] = self.t
            self.last_dst[j] = self.t
        if self.int_kind is Kind.HAWKES:
            self.S_int[i, j, :] += 1.0
        elif self.int_kind is Kind.MARKOV:
            self.last_int[i, j] = self.t


def simulate(params: Params, tau: TauMatrix, spec: ModelSpec, shape: GraphShape,
             cfg: SimConfig) -> EventLog:
    """Draw one event stream on [0, horizon]; deterministic given the seed.

    Raises SimulationTruncated carrying the partial log if max_events is
    reached before the horizon.
    """
    params.validate(shape, spec)
    rng = np.random.default_rng(cfg.seed)
    T = cfg.horizon

    tau_dense = np.full((shape.n_src, shape.n_dst), tau.default)
    for (i, j), v in tau.entries.items():
        if not (0 <= i < shape.n_src and 0 <= j < shape.n_dst):
            raise ValidationError(f"tau entry {(i, j)} outside the graph ranges")
        tau_dense[i, j] = v
    barriers = np.unique(tau_dense[np.isfinite(tau_dense) & (tau_dense > 0)])
    next_barrier = 0

    state = _State(params, spec, shape)
    active = tau_dense <= 0.0
    times: list[float] = []
    srcs: list[int] = []
    dsts: list[int] = []

    def partial_log() -> EventLog:
        last = times[-1] if times else 0.0
        return EventLog(np.array(times), np.array(srcs), np.array(dsts),
                        horizon=last, tie_offset=0.0)

    while True:
        lam_now = np.where(active, state.lam(state.t), 0.0)
        lam_star = float(lam_now.sum())
        if lam_star <= 0.0:
            if next_barrier < len(barriers):
                t_b = float(barriers[next_barrier])
                if t_b > T:
                    break
                state.settle(t_b)
                active = tau_dense <= t_b
                next_barrier += 1
                continue
            break
        t_cand = state.t + rng.exponential() / lam_star
        if next_barrier < len(barriers) and t_cand >= barriers[next_barrier]:
            t_b = float(barriers[next_barrier])
            if t_b > T:
                break
            state.settle(t_b)
            active = tau_dense <= t_b
            next_barrier += 1
            continue
        if t_cand > T:
            break
        lam_cand = np.where(active, state.lam(t_cand), 0.0).ravel()
        u = rng.uniform() * lam_star
        cum = np.cumsum(lam_cand)
        state.settle(t_cand)
        if u < cum[-1]:
            flat = int(np.searchsorted(cum, u, side="right"))
            i, j = divmod(flat, shape.n_dst)
            if len(times) >= cfg.max_events:
                raise SimulationTruncated(
                    f"max_events={cfg.max_events} reached at t={t_cand}", partial_log())
            times.append(t_cand)
            srcs.append(i)
            dsts.append(j)
            state.register(i, j)

    return EventLog(np.array(times), np.array(srcs), np.array(dsts),
                    horizon=T, tie_offset=0.0)


def simulate_n_events(params: Params, tau: TauMatrix, spec: ModelSpec, shape: GraphShape,
                      n_events: int, seed: int = 0) -> EventLog:
    """Simulate until exactly n_events arrivals; horizon is the last arrival.

    Convenience for the fixed-event-count experimental protocol.
    """
    cfg = SimConfig(horizon=math.inf, seed=seed, max_events=n_events)
    try:
        log = simulate(params, tau, spec, shape, cfg)
    except SimulationTruncated as trunc:
        return trunc.log
    raise ValidationError(
        f"process died out after {len(log)} events; cannot reach {n_events}")
