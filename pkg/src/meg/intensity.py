"""Pointwise intensities, compensators and sequential compensator increments.

Every excitation component is a family of exponential kernel windows: the
event at time s contributes jump * exp(-delta * (x - s)) for x in [L, U],
with L = max(tau, s + dt) and U the next event's activation time (markov) or
unbounded (hawkes). The closed-form compensator integrates each window
directly; the recursion walks the windows once to produce increments between
consecutive edge events in O(gap) time.
"""

from __future__ import annotations

import math

import numpy as np

from ._tables import contributing_count
from .errors import UndefinedIntensityError, ValidationError
from .events import EventIndex
from .model import Kind, ModelSpec, Params, TauMatrix


def intensity(params: Params, index: EventIndex, tau: TauMatrix, spec: ModelSpec,
              edge: tuple[int, int], t: float) -> float:
    """Conditional intensity of one edge at time t (left limit under ties)."""
    i, j = edge
    tau_ij = tau[edge]
    if t < tau_ij or math.isinf(tau_ij):
        raise UndefinedIntensityError(f"edge {edge} is not active at t={t} (tau={tau_ij})")
    dt = index.tie_offset
    val = 0.0
    if spec.main.present:
        val += params.alpha[i] + params.beta[j]
        if spec.main.excites:
            val += params.mu[i] * _kernel_sum(
                index.src_times[i], params.mu[i] + params.phi[i], t, dt, spec.main)
            val += params.mu_p[j] * _kernel_sum(
                index.dst_times[j], params.mu_p[j] + params.phi_p[j], t, dt, spec.main)
    if spec.interaction.present:
        val += float(params.gamma[i] @ params.gamma_p[j])
        if spec.interaction.excites:
            times = index.edges[edge].times if edge in index.edges else np.zeros(0)
            deltas = (params.nu[i] + params.theta[i]) * (params.nu_p[j] + params.theta_p[j])
            jumps = params.nu[i] * params.nu_p[j]
            for q in range(spec.d):
                val += jumps[q] * _kernel_sum(times, deltas[q], t, dt, spec.interaction)
    return float(val)


def _kernel_sum(times: np.ndarray, delta: float, t: float, dt: float, kind: Kind) -> float:
    cut = contributing_count(times, t, dt)
    if cut == 0:
        return 0.0
    sel = times[cut - 1:cut] if kind is Kind.MARKOV else times[:cut]
    return float(np.exp(-delta * (t - sel)).sum())


def compensator(params: Params, index: EventIndex, tau: TauMatrix, spec: ModelSpec,
                edge: tuple[int, int], t: float) -> float:
    """Integrated intensity of one edge over [tau, t]; 0 when inactive."""
    i, j = edge
    tau_ij = tau[edge]
    if math.isinf(tau_ij) or t <= tau_ij:
        return 0.0
    dt = index.tie_offset
    total = 0.0
    if spec.main.present:
        total += (params.alpha[i] + params.beta[j]) * (t - tau_ij)
        if spec.main.excites:
            total += _window_integral(
                index.src_times[i], params.mu[i], params.mu[i] + params.phi[i],
                tau_ij, t, dt, spec.main)
            total += _window_integral(
                index.dst_times[j], params.mu_p[j], params.mu_p[j] + params.phi_p[j],
                tau_ij, t, dt, spec.main)
    if spec.interaction.present:
        total += float(params.gamma[i] @ params.gamma_p[j]) * (t - tau_ij)
        if spec.interaction.excites:
            times = index.edges[edge].times if edge in index.edges else np.zeros(0)
            deltas = (params.nu[i] + params.theta[i]) * (params.nu_p[j] + params.theta_p[j])
            jumps = params.nu[i] * params.nu_p[j]
            for q in range(spec.d):
                total += _window_integral(times, jumps[q], deltas[q], tau_ij, t, dt,
                                          spec.interaction)
    return float(total)


def _window_integral(times: np.ndarray, jump: float, delta: float, tau: float,
                     t: float, dt: float, kind: Kind) -> float:
    """Integral over [tau, t] of one component's kernel windows."""
    if len(times) == 0:
        return 0.0
    L = np.maximum(tau, times + dt)
    if kind is Kind.MARKOV:
        U = np.minimum(t, np.r_[times[1:] + dt, np.inf])
    else:
        U = np.full(len(times), float(t))
    mask = U > L
    if not mask.any():
        return 0.0
    s = times[mask]
    contrib = np.exp(-delta * (L[mask] - s)) - np.exp(-delta * (U[mask] - s))
    return float(jump / delta * contrib.sum())


class _ComponentState:
    """Streaming state of one scaled-exponential kernel family on an edge.

    ``p`` counts the events already contributing under the dt rule; psi is
    their decayed sum at the current time and H the sum of the kernel values
    at each event's own window head max(tau - s, dt).
    """

    def __init__(self, times, jump, delta, kind, tau, dt):
        self.times = times
        self.jump = jump
        self.delta = delta
        self.kind = kind
        self.tau = tau
        self.dt = dt
        self.cur = tau
        self.p = contributing_count(times, tau, dt)
        self.psi = 0.0
        self.H = 0.0
        if kind is Kind.HAWKES:
            back = tau - times[:self.p]
            self.psi = float(np.exp(-delta * back).sum())
            self.H = float(np.exp(-delta * np.maximum(back, dt)).sum())

    def advance(self, t: float) -> float:
        """Window integral of this component over (cur, t]."""
        times, delta, dt = self.times, self.delta, self.dt
        new_p = contributing_count(times, t, dt)
        if self.kind is Kind.HAWKES:
            fresh = times[self.p:new_p]
            before = self.H - self.psi
            self.psi = self.psi * math.exp(-delta * (t - self.cur)) \
                + float(np.exp(-delta * (t - fresh)).sum())
            self.H += float(np.exp(-delta * np.maximum(self.tau - fresh, dt)).sum())
            inc = self.jump / delta * (self.H - self.psi - before)
        else:  # MARKOV: integrate the single active kernel between switches
            x0 = self.cur
            add = 0.0
            for idx in range(self.p, new_p):
                act = times[idx] + dt if dt > 0.0 else times[idx]
                act = min(max(act, x0), t)
                if idx > 0:
                    s = times[idx - 1]
                    add += math.exp(-delta * (x0 - s)) - math.exp(-delta * (act - s))
                x0 = act
            if new_p > 0 and t > x0:
                s = times[new_p - 1]
                add += math.exp(-delta * (x0 - s)) - math.exp(-delta * (t - s))
            self.psi = math.exp(-delta * (t - times[new_p - 1])) if new_p > 0 else 0.0
            inc = self.jump / delta * add
        self.p = new_p
        self.cur = t
        return inc


class EdgeRecursion:
    """Sequential compensator evaluation on one edge.

    Advances through time monotonically, returning the compensator increment
    accumulated since the previous call; consecutive calls at the edge's own
    event times reproduce the time-rescaling increments of Eq. exp(-dLambda).
    Exposes the running recursion values psi (source), psi_prime
    (destination) and psi_tilde (interaction dimensions).
    """

    def __init__(self, params: Params, index: EventIndex, tau: TauMatrix,
                 spec: ModelSpec, edge: tuple[int, int]):
        i, j = edge
        self.edge = edge
        tau_ij = tau[edge]
        if math.isinf(tau_ij):
            raise ValidationError(f"edge {edge} is inactive (tau = inf)")
        self.cur = tau_ij
        self.k = 0
        dt = index.tie_offset
        self.base = 0.0
        self.components: list[_ComponentState] = []
        self._src = self._dst = None
        self._int: list[_ComponentState] = []
        if spec.main.present:
            self.base += params.alpha[i] + params.beta[j]
            if spec.main.excites:
                self._src = _ComponentState(
                    index.src_times[i], params.mu[i], params.mu[i] + params.phi[i],
                    spec.main, tau_ij, dt)
                self._dst = _ComponentState(
                    index.dst_times[j], params.mu_p[j], params.mu_p[j] + params.phi_p[j],
                    spec.main, tau_ij, dt)
                self.components += [self._src, self._dst]
        if spec.interaction.present:
            self.base += float(params.gamma[i] @ params.gamma_p[j])
            if spec.interaction.excites:
                times = index.edges[edge].times if edge in index.edges else np.zeros(0)
                deltas = (params.nu[i] + params.theta[i]) * (params.nu_p[j] + params.theta_p[j])
                jumps = params.nu[i] * params.nu_p[j]
                for q in range(spec.d):
                    self._int.append(_ComponentState(
                        times, jumps[q], deltas[q], spec.interaction, tau_ij, dt))
                self.components += self._int
        self.event_times = index.edges[edge].times if edge in index.edges else np.zeros(0)

    @property
    def psi(self) -> float:
        return self._src.psi if self._src is not None else 0.0

    @property
    def psi_prime(self) -> float:
        return self._dst.psi if self._dst is not None else 0.0

    def psi_tilde(self, q: int) -> float:
        return self._int[q].psi if self._int else 0.0

    def advance(self, t: float) -> float:
        """Compensator increment over (cur, t]."""
        if t < self.cur:
            raise ValidationError("recursion may only advance forward")
        inc = self.base * (t - self.cur)
        for c in self.components:
            inc += c.advance(t)
        self.cur = t
        return inc

    def increment(self, k: int) -> float:
        """Increment between edge events k-1 and k (0-based, sequential)."""
        if k != self.k:
            raise ValidationError(f"recursion is at event {self.k}, requested {k}")
        if k >= len(self.event_times):
            raise ValidationError(f"edge {self.edge} has only {len(self.event_times)} events")
        self.k += 1
        return self.advance(float(self.event_times[k]))


def compensator_increments(params: Params, index: EventIndex, tau: TauMatrix,
                           spec: ModelSpec, edge: tuple[int, int]) -> np.ndarray:
    """All consecutive compensator increments at the edge's event times."""
    state = EdgeRecursion(params, index, tau, spec, edge)
    n = len(state.event_times)
    return np.array([state.increment(k) for k in range(n)])
