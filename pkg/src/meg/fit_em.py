"""EM fitting through the branching-structure reparametrisation.

Jump/decay pairs are rewritten as decay rates and jump-to-decay ratios:
mu = mu_t * phi_t with phi_t = mu + phi and mu_t in (0, 1), and likewise per
latent dimension for the interaction factors. Each event is attributed in
expectation to the background components or to an earlier event
(responsibilities); the M-step has closed forms for baselines and ratios and
fixed-point updates for the decay rates, applied with the most recent
estimates. Only full-history (hawkes) components are supported, matching the
derivation; anything else belongs to the gradient-ascent fitter.

Responsibilities are never materialised globally: per-event arrays stream
on demand, and the M-step consumes one-pass aggregates built from the same
per-node recursion tables as the likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._tables import Side, contributing_count, interaction_tables
from .errors import UnsupportedSpecError, ValidationError
from .events import EventIndex, GraphShape
from .fit_adam import FitReport
from .likelihood import log_likelihood
from .model import Kind, ModelSpec, Params, TauMatrix

_RATIO_CAP = 1.0 - 1e-10
_INNER_TOL = 1e-10
_INNER_MAX = 100


@dataclass
class TildeParams:
    """Parameters in ratio/decay-rate form; bijective with Params."""

    alpha: np.ndarray | None = None
    beta: np.ndarray | None = None
    mu_t: np.ndarray | None = None
    phi_t: np.ndarray | None = None
    mu_p_t: np.ndarray | None = None
    phi_p_t: np.ndarray | None = None
    gamma: np.ndarray | None = None
    gamma_p: np.ndarray | None = None
    nu_t: np.ndarray | None = None
    theta_t: np.ndarray | None = None
    nu_p_t: np.ndarray | None = None
    theta_p_t: np.ndarray | None = None

    @classmethod
    def from_params(cls, params: Params, spec: ModelSpec) -> "TildeParams":
        f = {}
        if spec.main.present:
            f["alpha"] = params.alpha.copy()
            f["beta"] = params.beta.copy()
            if spec.main.excites:
                f["phi_t"] = params.mu + params.phi
                f["mu_t"] = params.mu / f["phi_t"]
                f["phi_p_t"] = params.mu_p + params.phi_p
                f["mu_p_t"] = params.mu_p / f["phi_p_t"]
        if spec.interaction.present:
            f["gamma"] = params.gamma.copy()
            f["gamma_p"] = params.gamma_p.copy()
            if spec.interaction.excites:
                f["theta_t"] = params.nu + params.theta
                f["nu_t"] = params.nu / f["theta_t"]
                f["theta_p_t"] = params.nu_p + params.theta_p
                f["nu_p_t"] = params.nu_p / f["theta_p_t"]
        return cls(**f)

    def to_params(self, spec: ModelSpec) -> Params:
        f = {}
        if spec.main.present:
            f["alpha"] = self.alpha.copy()
            f["beta"] = self.beta.copy()
            if spec.main.excites:
                f["mu"] = self.mu_t * self.phi_t
                f["phi"] = self.phi_t * (1.0 - self.mu_t)
                f["mu_p"] = self.mu_p_t * self.phi_p_t
                f["phi_p"] = self.phi_p_t * (1.0 - self.mu_p_t)
        if spec.interaction.present:
            f["gamma"] = self.gamma.copy()
            f["gamma_p"] = self.gamma_p.copy()
            if spec.interaction.excites:
                f["nu"] = self.nu_t * self.theta_t
                f["theta"] = self.theta_t * (1.0 - self.nu_t)
                f["nu_p"] = self.nu_p_t * self.theta_p_t
                f["theta_p"] = self.theta_p_t * (1.0 - self.nu_p_t)
        return Params(**f)

    def copy(self) -> "TildeParams":
        return TildeParams(**{
            k: (v.copy() if v is not None else None) for k, v in self.__dict__.items()
        })


def _check_spec(spec: ModelSpec):
    for kind in (spec.main, spec.interaction):
        if kind.present and kind is not Kind.HAWKES:
            raise UnsupportedSpecError(
                "EM supports only full-history (hawkes) components; "
                "use the adam fitter for poisson or markov parts"
            )


@dataclass
class EventResponsibilities:
    """Attribution probabilities of one event over its admissible parents."""

    edge: tuple[int, int]
    k: int
    time: float
    xi_alpha: float
    xi_beta: float
    xi_gamma: np.ndarray      # (d,)
    zeta_alpha: np.ndarray    # over contributing source-node events
    zeta_beta: np.ndarray     # over contributing destination-node events
    zeta_gamma: np.ndarray    # (n_edge_parents, d)

    def total(self) -> float:
        return float(self.xi_alpha + self.xi_beta + self.xi_gamma.sum()
                     + self.zeta_alpha.sum() + self.zeta_beta.sum()
                     + self.zeta_gamma.sum())


class Responsibilities:
    """Lazy view of every event's responsibilities under given parameters.

    Iterating yields per-event records; ``aggregates`` folds the whole
    stream into the M-step sufficient statistics without ever holding more
    than one event's parent window in memory.
    """

    def __init__(self, tilde: TildeParams, index: EventIndex, tau: TauMatrix,
                 spec: ModelSpec):
        _check_spec(spec)
        self.tilde = tilde
        self.index = index
        self.tau = tau
        self.spec = spec
        self.params = tilde.to_params(spec)

    def _active_edges(self):
        for edge in self.index.sorted_edges():
            if not math.isinf(self.tau[edge]):
                yield edge

    def __iter__(self):
        params, spec, index = self.params, self.spec, self.index
        dt = index.tie_offset
        for edge in self._active_edges():
            i, j = edge
            ev = index.edges[edge]
            for k, t in enumerate(ev.times):
                xi_a = xi_b = 0.0
                xi_g = np.zeros(spec.d if spec.interaction.present else 0)
                za = zb = np.zeros(0)
                zg = np.zeros((0, spec.d if spec.interaction.present else 0))
                if spec.main.present:
                    xi_a = params.alpha[i]
                    xi_b = params.beta[j]
                    s = index.src_times[i]
                    za = params.mu[i] * np.exp(
                        -(params.mu[i] + params.phi[i])
                        * (t - s[:contributing_count(s, t, dt)]))
                    sd = index.dst_times[j]
                    zb = params.mu_p[j] * np.exp(
                        -(params.mu_p[j] + params.phi_p[j])
                        * (t - sd[:contributing_count(sd, t, dt)]))
                if spec.interaction.present:
                    xi_g = params.gamma[i] * params.gamma_p[j]
                    cut = contributing_count(ev.times, t, dt)
                    gaps = (t - ev.times[:cut])[:, None]
                    deltas = (params.nu[i] + params.theta[i]) \
                        * (params.nu_p[j] + params.theta_p[j])
                    zg = params.nu[i] * params.nu_p[j] * np.exp(-gaps * deltas[None, :])
                norm = xi_a + xi_b + xi_g.sum() + za.sum() + zb.sum() + zg.sum()
                yield EventResponsibilities(
                    edge=edge, k=k, time=float(t),
                    xi_alpha=xi_a / norm, xi_beta=xi_b / norm,
                    xi_gamma=xi_g / norm,
                    zeta_alpha=za / norm, zeta_beta=zb / norm,
                    zeta_gamma=zg / norm,
                )

    def aggregates(self) -> "_EMStats":
        params, spec, index = self.params, self.spec, self.index
        dt = index.tie_offset
        T = index.horizon
        shape = index.shape
        stats = _EMStats(shape, spec)
        side_s = side_d = None
        if spec.main.present:
            delta_s = params.mu + params.phi
            delta_d = params.mu_p + params.phi_p
            side_s = Side(Kind.HAWKES, index.src_times, delta_s, dt, T)
            side_d = Side(Kind.HAWKES, index.dst_times, delta_d, dt, T)
        for edge in self._active_edges():
            i, j = edge
            ev = index.edges[edge]
            base = 0.0
            if spec.main.present:
                base += params.alpha[i] + params.beta[j]
            if spec.interaction.present:
                base += float(params.gamma[i] @ params.gamma_p[j])
            lam = np.full(len(ev), base)
            if spec.main.present:
                Ks, Kts = side_s.K_at(i, ev.u_src)
                Kd, Ktd = side_d.K_at(j, ev.u_dst)
                lam = lam + params.mu[i] * Ks + params.mu_p[j] * Kd
            if spec.interaction.present:
                delta_int = (params.nu[i] + params.theta[i]) \
                    * (params.nu_p[j] + params.theta_p[j])
                jump_int = params.nu[i] * params.nu_p[j]
                itab = interaction_tables(ev.times, delta_int, dt, T, Kind.HAWKES)
                lam = lam + itab["K"] @ jump_int
            inv = 1.0 / lam
            S = float(inv.sum())
            if spec.main.present:
                stats.xi_alpha[i] += params.alpha[i] * S
                stats.xi_beta[j] += params.beta[j] * S
                stats.z_alpha[i] += params.mu[i] * float(inv @ Ks)
                stats.zt_alpha[i] += params.mu[i] * float(inv @ Kts)
                stats.z_beta[j] += params.mu_p[j] * float(inv @ Kd)
                stats.zt_beta[j] += params.mu_p[j] * float(inv @ Ktd)
            if spec.interaction.present:
                stats.xi_gamma[edge] = params.gamma[i] * params.gamma_p[j] * S
                stats.z_gamma[edge] = jump_int * (inv @ itab["K"])
                stats.zt_gamma[edge] = jump_int * (inv @ itab["Kt"])
        return stats


class _EMStats:
    def __init__(self, shape: GraphShape, spec: ModelSpec):
        self.xi_alpha = np.zeros(shape.n_src)
        self.xi_beta = np.zeros(shape.n_dst)
        self.z_alpha = np.zeros(shape.n_src)
        self.zt_alpha = np.zeros(shape.n_src)
        self.z_beta = np.zeros(shape.n_dst)
        self.zt_beta = np.zeros(shape.n_dst)
        self.xi_gamma: dict[tuple[int, int], np.ndarray] = {}
        self.z_gamma: dict[tuple[int, int], np.ndarray] = {}
        self.zt_gamma: dict[tuple[int, int], np.ndarray] = {}


def e_step(tilde: TildeParams, index: EventIndex, tau: TauMatrix,
           spec: ModelSpec) -> Responsibilities:
    """Responsibilities of every event under the current parameters."""
    return Responsibilities(tilde, index, tau, spec)


def _actives_by_side(tau: TauMatrix, shape: GraphShape):
    """Active edges grouped by source and by destination."""
    by_src: dict[int, list[tuple[int, float]]] = {i: [] for i in range(shape.n_src)}
    by_dst: dict[int, list[tuple[int, float]]] = {j: [] for j in range(shape.n_dst)}
    if tau.default == 0.0:
        for i in range(shape.n_src):
            for j in range(shape.n_dst):
                v = tau[(i, j)]
                if math.isfinite(v):
                    by_src[i].append((j, v))
                    by_dst[j].append((i, v))
    else:
        for (i, j), v in tau.entries.items():
            if math.isfinite(v):
                by_src[i].append((j, v))
                by_dst[j].append((i, v))
    return by_src, by_dst


def m_step(resp: Responsibilities, tilde: TildeParams, index: EventIndex,
           tau: TauMatrix, spec: ModelSpec, T: float,
           held: list[str] | None = None) -> TildeParams:
    """One maximisation step using the most recent parameter estimates.

    Baselines and ratios have closed forms; decay rates iterate their
    fixed-point equations until relative change < 1e-10 or 100 iterations.
    Parameters with no attributable mass are held at their previous value.
    """
    _check_spec(spec)
    stats = resp.aggregates()
    shape = index.shape
    dt = index.tie_offset
    new = tilde.copy()
    if held is None:
        held = []
    by_src, by_dst = _actives_by_side(tau, shape)

    if spec.main.present:
        _update_baseline(new.alpha, stats.xi_alpha, by_src, T, "alpha", held)
        _update_baseline(new.beta, stats.xi_beta, by_dst, T, "beta", held)
    if spec.interaction.present:
        _update_gamma(new.gamma, new.gamma_p, stats, by_src, T, shape, spec,
                      source_side=True, held=held)
        _update_gamma(new.gamma, new.gamma_p, stats, by_dst, T, shape, spec,
                      source_side=False, held=held)
    if spec.main.present:
        for i in range(shape.n_src):
            _update_rate_pair(new.mu_t, new.phi_t, i, stats.z_alpha[i], stats.zt_alpha[i],
                              index.src_times[i], by_src[i], T, dt, f"mu_t[{i}]", held)
        for j in range(shape.n_dst):
            _update_rate_pair(new.mu_p_t, new.phi_p_t, j, stats.z_beta[j], stats.zt_beta[j],
                              index.dst_times[j], by_dst[j], T, dt, f"mu_p_t[{j}]", held)
    if spec.interaction.present:
        _update_interaction_rates(new, stats, index, by_src, T, dt, spec,
                                  source_side=True, held=held)
        _update_interaction_rates(new, stats, index, by_dst, T, dt, spec,
                                  source_side=False, held=held)
    return new


def _update_baseline(values, numerators, by_side, T, name, held):
    for node, actives in by_side.items():
        den = sum(T - min(T, v) for _, v in actives)
        num = numerators[node]
        if num > 0 and den > 0:
            values[node] = num / den
        else:
            held.append(f"{name}[{node}]")


def _update_gamma(gamma, gamma_p, stats, by_side, T, shape, spec, source_side, held):
    own, other = (gamma, gamma_p) if source_side else (gamma_p, gamma)
    n = shape.n_src if source_side else shape.n_dst
    for node in range(n):
        num = np.zeros(spec.d)
        for edge, val in stats.xi_gamma.items():
            if (edge[0] if source_side else edge[1]) == node:
                num += val
        den = np.zeros(spec.d)
        for peer, v in by_side[node]:
            den += other[peer] * (T - min(T, v))
        ok = (num > 0) & (den > 0)
        own[node][ok] = num[ok] / den[ok]
        if not ok.all():
            held.append(f"{'gamma' if source_side else 'gamma_p'}[{node}]")


def _rate_tables(times, actives, T, dt):
    """(B, A, n_dt) windows for one node's excitation compensator."""
    cut = contributing_count(times, T, dt) if dt > 0.0 else len(times)
    B = T - times[:cut]
    A_parts = []
    n_dt = 0.0
    for _, tau_v in actives:
        p0 = contributing_count(times, tau_v, dt) if tau_v > 0 else 0
        p0 = min(p0, cut)
        if p0:
            A_parts.append(tau_v - times[:p0])
        n_dt += cut - p0
    A = np.concatenate(A_parts) if A_parts else np.zeros(0)
    return B, A, n_dt, len(actives)


def _update_rate_pair(ratio_arr, rate_arr, node, Z, G, times, actives, T, dt, name, held):
    """Joint closed-form/fixed-point update of one (ratio, decay) pair."""
    if Z <= 0 or len(times) == 0 or not actives:
        held.append(name)
        return
    B, A, n_dt, deg = _rate_tables(times, actives, T, dt)

    def D(rate):
        return float(np.exp(-rate * A).sum() + n_dt * math.exp(-rate * dt)
                     - deg * np.exp(-rate * B).sum())

    def C(rate):
        return float(deg * (B * np.exp(-rate * B)).sum()
                     - (A * np.exp(-rate * A)).sum() - n_dt * dt * math.exp(-rate * dt))

    def q(ratio, rate):
        return Z * math.log(ratio * rate) - rate * G - ratio * D(rate)

    ratio0, rate0 = float(ratio_arr[node]), float(rate_arr[node])
    ratio, rate = ratio0, rate0
    prev_delta = 0.0
    for _ in range(_INNER_MAX):
        den = D(rate)
        if den <= 0:
            held.append(name)
            return
        ratio_new = min(max(Z / den, 1e-12), _RATIO_CAP)
        den2 = G + ratio_new * C(rate)
        if den2 <= 0:
            held.append(name)
            return
        rate_new = Z / den2
        delta = rate_new - rate
        if prev_delta * delta < 0 and abs(delta) >= abs(prev_delta):
            rate_new = 0.5 * (rate_new + rate)  # damp oscillation
            delta = rate_new - rate
        moved = max(abs(rate_new - rate) / max(rate, 1e-300),
                    abs(ratio_new - ratio) / max(ratio, 1e-300))
        ratio, rate = ratio_new, rate_new
        prev_delta = delta
        if moved < _INNER_TOL:
            break
    if q(ratio, rate) < q(ratio0, rate0):
        held.append(name)
        return
    ratio_arr[node] = ratio
    rate_arr[node] = rate


def _update_interaction_rates(new, stats, index, by_side, T, dt, spec, source_side, held):
    ratio_arr = new.nu_t if source_side else new.nu_p_t
    rate_arr = new.theta_t if source_side else new.theta_p_t
    other_ratio = new.nu_p_t if source_side else new.nu_t
    other_rate = new.theta_p_t if source_side else new.theta_t
    n, d = ratio_arr.shape
    for node in range(n):
        edges = []
        for peer, _ in by_side[node]:
            edge = (node, peer) if source_side else (peer, node)
            if edge in stats.z_gamma:
                times = index.edges[edge].times
                cut = contributing_count(times, T, dt) if dt > 0.0 else len(times)
                edges.append((peer, edge, T - times[:cut]))
        for q_dim in range(d):
            Z = sum(stats.z_gamma[edge][q_dim] for _, edge, _ in edges)
            if Z <= 0 or not edges:
                held.append(f"{'nu_t' if source_side else 'nu_p_t'}[{node},{q_dim}]")
                continue
            G_pairs = [(other_rate[peer, q_dim], stats.zt_gamma[edge][q_dim],
                        other_ratio[peer, q_dim], B)
                       for peer, edge, B in edges]

            def D(rate):
                tot = 0.0
                for o_rate, _, o_ratio, B in G_pairs:
                    w = rate * o_rate
                    tot += o_ratio * (len(B) * math.exp(-w * dt) - np.exp(-w * B).sum())
                return tot

            def C(rate):
                tot = 0.0
                for o_rate, _, o_ratio, B in G_pairs:
                    w = rate * o_rate
                    tot += o_ratio * o_rate * ((B * np.exp(-w * B)).sum()
                                               - len(B) * dt * math.exp(-w * dt))
                return tot

            G = sum(o_rate * zt for o_rate, zt, _, _ in G_pairs)

            def qfun(ratio, rate):
                return Z * math.log(ratio * rate) - rate * G - ratio * D(rate)

            ratio0 = float(ratio_arr[node, q_dim])
            rate0 = float(rate_arr[node, q_dim])
            ratio, rate = ratio0, rate0
            prev_delta = 0.0
            ok = True
            for _ in range(_INNER_MAX):
                den = D(rate)
                if den <= 0:
                    ok = False
                    break
                ratio_new = min(max(Z / den, 1e-12), _RATIO_CAP)
                den2 = G + ratio_new * C(rate)
                if den2 <= 0:
                    ok = False
                    break
                rate_new = Z / den2
                delta = rate_new - rate
                if prev_delta * delta < 0 and abs(delta) >= abs(prev_delta):
                    rate_new = 0.5 * (rate_new + rate)
                    delta = rate_new - rate
                moved = max(abs(rate_new - rate) / max(rate, 1e-300),
                            abs(ratio_new - ratio) / max(ratio, 1e-300))
                ratio, rate = ratio_new, rate_new
                prev_delta = delta
                if moved < _INNER_TOL:
                    break
            if not ok or qfun(ratio, rate) < qfun(ratio0, rate0):
                held.append(f"{'nu_t' if source_side else 'nu_p_t'}[{node},{q_dim}]")
                continue
            ratio_arr[node, q_dim] = ratio
            rate_arr[node, q_dim] = rate


def em_fit(index: EventIndex, tau: TauMatrix, spec: ModelSpec, shape: GraphShape,
           init: Params, max_iter: int = 200, tol: float = 1e-6,
           T: float | None = None) -> FitReport:
    """Alternate E and M steps until the log-likelihood change drops below tol."""
    _check_spec(spec)
    if T is None:
        T = index.horizon
    init.validate(shape, spec)
    tilde = TildeParams.from_params(init, spec)
    held: list[str] = []
    trace = [log_likelihood(init, index, tau, spec, T)]
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        resp = e_step(tilde, index, tau, spec)
        tilde = m_step(resp, tilde, index, tau, spec, T, held=held)
        trace.append(log_likelihood(tilde.to_params(spec), index, tau, spec, T))
        if abs(trace[-1] - trace[-2]) < tol * (1.0 + abs(trace[-1])):
            converged = True
            break
    return FitReport(
        params=tilde.to_params(spec),
        log_likelihood=trace[-1],
        trace=trace,
        converged=converged,
        iterations=iterations,
        best_restart=0,
        held_parameters=held,
        method="em",
    )
