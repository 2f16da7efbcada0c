"""Exact log-likelihood of an event stream and its analytic gradient.

One forward pass builds the per-node excitation tables, then every active
edge contributes sum_k log lambda(t_k) minus its compensator. The gradient
shares the same pass: every compensator derivative reduces to the generic
form in ``_dneg_comp`` and every log-term derivative uses the per-event
kernel sums K and their gap-weighted companions Kt.

When the activation default is 0 (every pair active from the start), the
baseline and main-effect compensators of the pairs without an explicit tau
entry collapse into per-node aggregates, so full-graph evaluation stays
linear in events plus nodes rather than quadratic in nodes.
"""

from __future__ import annotations

import math

import numpy as np

from ._tables import Side, interaction_tables
from .errors import NumericError, ValidationError
from .events import EventIndex
from .model import Kind, ModelSpec, Params, TauMatrix, pack_params


def log_likelihood(params: Params, index: EventIndex, tau: TauMatrix,
                   spec: ModelSpec, T: float) -> float:
    value, _ = _evaluate(params, index, tau, spec, T, need_grad=False)
    return value


def log_likelihood_and_gradient(params: Params, index: EventIndex, tau: TauMatrix,
                                spec: ModelSpec, T: float) -> tuple[float, np.ndarray]:
    """Log-likelihood and its gradient in the canonical parameter layout."""
    value, grads = _evaluate(params, index, tau, spec, T, need_grad=True)
    return value, pack_params(grads, spec)


def gradient_blocks(params: Params, index: EventIndex, tau: TauMatrix,
                    spec: ModelSpec, T: float) -> Params:
    """Gradient with the same block structure as the parameters."""
    _, grads = _evaluate(params, index, tau, spec, T, need_grad=True)
    return grads


def _dneg_comp(jump, jprime, delta, dprime, E, Et, H, Ht):
    """d/dp of minus one compensator component (jump/delta)*(H - E).

    jprime = d(jump)/dp and dprime = d(delta)/dp; E, Et, H, Ht are window
    aggregates of exp(-delta*B), B*exp(-delta*B), exp(-delta*A),
    A*exp(-delta*A) with A the window heads and B the window ends.
    """
    return (jprime * delta - jump * dprime) / delta ** 2 * (E - H) \
        + (jump / delta) * dprime * (Ht - Et)


def _last_time(index: EventIndex) -> float:
    last = 0.0
    for t in index.src_times:
        if len(t):
            last = max(last, float(t[-1]))
    return last


class _Evaluation:
    def __init__(self, params, index, tau, spec, T, need_grad):
        shape = index.shape
        params.validate(shape, spec)
        if T < _last_time(index):
            raise ValidationError(f"T={T} precedes the last event time")
        self.params = params
        self.index = index
        self.tau = tau
        self.spec = spec
        self.T = T
        self.dt = index.tie_offset
        self.need_grad = need_grad
        self.side_s = self.side_d = None
        self.delta_s = self.delta_d = None
        if spec.main.excites:
            self.delta_s = params.mu + params.phi
            self.delta_d = params.mu_p + params.phi_p
            self.side_s = Side(spec.main, index.src_times, self.delta_s, self.dt, T)
            self.side_d = Side(spec.main, index.dst_times, self.delta_d, self.dt, T)
        self.g = None
        if need_grad:
            self.g = Params(**{name: np.zeros_like(arr) for name, arr in params.blocks(spec)})
        self.parts: list[float] = []

    def run(self):
        tau, index, spec = self.tau, self.index, self.spec
        zero_default = tau.default == 0.0
        if zero_default:
            self.parts.append(self._default_aggregate())
            for edge in sorted(tau.entries):
                i, j = edge
                self._check_edge(edge)
                # remove the tau=0 share this pair received from the aggregate
                self.parts.append(self.static_comp(i, j, 0.0, None, None, sign=-1.0))

        handled = set()
        for edge in index.sorted_edges():
            handled.add(edge)
            tau_ij = tau[edge]
            ev = index.edges[edge]
            if math.isinf(tau_ij):
                continue  # inactive edges contribute nothing
            if tau_ij > ev.times[0]:
                raise ValidationError(
                    f"edge {edge}: tau={tau_ij} exceeds its first event time"
                )
            static_done = zero_default and edge not in tau.entries
            self.parts.append(self._edge_with_events(edge, ev, tau_ij, static_done))

        for edge, tau_ij in tau.finite_entries():
            if edge in handled:
                continue
            self._check_edge(edge)
            i, j = edge
            self.parts.append(self.static_comp(i, j, tau_ij, None, None))

        total = math.fsum(self.parts)
        if not math.isfinite(total):
            raise NumericError("log-likelihood is not finite")
        return total, self.g

    def _check_edge(self, edge):
        i, j = edge
        shape = self.index.shape
        if not (0 <= i < shape.n_src and 0 <= j < shape.n_dst):
            raise ValidationError(f"tau entry {edge} outside the graph ranges")

    def static_comp(self, i, j, tau_ij, u0s, u0d, sign=1.0):
        """Baseline + main-effect compensator of pair (i, j).

        Returns ``-sign * comp`` as a log-likelihood part and accumulates the
        matching gradient, so sign=-1 exactly undoes an earlier sign=+1 call.
        """
        params, spec, T = self.params, self.spec, self.T
        g, need_grad = self.g, self.need_grad
        dur = T - min(T, tau_ij)
        base = 0.0
        if spec.main.present:
            base += params.alpha[i] + params.beta[j]
        if spec.interaction.present:
            base += float(params.gamma[i] @ params.gamma_p[j])
        comp = base * dur
        if need_grad:
            if spec.main.present:
                g.alpha[i] -= sign * dur
                g.beta[j] -= sign * dur
            if spec.interaction.present:
                g.gamma[i] -= sign * dur * params.gamma_p[j]
                g.gamma_p[j] -= sign * dur * params.gamma[i]
        if spec.main.excites:
            E, Et, H, Ht = self.side_s.comp_terms(i, tau_ij, u0s)
            comp += params.mu[i] / self.delta_s[i] * (H - E)
            if need_grad:
                g.mu[i] += sign * _dneg_comp(params.mu[i], 1.0, self.delta_s[i], 1.0, E, Et, H, Ht)
                g.phi[i] += sign * _dneg_comp(params.mu[i], 0.0, self.delta_s[i], 1.0, E, Et, H, Ht)
            E, Et, H, Ht = self.side_d.comp_terms(j, tau_ij, u0d)
            comp += params.mu_p[j] / self.delta_d[j] * (H - E)
            if need_grad:
                g.mu_p[j] += sign * _dneg_comp(params.mu_p[j], 1.0, self.delta_d[j], 1.0, E, Et, H, Ht)
                g.phi_p[j] += sign * _dneg_comp(params.mu_p[j], 0.0, self.delta_d[j], 1.0, E, Et, H, Ht)
        return -sign * comp

    def _default_aggregate(self):
        """Static compensators of all n_src * n_dst pairs at tau = 0."""
        params, spec, T, shape = self.params, self.spec, self.T, self.index.shape
        g, need_grad = self.g, self.need_grad
        agg = 0.0
        if spec.main.present:
            agg -= T * (shape.n_dst * float(params.alpha.sum())
                        + shape.n_src * float(params.beta.sum()))
            if need_grad:
                g.alpha -= T * shape.n_dst
                g.beta -= T * shape.n_src
        if spec.interaction.present:
            sg = params.gamma.sum(axis=0)
            sgp = params.gamma_p.sum(axis=0)
            agg -= T * float(sg @ sgp)
            if need_grad:
                g.gamma -= T * sgp[None, :]
                g.gamma_p -= T * sg[None, :]
        if spec.main.excites:
            E, Et, H, Ht = _zero_tau_terms(self.side_s)
            agg -= shape.n_dst * float((params.mu / self.delta_s * (H - E)).sum())
            if need_grad:
                g.mu += shape.n_dst * _dneg_comp(params.mu, 1.0, self.delta_s, 1.0, E, Et, H, Ht)
                g.phi += shape.n_dst * _dneg_comp(params.mu, 0.0, self.delta_s, 1.0, E, Et, H, Ht)
            E, Et, H, Ht = _zero_tau_terms(self.side_d)
            agg -= shape.n_src * float((params.mu_p / self.delta_d * (H - E)).sum())
            if need_grad:
                g.mu_p += shape.n_src * _dneg_comp(params.mu_p, 1.0, self.delta_d, 1.0, E, Et, H, Ht)
                g.phi_p += shape.n_src * _dneg_comp(params.mu_p, 0.0, self.delta_d, 1.0, E, Et, H, Ht)
        return agg

    def _edge_with_events(self, edge, ev, tau_ij, static_done):
        params, spec, T, dt = self.params, self.spec, self.T, self.dt
        g, need_grad = self.g, self.need_grad
        i, j = edge
        main, inter = spec.main, spec.interaction

        base = 0.0
        if main.present:
            base += params.alpha[i] + params.beta[j]
        if inter.present:
            base += float(params.gamma[i] @ params.gamma_p[j])

        lam = np.full(len(ev), base)
        Ks = Kts = Kd = Ktd = None
        if main.excites:
            Ks, Kts = self.side_s.K_at(i, ev.u_src)
            Kd, Ktd = self.side_d.K_at(j, ev.u_dst)
            lam = lam + params.mu[i] * Ks + params.mu_p[j] * Kd

        itab = None
        if inter.excites:
            delta_int = (params.nu[i] + params.theta[i]) * (params.nu_p[j] + params.theta_p[j])
            jump_int = params.nu[i] * params.nu_p[j]
            itab = interaction_tables(ev.times, delta_int, dt, T, inter)
            lam = lam + itab["K"] @ jump_int

        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise NumericError(f"non-positive or non-finite intensity on edge {edge}")

        contrib = math.fsum(np.log(lam))
        if not static_done:
            contrib += self.static_comp(i, j, tau_ij, int(ev.u_src[0]), int(ev.u_dst[0]))
        if inter.excites:
            contrib -= float((jump_int / delta_int * (itab["H"] - itab["E"])).sum())
        if not math.isfinite(contrib):
            raise NumericError(f"log-likelihood is not finite on edge {edge}")

        if need_grad:
            inv = 1.0 / lam
            S = float(inv.sum())
            if main.present:
                g.alpha[i] += S
                g.beta[j] += S
            if inter.present:
                g.gamma[i] += S * params.gamma_p[j]
                g.gamma_p[j] += S * params.gamma[i]
            if main.excites:
                g.mu[i] += float(inv @ Ks) - params.mu[i] * float(inv @ Kts)
                g.phi[i] += -params.mu[i] * float(inv @ Kts)
                g.mu_p[j] += float(inv @ Kd) - params.mu_p[j] * float(inv @ Ktd)
                g.phi_p[j] += -params.mu_p[j] * float(inv @ Ktd)
            if inter.excites:
                A1 = inv @ itab["K"]
                A2 = inv @ itab["Kt"]
                sprime = params.nu_p[j] + params.theta_p[j]
                dprime = params.nu[i] + params.theta[i]
                E, Et, H, Ht = itab["E"], itab["Et"], itab["H"], itab["Ht"]
                g.nu[i] += params.nu_p[j] * A1 - jump_int * sprime * A2 \
                    + _dneg_comp(jump_int, params.nu_p[j], delta_int, sprime, E, Et, H, Ht)
                g.theta[i] += -jump_int * sprime * A2 \
                    + _dneg_comp(jump_int, 0.0, delta_int, sprime, E, Et, H, Ht)
                g.nu_p[j] += params.nu[i] * A1 - jump_int * dprime * A2 \
                    + _dneg_comp(jump_int, params.nu[i], delta_int, dprime, E, Et, H, Ht)
                g.theta_p[j] += -jump_int * dprime * A2 \
                    + _dneg_comp(jump_int, 0.0, delta_int, dprime, E, Et, H, Ht)
        return contrib


def _zero_tau_terms(side: Side):
    """(E, Et, H, Ht) arrays over all nodes of one side for tau = 0."""
    if side.kind is Kind.HAWKES:
        H = side.w0 * side.nT
        Ht = side.dt * H
        return side.E, side.Et, H, Ht
    cnt = np.array([side.sufCnt[n][0] if len(side.times[n]) else 0.0
                    for n in range(len(side.times))])
    H = side.w0 * cnt
    Ht = side.dt * H
    return side.E, side.Et, H, Ht


def _evaluate(params, index, tau, spec, T, need_grad):
    return _Evaluation(params, index, tau, spec, T, need_grad).run()
