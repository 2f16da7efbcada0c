"""Shared per-node and per-edge excitation tables.

Every excitation component is a sum of kernel windows: an event at time s
contributes jump * exp(-delta * (x - s)) on x in [L, U], where
L = max(tau, s + dt) and U is the horizon T (full-history components) or the
activation time of the next event (last-event-only components). Integrals,
their derivatives and the per-event kernel values used in the log terms all
reduce to four per-edge aggregates and two per-event arrays:

    E  = sum exp(-delta * B)      Et = sum B * exp(-delta * B)   (B = U - s)
    H  = sum exp(-delta * A)      Ht = sum A * exp(-delta * A)   (A = L - s)
    K  = kernel sum at each edge event
    Kt = gap-weighted kernel sum at each edge event
"""

from __future__ import annotations

import numpy as np

from ._scan import decayed_scan, decayed_scan_multi
from .model import Kind

_EMPTY = np.zeros(0)


def contributing_count(times: np.ndarray, t: float, dt: float) -> int:
    """Number of events contributing at time t under the dt rule."""
    if dt == 0.0:
        return int(np.searchsorted(times, t, side="left"))
    return int(np.searchsorted(times, t - dt, side="right"))


class Side:
    """Excitation tables for one side (all sources or all destinations)."""

    def __init__(self, kind: Kind, times_list: list[np.ndarray], deltas: np.ndarray,
                 dt: float, T: float):
        self.kind = kind
        self.times = times_list
        self.deltas = deltas
        self.dt = dt
        self.T = T
        self.w0 = np.exp(-deltas * dt)
        n = len(times_list)
        self.K: list[np.ndarray] = [_EMPTY] * n
        self.Kt: list[np.ndarray] = [_EMPTY] * n
        self.E = np.zeros(n)
        self.Et = np.zeros(n)
        if kind is Kind.HAWKES:
            self.pcnt: list[np.ndarray] = [_EMPTY] * n
            self.nT = np.zeros(n)
            for node, times in enumerate(times_list):
                if len(times) == 0:
                    continue
                psi, psit, pcnt = decayed_scan(times, deltas[node], dt)
                self.K[node] = psi
                self.Kt[node] = psit
                self.pcnt[node] = pcnt
                cut = contributing_count(times, T, dt) if dt > 0.0 else len(times)
                gaps = T - times[:cut]
                eb = np.exp(-deltas[node] * gaps)
                self.E[node] = eb.sum()
                self.Et[node] = (gaps * eb).sum()
                self.nT[node] = cut
        elif kind is Kind.MARKOV:
            self.U: list[np.ndarray] = [_EMPTY] * n
            self.sufE: list[np.ndarray] = [_EMPTY] * n
            self.sufEt: list[np.ndarray] = [_EMPTY] * n
            self.sufCnt: list[np.ndarray] = [_EMPTY] * n
            self.valid: list[np.ndarray] = [_EMPTY] * n
            for node, times in enumerate(times_list):
                if len(times) == 0:
                    continue
                delta = deltas[node]
                if dt == 0.0:
                    p = np.searchsorted(times, times, side="left")
                else:
                    p = np.searchsorted(times, times - dt, side="right")
                gap = np.where(p > 0, times - times[np.maximum(p - 1, 0)], 0.0)
                k = np.where(p > 0, np.exp(-delta * gap), 0.0)
                self.K[node] = k
                self.Kt[node] = gap * k
                U = np.minimum(T, np.r_[times[1:] + dt, np.inf])
                b = U - times
                valid = b > dt
                eb = np.where(valid, np.exp(-delta * np.maximum(b, 0.0)), 0.0)
                self.U[node] = U
                self.valid[node] = valid
                self.sufE[node] = _suffix(eb)
                self.sufEt[node] = _suffix(b * eb)
                self.sufCnt[node] = _suffix(valid.astype(np.float64))
                self.E[node] = self.sufE[node][0]
                self.Et[node] = self.sufEt[node][0]
        else:
            raise AssertionError("Side tables exist only for exciting kinds")

    def K_at(self, node: int, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.K[node][u], self.Kt[node][u]

    def comp_terms(self, node: int, tau: float, u0: int | None) -> tuple[float, float, float, float]:
        """(E, Et, H, Ht) for one edge of ``node`` activating at ``tau``."""
        times = self.times[node]
        if len(times) == 0:
            return 0.0, 0.0, 0.0, 0.0
        delta = self.deltas[node]
        dt = self.dt
        w0 = self.w0[node]
        if self.kind is Kind.HAWKES:
            if tau == 0.0:
                psi0 = psit0 = 0.0
                p0 = 0
            elif u0 is not None and times[u0] == tau:
                psi0 = self.K[node][u0]
                psit0 = self.Kt[node][u0]
                p0 = int(self.pcnt[node][u0])
            else:
                p0 = contributing_count(times, tau, dt)
                gaps = tau - times[:p0]
                ea = np.exp(-delta * gaps)
                psi0 = ea.sum()
                psit0 = (gaps * ea).sum()
            rest = self.nT[node] - p0
            H = psi0 + w0 * rest
            Ht = psit0 + dt * w0 * rest
            return float(self.E[node]), float(self.Et[node]), float(H), float(Ht)
        # MARKOV: drop windows ending at or before tau, clip the straddler.
        idx = int(np.searchsorted(self.U[node], tau, side="right"))
        E = float(self.sufE[node][idx])
        Et = float(self.sufEt[node][idx])
        cnt = float(self.sufCnt[node][idx])
        H = w0 * cnt
        Ht = dt * w0 * cnt
        if idx < len(times) and self.valid[node][idx] and times[idx] + dt < tau:
            a = tau - times[idx]
            ea = np.exp(-delta * a)
            H += ea - w0
            Ht += a * ea - dt * w0
        return E, Et, H, Ht


def _suffix(values: np.ndarray) -> np.ndarray:
    out = np.zeros(len(values) + 1)
    if len(values):
        out[:-1] = np.cumsum(values[::-1])[::-1]
    return out


def interaction_tables(times: np.ndarray, deltas: np.ndarray, dt: float, T: float,
                       kind: Kind) -> dict:
    """Per-edge interaction tables over the edge's own event sequence.

    Activation never needs tau clipping here: tau <= first edge event, so
    every kernel window starts at its event's own activation time.
    """
    n = len(times)
    d = len(deltas)
    w0 = np.exp(-deltas * dt)
    if kind is Kind.HAWKES:
        K, Kt, _ = decayed_scan_multi(times, deltas, dt)
        cut = contributing_count(times, T, dt) if dt > 0.0 else n
        gaps = (T - times[:cut])[:, None]
        eb = np.exp(-gaps * deltas[None, :])
        E = eb.sum(axis=0)
        Et = (gaps * eb).sum(axis=0)
        H = w0 * cut
        Ht = dt * w0 * cut
    elif kind is Kind.MARKOV:
        if dt == 0.0:
            p = np.searchsorted(times, times, side="left")
        else:
            p = np.searchsorted(times, times - dt, side="right")
        gap = np.where(p > 0, times - times[np.maximum(p - 1, 0)], 0.0)[:, None]
        has = (p > 0)[:, None]
        K = np.where(has, np.exp(-gap * deltas[None, :]), 0.0)
        Kt = gap * K
        U = np.minimum(T, np.r_[times[1:] + dt, np.inf])
        b = (U - times)[:, None]
        valid = b > dt
        eb = np.where(valid, np.exp(-np.maximum(b, 0.0) * deltas[None, :]), 0.0)
        E = eb.sum(axis=0)
        Et = (b * eb).sum(axis=0)
        cnt = valid[:, 0].sum()
        H = w0 * cnt
        Ht = dt * w0 * cnt
    else:
        raise AssertionError("interaction tables exist only for exciting kinds")
    return {"K": K, "Kt": Kt, "E": E, "Et": Et, "H": H, "Ht": Ht}
