"""Sequential decayed-sum recursions, jit-compiled.

An event at time s contributes to an evaluation at time t iff t - s >= dt
(strictly t > s when dt == 0). Both kernels walk a sorted time sequence once
and return, at every position h, the sum of exp(-delta * (t_h - s)) and of
(t_h - s) * exp(-delta * (t_h - s)) over all contributing earlier events s,
plus the number of contributing events.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def decayed_scan(times, delta, dt):
    n = times.shape[0]
    psi = np.zeros(n)
    psit = np.zeros(n)
    pcnt = np.zeros(n, dtype=np.int64)
    acc = 0.0
    acct = 0.0
    p = 0
    tprev = 0.0
    for h in range(n):
        t = times[h]
        if h > 0 and t > tprev:
            gap = t - tprev
            w = np.exp(-delta * gap)
            acct = w * (acct + gap * acc)
            acc = w * acc
        while p < n and ((dt == 0.0 and times[p] < t) or (dt > 0.0 and times[p] <= t - dt)):
            g = t - times[p]
            e = np.exp(-delta * g)
            acc += e
            acct += g * e
            p += 1
        psi[h] = acc
        psit[h] = acct
        pcnt[h] = p
        tprev = t
    return psi, psit, pcnt


@njit(cache=True)
def decayed_scan_multi(times, deltas, dt):
    n = times.shape[0]
    d = deltas.shape[0]
    psi = np.zeros((n, d))
    psit = np.zeros((n, d))
    pcnt = np.zeros(n, dtype=np.int64)
    acc = np.zeros(d)
    acct = np.zeros(d)
    p = 0
    tprev = 0.0
    for h in range(n):
        t = times[h]
        if h > 0 and t > tprev:
            gap = t - tprev
            for q in range(d):
                w = np.exp(-deltas[q] * gap)
                acct[q] = w * (acct[q] + gap * acc[q])
                acc[q] = w * acc[q]
        while p < n and ((dt == 0.0 and times[p] < t) or (dt > 0.0 and times[p] <= t - dt)):
            g = t - times[p]
            for q in range(d):
                e = np.exp(-deltas[q] * g)
                acc[q] += e
                acct[q] += g * e
            p += 1
        for q in range(d):
            psi[h, q] = acc[q]
            psit[h, q] = acct[q]
        pcnt[h] = p
        tprev = t
    return psi, psit, pcnt
