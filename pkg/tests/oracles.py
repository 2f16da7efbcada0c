"""Independent brute-force reference implementations for the test suite.

Everything here works straight off the raw event triplets with explicit
python loops: no recursions, no index tables, no shared code with the
library's evaluation path.
"""

import math

import numpy as np

from meg import EventLog, Kind, ModelSpec, Params, TauMatrix


def contributes(s, t, dt):
    return s < t if dt == 0.0 else s <= t - dt


def node_events(log: EventLog, node: int, side: str) -> list[float]:
    ids = log.src if side == "src" else log.dst
    return [float(t) for t, x in zip(log.times, ids) if x == node]


def edge_events(log: EventLog, i: int, j: int) -> list[float]:
    return [float(t) for t, x, y in zip(log.times, log.src, log.dst)
            if x == i and y == j]


def _excitation(times, jump, delta, t, dt, kind):
    live = [s for s in times if contributes(s, t, dt)]
    if kind is Kind.MARKOV:
        live = live[-1:]
    return sum(jump * math.exp(-delta * (t - s)) for s in live)


def naive_intensity(params: Params, spec: ModelSpec, log: EventLog,
                    tau_ij: float, i: int, j: int, t: float) -> float:
    assert t >= tau_ij
    dt = log.tie_offset
    val = 0.0
    if spec.main.present:
        val += params.alpha[i] + params.beta[j]
        if spec.main.excites:
            val += _excitation(node_events(log, i, "src"), params.mu[i],
                               params.mu[i] + params.phi[i], t, dt, spec.main)
            val += _excitation(node_events(log, j, "dst"), params.mu_p[j],
                               params.mu_p[j] + params.phi_p[j], t, dt, spec.main)
    if spec.interaction.present:
        val += float(np.dot(params.gamma[i], params.gamma_p[j]))
        if spec.interaction.excites:
            ev = edge_events(log, i, j)
            for q in range(spec.d):
                delta = (params.nu[i][q] + params.theta[i][q]) \
                    * (params.nu_p[j][q] + params.theta_p[j][q])
                val += _excitation(ev, params.nu[i][q] * params.nu_p[j][q],
                                   delta, t, dt, spec.interaction)
    return val


def component_compensator(times, jump, delta, tau, t, dt, kind):
    """Integral over [tau, t] of one kernel family, window by window."""
    total = 0.0
    n = len(times)
    for h, s in enumerate(times):
        start = max(tau, s + dt)
        if kind is Kind.MARKOV:
            end = t if h == n - 1 else min(t, times[h + 1] + dt)
        else:
            end = t
        if end > start:
            total += (jump / delta) * (math.exp(-delta * (start - s))
                                       - math.exp(-delta * (end - s)))
    return total


def naive_compensator(params: Params, spec: ModelSpec, log: EventLog,
                      tau_ij: float, i: int, j: int, t: float) -> float:
    if math.isinf(tau_ij) or t <= tau_ij:
        return 0.0
    dt = log.tie_offset
    total = 0.0
    if spec.main.present:
        total += (params.alpha[i] + params.beta[j]) * (t - tau_ij)
        if spec.main.excites:
            total += component_compensator(
                node_events(log, i, "src"), params.mu[i],
                params.mu[i] + params.phi[i], tau_ij, t, dt, spec.main)
            total += component_compensator(
                node_events(log, j, "dst"), params.mu_p[j],
                params.mu_p[j] + params.phi_p[j], tau_ij, t, dt, spec.main)
    if spec.interaction.present:
        total += float(np.dot(params.gamma[i], params.gamma_p[j])) * (t - tau_ij)
        if spec.interaction.excites:
            ev = edge_events(log, i, j)
            for q in range(spec.d):
                delta = (params.nu[i][q] + params.theta[i][q]) \
                    * (params.nu_p[j][q] + params.theta_p[j][q])
                total += component_compensator(
                    ev, params.nu[i][q] * params.nu_p[j][q], delta,
                    tau_ij, t, dt, spec.interaction)
    return total


def naive_log_likelihood(params: Params, spec: ModelSpec, log: EventLog,
                         tau: TauMatrix, T: float, n_src: int, n_dst: int) -> float:
    """Double-sum evaluation: direct intensity at every event, direct
    window-by-window compensator on every active pair."""
    total = 0.0
    for t, i, j in zip(log.times, log.src, log.dst):
        tau_ij = tau[(int(i), int(j))]
        if math.isinf(tau_ij):
            continue
        total += math.log(naive_intensity(params, spec, log, tau_ij,
                                          int(i), int(j), float(t)))
    for i in range(n_src):
        for j in range(n_dst):
            tau_ij = tau[(i, j)]
            if math.isinf(tau_ij):
                continue
            total -= naive_compensator(params, spec, log, tau_ij, i, j, T)
    return total


def quadrature_compensator(params: Params, spec: ModelSpec, log: EventLog,
                           tau_ij: float, i: int, j: int, t: float) -> float:
    """Adaptive quadrature of the naive intensity, split at every kernel
    activation so each piece is smooth."""
    from scipy.integrate import quad

    if math.isinf(tau_ij) or t <= tau_ij:
        return 0.0
    dt = log.tie_offset
    knots = {tau_ij, t}
    for s in log.times:
        for cand in (float(s), float(s) + dt):
            if tau_ij < cand < t:
                knots.add(cand)
    knots = sorted(knots)
    total = 0.0
    for a, b in zip(knots[:-1], knots[1:]):
        val, _ = quad(lambda x: naive_intensity(params, spec, log, tau_ij, i, j, x),
                      a, b, limit=200)
        total += val
    return total


def random_instance(rng, n_max=5, m_max=400, d_max=3, kinds=None, dt_choices=(0.0, 0.05),
                    tau_strategies=("mle", "zero", "adjacency", "custom"),
                    bipartite_ok=True):
    """A random (shape, spec, params, log, tau) tuple for oracle comparisons."""
    from meg import GraphShape, build_event_index, estimate_tau

    if kinds is None:
        kinds = [Kind.ABSENT, Kind.POISSON, Kind.MARKOV, Kind.HAWKES]
    while True:
        main = kinds[rng.integers(len(kinds))]
        inter = kinds[rng.integers(len(kinds))]
        if main.present or inter.present:
            break
    d = int(rng.integers(1, d_max + 1))
    if bipartite_ok and rng.random() < 0.3:
        shape = GraphShape.bipartite_graph(int(rng.integers(1, n_max + 1)),
                                           int(rng.integers(1, n_max + 1)))
    else:
        shape = GraphShape.directed(int(rng.integers(2, n_max + 1)))
    strategy = tau_strategies[rng.integers(len(tau_strategies))]
    spec = ModelSpec(main=main, interaction=inter, d=d,
                     tau_strategy=strategy if strategy != "custom" else "mle")

    def pos(shape_):
        return np.exp(rng.normal(-1.2, 0.7, shape_))

    fields = {}
    if main.present:
        fields["alpha"] = pos(shape.n_src) * 0.2
        fields["beta"] = pos(shape.n_dst) * 0.2
        if main.excites:
            fields["mu"] = pos(shape.n_src)
            fields["phi"] = pos(shape.n_src)
            fields["mu_p"] = pos(shape.n_dst)
            fields["phi_p"] = pos(shape.n_dst)
    if inter.present:
        fields["gamma"] = pos((shape.n_src, d)) * 0.3
        fields["gamma_p"] = pos((shape.n_dst, d)) * 0.3
        if inter.excites:
            fields["nu"] = pos((shape.n_src, d))
            fields["theta"] = pos((shape.n_src, d))
            fields["nu_p"] = pos((shape.n_dst, d))
            fields["theta_p"] = pos((shape.n_dst, d))
    params = Params(**fields)

    T = 50.0
    m = int(rng.integers(3, m_max + 1))
    times = np.sort(rng.uniform(0, T, m))
    if m > 4 and rng.random() < 0.5:
        ties = rng.integers(1, m // 2)
        for _ in range(ties):
            k = int(rng.integers(1, m))
            times[k] = times[k - 1]  # tied timestamps across dyads
        times = np.sort(times)
    src = rng.integers(0, shape.n_src, m)
    dst = rng.integers(0, shape.n_dst, m)
    # drop exact duplicate triplets, mirroring ingestion
    seen = set()
    keep = []
    for k in range(m):
        key = (times[k], src[k], dst[k])
        if key not in seen:
            seen.add(key)
            keep.append(k)
    dt = dt_choices[rng.integers(len(dt_choices))]
    log = EventLog(times[keep], src[keep], dst[keep], horizon=T, tie_offset=dt)
    index = build_event_index(log, shape)
    if strategy == "custom":
        entries = {}
        for edge, ev in index.edges.items():
            first = float(ev.times[0])
            entries[edge] = float(rng.uniform(0, first)) if rng.random() < 0.7 else first
        tau = TauMatrix(default=math.inf, entries=entries, strategy=None)
    else:
        tau = estimate_tau(index, shape, strategy)
    return shape, spec, params, log, index, tau
