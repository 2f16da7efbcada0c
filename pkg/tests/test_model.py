import math

import numpy as np
import pytest

from meg import (
    EventLog,
    GraphShape,
    Kind,
    ModelSpec,
    Params,
    TauMatrix,
    ValidationError,
    build_event_index,
    estimate_tau,
    n_free_params,
    pack_params,
    unpack_params,
)


def small_index(triples, n=3, T=10.0):
    t, s, d = zip(*triples)
    log = EventLog(np.array(t, dtype=float), np.array(s), np.array(d), horizon=T)
    return build_event_index(log, GraphShape.directed(n))


class TestModelSpec:
    def test_both_absent_rejected(self):
        with pytest.raises(ValidationError):
            ModelSpec(main=Kind.ABSENT, interaction=Kind.ABSENT)

    def test_bad_d_rejected(self):
        with pytest.raises(ValidationError):
            ModelSpec(main=Kind.ABSENT, interaction=Kind.POISSON, d=0)

    def test_kind_r_values(self):
        assert Kind.POISSON.r == 0
        assert Kind.MARKOV.r == 1
        assert math.isinf(Kind.HAWKES.r)

    def test_roundtrip_dict(self):
        spec = ModelSpec(main="markov", interaction="hawkes", d=4, tau_strategy="zero")
        assert ModelSpec.from_dict(spec.to_dict()) == spec


class TestParams:
    def test_positivity_enforced(self):
        shape = GraphShape.directed(2)
        spec = ModelSpec(main=Kind.POISSON)
        p = Params(alpha=np.array([0.1, 0.0]), beta=np.array([0.1, 0.1]))
        with pytest.raises(ValidationError, match="alpha"):
            p.validate(shape, spec)

    def test_missing_block_rejected(self):
        shape = GraphShape.directed(2)
        spec = ModelSpec(main=Kind.HAWKES)
        p = Params(alpha=np.ones(2), beta=np.ones(2))
        with pytest.raises(ValidationError):
            p.validate(shape, spec)

    def test_extra_block_rejected(self):
        shape = GraphShape.directed(2)
        spec = ModelSpec(main=Kind.POISSON)
        p = Params(alpha=np.ones(2), beta=np.ones(2), mu=np.ones(2))
        with pytest.raises(ValidationError):
            p.validate(shape, spec)

    def test_pack_unpack_roundtrip(self):
        shape = GraphShape.bipartite_graph(2, 3)
        spec = ModelSpec(main=Kind.HAWKES, interaction=Kind.MARKOV, d=2)
        rng = np.random.default_rng(1)
        vec = rng.uniform(0.5, 2.0, n_free_params(shape, spec))
        params = unpack_params(vec, shape, spec)
        params.validate(shape, spec)
        np.testing.assert_array_equal(pack_params(params, spec), vec)

    def test_absent_blocks_stay_empty(self):
        shape = GraphShape.directed(2)
        spec = ModelSpec(main=Kind.ABSENT, interaction=Kind.POISSON, d=2)
        params = Params.constant(shape, spec, 0.5)
        assert params.alpha is None and params.nu is None
        assert n_free_params(shape, spec) == 8  # gamma and gamma_p only


class TestEstimateTau:
    def test_mle_first_event_and_inf(self):
        index = small_index([(3.2, 0, 1), (4.0, 1, 2), (5.1, 0, 1)])
        tau = estimate_tau(index, index.shape, "mle")
        assert tau[(0, 1)] == 3.2
        assert tau[(1, 2)] == 4.0
        assert math.isinf(tau[(2, 0)])  # no events, never active

    def test_zero_strategy(self):
        index = small_index([(1.0, 0, 1)])
        tau = estimate_tau(index, index.shape, "zero")
        assert tau[(0, 1)] == 0.0
        assert tau[(2, 2)] == 0.0

    def test_adjacency_strategy(self):
        index = small_index([(1.0, 0, 1)])
        tau = estimate_tau(index, index.shape, "adjacency")
        assert tau[(0, 1)] == 0.0
        assert math.isinf(tau[(0, 2)])  # unobserved edge stays inactive

    def test_validate_against_index(self):
        index = small_index([(3.0, 0, 1)])
        TauMatrix(default=math.inf, entries={(0, 1): 2.0}).validate(index)
        with pytest.raises(ValidationError):
            TauMatrix(default=math.inf, entries={(0, 1): 4.0}).validate(index)
        with pytest.raises(ValidationError):
            TauMatrix(default=0.0, entries={(0, 1): math.inf}).validate(index)

    def test_serialization_roundtrip(self):
        tau = TauMatrix(default=math.inf, entries={(0, 1): 3.5, (1, 2): math.inf},
                        strategy="mle")
        back = TauMatrix.from_dict(tau.to_dict())
        assert back.default == tau.default
        assert back.entries == tau.entries
        assert back.strategy == "mle"
