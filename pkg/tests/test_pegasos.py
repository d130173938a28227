import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmlgenome.errors import DataError, UsageError
from qmlgenome.featuremap import FeatureMapSpec
from qmlgenome.kernel import kernel_matrix
from qmlgenome.pegasos import (
    PegasosModel,
    PegasosState,
    pegasos_decision,
    pegasos_decision_values,
    pegasos_scores,
    train_pegasos,
)

from oracles import naive_pegasos, separable_blobs


def random_psd(rng, n):
    F = rng.standard_normal((n, 3))
    K = F @ F.T
    d = np.sqrt(np.diag(K)) + 1e-9
    return K / np.outer(d, d)


class TestTrain:
    def test_single_step_hand_trace(self):
        for seed in range(5):
            m = train_pegasos(np.eye(2), [1, -1], lam=1.0, T=1, seed=seed)
            drawn = int(np.random.default_rng(seed).integers(0, 2, size=1)[0])
            expected = np.zeros(2)
            expected[drawn] = 1.0
            np.testing.assert_array_equal(m.coeffs * m.scale, expected)
            assert m.weight_norm(np.eye(2)) == pytest.approx(1.0)

    def test_norm_bound_every_step(self):
        rng = np.random.default_rng(0)
        K = random_psd(rng, 15)
        y = np.where(rng.random(15) < 0.5, -1.0, 1.0)
        y[:2] = [1, -1]
        for lam in (1e-3, 0.1, 2.0):
            hist = []
            train_pegasos(K, y, lam=lam, T=3000, seed=1, norm_history=hist)
            assert max(hist) <= 1 / math.sqrt(lam) + 1e-6

    def test_matches_naive_recomputation(self):
        rng = np.random.default_rng(1)
        K = random_psd(rng, 10)
        y = np.array([1, -1] * 5, dtype=float)
        T, lam, seed = 2000, 0.05, 4
        hist = []
        m = train_pegasos(K, y, lam=lam, T=T, seed=seed, norm_history=hist)
        draws = np.random.default_rng(seed).integers(0, 10, size=T)
        a, norms = naive_pegasos(K, y, lam, draws)
        np.testing.assert_allclose(m.coeffs * m.scale, a, rtol=1e-8, atol=1e-10)
        np.testing.assert_allclose(hist, norms, rtol=1e-8, atol=1e-10)

    def test_deterministic(self):
        K = random_psd(np.random.default_rng(2), 8)
        y = np.array([1, -1] * 4, dtype=float)
        a = train_pegasos(K, y, lam=0.01, T=500, seed=9)
        b = train_pegasos(K, y, lam=0.01, T=500, seed=9)
        np.testing.assert_array_equal(a.coeffs, b.coeffs)
        assert a.scale == b.scale

    def test_decay_collapses_to_zero(self):
        # lam = 1: eta_t = 1/t, the decay (t-1)/t wipes w after a step with no margin update
        s = PegasosState(np.eye(2), np.array([1.0, -1.0]), 1.0)
        assert s.step(0)  # t = 1: margin 0 < 1, w = phi(x0)
        assert s.norm == pytest.approx(1.0)
        s.t = 0  # restart the clock so the next step is again t = 1
        assert not s.step(0)  # margin exactly 1: decay only, factor 0
        assert s.scale == 0.0 and s.norm == 0.0

    def test_decay_factor_matches_schedule(self):
        K = np.eye(2) * 100.0  # margins stay >= 1 once set
        s = PegasosState(K, np.array([1.0, -1.0]), 1.0)
        s.step(0)
        before = s.scale
        for t in range(2, 6):
            fired = s.step(0)
            if not fired:
                assert s.scale == pytest.approx(before * (t - 1) / t)
            before = s.scale

    @pytest.mark.parametrize("kw", [{"lam": 0}, {"lam": -1}, {"T": 0}])
    def test_bad_hyperparameters(self, kw):
        with pytest.raises(UsageError):
            train_pegasos(np.eye(2), [1, -1], **kw)

    def test_single_class(self):
        with pytest.raises(DataError):
            train_pegasos(np.eye(2), [1, 1])


class TestDecision:
    def test_zero_coeffs(self):
        m = PegasosModel(np.zeros(2), 1.0, 0.1, 0, np.array([1.0, -1.0]))
        assert pegasos_decision(m, [0.3, 0.4]) == 0.0

    def test_single_step_substitution(self):
        m = train_pegasos(np.eye(2), [1, -1], lam=1.0, T=1, seed=3)
        drawn = int(np.flatnonzero(m.coeffs)[0])
        e = np.zeros(2)
        e[drawn] = 1.0
        assert pegasos_decision(m, e) == pytest.approx(m.labels[drawn])

    def test_batch_matches_single(self):
        rng = np.random.default_rng(4)
        K = random_psd(rng, 6)
        m = train_pegasos(K, [1, -1, 1, -1, 1, -1], lam=0.1, T=300)
        vals = pegasos_decision_values(m, K)
        for i in range(6):
            assert vals[i] == pegasos_decision(m, K[i])

    def test_round_trip(self):
        X, y = separable_blobs(10, 2, seed=3)
        spec = FeatureMapSpec("ZZ", 2)
        m = train_pegasos(kernel_matrix(spec, X), y, lam=0.01, T=500).with_training_data(spec, X)
        back = PegasosModel.from_dict(json.loads(json.dumps(m.to_dict())))
        np.testing.assert_array_equal(pegasos_scores(back, spec, X), pegasos_scores(m, spec, X))

    def test_requires_training_data(self):
        m = train_pegasos(np.eye(2), [1, -1], lam=1.0, T=1)
        with pytest.raises(UsageError):
            pegasos_scores(m, FeatureMapSpec("Z", 2), [[0.1, 0.2]])


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), lam=st.floats(1e-4, 10), T=st.integers(1, 400))
def test_prop_projection_bound(seed, lam, T):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    K = random_psd(rng, n)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    y[:2] = [1, -1]
    hist = []
    m = train_pegasos(K, y, lam=lam, T=T, seed=seed, norm_history=hist)
    bound = 1 / math.sqrt(lam) + 1e-6
    assert max(hist) <= bound
    assert m.weight_norm(K) <= bound
