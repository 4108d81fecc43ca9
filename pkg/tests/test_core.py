"""Trial-state bookkeeping, estimators, and reproducible streams."""

import numpy as np
import pytest

from alloclab.core import (
    ADD_ONE_SCHEME,
    BernoulliArms,
    EstimatorScheme,
    RandomStream,
    TrialState,
    draw_bernoulli,
    estimate,
    one_hot,
    record,
    resolve_outcome,
)


class TestBernoulliArms:
    def test_basic(self):
        arms = BernoulliArms((0.7, 0.5))
        assert arms.K == 2
        np.testing.assert_allclose(arms.q, [0.3, 0.5])

    @pytest.mark.parametrize("bad", [(), (0.7,), (0.0, 0.5), (0.7, 1.0), (0.7, -0.1)])
    def test_rejects_degenerate(self, bad):
        with pytest.raises(ValueError):
            BernoulliArms(bad)

    def test_immutable(self):
        arms = BernoulliArms((0.7, 0.5))
        with pytest.raises(ValueError):
            arms.p[0] = 0.9


def test_one_hot():
    np.testing.assert_array_equal(one_hot(1, 3), [0.0, 1.0, 0.0])
    with pytest.raises(IndexError):
        one_hot(3, 3)


class TestTrialState:
    def test_empty(self):
        st = TrialState.empty(3)
        assert st.n == 0 and st.K == 3
        assert st.pending == ()
        assert st.N_observed.sum() == 0

    def test_record_observed_and_pending(self):
        st = TrialState.empty(2)
        st = record(st, 0, True)
        st = record(st, 1, None)
        st = record(st, 0, False)
        np.testing.assert_array_equal(st.N, [2, 1])
        np.testing.assert_array_equal(st.S, [1, 0])
        np.testing.assert_array_equal(st.N_observed, [2, 0])
        assert st.pending == (1,)
        assert st.history == ((0, True), (1, None), (0, False))

    def test_resolve_outcome(self):
        st = record(record(TrialState.empty(2), 1, None), 0, None)
        st = resolve_outcome(st, 0, True)
        np.testing.assert_array_equal(st.S, [0, 1])
        assert st.pending == (1,)
        with pytest.raises(ValueError, match="subject 0 already has an outcome"):
            resolve_outcome(st, 0, False)
        with pytest.raises(IndexError):
            resolve_outcome(st, 5, True)

    def test_invariant_checks(self):
        with pytest.raises(ValueError):
            TrialState(n=1, N=(2, 0), S=(0, 0), history=((0, None),))
        with pytest.raises(ValueError):
            TrialState(n=1, N=(1, 0), S=(2, 0), history=((0, True),))


class TestEstimate:
    def test_shrinkage_oracle(self):
        # arm 0: 7 successes of 10 observed; arm 1: nothing observed yet
        st = TrialState.empty(2)
        for i in range(10):
            st = record(st, 0, i < 7)
        st = record(st, 1, None)
        est = estimate(st, ADD_ONE_SCHEME)
        assert est.p_hat[0] == pytest.approx(8.0 / 11.0, abs=1e-15)
        assert est.p_hat[1] == pytest.approx(1.0)  # (0+1)/(0+1)

    def test_default_scheme_interior(self):
        est = estimate(TrialState.empty(2))
        np.testing.assert_allclose(est.p_hat, [0.5, 0.5])
        assert est.p_hat.min() > 0.0 and est.p_hat.max() < 1.0

    def test_pending_excluded(self):
        st = record(record(TrialState.empty(2), 0, True), 0, None)
        est = estimate(st, ADD_ONE_SCHEME)
        # one observed success, the pending subject contributes nothing
        assert est.p_hat[0] == pytest.approx(1.0)

    def test_scheme_validation(self):
        with pytest.raises(ValueError):
            EstimatorScheme(-1.0, 2.0)


def test_draw_bernoulli_consumes_one_uniform():
    arms = BernoulliArms((0.7, 0.5))
    a = RandomStream(5, 0).generator()
    b = RandomStream(5, 0).generator()
    out = draw_bernoulli(arms, 0, a)
    assert out == (b.random() < 0.7)
    assert a.random() == b.random()  # generators stayed in lockstep


class TestRandomStream:
    def test_reproducible(self):
        x = RandomStream(99, 3).generator().random(4)
        y = RandomStream(99, 3).generator().random(4)
        np.testing.assert_array_equal(x, y)

    def test_streams_distinct(self):
        base = RandomStream(99, 0).generator().random(4)
        other = RandomStream(99, 1).generator().random(4)
        child = RandomStream(99, 0).child(1).random(4)
        assert not np.array_equal(base, other)
        assert not np.array_equal(base, child)
        assert not np.array_equal(other, child)

    def test_validation(self):
        with pytest.raises(ValueError):
            RandomStream(-1, 0)
        with pytest.raises(ValueError):
            RandomStream(0, -2)
