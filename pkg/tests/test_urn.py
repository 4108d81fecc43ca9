"""Reward urns: updates, expected-addition matrices, spectral regime."""

import numpy as np
import pytest

from alloclab.core import BernoulliArms, ParamEstimate, TrialState, estimate, record
from alloclab.urn import (
    MAX_MATRIX_ARMS,
    DesignMatrix,
    Regime,
    UrnState,
    draw_arm,
    rpw_update,
    seu_update,
    spectral,
    wei_design_matrix,
    wei_update,
    seu_design_matrix,
)


class _Fixed:
    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_urn_state():
    urn = UrnState((1.0, 2.0, 3.0))
    assert urn.K == 3 and urn.total == 6.0
    with pytest.raises(ValueError):
        UrnState((0.0, 0.0))
    with pytest.raises(ValueError):
        UrnState((1.0, -0.5))


def test_draw_arm_walks_cumulative_mass():
    urn = UrnState((1.0, 2.0, 1.0))
    assert draw_arm(urn, _Fixed(0.24)) == 0  # below 1/4
    assert draw_arm(urn, _Fixed(0.26)) == 1
    assert draw_arm(urn, _Fixed(0.74)) == 1
    assert draw_arm(urn, _Fixed(0.76)) == 2


def test_rpw_update_two_arms():
    urn = UrnState((1.0, 1.0))
    assert tuple(rpw_update(urn, 0, True).Y) == (2.0, 1.0)
    assert tuple(rpw_update(urn, 0, False).Y) == (1.0, 2.0)


def test_wei_update_splits_failure():
    urn = UrnState((1.0, 1.0, 1.0))
    after = wei_update(urn, 1, False)
    np.testing.assert_allclose(after.Y, [1.5, 1.0, 1.5])
    assert tuple(wei_update(urn, 1, True).Y) == (1.0, 2.0, 1.0)


def test_seu_update_splits_by_estimates():
    urn = UrnState((1.0, 1.0, 1.0))
    est = ParamEstimate(p_hat=np.array([0.8, 0.5, 0.3]), scheme=None)
    after = seu_update(urn, 0, False, est)
    np.testing.assert_allclose(after.Y, [1.0, 1.0 + 0.5 / 0.8, 1.0 + 0.3 / 0.8])
    assert tuple(seu_update(urn, 0, True, est).Y) == (2.0, 1.0, 1.0)
    with pytest.raises(ValueError, match="arity"):
        seu_update(UrnState((1.0, 1.0)), 0, False, est)


def test_seu_split_uses_estimates_before_the_triggering_response():
    # the add-one estimate that prices the split must not include the
    # failure being recorded, otherwise starved arms are over-penalized
    st = TrialState.empty(3)
    for arm, out in ((0, True), (1, True), (2, False)):
        st = record(st, arm, out)
    est = estimate(st)  # snapshot first ...
    urn = seu_update(UrnState((1.0, 1.0, 1.0)), 0, False, est)  # ... then apply
    w1 = (1.0 + 1.0) / (1.0 + 2.0)
    w2 = (0.0 + 1.0) / (1.0 + 2.0)
    np.testing.assert_allclose(urn.Y, [1.0, 1.0 + w1 / (w1 + w2), 1.0 + w2 / (w1 + w2)])


def test_design_matrix_validation():
    with pytest.raises(ValueError):
        DesignMatrix(np.array([[0.9, 0.0], [0.5, 0.5]]))  # row sum != 1
    too_many = np.eye(MAX_MATRIX_ARMS + 1)
    with pytest.raises(ValueError):
        DesignMatrix(too_many)


def test_wei_design_matrix_and_spectral(arms75):
    dm = wei_design_matrix(arms75)
    np.testing.assert_allclose(dm.H, [[0.7, 0.3], [0.5, 0.5]])
    info = spectral(dm)
    np.testing.assert_allclose(info.v, [0.625, 0.375])
    assert info.lam == pytest.approx(0.2)  # 1 - q1 - q2
    assert info.regime is Regime.NORMAL


def test_spectral_flags_slow_mixing():
    info = spectral(wei_design_matrix(BernoulliArms((0.9, 0.9))))
    assert info.lam == pytest.approx(0.8)
    assert info.regime is Regime.DEGENERATE_OR_UNKNOWN


def test_spectral_three_arms_left_eigenvector():
    arms = BernoulliArms((0.6, 0.5, 0.25))
    dm = wei_design_matrix(arms)
    np.testing.assert_allclose(dm.H.sum(axis=1), np.ones(3), atol=1e-12)
    info = spectral(dm)
    # principal left eigenvector, normalized: v H = v
    np.testing.assert_allclose(info.v @ dm.H, info.v, atol=1e-12)
    expected = (1.0 / arms.q) / (1.0 / arms.q).sum()
    np.testing.assert_allclose(info.v, expected, atol=1e-12)


def test_seu_design_matrix_rows(arms75):
    np.testing.assert_allclose(seu_design_matrix(arms75).H, [[0.7, 0.3], [0.5, 0.5]])
    arms = BernoulliArms((0.6, 0.5, 0.25))
    dm = seu_design_matrix(arms)
    np.testing.assert_allclose(dm.H[0], [0.6, 0.4 * (0.5 / 0.75), 0.4 * (0.25 / 0.75)])
    np.testing.assert_allclose(dm.H.sum(axis=1), np.ones(3), atol=1e-12)
