"""Stay/switch chain: rule behavior and stationary-limit oracles."""

import numpy as np
import pytest

from alloclab.core import BernoulliArms, RandomStream
from alloclab.markov import (
    ChainCoefficients,
    MCADParams,
    compose_coefficients,
    first_assignment,
    mcad_next,
    mcad_stationary,
    mcad_variance,
    pw_next,
)


class _Fixed:
    """Generator stub returning scripted uniforms."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_pw_next_truth_table():
    assert pw_next(0, True) == 0
    assert pw_next(1, True) == 1
    assert pw_next(0, False) == 1
    assert pw_next(1, False) == 0


def test_first_assignment_fair():
    assert first_assignment(_Fixed(0.49)) == 0
    assert first_assignment(_Fixed(0.51)) == 1


def test_mcad_params_validation():
    with pytest.raises(ValueError):
        MCADParams(1.1, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        MCADParams(0.5, -0.1, 0.5, 0.5)


def test_mcad_next_stay_threshold():
    params = MCADParams(0.9, 0.2, 0.8, 0.3)
    # on arm 0 after a success, stay probability is alpha_s = 0.9
    assert mcad_next(0, True, params, _Fixed(0.89)) == 0
    assert mcad_next(0, True, params, _Fixed(0.91)) == 1
    # on arm 1 after a failure, stay probability is beta_f = 0.3
    assert mcad_next(1, False, params, _Fixed(0.29)) == 1
    assert mcad_next(1, False, params, _Fixed(0.31)) == 0


def test_compose_coefficients_oracle():
    arms = BernoulliArms((0.7, 0.5))
    co = compose_coefficients(arms, MCADParams(0.9, 0.2, 0.8, 0.3))
    assert co.alpha == pytest.approx(0.7 * 0.9 + 0.3 * 0.2)
    assert co.beta == pytest.approx(0.5 * 0.8 + 0.5 * 0.3)


def test_stationary_and_variance_oracles():
    # hand values from the two-state chain: mu = (1-beta)/(2-alpha-beta),
    # sigma2 = (1-alpha)(1-beta)(alpha+beta) / (2-alpha-beta)^3
    co = ChainCoefficients(0.9, 0.6)
    assert mcad_stationary(co) == pytest.approx(0.8)
    assert mcad_variance(co) == pytest.approx(0.48)


def test_play_the_winner_coefficients(arms75):
    co = compose_coefficients(arms75, MCADParams.play_the_winner())
    assert (co.alpha, co.beta) == (pytest.approx(0.7), pytest.approx(0.5))
    assert mcad_stationary(co) == pytest.approx(0.625)
    assert mcad_variance(co) == pytest.approx(0.3515625)


def test_complete_randomization_is_binomial(arms75):
    co = compose_coefficients(arms75, MCADParams.complete_randomization())
    assert mcad_stationary(co) == pytest.approx(0.5)
    assert mcad_variance(co) == pytest.approx(0.25)


def test_degenerate_chain_rejected():
    with pytest.raises(ValueError, match="degenerate"):
        mcad_stationary(ChainCoefficients(1.0, 1.0))


def test_long_run_frequency_matches_stationary(arms75):
    params = MCADParams(0.9, 0.2, 0.8, 0.3)
    co = compose_coefficients(arms75, params)
    gen = RandomStream(7, 0).generator()
    arm = first_assignment(gen)
    visits = 0
    n = 60_000
    for _ in range(n):
        visits += arm == 0
        success = gen.random() < arms75.p[arm]
        arm = mcad_next(arm, success, params, gen)
    se = np.sqrt(mcad_variance(co) / n)
    assert abs(visits / n - mcad_stationary(co)) < 4 * se
