"""Two-arm play-the-winner rules and their Markov-chain generalization.

Deterministic play-the-winner keeps the next subject on the arm that just
succeeded and switches after a failure.  The generalized rule replaces
"keep"/"switch" with stay probabilities conditional on (arm, outcome):
after treatment 1 the next subject stays with probability alpha_s on a
success and alpha_f on a failure, and symmetrically (beta_s, beta_f) for
treatment 2.  The assignment sequence is then a two-state Markov chain
whose one-step stay probabilities are the response-averaged

    alpha = p1 * alpha_s + q1 * alpha_f
    beta  = p2 * beta_s  + q2 * beta_f

and everything asymptotic (limit proportion, fluctuation variance) is a
function of (alpha, beta) alone.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import BernoulliArms

__all__ = [
    "MCADParams",
    "ChainCoefficients",
    "compose_coefficients",
    "pw_next",
    "mcad_next",
    "first_assignment",
    "mcad_stationary",
    "mcad_variance",
]


def _check_prob(value: float, name: str) -> float:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1]")
    return float(value)


@dataclass(frozen=True)
class MCADParams:
    """Stay probabilities conditional on (previous arm, previous outcome)."""

    alpha_s: float
    alpha_f: float
    beta_s: float
    beta_f: float

    def __post_init__(self):
        for name in ("alpha_s", "alpha_f", "beta_s", "beta_f"):
            _check_prob(getattr(self, name), name)

    @classmethod
    def play_the_winner(cls) -> "MCADParams":
        """Stay on success, switch on failure; the deterministic rule."""
        return cls(1.0, 0.0, 1.0, 0.0)

    @classmethod
    def complete_randomization(cls) -> "MCADParams":
        """Fair coin regardless of history."""
        return cls(0.5, 0.5, 0.5, 0.5)


@dataclass(frozen=True)
class ChainCoefficients:
    """Response-averaged stay probabilities of the assignment chain."""

    alpha: float
    beta: float

    def __post_init__(self):
        _check_prob(self.alpha, "alpha")
        _check_prob(self.beta, "beta")


def compose_coefficients(arms: BernoulliArms, params: MCADParams) -> ChainCoefficients:
    """Average the stay probabilities over the response distribution."""
    if arms.K != 2:
        raise ValueError("the play-the-winner family is a two-arm design")
    p1, p2 = float(arms.p[0]), float(arms.p[1])
    alpha = p1 * params.alpha_s + (1.0 - p1) * params.alpha_f
    beta = p2 * params.beta_s + (1.0 - p2) * params.beta_f
    return ChainCoefficients(alpha=alpha, beta=beta)


def pw_next(prev_arm: int, prev_success: bool) -> int:
    """Deterministic play-the-winner step; consumes no randomness."""
    if prev_arm not in (0, 1):
        raise IndexError("arm index out of range")
    return prev_arm if prev_success else 1 - prev_arm


def first_assignment(rng) -> int:
    """Fair-coin initial assignment, one uniform."""
    return 0 if rng.random() < 0.5 else 1


def mcad_next(prev_arm: int, prev_success: bool, params: MCADParams, rng) -> int:
    """Randomized stay/switch step, exactly one uniform."""
    if prev_arm not in (0, 1):
        raise IndexError("arm index out of range")
    if prev_arm == 0:
        stay = params.alpha_s if prev_success else params.alpha_f
    else:
        stay = params.beta_s if prev_success else params.beta_f
    return prev_arm if rng.random() < stay else 1 - prev_arm


def mcad_stationary(coeffs: ChainCoefficients) -> float:
    """Limiting fraction of subjects on arm 1: (1 - beta) / (2 - alpha - beta).

    Requires alpha + beta < 2; at alpha = beta = 1 the chain never leaves
    its starting arm and has no unique stationary distribution.
    """
    denom = 2.0 - coeffs.alpha - coeffs.beta
    if denom <= 0.0:
        raise ValueError("degenerate chain: no unique stationary distribution")
    return (1.0 - coeffs.beta) / denom


def mcad_variance(coeffs: ChainCoefficients) -> float:
    """Asymptotic variance of sqrt(n) * (N_1/n - mu) for the chain.

    Equals (1-alpha)(1-beta)(alpha+beta) / (2-alpha-beta)^3; it vanishes
    as either stay probability approaches 1 (the chain freezes) and also
    when alpha + beta -> 0 (the chain alternates deterministically).
    """
    denom = 2.0 - coeffs.alpha - coeffs.beta
    if denom <= 0.0:
        raise ValueError("degenerate chain: no unique stationary distribution")
    return (1.0 - coeffs.alpha) * (1.0 - coeffs.beta) * (coeffs.alpha + coeffs.beta) / denom**3
