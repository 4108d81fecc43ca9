"""Drop-the-loser urn with an immigration type.

The urn holds K treatment ball types plus one immigration type (index 0)
whose count never changes.  Drawing a treatment ball assigns that arm and
the ball is removed only if the response is a failure; drawing the
immigration ball adds one ball of every treatment type and no subject is
assigned.  Removal-on-failure makes the composition far less variable
than addition urns: this rule attains the minimal fluctuation variance
for its allocation target.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from .core import BernoulliArms, draw_bernoulli

__all__ = ["DLUrnState", "dl_next", "MAX_IMMIGRATION_DRAWS"]

# a draw loop this long means treatment balls essentially never survive
MAX_IMMIGRATION_DRAWS = 10**6


@dataclass(frozen=True)
class DLUrnState:
    """Ball counts: Z[0] immigration balls, Z[1:] one entry per arm."""

    Z: np.ndarray

    def __init__(self, Z: Sequence[int]):
        arr = np.asarray(Z, dtype=np.int64).copy()
        if arr.ndim != 1 or arr.size < 3:
            raise ValueError("urn needs an immigration count plus at least two arms")
        if arr[0] < 1:
            raise ValueError("need at least one immigration ball")
        if np.any(arr < 0):
            raise ValueError("ball counts must be nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "Z", arr)

    @property
    def K(self) -> int:
        return int(self.Z.size) - 1

    @classmethod
    def standard(cls, K: int) -> "DLUrnState":
        """One immigration ball and one ball per arm."""
        return cls([1] * (K + 1))


def dl_next(
    state: DLUrnState,
    arms: BernoulliArms,
    rng,
    max_draws: int = MAX_IMMIGRATION_DRAWS,
) -> Tuple[int, bool, DLUrnState]:
    """Assign one subject: redraw through immigration events, then respond.

    Returns (arm, success, new urn).  Each ball draw consumes one uniform
    and the response consumes one more.  Raises RuntimeError if no
    treatment ball is drawn within ``max_draws`` attempts.
    """
    if arms.K != state.K:
        raise ValueError("arm count does not match the urn")
    Z = state.Z.copy()
    K = state.K
    for _ in range(max_draws):
        total = 0.0
        for i in range(K + 1):
            total += float(Z[i])
        r = rng.random() * total
        acc = 0.0
        idx = K
        for i in range(K + 1):
            acc += float(Z[i])
            if r < acc:
                idx = i
                break
        if idx == 0:
            # immigration: one new ball of every treatment type
            for i in range(1, K + 1):
                Z[i] += 1
            continue
        arm = idx - 1
        success = draw_bernoulli(arms, arm, rng)
        if not success:
            Z[idx] -= 1
        return arm, success, DLUrnState(Z)
    raise RuntimeError(f"no treatment ball drawn after {max_draws} attempts")
