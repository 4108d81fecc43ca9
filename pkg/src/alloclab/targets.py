"""Allocation targets: desired limit proportions as functions of p.

Every target here is a ratio of per-arm weights, rho_k = f(p_k) / sum_j
f(p_j), which keeps gradients uniform across kinds:

    d rho_j / d p_k = f'(p_k)/T * (1{j=k} - rho_j),   T = sum_j f(p_j).

Supported kinds:

* ``urn``    - f(p) = 1/(1-p), the common limit of the reward urns and
  the drop-the-loser rule; favors arms that fail rarely.
* ``neyman`` - f(p) = sqrt(p(1-p)), minimizing total sample size at fixed
  Wald power.  Can assign the majority to the worse arm when both
  probabilities exceed 1/2.
* ``rsihr``  - f(p) = sqrt(p), two arms only: minimizes expected failures
  subject to fixed power.

The information bound built from these gradients is the smallest
asymptotic covariance any randomization scheme with the given limit
allocation can achieve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import BernoulliArms

__all__ = [
    "TARGET_KINDS",
    "TargetAllocation",
    "TargetGradient",
    "rho",
    "grad_rho",
    "fisher_bernoulli",
    "information_bound",
]

TARGET_KINDS = ("urn", "neyman", "rsihr")


@dataclass(frozen=True)
class TargetAllocation:
    """A named allocation target; ``rsihr`` is restricted to two arms."""

    kind: str

    def __post_init__(self):
        object.__setattr__(self, "kind", str(self.kind).lower())
        if self.kind not in TARGET_KINDS:
            raise ValueError(f"unknown target kind {self.kind!r}; expected one of {TARGET_KINDS}")

    @property
    def arity(self):
        """Required arm count, or None if any K is supported."""
        return 2 if self.kind == "rsihr" else None


@dataclass(frozen=True)
class TargetGradient:
    """Jacobian J[j, k] = d rho_j / d p_k at a parameter point."""

    J: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.J, dtype=np.float64).copy()
        arr.setflags(write=False)
        object.__setattr__(self, "J", arr)


def _probabilities(p: Union[BernoulliArms, Sequence[float]]) -> list:
    if isinstance(p, BernoulliArms):
        vals = [float(x) for x in p.p]
    else:
        vals = [float(x) for x in np.asarray(p, dtype=np.float64)]
    if len(vals) < 2:
        raise ValueError("need at least two arms")
    for v in vals:
        if not 0.0 < v < 1.0:
            raise ValueError("target requires probabilities strictly in (0, 1)")
    return vals


def _weight(kind: str, pk: float) -> float:
    if kind == "urn":
        return 1.0 / (1.0 - pk)
    if kind == "neyman":
        return math.sqrt(pk * (1.0 - pk))
    return math.sqrt(pk)


def _weight_deriv(kind: str, pk: float) -> float:
    if kind == "urn":
        qk = 1.0 - pk
        return 1.0 / (qk * qk)
    if kind == "neyman":
        return (1.0 - 2.0 * pk) / (2.0 * math.sqrt(pk * (1.0 - pk)))
    return 0.5 / math.sqrt(pk)


def _check_arity(target: TargetAllocation, K: int):
    if target.arity is not None and K != target.arity:
        raise ValueError(f"target {target.kind!r} supports exactly {target.arity} arms")


def rho(target: TargetAllocation, p: Union[BernoulliArms, Sequence[float]]) -> np.ndarray:
    """Target proportions at parameter p; positive entries summing to 1."""
    vals = _probabilities(p)
    _check_arity(target, len(vals))
    w = [_weight(target.kind, v) for v in vals]
    total = 0.0
    for x in w:
        total += x
    return np.array([x / total for x in w])


def grad_rho(target: TargetAllocation, p: Union[BernoulliArms, Sequence[float]]) -> TargetGradient:
    vals = _probabilities(p)
    _check_arity(target, len(vals))
    K = len(vals)
    w = [_weight(target.kind, v) for v in vals]
    total = 0.0
    for x in w:
        total += x
    r = [x / total for x in w]
    J = np.empty((K, K))
    for k in range(K):
        scale = _weight_deriv(target.kind, vals[k]) / total
        for j in range(K):
            J[j, k] = scale * ((1.0 if j == k else 0.0) - r[j])
    return TargetGradient(J)


def fisher_bernoulli(p: Union[float, Sequence[float], BernoulliArms]) -> np.ndarray:
    """Per-observation Fisher information 1/(p(1-p)), elementwise."""
    if isinstance(p, BernoulliArms):
        arr = np.asarray(p.p, dtype=np.float64)
    else:
        arr = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if np.any(arr <= 0.0) or np.any(arr >= 1.0):
        raise ValueError("Fisher information requires probabilities strictly in (0, 1)")
    out = 1.0 / (arr * (1.0 - arr))
    return out if out.size > 1 else out


def information_bound(
    target: TargetAllocation, p: Union[BernoulliArms, Sequence[float]]
) -> np.ndarray:
    """Covariance floor for sqrt(n)-scaled allocation proportions.

    With per-arm information I_k collected at rate rho_k, the bound is
    J diag(1/(rho_k I_k)) J^T where J is the target Jacobian.  Rows and
    columns sum to zero because proportions are pinned to the simplex.
    """
    vals = _probabilities(p)
    _check_arity(target, len(vals))
    K = len(vals)
    J = grad_rho(target, vals).J
    r = rho(target, vals)
    info = fisher_bernoulli(vals)
    D = np.zeros((K, K))
    for k in range(K):
        D[k, k] = 1.0 / (float(r[k]) * float(info[k]))
    return J @ D @ J.T
