"""Pure-Python trial simulation engine.

Reference implementation of the sequential loops.  The compiled kernels
in ``_kernels.pyx`` mirror this file draw-for-draw and operation-for-
operation, so a given random stream produces bit-identical trials on
either backend.  Per-subject draw schedule (design stream):

* stay/switch chain: one uniform (fair coin first, stay/switch after),
* urn family: one uniform for the ball draw,
* drop-the-loser: one uniform per ball draw, immigration redraws included,
* adaptive coins: none during burn-in, one uniform after,

followed by exactly one uniform for the simulated response.  Under
delays, the entry gap (one uniform) and the response delay (one uniform)
come from an independent clock stream, keeping the design stream aligned
with the no-delay case.  Exponentials use -log1p(-u)/rate; cumulative
walks accumulate left to right.  Keep any edit in lockstep with the
kernels or the parity tests will fail.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

RHO_CLIP = 1e-6
RHO_HI = 1.0 - RHO_CLIP
TIE_TOL = 1e-12


def _weight(kind: str, pk: float) -> float:
    if kind == "urn":
        return 1.0 / (1.0 - pk)
    if kind == "neyman":
        return math.sqrt(pk * (1.0 - pk))
    return math.sqrt(pk)


def _rho_clamped(kind: str, p_hat) -> list:
    p_hat = [RHO_CLIP if v < RHO_CLIP else (RHO_HI if v > RHO_HI else v) for v in p_hat]
    w = [_weight(kind, v) for v in p_hat]
    total = 0.0
    for x in w:
        total += x
    out = []
    for x in w:
        v = x / total
        if v < RHO_CLIP:
            v = RHO_CLIP
        elif v > RHO_HI:
            v = RHO_HI
        out.append(v)
    return out


def _g_alloc(x, y, gamma: float) -> list:
    w = []
    for xk, yk in zip(x, y):
        if gamma == 0.0:
            w.append(yk)
        else:
            w.append(yk * (yk / xk) ** gamma)
    total = 0.0
    for v in w:
        total += v
    return [v / total for v in w]


def _walk(u: float, probs) -> int:
    acc = 0.0
    last = len(probs) - 1
    for k in range(last):
        acc += probs[k]
        if u < acc:
            return k
    return last


class _Design:
    """Per-family assignment logic over the observed information set.

    ``decide`` consumes design-stream uniforms and returns an arm;
    ``observe`` folds one revealed response into the adaptive state.
    Undelayed runs call observe immediately after each response,
    delayed runs whenever the response comes due.
    """

    def __init__(self, family: str, params: tuple, p: tuple, K: int):
        self.family = family
        self.K = K
        self.n_obs = [0] * K
        self.s_obs = [0] * K
        if family == "mcad":
            self.stay = params  # (alpha_s, alpha_f, beta_s, beta_f)
            self.last = None  # most recently revealed (arm, outcome)
        elif family == "urn":
            y0, seu = params
            self.Y = [float(v) for v in y0]
            self.seu = bool(seu)
            self.a = 1.0  # add-one shrinkage for the estimate-adjusted split
            self.b = 1.0
        elif family == "dl":
            z0, max_draws = params
            self.Z = [int(v) for v in z0]
            self.max_draws = int(max_draws)
            self.aside = False  # delayed runs set balls aside at the draw
        elif family in ("dbcd", "rbcd"):
            if family == "dbcd":
                self.gamma, self.burn_in, self.a, self.b, self.kind = params
            else:
                self.alpha, self.a, self.b, self.kind = params
                self.burn_in = 1
        else:
            raise ValueError(f"unknown design family {family!r}")

    def _p_hat(self) -> list:
        a, b = self.a, self.b
        return [(self.s_obs[k] + a) / (self.n_obs[k] + b) for k in range(self.K)]

    def decide(self, m: int, N, gen) -> int:
        family = self.family
        if family == "mcad":
            u = gen.random()
            if self.last is None:
                return 0 if u < 0.5 else 1
            arm, success = self.last
            if arm == 0:
                stay = self.stay[0] if success else self.stay[1]
            else:
                stay = self.stay[2] if success else self.stay[3]
            return arm if u < stay else 1 - arm
        if family == "urn":
            total = 0.0
            for v in self.Y:
                total += v
            r = gen.random() * total
            acc = 0.0
            for k in range(self.K):
                acc += self.Y[k]
                if r < acc:
                    return k
            return self.K - 1
        if family == "dl":
            Z = self.Z
            for _ in range(self.max_draws):
                total = 0.0
                for v in Z:
                    total += float(v)
                r = gen.random() * total
                acc = 0.0
                idx = self.K
                for i in range(self.K + 1):
                    acc += float(Z[i])
                    if r < acc:
                        idx = i
                        break
                if idx == 0:
                    for i in range(1, self.K + 1):
                        Z[i] += 1
                    continue
                if self.aside:
                    Z[idx] -= 1  # set aside until the response arrives
                return idx - 1
            raise RuntimeError(f"no treatment ball drawn after {self.max_draws} attempts")
        if family == "dbcd":
            if m < self.burn_in * self.K:
                return m % self.K
            y = _rho_clamped(self.kind, self._p_hat())
            x = [N[k] / m for k in range(self.K)]
            g = _g_alloc(x, y, self.gamma)
            return _walk(gen.random(), g)
        # rbcd: compare current proportion with the estimated target
        if m < 2:
            return m
        r0 = _rho_clamped(self.kind, self._p_hat())[0]
        diff = N[0] - m * r0
        if abs(diff) <= TIE_TOL:
            prob0 = r0
        elif diff > 0.0:
            prob0 = self.alpha * r0
        else:
            prob0 = 1.0 - self.alpha * (1.0 - r0)
        return 0 if gen.random() < prob0 else 1

    def observe(self, arm: int, success: bool):
        family = self.family
        if family == "mcad":
            self.last = (arm, success)
        elif family == "urn":
            if success:
                self.Y[arm] += 1.0
            elif self.seu:
                # split by current estimates, before counting this response
                p_hat = self._p_hat()
                denom = 0.0
                for j in range(self.K):
                    if j != arm:
                        denom += p_hat[j]
                for j in range(self.K):
                    if j != arm:
                        self.Y[j] += p_hat[j] / denom
            else:
                share = 1.0 / (self.K - 1)
                for j in range(self.K):
                    if j != arm:
                        self.Y[j] += share
        elif family == "dl":
            if self.aside:
                if success:
                    self.Z[arm + 1] += 1  # the set-aside ball comes back
            elif not success:
                self.Z[arm + 1] -= 1
        self.n_obs[arm] += 1
        if success:
            self.s_obs[arm] += 1


def run_trial(family: str, params: tuple, p: tuple, n: int, gen):
    """Undelayed loop: every response is revealed before the next entry."""
    K = len(p)
    design = _Design(family, params, p, K)
    assignments = np.empty(n, dtype=np.int64)
    outcomes = np.empty(n, dtype=np.uint8)
    N = [0] * K
    S = [0] * K
    for m in range(n):
        arm = design.decide(m, N, gen)
        success = gen.random() < p[arm]
        design.observe(arm, success)
        assignments[m] = arm
        outcomes[m] = success
        N[arm] += 1
        if success:
            S[arm] += 1
    return assignments, outcomes, np.array(N, dtype=np.int64), np.array(S, dtype=np.int64)


def run_delayed_trial(
    family: str,
    params: tuple,
    p: tuple,
    n: int,
    gen,
    entry_rate: float,
    response_rates: tuple,
    gen_delay,
    audit: bool = False,
):
    """Delayed loop: responses reveal at their due times, never earlier."""
    K = len(p)
    design = _Design(family, params, p, K)
    if family == "dl":
        design.aside = True
    assignments = np.empty(n, dtype=np.int64)
    outcomes = np.empty(n, dtype=np.uint8)
    observed = np.zeros(n, dtype=np.uint8)
    N = [0] * K
    S = [0] * K
    heap: list = []
    t = 0.0
    pending_sum = 0
    pending_max = 0
    log = [] if audit else None
    for m in range(n):
        u = gen_delay.random()
        t += -math.log1p(-u) / entry_rate
        if audit:
            log.append(("entry", t, m))
        while heap and heap[0][0] <= t:
            due, subj, arm_j, success_j = heapq.heappop(heap)
            design.observe(arm_j, success_j)
            observed[subj] = 1
            if audit:
                log.append(("apply", due, subj))
        pending = len(heap)  # assigned but not yet revealed
        pending_sum += pending
        if pending > pending_max:
            pending_max = pending
        arm = design.decide(m, N, gen)
        if audit:
            log.append(("assign", t, m, arm))
        success = gen.random() < p[arm]
        assignments[m] = arm
        outcomes[m] = success
        N[arm] += 1
        if success:
            S[arm] += 1
        ud = gen_delay.random()
        due = t + (-math.log1p(-ud) / response_rates[arm])
        heapq.heappush(heap, (due, m, arm, success))
        if audit:
            log.append(("schedule", due, m))
    n_obs = np.array(design.n_obs, dtype=np.int64)
    s_obs = np.array(design.s_obs, dtype=np.int64)
    return (
        assignments,
        outcomes,
        np.array(N, dtype=np.int64),
        np.array(S, dtype=np.int64),
        observed,
        n_obs,
        s_obs,
        pending_sum / n,
        pending_max,
        log,
    )
