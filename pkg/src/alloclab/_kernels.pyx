# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled trial loops.

Mirror of ``_engine_py`` draw-for-draw: same uniform consumption order,
same left-to-right accumulations, same libm calls, so both backends give
bit-identical trials from one random stream.  Any behavioural edit must
land in both files; the parity tests compare them subject-by-subject.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport fabs, log1p, pow, sqrt

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t

cnp.import_array()

cdef double RHO_CLIP = 1e-6
cdef double TIE_TOL = 1e-12

cdef int FAM_MCAD = 0
cdef int FAM_URN = 1
cdef int FAM_DL = 2
cdef int FAM_DBCD = 3
cdef int FAM_RBCD = 4

_FAMILIES = {"mcad": 0, "urn": 1, "dl": 2, "dbcd": 3, "rbcd": 4}
_TARGETS = {"urn": 0, "neyman": 1, "rsihr": 2}


cdef bitgen_t* _bitgen(object bit_generator) except NULL:
    cdef const char* name = "BitGenerator"
    capsule = bit_generator.capsule
    if not PyCapsule_IsValid(capsule, name):
        raise ValueError("invalid BitGenerator capsule")
    return <bitgen_t*> PyCapsule_GetPointer(capsule, name)


cdef inline double _u(bitgen_t* rng) noexcept:
    return rng.next_double(rng.state)


cdef inline double _weight(int tkind, double pk) noexcept:
    if tkind == 0:
        return 1.0 / (1.0 - pk)
    if tkind == 1:
        return sqrt(pk * (1.0 - pk))
    return sqrt(pk)


cdef inline void _rho_clamped(int tkind, double[::1] p_hat, double[::1] out, int K) noexcept:
    cdef int k
    cdef double total = 0.0
    cdef double v
    for k in range(K):
        v = p_hat[k]
        if v < RHO_CLIP:
            v = RHO_CLIP
        elif v > 1.0 - RHO_CLIP:
            v = 1.0 - RHO_CLIP
        out[k] = _weight(tkind, v)
    for k in range(K):
        total += out[k]
    for k in range(K):
        v = out[k] / total
        if v < RHO_CLIP:
            v = RHO_CLIP
        elif v > 1.0 - RHO_CLIP:
            v = 1.0 - RHO_CLIP
        out[k] = v


cdef int _decide(
    int family,
    long m,
    bitgen_t* rng,
    double* stay,
    int* last_arm,
    int* last_success,
    double[::1] Y,
    bint seu,
    cnp.int64_t[::1] Z,
    bint aside,
    long max_draws,
    double gamma,
    int burn_in,
    double a,
    double b,
    int tkind,
    double alpha,
    cnp.int64_t[::1] N,
    cnp.int64_t[::1] n_obs,
    cnp.int64_t[::1] s_obs,
    double[::1] scratch1,
    double[::1] scratch2,
    int K,
) except -2:
    cdef double u, total, r, acc, s, r0, prob0, xk, yk, diff
    cdef int k, i, idx
    cdef long it
    if family == FAM_MCAD:
        u = _u(rng)
        if last_arm[0] < 0:
            return 0 if u < 0.5 else 1
        if last_arm[0] == 0:
            s = stay[0] if last_success[0] else stay[1]
        else:
            s = stay[2] if last_success[0] else stay[3]
        return last_arm[0] if u < s else 1 - last_arm[0]
    if family == FAM_URN:
        total = 0.0
        for k in range(K):
            total += Y[k]
        r = _u(rng) * total
        acc = 0.0
        for k in range(K):
            acc += Y[k]
            if r < acc:
                return k
        return K - 1
    if family == FAM_DL:
        for it in range(max_draws):
            total = 0.0
            for i in range(K + 1):
                total += <double> Z[i]
            r = _u(rng) * total
            acc = 0.0
            idx = K
            for i in range(K + 1):
                acc += <double> Z[i]
                if r < acc:
                    idx = i
                    break
            if idx == 0:
                for i in range(1, K + 1):
                    Z[i] += 1
                continue
            if aside:
                Z[idx] -= 1
            return idx - 1
        return -1
    if family == FAM_DBCD:
        if m < (<long> burn_in) * K:
            return <int> (m % K)
        for k in range(K):
            scratch1[k] = (s_obs[k] + a) / (n_obs[k] + b)
        _rho_clamped(tkind, scratch1, scratch2, K)
        for k in range(K):
            yk = scratch2[k]
            if gamma == 0.0:
                scratch1[k] = yk
            else:
                xk = (<double> N[k]) / (<double> m)
                scratch1[k] = yk * pow(yk / xk, gamma)
        total = 0.0
        for k in range(K):
            total += scratch1[k]
        u = _u(rng)
        acc = 0.0
        for k in range(K - 1):
            acc += scratch1[k] / total
            if u < acc:
                return k
        return K - 1
    # fully randomized coin: compare current proportion with the target
    if m < 2:
        return <int> m
    for k in range(K):
        scratch1[k] = (s_obs[k] + a) / (n_obs[k] + b)
    _rho_clamped(tkind, scratch1, scratch2, K)
    r0 = scratch2[0]
    diff = (<double> N[0]) - (<double> m) * r0
    if fabs(diff) <= TIE_TOL:
        prob0 = r0
    elif diff > 0.0:
        prob0 = alpha * r0
    else:
        prob0 = 1.0 - alpha * (1.0 - r0)
    return 0 if _u(rng) < prob0 else 1


cdef void _observe(
    int family,
    int arm,
    bint success,
    double* stay,
    int* last_arm,
    int* last_success,
    double[::1] Y,
    bint seu,
    cnp.int64_t[::1] Z,
    bint aside,
    cnp.int64_t[::1] n_obs,
    cnp.int64_t[::1] s_obs,
    double[::1] scratch1,
    int K,
) noexcept:
    cdef int j
    cdef double denom, share
    if family == FAM_MCAD:
        last_arm[0] = arm
        last_success[0] = success
    elif family == FAM_URN:
        if success:
            Y[arm] += 1.0
        elif seu:
            # split by current add-one estimates, before counting this response
            for j in range(K):
                scratch1[j] = (s_obs[j] + 1.0) / (n_obs[j] + 1.0)
            denom = 0.0
            for j in range(K):
                if j != arm:
                    denom += scratch1[j]
            for j in range(K):
                if j != arm:
                    Y[j] += scratch1[j] / denom
        else:
            share = 1.0 / (K - 1)
            for j in range(K):
                if j != arm:
                    Y[j] += share
    elif family == FAM_DL:
        if aside:
            if success:
                Z[arm + 1] += 1
        elif not success:
            Z[arm + 1] -= 1
    n_obs[arm] += 1
    if success:
        s_obs[arm] += 1


cdef inline bint _before(double d1, long s1, double d2, long s2) noexcept:
    return d1 < d2 or (d1 == d2 and s1 < s2)


cdef void _heap_push(
    double[::1] hdue,
    cnp.int64_t[::1] hsub,
    cnp.int64_t[::1] harm,
    cnp.uint8_t[::1] hout,
    Py_ssize_t* size,
    double due,
    long subj,
    long arm,
    bint outc,
) noexcept:
    cdef Py_ssize_t i = size[0]
    cdef Py_ssize_t parent
    cdef double td
    cdef cnp.int64_t ts, ta
    cdef cnp.uint8_t to
    hdue[i] = due
    hsub[i] = subj
    harm[i] = arm
    hout[i] = outc
    size[0] = i + 1
    while i > 0:
        parent = (i - 1) >> 1
        if _before(hdue[i], hsub[i], hdue[parent], hsub[parent]):
            td = hdue[i]; hdue[i] = hdue[parent]; hdue[parent] = td
            ts = hsub[i]; hsub[i] = hsub[parent]; hsub[parent] = ts
            ta = harm[i]; harm[i] = harm[parent]; harm[parent] = ta
            to = hout[i]; hout[i] = hout[parent]; hout[parent] = to
            i = parent
        else:
            break


cdef void _heap_pop(
    double[::1] hdue,
    cnp.int64_t[::1] hsub,
    cnp.int64_t[::1] harm,
    cnp.uint8_t[::1] hout,
    Py_ssize_t* size,
) noexcept:
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t child, n
    cdef double td
    cdef cnp.int64_t ts, ta
    cdef cnp.uint8_t to
    n = size[0] - 1
    size[0] = n
    if n == 0:
        return
    hdue[0] = hdue[n]
    hsub[0] = hsub[n]
    harm[0] = harm[n]
    hout[0] = hout[n]
    while True:
        child = 2 * i + 1
        if child >= n:
            break
        if child + 1 < n and _before(hdue[child + 1], hsub[child + 1], hdue[child], hsub[child]):
            child += 1
        if _before(hdue[child], hsub[child], hdue[i], hsub[i]):
            td = hdue[i]; hdue[i] = hdue[child]; hdue[child] = td
            ts = hsub[i]; hsub[i] = hsub[child]; hsub[child] = ts
            ta = harm[i]; harm[i] = harm[child]; harm[child] = ta
            to = hout[i]; hout[i] = hout[child]; hout[child] = to
            i = child
        else:
            break


cdef _parse(str family, tuple params, double[::1] Y, cnp.int64_t[::1] Z,
            double* stay, bint* seu, long* max_draws, double* gamma, int* burn_in,
            double* a, double* b, int* tkind, double* alpha):
    """Unpack the engine wire format into C locals; returns the family id."""
    cdef int fam = _FAMILIES[family]
    cdef int i
    if fam == FAM_MCAD:
        stay[0] = params[0]
        stay[1] = params[1]
        stay[2] = params[2]
        stay[3] = params[3]
    elif fam == FAM_URN:
        for i in range(len(params[0])):
            Y[i] = params[0][i]
        seu[0] = params[1]
        a[0] = 1.0
        b[0] = 1.0
    elif fam == FAM_DL:
        for i in range(len(params[0])):
            Z[i] = params[0][i]
        max_draws[0] = params[1]
    elif fam == FAM_DBCD:
        gamma[0] = params[0]
        burn_in[0] = params[1]
        a[0] = params[2]
        b[0] = params[3]
        tkind[0] = _TARGETS[params[4]]
    else:
        alpha[0] = params[0]
        a[0] = params[1]
        b[0] = params[2]
        tkind[0] = _TARGETS[params[3]]
    return fam


def run_trial(object bit_generator, str family, tuple params, tuple p, long n):
    """Undelayed loop; mirrors ``_engine_py.run_trial``."""
    cdef int K = len(p)
    cdef bitgen_t* rng = _bitgen(bit_generator)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] assignments = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] outcomes = np.empty(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] N = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] S = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] n_obs = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] s_obs = np.zeros(K, dtype=np.int64)
    cdef double[::1] pvec = np.array(p, dtype=np.float64)
    cdef double[::1] Y = np.zeros(K, dtype=np.float64)
    cdef cnp.int64_t[::1] Z = np.zeros(K + 1, dtype=np.int64)
    cdef double[::1] scratch1 = np.zeros(K, dtype=np.float64)
    cdef double[::1] scratch2 = np.zeros(K, dtype=np.float64)

    cdef double stay[4]
    cdef bint seu = 0
    cdef long max_draws = 0
    cdef double gamma = 0.0, a = 0.0, b = 0.0, alpha = 0.0
    cdef int burn_in = 0, tkind = 0
    cdef int fam = _parse(family, params, Y, Z, stay, &seu, &max_draws,
                          &gamma, &burn_in, &a, &b, &tkind, &alpha)

    cdef int last_arm = -1
    cdef int last_success = 0
    cdef long m
    cdef int arm
    cdef bint success
    for m in range(n):
        arm = _decide(fam, m, rng, stay, &last_arm, &last_success, Y, seu, Z,
                      0, max_draws, gamma, burn_in, a, b, tkind, alpha,
                      N, n_obs, s_obs, scratch1, scratch2, K)
        if arm < 0:
            raise RuntimeError(f"no treatment ball drawn after {max_draws} attempts")
        success = _u(rng) < pvec[arm]
        _observe(fam, arm, success, stay, &last_arm, &last_success, Y, seu, Z,
                 0, n_obs, s_obs, scratch1, K)
        assignments[m] = arm
        outcomes[m] = success
        N[arm] += 1
        if success:
            S[arm] += 1
    return assignments, outcomes, np.asarray(N), np.asarray(S)


def run_delayed_trial(
    object bit_generator,
    object delay_bit_generator,
    str family,
    tuple params,
    tuple p,
    long n,
    double entry_rate,
    tuple response_rates,
):
    """Delayed loop; mirrors ``_engine_py.run_delayed_trial``."""
    cdef int K = len(p)
    cdef bitgen_t* rng = _bitgen(bit_generator)
    cdef bitgen_t* rng_delay = _bitgen(delay_bit_generator)

    cdef cnp.ndarray[cnp.int64_t, ndim=1] assignments = np.empty(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] outcomes = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] observed = np.zeros(n, dtype=np.uint8)
    cdef cnp.int64_t[::1] N = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] S = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] n_obs = np.zeros(K, dtype=np.int64)
    cdef cnp.int64_t[::1] s_obs = np.zeros(K, dtype=np.int64)
    cdef double[::1] pvec = np.array(p, dtype=np.float64)
    cdef double[::1] rates = np.array(response_rates, dtype=np.float64)
    cdef double[::1] Y = np.zeros(K, dtype=np.float64)
    cdef cnp.int64_t[::1] Z = np.zeros(K + 1, dtype=np.int64)
    cdef double[::1] scratch1 = np.zeros(K, dtype=np.float64)
    cdef double[::1] scratch2 = np.zeros(K, dtype=np.float64)

    cdef double stay[4]
    cdef bint seu = 0
    cdef long max_draws = 0
    cdef double gamma = 0.0, a = 0.0, b = 0.0, alpha = 0.0
    cdef int burn_in = 0, tkind = 0
    cdef int fam = _parse(family, params, Y, Z, stay, &seu, &max_draws,
                          &gamma, &burn_in, &a, &b, &tkind, &alpha)

    # response-event heap, capacity n
    cdef double[::1] hdue = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] hsub = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] harm = np.empty(n, dtype=np.int64)
    cdef cnp.uint8_t[::1] hout = np.empty(n, dtype=np.uint8)
    cdef Py_ssize_t heap_size = 0

    cdef int last_arm = -1
    cdef int last_success = 0
    cdef double t = 0.0
    cdef long pending_sum = 0
    cdef long pending_max = 0
    cdef long m
    cdef int arm
    cdef bint success
    cdef double u, due
    for m in range(n):
        u = _u(rng_delay)
        t += -log1p(-u) / entry_rate
        while heap_size > 0 and hdue[0] <= t:
            observed[hsub[0]] = 1
            _observe(fam, <int> harm[0], hout[0], stay, &last_arm, &last_success,
                     Y, seu, Z, 1, n_obs, s_obs, scratch1, K)
            _heap_pop(hdue, hsub, harm, hout, &heap_size)
        pending_sum += heap_size
        if heap_size > pending_max:
            pending_max = heap_size
        arm = _decide(fam, m, rng, stay, &last_arm, &last_success, Y, seu, Z,
                      1, max_draws, gamma, burn_in, a, b, tkind, alpha,
                      N, n_obs, s_obs, scratch1, scratch2, K)
        if arm < 0:
            raise RuntimeError(f"no treatment ball drawn after {max_draws} attempts")
        success = _u(rng) < pvec[arm]
        assignments[m] = arm
        outcomes[m] = success
        N[arm] += 1
        if success:
            S[arm] += 1
        u = _u(rng_delay)
        due = t + (-log1p(-u) / rates[arm])
        _heap_push(hdue, hsub, harm, hout, &heap_size, due, m, arm, success)
    return (
        assignments,
        outcomes,
        np.asarray(N),
        np.asarray(S),
        observed,
        np.asarray(n_obs),
        np.asarray(s_obs),
        (<double> pending_sum) / (<double> n),
        <long> pending_max,
    )
