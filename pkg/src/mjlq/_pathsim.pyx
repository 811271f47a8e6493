# cython: language_level=3
"""Compiled Monte Carlo path kernel.

Line-for-line mirror of ``mjlq._pathsim_py``: same counter-based SplitMix64
stream, same draw accounting, same floating-point operation order, so the
two backends produce bit-identical output.  See the twin module for the
stream documentation; change them together.
"""

import numpy as np

from libc.math cimport cos, log, sqrt

cdef extern from *:
    """
    static const unsigned long long MJLQ_GOLDEN = 0x9E3779B97F4A7C15ULL;
    static const unsigned long long MJLQ_MIX_A  = 0xBF58476D1CE4E5B9ULL;
    static const unsigned long long MJLQ_MIX_B  = 0x94D049BB133111EBULL;
    """
    const unsigned long long MJLQ_GOLDEN
    const unsigned long long MJLQ_MIX_A
    const unsigned long long MJLQ_MIX_B

cdef double INV_2_53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586


cdef inline unsigned long long _mix13(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * MJLQ_MIX_A
    z = (z ^ (z >> 27)) * MJLQ_MIX_B
    return z ^ (z >> 31)


cdef inline unsigned long long _value(unsigned long long seed, unsigned long long counter) nogil:
    return _mix13(seed + counter * MJLQ_GOLDEN)


def stream_value(seed, counter):
    """The raw 64-bit output at a given counter (exposed for tests)."""
    return int(_value(<unsigned long long> (seed & 0xFFFFFFFFFFFFFFFF),
                      <unsigned long long> (counter & 0xFFFFFFFFFFFFFFFF)))


def run_paths(
    const double[:, :, ::1] A, const double[:, :, ::1] B,
    const double[:, :, ::1] C, const double[:, :, ::1] D,
    double sigma, int noise_kind,
    const double[:, ::1] rho, const double[::1] pi0, int theta0,
    const double[::1] x0,
    const double[:, :, :, ::1] F,
    const double[:, :, ::1] Q, const double[:, :, ::1] R, const double[:, :, ::1] Pterm,
    const double[:, :, :, ::1] G,
    int use_cost, int use_penalty,
    long long n_paths, unsigned long long seed,
    double[::1] sum_xx, double[::1] sumsq_xx,
    long long[:, ::1] occupancy,
    int[::1] theta0_out,
    double[::1] cost_out, double[::1] penalty_out,
):
    """Simulate closed-loop paths, accumulating moments in path order.

    Output arrays must arrive zero-initialized; they are accumulated in
    place.  Semantics are identical to ``_pathsim_py.run_paths``.
    """
    cdef int L = pi0.shape[0]
    cdef int n = x0.shape[0]
    cdef int T = F.shape[0]
    cdef int m = F.shape[2]

    cdef double[::1] x = np.empty(n)
    cdef double[::1] xn = np.empty(n)
    cdef double[::1] uv = np.empty(m)

    cdef long long p
    cdef unsigned long long c
    cdef int theta, theta_init, j, k, r, q
    cdef double u, u1, u2, w, acc, s, xx, cost, pen

    with nogil:
        for p in range(n_paths):
            c = (<unsigned long long> p) << 32

            if theta0 < 0:
                c = c + 1
                u = <double> (_value(seed, c) >> 11) * INV_2_53
                theta = L - 1
                acc = 0.0
                for j in range(L):
                    acc += pi0[j]
                    if u < acc:
                        theta = j
                        break
            else:
                theta = theta0
            theta_init = theta

            for r in range(n):
                x[r] = x0[r]
            xx = 0.0
            for r in range(n):
                xx += x[r] * x[r]
            sum_xx[0] += xx
            sumsq_xx[0] += xx * xx
            occupancy[0, theta] += 1

            cost = 0.0
            pen = 0.0
            for k in range(T):
                for r in range(m):
                    s = 0.0
                    for q in range(n):
                        s += F[k, theta, r, q] * x[q]
                    uv[r] = s

                if use_cost:
                    for r in range(n):
                        s = 0.0
                        for q in range(n):
                            s += Q[theta, r, q] * x[q]
                        cost += x[r] * s
                    for r in range(m):
                        s = 0.0
                        for q in range(m):
                            s += R[theta, r, q] * uv[q]
                        cost += uv[r] * s
                if use_penalty:
                    for r in range(n):
                        s = 0.0
                        for q in range(n):
                            s += G[k, theta, r, q] * x[q]
                        pen += x[r] * s

                if noise_kind == 0:
                    c = c + 1
                    u1 = <double> ((_value(seed, c) >> 11) + 1) * INV_2_53
                    c = c + 1
                    u2 = <double> (_value(seed, c) >> 11) * INV_2_53
                    w = sigma * (sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2))
                else:
                    c = c + 1
                    w = sigma if (_value(seed, c) >> 63) == 0 else -sigma

                for r in range(n):
                    s = 0.0
                    for q in range(n):
                        s += (A[theta, r, q] + w * B[theta, r, q]) * x[q]
                    for q in range(m):
                        s += (C[theta, r, q] + w * D[theta, r, q]) * uv[q]
                    xn[r] = s

                c = c + 1
                u = <double> (_value(seed, c) >> 11) * INV_2_53
                j = theta
                theta = L - 1
                acc = 0.0
                for r in range(L):
                    acc += rho[j, r]
                    if u < acc:
                        theta = r
                        break

                for r in range(n):
                    x[r] = xn[r]
                xx = 0.0
                for r in range(n):
                    xx += x[r] * x[r]
                sum_xx[k + 1] += xx
                sumsq_xx[k + 1] += xx * xx
                occupancy[k + 1, theta] += 1

            if use_cost:
                for r in range(n):
                    s = 0.0
                    for q in range(n):
                        s += Pterm[theta, r, q] * x[q]
                    cost += x[r] * s
                cost_out[p] = cost
            if use_penalty:
                penalty_out[p] = pen
            theta0_out[p] = theta_init
