"""Pure-Python Monte Carlo path kernel.

Reference twin of the compiled ``_pathsim`` extension: same draw accounting,
same floating-point operation order, bit-identical output.  The compiled
module mirrors this file line for line; change them together.

Random numbers come from a counter-based SplitMix64 stream:

    value(seed, c) = mix13(seed + c * 0x9E3779B97F4A7C15  mod 2^64)

where mix13 is the Stafford variant-13 finalizer.  Path p consumes counters
p * 2^32 + 1, p * 2^32 + 2, ... so path substreams are disjoint for any run
shorter than 2^32 draws per path and fully determined by (seed, path index).
Per step the draw order is fixed: noise first (two counters for a gaussian
via Box-Muller, one for a rademacher sign), then one counter for the mode
transition; a sampled initial mode consumes one counter up front.
"""

from math import cos, log, sqrt

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1
INV_2_53 = 1.0 / 9007199254740992.0
TWO_PI = 6.283185307179586


def _mix13(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_value(seed, counter):
    """The raw 64-bit output at a given counter (exposed for tests)."""
    return _mix13((seed + counter * GOLDEN) & MASK64)


def run_paths(
    A, B, C, D,
    sigma, noise_kind,
    rho, pi0, theta0,
    x0,
    F,
    Q, R, Pterm,
    G,
    use_cost, use_penalty,
    n_paths, seed,
    sum_xx, sumsq_xx, occupancy, theta0_out, cost_out, penalty_out,
):
    """Simulate closed-loop paths, accumulating moments in path order.

    Array arguments are numpy float64/int buffers shaped as in
    ``mjlq._backend.run_paths``; this implementation walks them as nested
    lists for speed.  Outputs are filled in place.
    """
    L = len(pi0)
    n = len(x0)
    T = F.shape[0]
    m = F.shape[2]

    A_ = A.tolist()
    B_ = B.tolist()
    C_ = C.tolist()
    D_ = D.tolist()
    rho_ = rho.tolist()
    pi0_ = pi0.tolist()
    x0_ = x0.tolist()
    F_ = F.tolist()
    Q_ = Q.tolist()
    R_ = R.tolist()
    Pterm_ = Pterm.tolist()
    G_ = G.tolist()
    sigma = float(sigma)
    seed = seed & MASK64

    sum_local = [0.0] * (T + 1)
    sumsq_local = [0.0] * (T + 1)

    for p in range(n_paths):
        c = (p << 32) & MASK64

        if theta0 < 0:
            c = (c + 1) & MASK64
            u = (stream_value(seed, c) >> 11) * INV_2_53
            theta = L - 1
            acc = 0.0
            for j in range(L):
                acc += pi0_[j]
                if u < acc:
                    theta = j
                    break
        else:
            theta = theta0
        theta_init = theta

        x = list(x0_)
        xx = 0.0
        for r in range(n):
            xx += x[r] * x[r]
        sum_local[0] += xx
        sumsq_local[0] += xx * xx
        occupancy[0, theta] += 1

        cost = 0.0
        pen = 0.0
        for k in range(T):
            Fk = F_[k][theta]
            uv = [0.0] * m
            for r in range(m):
                s = 0.0
                row = Fk[r]
                for q in range(n):
                    s += row[q] * x[q]
                uv[r] = s

            if use_cost:
                Qi = Q_[theta]
                for r in range(n):
                    row = Qi[r]
                    s = 0.0
                    for q in range(n):
                        s += row[q] * x[q]
                    cost += x[r] * s
                Ri = R_[theta]
                for r in range(m):
                    row = Ri[r]
                    s = 0.0
                    for q in range(m):
                        s += row[q] * uv[q]
                    cost += uv[r] * s
            if use_penalty:
                Gk = G_[k][theta]
                for r in range(n):
                    row = Gk[r]
                    s = 0.0
                    for q in range(n):
                        s += row[q] * x[q]
                    pen += x[r] * s

            if noise_kind == 0:
                c = (c + 1) & MASK64
                u1 = ((stream_value(seed, c) >> 11) + 1) * INV_2_53
                c = (c + 1) & MASK64
                u2 = (stream_value(seed, c) >> 11) * INV_2_53
                w = sigma * (sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2))
            else:
                c = (c + 1) & MASK64
                w = sigma if (stream_value(seed, c) >> 63) == 0 else -sigma

            Ai = A_[theta]
            Bi = B_[theta]
            Ci = C_[theta]
            Di = D_[theta]
            xn = [0.0] * n
            for r in range(n):
                s = 0.0
                arow = Ai[r]
                brow = Bi[r]
                for q in range(n):
                    s += (arow[q] + w * brow[q]) * x[q]
                crow = Ci[r]
                drow = Di[r]
                for q in range(m):
                    s += (crow[q] + w * drow[q]) * uv[q]
                xn[r] = s

            c = (c + 1) & MASK64
            u = (stream_value(seed, c) >> 11) * INV_2_53
            rrow = rho_[theta]
            theta = L - 1
            acc = 0.0
            for j in range(L):
                acc += rrow[j]
                if u < acc:
                    theta = j
                    break

            x = xn
            xx = 0.0
            for r in range(n):
                xx += x[r] * x[r]
            sum_local[k + 1] += xx
            sumsq_local[k + 1] += xx * xx
            occupancy[k + 1, theta] += 1

        if use_cost:
            Pi = Pterm_[theta]
            for r in range(n):
                row = Pi[r]
                s = 0.0
                for q in range(n):
                    s += row[q] * x[q]
                cost += x[r] * s
            cost_out[p] = cost
        if use_penalty:
            penalty_out[p] = pen
        theta0_out[p] = theta_init

    for k in range(T + 1):
        sum_xx[k] = sum_local[k]
        sumsq_xx[k] = sumsq_local[k]
