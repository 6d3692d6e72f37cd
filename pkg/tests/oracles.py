"""Independent reference computations used by the tests."""
import math

import mpmath as mp
import numpy as np


def stiffness_matrix_loop(vertices, triangles):
    """Classical P1 Laplacian, assembled element by element with edge vectors."""
    n = len(vertices)
    A = np.zeros((n, n))
    for tri in triangles:
        P = vertices[tri]
        # edge opposite vertex i, as a vector
        e = [P[(i + 2) % 3] - P[(i + 1) % 3] for i in range(3)]
        area = 0.5 * abs((P[1, 0] - P[0, 0]) * (P[2, 1] - P[0, 1])
                         - (P[2, 0] - P[0, 0]) * (P[1, 1] - P[0, 1]))
        for i in range(3):
            for j in range(3):
                A[tri[i], tri[j]] += float(e[i] @ e[j]) / (4.0 * area)
    return A


def omega_recursive(N):
    if N == 1:
        return 2.0
    if N == 2:
        return math.pi
    return omega_recursive(N - 2) * 2.0 * math.pi / N


def _br(t, a, b, kind):
    """t^(a v b) / t^(a ^ b) exponent, written out from the notation table."""
    lo, hi = (a, b) if a <= b else (b, a)
    if kind == "vee":
        return lo if t < 1 else hi
    return hi if t < 1 else lo


def sigma_oracle(c, dps=50):
    """sigma_r, sigma^r and r_cap from certificate inputs in multiprecision."""
    with mp.workdps(dps):
        f = lambda v: mp.mpf(repr(float(v)))
        N = c["N"]
        R, delta, r = f(c["R"]), f(c["delta"]), f(c["r_param"])
        pm, pp, qp = f(c["p_minus"]), f(c["p_plus"]), f(c["q_plus"])
        sm, spl = f(c["s_minus"]), f(c["s_plus"])
        k1, a1, k2, a2 = f(c["kappa1"]), f(c["alpha1"]), f(c["kappa2"]), f(c["alpha2"])
        c1, c2, cH = f(c["c1bar"]), f(c["c2bar"]), f(c["c_H"])
        mus, infF = f(c["mu_sup"]), f(c["inf_F"])
        w = mp.pi ** (mp.mpf(N) / 2) / ((mp.mpf(N) / 2) * mp.gamma(mp.mpf(N) / 2))
        t = 2 * delta / R
        e_pq = _br(r, pm, qp, "wedge")
        e_s = _br(r, sm, spl, "wedge")
        lower = (c1 * cH * qp ** (1 / pm) * (a1 / k1) ** (1 / (a1 * e_pq)) * r ** (1 / (a1 * e_pq))
                 + c2 * cH ** spl * qp ** (spl / pm) * (a1 / k1) ** (e_s / (a1 * e_pq))
                 * r ** (e_s / (a1 * e_pq)))
        upper = (2 ** (N * (a2 - 1)) * a2 * pm ** a2 * infF
                 / (k2 * (1 + mus) ** a2 * w ** (a2 - 1) * (2 ** N - 1) ** a2
                    * R ** (N * (a2 - 1)) * t ** (a2 * _br(t, pm, qp, "vee"))))
        rcap = (k1 / (a1 * qp ** a1) * w ** a1 * R ** (N * a1) * (2 ** N - 1) ** a1
                * mp.mpf(2) ** (-N * a1) * t ** (a1 * _br(t, pm, pp, "wedge")))
        return float(lower), float(upper), float(rcap)


def directional_fd(fun, U, V, h=1e-5):
    return (fun(U + h * V) - fun(U - h * V)) / (2 * h)
