"""Independent brute-force oracles used to cross-check the solvers.

These deliberately avoid the tilted-family closed form and the Newton
duals: the constrained sets are parametrized directly and searched densely
(or solved with a generic constrained optimizer), so agreement with the
production code is evidence, not tautology.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog, minimize, minimize_scalar


def interior_point(umat: np.ndarray) -> np.ndarray | None:
    """A strictly positive simplex point with zero u-moments, or None."""
    m, j = umat.shape
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((j + 1, m + 1))
    a_eq[0, :m] = 1.0
    if j:
        a_eq[1:, :m] = umat.T
    b_eq = np.zeros(j + 1)
    b_eq[0] = 1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    res = linprog(c, A_ub=a_ub, b_ub=np.zeros(m), A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0.0, 1.0)] * (m + 1), method="highs")
    if not res.success or res.x[-1] <= 1e-9:
        return None
    return res.x[:m]


def el_primal_bruteforce(counts: np.ndarray, umat: np.ndarray) -> float:
    """max sum_x counts_x log q_x over {q in simplex : q @ umat = 0} by
    direct parametrization of the feasible affine set."""
    counts = np.asarray(counts, dtype=float)
    m = counts.size
    amat = np.vstack([np.ones((1, m)), umat.T])
    q0 = interior_point(umat)
    if q0 is None:
        return -math.inf
    zmat = null_space(amat)
    dim = zmat.shape[1]

    def value(q: np.ndarray) -> float:
        if np.any(q <= 0):
            return -math.inf
        return float(counts @ np.log(q))

    if dim == 0:
        return value(q0)
    if dim == 1:
        z = zmat[:, 0]
        t_lo, t_hi = -math.inf, math.inf
        for qi, zi in zip(q0, z):
            if zi > 0:
                t_lo = max(t_lo, -qi / zi)
            elif zi < 0:
                t_hi = min(t_hi, -qi / zi)
        grid = np.linspace(t_lo, t_hi, 4001)[1:-1]
        vals = [value(q0 + t * z) for t in grid]
        best = int(np.argmax(vals))
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        res = minimize_scalar(lambda t: -value(q0 + t * z), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-13})
        return -float(res.fun)

    best = -math.inf
    rng = np.random.default_rng(0)
    starts = [q0]
    for _ in range(4):
        w = rng.dirichlet(np.ones(m))
        t = np.linalg.lstsq(zmat, w - q0, rcond=None)[0]
        starts.append(np.clip(q0 + zmat @ t, 1e-9, None))
    for s in starts:
        res = minimize(
            lambda q: -float(counts @ np.log(np.maximum(q, 1e-300))),
            s / s.sum(),
            method="SLSQP",
            bounds=[(1e-12, 1.0)] * m,
            constraints=[
                {"type": "eq", "fun": lambda q: amat @ q - np.concatenate([[1.0], np.zeros(umat.shape[1])])}
            ],
            options={"maxiter": 500, "ftol": 1e-14},
        )
        if res.success:
            best = max(best, float(counts @ np.log(np.maximum(res.x, 1e-300))))
    return best


def bisect_lambda(w: np.ndarray, ucol: np.ndarray, iters: int = 200) -> float:
    """Root of sum_i w_i u_i / (1 - lam u_i) = 0 on the feasible interval,
    by bisection on the strictly decreasing dual derivative."""
    u_min, u_max = float(ucol.min()), float(ucol.max())
    assert u_min < 0.0 < u_max, "needs a sign change for an interior root"
    lo = 1.0 / u_min + 1e-13
    hi = 1.0 / u_max - 1e-13

    def deriv(lam: float) -> float:
        return float(-(w * ucol / (1.0 - lam * ucol)).sum())

    f_lo = deriv(lo)
    f_hi = deriv(hi)
    assert f_lo > 0.0 > f_hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if deriv(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
