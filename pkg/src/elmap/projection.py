"""Projections of a base distribution onto linear families.

The main route is convex duality: the minimizer of L(q || r) over
{q : sum q_i u(x_i; theta) = 0} has the closed form q_i = r_i / (1 - lam.u_i)
with the multiplier lam maximizing the concave dual

    g(lam) = sum_i r_i log(1 - lam . u(x_i; theta))

over the open region where every factor stays positive.  A damped Newton
iteration solves the dual.  An independent primal oracle (entropic mirror
descent with an augmented Lagrangian, plus a local equality-constrained
Newton polish) cross-checks the duality and also handles the KL, Euclidean,
Cressie-Read and reinforced-urn discrepancies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .divergences import DivergenceSpec, entropy
from .errors import (
    AllInfeasible,
    Infeasible,
    InfeasibleMoment,
    NotConverged,
    SupportCondition,
    ThetaOutOfDomain,
)
from .prob import EstimatingModel, Pmf, make_pmf
from .rng import rng_from

GRAD_TOL = 1e-10
MAX_ITER = 200
_BOUNDARY_T = 1e-9


@dataclass(frozen=True)
class LambdaFamilyMember:
    """A member q_i = base_i / (1 - lam . u(x_i; theta)) of the tilted
    family generated by a base distribution and estimating functions."""

    base: Pmf
    lam: np.ndarray
    theta: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lam", np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, dtype=float)))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


@dataclass(frozen=True)
class ProjectionResult:
    qhat: Pmf
    lam: np.ndarray
    value: float
    converged: bool
    iterations: int
    grad_norm: float


def moment_feasibility(umat: np.ndarray, tol: float = _BOUNDARY_T) -> tuple[str, float]:
    """Classify whether 0 lies in the convex hull of the rows of umat.

    Returns ("interior", t), ("boundary", t) or ("infeasible", 0): t is the
    largest minimum weight of a hull representation of 0, so t > 0 means a
    strictly positive representation exists.
    """
    m, j = umat.shape
    if j == 0:
        return "interior", 1.0 / m
    if j == 1:
        col = umat[:, 0]
        lo, hi = float(col.min()), float(col.max())
        if lo < 0.0 < hi or (lo == 0.0 == hi):
            return "interior", 1.0 / m
        if lo == 0.0 or hi == 0.0:
            return "boundary", 0.0
        return "infeasible", 0.0
    c = np.zeros(m + 1)
    c[-1] = -1.0
    a_eq = np.zeros((j + 1, m + 1))
    a_eq[0, :m] = 1.0
    a_eq[1:, :m] = umat.T
    b_eq = np.zeros(j + 1)
    b_eq[0] = 1.0
    a_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    b_ub = np.zeros(m)
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0.0, 1.0)] * m + [(0.0, 1.0)],
        method="highs",
    )
    if res.status == 2:
        return "infeasible", 0.0
    if not res.success:
        raise NotConverged(f"feasibility LP failed: {res.message}")
    t = float(res.x[-1])
    if t <= tol:
        return "boundary", t
    return "interior", t


def _log_ext(z: np.ndarray, tau: float) -> np.ndarray:
    """log with a quadratic extension below tau, used only while line
    searching so that near-boundary trial points evaluate smoothly."""
    out = np.empty_like(z)
    hi = z >= tau
    out[hi] = np.log(z[hi])
    d = z[~hi] - tau
    out[~hi] = math.log(tau) + d / tau - d * d / (2.0 * tau * tau)
    return out


def dual_newton(
    w: np.ndarray,
    umat: np.ndarray,
    grad_tol: float = GRAD_TOL,
    max_iter: int = MAX_ITER,
) -> tuple[np.ndarray, float, int, float]:
    """Maximize g(lam) = sum w_i log(1 - lam.u_i) by damped Newton.

    Returns (lam, g(lam), iterations, grad_norm).  Raises NotConverged when
    the gradient norm cannot be brought below grad_tol; callers are expected
    to have screened infeasible moment problems already.
    """
    m, j = umat.shape
    if j == 0:
        return np.zeros(0), 0.0, 0, 0.0
    tau = 1.0 / (10.0 * m)
    lam = np.zeros(j)
    s = np.ones(m)
    gval = 0.0
    gnorm = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        grad = -(umat.T @ (w / s))
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 1e-14:
            break
        curv = umat.T @ (umat * (w / s**2)[:, None])
        try:
            step = np.linalg.solve(curv, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(curv, grad, rcond=None)[0]
        du = umat @ step
        pos = du > 0
        alpha = 1.0
        if np.any(pos):
            alpha = min(1.0, 0.99 * float(np.min(s[pos] / du[pos])))
        slope = float(grad @ step)
        accepted = False
        for _ in range(70):
            trial = s - alpha * du
            val = float(w @ _log_ext(trial, tau))
            if val >= gval + 1e-4 * alpha * slope and np.all(trial > 0.0):
                lam = lam + alpha * step
                s = trial
                gval = float(w @ np.log(s))
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
    grad = -(umat.T @ (w / s))
    gnorm = float(np.linalg.norm(grad))
    if gnorm > grad_tol:
        raise NotConverged(
            f"dual gradient norm {gnorm:.3e} > {grad_tol:.0e} after {it} iterations"
        )
    return lam, float(w @ np.log(s)), it, gnorm


def solve_lambda(
    r: Pmf, model: EstimatingModel, theta
) -> tuple[np.ndarray, float, bool]:
    """Multiplier, projection value and convergence flag of the dual."""
    res = l_project_linear(r, model, theta, _boundary_as_infeasible=True)
    return res.lam, res.value, res.converged


def lambda_family_member(
    base: Pmf, model: EstimatingModel, theta, lam
) -> LambdaFamilyMember:
    """Evaluate the tilted-family weights base_i / (1 - lam.u(x_i; theta))."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    lam = np.asarray(lam, dtype=float)
    umat = model.u_matrix(base.support, th)
    s = 1.0 - umat @ lam
    if np.any((base.weights > 0.0) & (s <= 0.0)):
        raise InfeasibleMoment("1 - lam.u must stay positive on the base support")
    w = np.where(base.weights > 0.0, base.weights / np.where(s > 0, s, 1.0), 0.0)
    return LambdaFamilyMember(base=base, lam=lam, theta=th, weights=w)


def l_project_linear(
    r: Pmf,
    model: EstimatingModel,
    theta,
    _boundary_as_infeasible: bool = False,
) -> ProjectionResult:
    """Project r onto the linear family at theta under L(. || r)."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if not model.domain.contains(th):
        raise ThetaOutOfDomain(f"theta {th} outside the parameter domain")
    active = r.weights > 0.0
    umat_full = model.u_matrix(r.support, th)
    umat = umat_full[active]
    w = r.weights[active]
    status, _ = moment_feasibility(umat)
    if status == "infeasible":
        raise InfeasibleMoment(f"zero moment unattainable at theta={th}")
    if status == "boundary":
        if _boundary_as_infeasible:
            raise InfeasibleMoment(
                f"moment condition only attainable with zero weights at theta={th}"
            )
        raise SupportCondition(
            f"family support at theta={th} is smaller than the support of the base"
        )
    lam, gval, iters, gnorm = dual_newton(w, umat)
    q = np.zeros(r.m)
    q[active] = w / (1.0 - umat @ lam)
    value = entropy(r) + gval
    return ProjectionResult(
        qhat=make_pmf(r.support, q),
        lam=lam,
        value=value,
        converged=gnorm <= GRAD_TOL,
        iterations=iters,
        grad_norm=gnorm,
    )


# -- primal oracle -------------------------------------------------------------


def _mirror_descent(
    spec: DivergenceSpec,
    base: np.ndarray,
    umat: np.ndarray,
    q0: np.ndarray,
    outer: int,
    inner: int,
) -> np.ndarray:
    """Augmented-Lagrangian entropic mirror descent toward the constrained
    minimizer; returns an interior approximation."""
    q = np.maximum(q0, 1e-12)
    q = q / q.sum()
    j = umat.shape[1]
    y = np.zeros(j)
    rho = 10.0
    with np.errstate(divide="ignore", invalid="ignore"):
        for _ in range(outer):
            for t in range(1, inner + 1):
                mom = q @ umat
                grad = spec.grad(q, base) + umat @ (y + rho * mom)
                step = (1.0 / math.sqrt(t)) * grad
                nrm = float(np.max(np.abs(step)))
                if nrm > 0.5:  # bound each multiplicative update
                    step *= 0.5 / nrm
                z = np.log(q) - step
                z = np.maximum(z - z.max(), -700.0)
                q = np.exp(z)
                q /= q.sum()
            mom = q @ umat
            y = y + rho * mom
            if j == 0 or float(np.max(np.abs(mom))) < 1e-11:
                break
            rho = min(rho * 2.0, 1e5)
    return q


def _kkt_polish(
    spec: DivergenceSpec,
    base: np.ndarray,
    umat: np.ndarray,
    q0: np.ndarray,
    max_iter: int = 80,
) -> np.ndarray:
    """Local Newton solve of the equality-constrained optimality system,
    restricted to the primal side (never uses the tilted-family form)."""
    m, j = umat.shape
    amat = np.vstack([np.ones((1, m)), umat.T])
    b = np.zeros(j + 1)
    b[0] = 1.0
    positivity = spec.kind in {"L", "KL", "CR", "PolyaL"}

    fixed = np.zeros(m, dtype=bool)
    q = q0.copy()
    for _ in range(m + 1):
        free = ~fixed
        qf = q[free]
        af = amat[:, free]
        bf = base[free]
        nu = np.linalg.lstsq(af.T, -spec.grad(qf, bf), rcond=None)[0]
        for _ in range(max_iter):
            g = spec.grad(qf, bf) + af.T @ nu
            rc = af @ qf - b
            res = max(float(np.max(np.abs(g))), float(np.max(np.abs(rc))))
            if res <= 1e-13:
                break
            h = spec.hess_diag(qf, bf) + 1e-13
            sinv = af @ (af / h).T
            try:
                dnu = np.linalg.solve(sinv, rc - af @ (g / h))
            except np.linalg.LinAlgError:
                dnu = np.linalg.lstsq(sinv, rc - af @ (g / h), rcond=None)[0]
            dq = -(g + af.T @ dnu) / h
            alpha = 1.0
            if positivity:
                neg = dq < 0
                if np.any(neg):
                    alpha = min(1.0, 0.995 * float(np.min(qf[neg] / -dq[neg])))
            for _ in range(60):
                qt = qf + alpha * dq
                nut = nu + alpha * dnu
                if positivity and np.any(qt <= 0):
                    alpha *= 0.5
                    continue
                gt = spec.grad(qt, bf) + af.T @ nut
                rt = af @ qt - b
                if max(float(np.max(np.abs(gt))), float(np.max(np.abs(rt)))) <= (1.0 - 1e-4 * alpha) * res:
                    qf, nu = qt, nut
                    break
                alpha *= 0.5
            else:
                break
        q = np.zeros(m)
        q[free] = qf
        if positivity or not np.any(qf < -1e-12):
            break
        # Euclidean-type face handling: pin the most negative weight at zero.
        worst = np.where(free)[0][int(np.argmin(qf))]
        fixed[worst] = True
        q[q < 0] = 0.0
        q /= q.sum()
    return q


def project_oracle(
    r: Pmf,
    model: EstimatingModel,
    theta,
    spec: DivergenceSpec,
    restarts: int = 5,
    seed: int = 0,
    outer: int = 12,
    inner: int = 300,
) -> Pmf:
    """Brute-force projection of r under the chosen divergence, by entropic
    mirror descent over the simplex with decreasing steps plus a local
    polish; independent of the dual route."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if not model.domain.contains(th):
        raise ThetaOutOfDomain(f"theta {th} outside the parameter domain")
    umat_full = model.u_matrix(r.support, th)
    if spec.kind in {"L", "KL", "CR"}:
        atoms = r.weights > 0.0
    else:
        atoms = np.ones(r.m, dtype=bool)
    umat = umat_full[atoms]
    base = r.weights[atoms]
    m = int(atoms.sum())
    status, _ = moment_feasibility(umat)
    if status == "infeasible":
        raise Infeasible(f"no distribution on the atoms satisfies the moments at theta={th}")

    rng = rng_from("project_oracle", seed)
    inits = [np.full(m, 1.0 / m), np.maximum(base, 0.02 / m) / np.maximum(base, 0.02 / m).sum()]
    while len(inits) < max(restarts, 1):
        inits.append(rng.dirichlet(np.ones(m)))

    best_q = None
    best_val = math.inf
    for q0 in inits[: max(restarts, 1)]:
        q = _mirror_descent(spec, base, umat, q0, outer, inner)
        q = np.maximum(q, 1e-12)
        q = _kkt_polish(spec, base, umat, q / q.sum())
        mom = q @ umat
        if umat.shape[1] and float(np.max(np.abs(mom))) > 1e-9:
            continue
        val = spec.value(q, base)
        if val < best_val:
            best_val = val
            best_q = q
    if best_q is None:
        raise NotConverged("no oracle restart reached the feasibility tolerance")
    out = np.zeros(r.m)
    out[atoms] = best_q
    out[out < 0] = 0.0
    return make_pmf(r.support, out)


# -- profile search over a parameter grid ---------------------------------------


@dataclass(frozen=True)
class ProfileResult:
    theta_star: np.ndarray
    result: ProjectionResult
    minimizers: tuple
    values: tuple


def _golden_min(fun, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Golden-section minimizer on [lo, hi]; inf values are just large."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return c if fc <= fd else d


def profile_l_projection(
    r: Pmf, model: EstimatingModel, theta_grid
) -> ProfileResult:
    """Minimize the projection value over a grid of parameter points, then
    refine once per coordinate by golden section.  All grid minimizers
    within 1e-9 of the minimum are reported (there may be several)."""
    grid = [np.atleast_1d(np.asarray(t, dtype=float)) for t in theta_grid]
    if not grid:
        raise AllInfeasible("empty parameter grid")

    def value_at(th: np.ndarray) -> float:
        if not model.domain.contains(th):
            return math.inf
        try:
            return l_project_linear(r, model, th).value
        except (InfeasibleMoment, SupportCondition, NotConverged):
            return math.inf

    vals = np.array([value_at(th) for th in grid])
    if not np.any(np.isfinite(vals)):
        raise AllInfeasible("projection infeasible on the whole grid")
    vmin = float(np.min(vals))
    minimizers = tuple(
        grid[i] for i in range(len(grid)) if vals[i] <= vmin + 1e-9
    )
    start = min(minimizers, key=lambda t: tuple(t))
    theta = start.copy()
    k = theta.size
    for coord in range(k):
        axis = np.unique([g[coord] for g in grid])
        pos = int(np.searchsorted(axis, theta[coord]))
        lo = axis[pos - 1] if pos - 1 >= 0 else theta[coord]
        hi = axis[pos + 1] if pos + 1 < axis.size else theta[coord]
        if hi <= lo:
            continue

        def along(t: float, coord=coord) -> float:
            trial = theta.copy()
            trial[coord] = t
            return value_at(trial)

        cand = _golden_min(along, float(lo), float(hi))
        if along(cand) < value_at(theta) - 1e-15:
            theta[coord] = cand
    if value_at(theta) > vmin:
        theta = start.copy()
    return ProfileResult(
        theta_star=theta,
        result=l_project_linear(r, model, theta),
        minimizers=minimizers,
        values=tuple(float(v) for v in vals),
    )
