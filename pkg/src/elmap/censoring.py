"""Right-censored data: generation, likelihood, product-limit estimation
and posterior decay.

Data come from a two-component mixture on a fixed time grid: with
probability alpha_unc an event time is drawn from F0 and observed exactly;
otherwise a censoring time is drawn from G0 and only the survival beyond
it is known.  The fit criterion for a candidate lifetime distribution F is

    l_n(F) = - sum_{uncensored} log F({x_i}) - sum_{censored} log F((y_i, inf)),

whose n-normalized limit is the censored divergence

    L(F | F0, G0) = -[ alpha int log F({x}) dF0 + (1-alpha) int log F((y, inf)) dG0 ].

The product-limit (Kaplan-Meier) curve is the exact minimizer of l_n over
all distributions on the event times, which a small brute-force simplex
search verifies independently.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .bayes import DecayReport, PriorGrid
from .errors import AllZeroLikelihood, InfiniteRate, NoEvents, NotConverged
from .prob import Pmf
from .rng import derive_seed, rng_from


@dataclass(frozen=True)
class CensoredObservation:
    """One datum: a time, and whether it is only a lower bound."""

    time: float
    censored: bool

    def __post_init__(self):
        t = float(self.time)
        if not math.isfinite(t):
            raise ValueError("observation time must be finite")
        object.__setattr__(self, "time", t)
        object.__setattr__(self, "censored", bool(self.censored))


@dataclass(frozen=True)
class CensoringModel:
    """Event distribution F0, censor-time distribution G0 (same grid) and
    the implied probability alpha_unc of observing an event exactly."""

    f0: Pmf
    g0: Pmf
    alpha_unc: float

    def __post_init__(self):
        if not np.array_equal(self.f0.support, self.g0.support):
            raise ValueError("F0 and G0 must live on the same grid")
        expected = _uncensored_probability(self.f0, self.g0)
        if abs(self.alpha_unc - expected) > 1e-12:
            raise ValueError(
                f"alpha_unc={self.alpha_unc!r} inconsistent with F0,G0 ({expected!r})"
            )
        object.__setattr__(self, "alpha_unc", float(self.alpha_unc))

    @classmethod
    def from_components(cls, f0: Pmf, g0: Pmf) -> "CensoringModel":
        return cls(f0, g0, _uncensored_probability(f0, g0))


def _uncensored_probability(f0: Pmf, g0: Pmf) -> float:
    """P(X <= Y) for X ~ F0, Y ~ G0 independent; ties count as events."""
    cdf = np.cumsum(f0.weights)
    return float(g0.weights @ cdf)


@dataclass(frozen=True)
class SurvivalCurve:
    """Step survival function with atoms at the event times; the atoms may
    sum to less than one when the last observation is censored."""

    event_times: np.ndarray
    survival: np.ndarray
    atoms: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.event_times, dtype=float)
        surv = np.asarray(self.survival, dtype=float)
        atoms = np.asarray(self.atoms, dtype=float)
        if not (times.shape == surv.shape == atoms.shape):
            raise ValueError("mismatched curve arrays")
        if np.any(np.diff(times) <= 0):
            raise ValueError("event times must be increasing")
        if np.any(np.diff(surv) > 1e-12) or np.any(surv > 1.0 + 1e-12):
            raise ValueError("survival must be nonincreasing and at most 1")
        if np.any(atoms < -1e-12) or atoms.sum() > 1.0 + 1e-9:
            raise ValueError("atoms must be a (possibly defective) pmf")
        for arr in (times, surv, atoms):
            arr.setflags(write=False)
        object.__setattr__(self, "event_times", times)
        object.__setattr__(self, "survival", surv)
        object.__setattr__(self, "atoms", atoms)

    @property
    def defect(self) -> float:
        """Mass left beyond the last event time."""
        return float(max(0.0, 1.0 - self.atoms.sum()))


def censor_generate(model: CensoringModel, n: int, seed: int) -> list:
    """n observations from the mixture mechanism, deterministic in seed."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = rng_from("censor.generate", seed)
    uncensored = rng.random(n) < model.alpha_unc
    times = np.where(
        uncensored,
        rng.choice(model.f0.support, p=model.f0.weights, size=n),
        rng.choice(model.g0.support, p=model.g0.weights, size=n),
    )
    return [
        CensoredObservation(float(t), not bool(u)) for t, u in zip(times, uncensored)
    ]


def _split(data) -> tuple[np.ndarray, np.ndarray]:
    times = np.array([obs.time for obs in data], dtype=float)
    cens = np.array([obs.censored for obs in data], dtype=bool)
    return times, cens


def _per_obs_loglik(candidate: Pmf, times: np.ndarray, cens: np.ndarray) -> np.ndarray:
    """log-likelihood contribution of each observation under ``candidate``:
    log atom mass at events, log strict-tail mass at censor times."""
    out = np.empty(times.size)
    with np.errstate(divide="ignore"):
        ev = ~cens
        idx = np.searchsorted(candidate.support, times[ev])
        idx_c = np.clip(idx, 0, candidate.m - 1)
        hit = candidate.support[idx_c] == times[ev]
        out[ev] = np.log(np.where(hit, candidate.weights[idx_c], 0.0))
        tail_from = np.searchsorted(candidate.support, times[cens], side="right")
        suffix = np.concatenate([np.cumsum(candidate.weights[::-1])[::-1], [0.0]])
        out[cens] = np.log(suffix[tail_from])
    return out


def censored_loglik(candidate: Pmf, data) -> float:
    """l_n(F): lower is better; +inf when a needed mass is zero."""
    if not data:
        return 0.0
    times, cens = _split(data)
    return float(-_per_obs_loglik(candidate, times, cens).sum())


def kaplan_meier(data) -> SurvivalCurve:
    """Product-limit estimate; ties between events and censorings at one
    time treat the events first (censored items stay at risk)."""
    times, cens = _split(data)
    if not np.any(~cens):
        raise NoEvents("product-limit estimation needs at least one event")
    event_times = np.unique(times[~cens])
    surv = np.empty(event_times.size)
    atoms = np.empty(event_times.size)
    s_prev = 1.0
    for j, t in enumerate(event_times):
        at_risk = int(np.sum(times >= t))
        deaths = int(np.sum((times == t) & ~cens))
        s_new = s_prev * (1.0 - deaths / at_risk)
        atoms[j] = s_prev - s_new
        surv[j] = s_new
        s_prev = s_new
    return SurvivalCurve(event_times, surv, atoms)


def censored_el_bruteforce(data, support=None) -> Pmf:
    """Direct minimizer of l_n over distributions on the event-time support
    (plus one atom beyond the last censoring when needed): dense simplex
    grid then local refinement.  Intended for small n as an oracle."""
    times, cens = _split(data)
    if not np.any(~cens):
        raise NoEvents("need at least one event")
    if times.size > 8:
        raise ValueError("brute force is for n <= 8")
    if support is None:
        support = np.unique(times[~cens])
    support = np.asarray(support, dtype=float)
    if np.any(cens) and times[cens].max() >= support.max():
        support = np.append(support, times.max() + 1.0)
    k = support.size

    ev_idx = np.searchsorted(support, times[~cens])
    tail_from = np.searchsorted(support, times[cens], side="right")
    ev_counts = np.bincount(ev_idx, minlength=k).astype(float)
    tail_counts = np.bincount(tail_from, minlength=k + 1).astype(float)

    def objective(w: np.ndarray) -> float:
        suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        with np.errstate(divide="ignore"):
            ev_part = -float(ev_counts @ np.log(np.maximum(w, 1e-300)))
            tails = suffix[tail_from]
            if np.any(tails <= 0):
                return math.inf
            tl_part = -float(np.log(tails).sum())
        return ev_part + tl_part

    def gradient(w: np.ndarray) -> np.ndarray:
        suffix = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]])
        g = -ev_counts / np.maximum(w, 1e-300)
        inv_tail = np.zeros(k + 1)
        pos = suffix > 0
        inv_tail[pos] = tail_counts[pos] / suffix[pos]
        # atom j sits in every tail starting at index <= j
        g -= np.cumsum(inv_tail[: k])
        return g

    # dense grid over the simplex
    best_w = None
    best_val = math.inf
    steps = {1: 1, 2: 60, 3: 30, 4: 16, 5: 12, 6: 10}.get(k, 8)
    for comp in _compositions(steps, k):
        w = np.asarray(comp, dtype=float) / steps
        val = objective(w)
        if val < best_val:
            best_val = val
            best_w = w
    starts = [np.full(k, 1.0 / k)]
    if best_w is not None:
        starts.insert(0, 0.9 * best_w + 0.1 / k)
    rng = rng_from("censor.bruteforce", 0)
    for _ in range(3):
        starts.append(rng.dirichlet(np.ones(k)))
    best_w = None
    best_val = math.inf
    for w0 in starts:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(
                objective,
                w0,
                jac=gradient,
                method="SLSQP",
                bounds=[(1e-12, 1.0)] * k,
                constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0,
                              "jac": lambda w: np.ones_like(w)}],
                options={"maxiter": 300, "ftol": 1e-14},
            )
        if res.fun < best_val:
            best_val = float(res.fun)
            best_w = np.asarray(res.x)
    if best_w is None:
        raise NotConverged("no refinement start succeeded")
    best_w = np.maximum(best_w, 0.0)
    best_w /= best_w.sum()
    from .prob import make_pmf

    return make_pmf(support, best_w)


def _compositions(total: int, parts: int):
    """All nonnegative integer vectors of the given length summing to total."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def censored_l_divergence(candidate: Pmf, model: CensoringModel) -> float:
    """Population limit of l_n / n under the generating mechanism."""
    alpha = model.alpha_unc
    total = 0.0
    for x, fw in zip(model.f0.support, model.f0.weights):
        if alpha * fw == 0.0:  # zero effective weight contributes nothing
            continue
        mass = candidate.mass(float(x))
        if mass <= 0.0:
            return math.inf
        total -= alpha * fw * math.log(mass)
    for y, gw in zip(model.g0.support, model.g0.weights):
        if (1.0 - alpha) * gw == 0.0:
            continue
        tail = candidate.tail_beyond(float(y))
        if tail <= 0.0:
            return math.inf
        total -= (1.0 - alpha) * gw * math.log(tail)
    return total


def censored_posterior(prior: PriorGrid, data, carried=None) -> tuple:
    """Log posterior over lifetime candidates given censored data.

    ``carried`` holds per-candidate log-likelihood totals from earlier
    observations; accumulation is a running sum in observation order, so
    chaining two calls equals one call on the concatenated data exactly.
    Returns (log_posterior, cum_loglik).
    """
    times, cens = _split(data)
    start = np.zeros(prior.k) if carried is None else np.asarray(carried, float)
    table = np.stack([_per_obs_loglik(c, times, cens) for c in prior.candidates])
    cum = np.cumsum(np.concatenate([start[:, None], table], axis=1), axis=1)[:, -1]
    tot = prior.log_prior + cum
    norm = logsumexp(tot)
    if not math.isfinite(norm):
        raise AllZeroLikelihood("every candidate assigns zero likelihood")
    return tot - norm, cum


def censored_decay_experiment(
    prior: PriorGrid, q_set, model: CensoringModel, n_schedule, seeds
) -> tuple:
    """Empirical -(1/n) log posterior-mass(Q) on censored paths versus the
    censored-divergence gap; returns one DecayReport per seed."""
    q_idx = sorted(set(int(i) for i in q_set))
    if not q_idx or len(q_idx) > prior.k:
        raise ValueError("q_set must be a nonempty subset of the grid")
    vals = np.array(
        [censored_l_divergence(c, model) for c in prior.candidates]
    )
    vmin = float(vals.min())
    if math.isinf(vmin):
        raise InfiniteRate("censored divergence infinite for every candidate")
    min_q = float(vals[q_idx].min())
    if math.isinf(min_q):
        raise InfiniteRate("censored divergence of Q is infinite")
    theoretical = min_q - vmin
    projections = tuple(int(i) for i in np.flatnonzero(vals <= vmin + 1e-9))
    schedule = sorted(int(n) for n in n_schedule)
    n_max = schedule[-1]
    reports = []
    for seed in (int(s) for s in seeds):
        data = censor_generate(model, n_max, derive_seed("censor.decay", seed))
        times, cens = _split(data)
        table = np.stack(
            [_per_obs_loglik(c, times, cens) for c in prior.candidates]
        )
        cums = np.cumsum(
            np.concatenate([np.zeros((prior.k, 1)), table], axis=1), axis=1
        )
        rates = []
        for n in schedule:
            tot = prior.log_prior + cums[:, n]
            norm = logsumexp(tot)
            if not math.isfinite(norm):
                raise AllZeroLikelihood(f"posterior vanished at n={n}")
            rates.append(float(-(logsumexp(tot[q_idx]) - norm) / n))
        reports.append(
            DecayReport(
                checkpoints=tuple(schedule),
                empirical_rate=tuple(rates),
                theoretical_rate=theoretical,
                projections=projections,
                seed=seed,
            )
        )
    return tuple(reports)
