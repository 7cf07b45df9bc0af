"""Exact finite-grid Bayesian posterior machinery.

The prior lives on a finite set of candidate distributions sharing one
support, so the posterior after any sample is computable in closed form
with log-sum-exp, with no Monte Carlo error in the posterior itself.  The
experiments then check two asymptotic statements on simulated data paths:
the posterior mass of a candidate subset decays exponentially at the rate
given by the gap of minimal L(. || r) values, and the posterior
concentrates on total-variation neighborhoods of the candidates minimizing
L(. || r) even when r is not on the grid.

All log-likelihood accumulation is a running sum per candidate in
observation order (np.cumsum carried across updates), so updating with one
sample and then another gives bit-identical results to updating with their
concatenation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .divergences import l_divergence
from .errors import AllZeroLikelihood, AsymmetricConfig, InfiniteRate
from .prob import Pmf, Sample, log_mass_table, make_pmf, mean_model, tv_distance
from .projection import l_project_linear
from .rng import rng_from

TIE_TOL = 1e-12
PROJECTION_TIE = 1e-9


@dataclass(frozen=True)
class PriorGrid:
    """Finite candidate set with strictly positive prior weights."""

    candidates: tuple
    log_prior: np.ndarray

    def __post_init__(self):
        cands = tuple(self.candidates)
        if not cands:
            raise ValueError("empty candidate grid")
        sup = cands[0].support
        for cand in cands[1:]:
            if not np.array_equal(cand.support, sup):
                raise ValueError("candidates must share one support")
        lp = np.asarray(self.log_prior, dtype=float)
        if lp.shape != (len(cands),):
            raise ValueError("one log prior weight per candidate")
        if not np.all(np.isfinite(lp)):
            raise ValueError("prior must be strictly positive on the grid")
        lp = lp - logsumexp(lp)
        lp.setflags(write=False)
        object.__setattr__(self, "candidates", cands)
        object.__setattr__(self, "log_prior", lp)

    @property
    def k(self) -> int:
        return len(self.candidates)

    @property
    def support(self) -> np.ndarray:
        return self.candidates[0].support

    def weight_matrix(self) -> np.ndarray:
        return np.stack([c.weights for c in self.candidates])


def make_prior_grid(candidates, weights=None) -> PriorGrid:
    cands = tuple(candidates)
    if weights is None:
        lp = np.zeros(len(cands))
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("prior weights must be strictly positive")
        lp = np.log(w)
    return PriorGrid(cands, lp)


@dataclass(frozen=True)
class PosteriorState:
    """Posterior over the grid after absorbing n observations."""

    log_posterior: np.ndarray
    cum_loglik: np.ndarray
    n: int


@dataclass(frozen=True)
class DecayReport:
    """Empirical versus theoretical posterior decay along one data path."""

    checkpoints: tuple
    empirical_rate: tuple
    theoretical_rate: float
    projections: tuple
    seed: int


def _cum_blocks(prior: PriorGrid, carried: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Running per-candidate log-likelihood sums over the new observations,
    starting from the carried totals; shape (k, len(values) + 1)."""
    table = log_mass_table(prior.candidates, values)
    seq = np.concatenate([carried[:, None], table], axis=1)
    with np.errstate(invalid="ignore"):
        return np.cumsum(seq, axis=1)


def posterior_update(
    prior: PriorGrid, sample: Sample, state: PosteriorState | None = None
) -> PosteriorState:
    """Absorb a sample into the (possibly already updated) posterior."""
    carried = state.cum_loglik if state is not None else np.zeros(prior.k)
    n0 = state.n if state is not None else 0
    cum = _cum_blocks(prior, carried, sample.values())[:, -1]
    log_post = prior.log_prior + cum
    norm = logsumexp(log_post)
    if not math.isfinite(norm):
        raise AllZeroLikelihood("every candidate assigns zero probability to the data")
    return PosteriorState(
        log_posterior=log_post - norm, cum_loglik=cum, n=n0 + sample.n
    )


def map_candidate(state: PosteriorState) -> list:
    """Indices of all posterior modes (within 1e-12 of the maximum)."""
    top = float(np.max(state.log_posterior))
    return [int(i) for i in np.flatnonzero(state.log_posterior >= top - TIE_TOL)]


def posterior_mean(state: PosteriorState, prior: PriorGrid) -> Pmf:
    """Posterior-weighted mixture of the candidates."""
    wts = np.exp(state.log_posterior)
    mix = wts @ prior.weight_matrix()
    return make_pmf(prior.support, mix)


def grid_l_projections(prior: PriorGrid, r: Pmf) -> tuple[np.ndarray, list]:
    """L(. || r) per candidate and the indices attaining the grid minimum."""
    vals = np.array([l_divergence(c, r) for c in prior.candidates])
    vmin = float(vals.min())
    if math.isinf(vmin):
        raise InfiniteRate("no candidate dominates the support of r")
    idx = [int(i) for i in np.flatnonzero(vals <= vmin + PROJECTION_TIE)]
    return vals, idx


def _rate_path(
    prior: PriorGrid,
    member_mask: np.ndarray,
    r: Pmf,
    n_schedule,
    seed: int,
    label: str,
) -> tuple[np.ndarray, np.ndarray]:
    """One i.i.d. path from r; per checkpoint, the posterior log-mass of the
    masked candidate subset and the full normalizer."""
    schedule = sorted(int(n) for n in n_schedule)
    n_max = schedule[-1]
    rng = rng_from(label, seed)
    draws = rng.choice(r.support, p=r.weights, size=n_max)
    cums = _cum_blocks(prior, np.zeros(prior.k), draws)
    log_sub = np.empty(len(schedule))
    log_all = np.empty(len(schedule))
    for j, n in enumerate(schedule):
        log_post = prior.log_prior + cums[:, n]
        log_all[j] = logsumexp(log_post)
        log_sub[j] = logsumexp(log_post[member_mask]) if member_mask.any() else -math.inf
        if not math.isfinite(log_all[j]):
            raise AllZeroLikelihood(f"normalizer vanished at n={n}")
    return log_sub, log_all


def decay_curve(
    prior: PriorGrid, q_set, r: Pmf, n_schedule, seed: int
) -> DecayReport:
    """Empirical decay -(1/n) log posterior-mass(Q) along one simulated
    path, against the theoretical value min_Q L - min_grid L."""
    q_idx = sorted(set(int(i) for i in q_set))
    if not q_idx or len(q_idx) > prior.k:
        raise ValueError("q_set must be a nonempty subset of the grid")
    vals, projections = grid_l_projections(prior, r)
    min_q = float(vals[q_idx].min())
    if math.isinf(min_q):
        raise InfiniteRate("L(Q || r) is infinite: Q-support deficiency")
    theoretical = min_q - float(vals.min())
    mask = np.zeros(prior.k, dtype=bool)
    mask[q_idx] = True
    schedule = sorted(int(n) for n in n_schedule)
    log_sub, log_all = _rate_path(prior, mask, r, schedule, seed, "bayes.decay")
    rates = tuple(
        float(-(ls - la) / n) for ls, la, n in zip(log_sub, log_all, schedule)
    )
    return DecayReport(
        checkpoints=tuple(schedule),
        empirical_rate=rates,
        theoretical_rate=theoretical,
        projections=tuple(projections),
        seed=int(seed),
    )


@dataclass(frozen=True)
class BllnReport:
    """Posterior mass of the union of TV balls around the grid projections."""

    checkpoints: tuple
    seeds: tuple
    epsilon: float
    projections: tuple
    ball_indices: tuple
    masses: np.ndarray  # (len(seeds), len(checkpoints))
    medians: tuple

    @property
    def median_monotone(self) -> bool:
        med = np.asarray(self.medians)
        return bool(np.all(np.diff(med) >= -1e-9))


def blln_check(
    prior: PriorGrid, r: Pmf, epsilon: float, n_schedule, seeds
) -> BllnReport:
    """Posterior mass of the union of TV epsilon-balls centered at the grid
    minimizers of L(. || r), per checkpoint and seed."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    _, projections = grid_l_projections(prior, r)
    mask = np.zeros(prior.k, dtype=bool)
    for k, cand in enumerate(prior.candidates):
        mask[k] = any(
            tv_distance(cand, prior.candidates[p]) <= epsilon for p in projections
        )
    schedule = sorted(int(n) for n in n_schedule)
    seeds = tuple(int(s) for s in seeds)
    masses = np.empty((len(seeds), len(schedule)))
    for i, seed in enumerate(seeds):
        log_sub, log_all = _rate_path(prior, mask, r, schedule, seed, "bayes.blln")
        masses[i] = np.exp(log_sub - log_all)
    medians = tuple(float(v) for v in np.median(masses, axis=0))
    return BllnReport(
        checkpoints=tuple(schedule),
        seeds=seeds,
        epsilon=float(epsilon),
        projections=tuple(projections),
        ball_indices=tuple(int(i) for i in np.flatnonzero(mask)),
        masses=masses,
        medians=medians,
    )


# -- two-sided parameter-split experiment ---------------------------------------


@dataclass(frozen=True)
class Example21Report:
    """Per-seed posterior diagnostics for the split mean-parameter family.

    The candidate grid splits into a low-mean and a high-mean component
    whose minimal L values agree by construction; the posterior then puts
    all its mass on the two TV balls around the component minimizers, while
    the posterior-mean distribution keeps a mean near E[X], which no
    candidate has.
    """

    theta1: float
    theta2: float
    epsilon: float
    proj_low: int
    proj_high: int
    projection_tv: float
    n: int
    seeds: tuple
    mass_low: np.ndarray
    mass_high: np.ndarray
    tv_mean_low: np.ndarray
    tv_mean_high: np.ndarray
    map_in_union: np.ndarray
    mean_of_means: Pmf

    @property
    def mass_sum(self) -> np.ndarray:
        return self.mass_low + self.mass_high


def split_mean_prior(
    r: Pmf,
    theta1: float,
    theta2: float,
    per_side: int = 8,
    spread: float = 0.4,
) -> PriorGrid:
    """Candidate grid for the split mean family: L-projections of r onto
    mean-theta families for theta in [theta1 - spread, theta1] and in
    [theta2, theta2 + spread].

    Whether the two component minima actually tie is the caller's concern:
    with r symmetric about (theta1 + theta2) / 2 they agree to rounding,
    and :func:`example21` rejects configurations where they differ by more
    than 1e-6.
    """
    model = mean_model()
    cands = []
    for th in np.linspace(theta1 - spread, theta1, per_side):
        cands.append(l_project_linear(r, model, [th]).qhat)
    for th in np.linspace(theta2, theta2 + spread, per_side):
        cands.append(l_project_linear(r, model, [th]).qhat)
    return make_prior_grid(cands)


def example21(
    theta1: float,
    theta2: float,
    r: Pmf,
    prior: PriorGrid,
    n: int,
    seeds,
    epsilon: float = 0.05,
) -> Example21Report:
    """Run the split-family experiment: posterior mass of the two balls,
    distance of the posterior mean from either component projection, and
    MAP membership.  Raises AsymmetricConfig when the two component minima
    differ by more than 1e-6."""
    means = np.array([c.mean() for c in prior.candidates])
    low = means <= theta1 + 1e-9
    high = means >= theta2 - 1e-9
    if np.any(~(low | high)):
        raise ValueError("candidate with mean inside the excluded band")
    vals = np.array([l_divergence(c, r) for c in prior.candidates])
    v_low = float(vals[low].min())
    v_high = float(vals[high].min())
    if abs(v_low - v_high) > 1e-6:
        raise AsymmetricConfig(
            f"component minima differ: {v_low!r} vs {v_high!r}"
        )
    proj_low = int(np.flatnonzero(low)[np.argmin(vals[low])])
    proj_high = int(np.flatnonzero(high)[np.argmin(vals[high])])
    d12 = tv_distance(prior.candidates[proj_low], prior.candidates[proj_high])
    ball_low = np.array(
        [tv_distance(c, prior.candidates[proj_low]) <= epsilon for c in prior.candidates]
    )
    ball_high = np.array(
        [tv_distance(c, prior.candidates[proj_high]) <= epsilon for c in prior.candidates]
    )

    seeds = tuple(int(s) for s in seeds)
    mass_low = np.empty(len(seeds))
    mass_high = np.empty(len(seeds))
    tv_lo = np.empty(len(seeds))
    tv_hi = np.empty(len(seeds))
    map_in = np.zeros(len(seeds), dtype=bool)
    mean_stack = np.zeros(r.m)
    for i, seed in enumerate(seeds):
        rng = rng_from("bayes.example21", seed)
        draws = rng.choice(r.support, p=r.weights, size=int(n))
        state = posterior_update(prior, Sample(tuple(draws)))
        post = np.exp(state.log_posterior)
        mass_low[i] = float(post[ball_low].sum())
        mass_high[i] = float(post[ball_high].sum())
        pm = posterior_mean(state, prior)
        tv_lo[i] = tv_distance(pm, prior.candidates[proj_low])
        tv_hi[i] = tv_distance(pm, prior.candidates[proj_high])
        map_idx = map_candidate(state)
        map_in[i] = all(bool(ball_low[j] or ball_high[j]) for j in map_idx)
        mean_stack += pm.weights
    return Example21Report(
        theta1=float(theta1),
        theta2=float(theta2),
        epsilon=float(epsilon),
        proj_low=proj_low,
        proj_high=proj_high,
        projection_tv=float(d12),
        n=int(n),
        seeds=seeds,
        mass_low=mass_low,
        mass_high=mass_high,
        tv_mean_low=tv_lo,
        tv_mean_high=tv_hi,
        map_in_union=map_in,
        mean_of_means=make_pmf(r.support, mean_stack / len(seeds)),
    )
