"""Finite-support probability objects, samples and estimating models.

Everything downstream runs on distributions with a fixed finite support,
where the weak topology coincides with the simplex topology and total
variation is an exact, cheap ball metric.  All objects are immutable after
construction, so they can be shared freely across concurrent tasks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import (
    EmptySample,
    LengthMismatch,
    NegativeWeight,
    NotNormalized,
    ThetaOutOfDomain,
)

# Tolerances for weight handling: tiny negatives from round-off are clamped,
# sums within ACCEPT_TOL of 1 are renormalized, and a constructed Pmf must
# sum to 1 within NORM_TOL.
CLAMP_TOL = 1e-15
ACCEPT_TOL = 1e-9
NORM_TOL = 1e-12


def _exact_renormalize(w: np.ndarray) -> np.ndarray:
    """Divide by the sum, then push the residual into a weight where the
    addition registers, until ``w.sum() == 1.0`` exactly in floating point.

    Adding a sub-ulp residual to the largest weight can be a no-op, so the
    correction walks candidate weights from the smallest up."""
    w = w / w.sum()
    for _ in range(16):
        resid = 1.0 - w.sum()
        if resid == 0.0:
            break
        applied = False
        for k in np.argsort(w):
            if w[k] <= 0.0 or w[k] + resid <= 0.0:
                continue
            cand = w[k] + resid
            if cand != w[k]:
                w[k] = cand
                applied = True
                break
        if not applied:
            break
    return w


@dataclass(frozen=True, eq=False)
class Pmf:
    """Probability mass function on a strictly increasing finite support."""

    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if sup.ndim != 1 or w.ndim != 1 or sup.shape != w.shape:
            raise LengthMismatch(
                f"support has shape {sup.shape}, weights {w.shape}"
            )
        if sup.size == 0:
            raise LengthMismatch("empty support")
        if not np.all(np.diff(sup) > 0):
            raise ValueError("support points must be unique and increasing")
        if np.any(w < 0.0):
            raise NegativeWeight(f"negative weight {w.min()!r}")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise NotNormalized(f"weights sum to {w.sum()!r}")
        sup.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return int(self.support.size)

    def mass(self, x: float) -> float:
        """Weight of the atom at x, 0.0 if x is not a support point."""
        i = int(np.searchsorted(self.support, x))
        if i < self.m and self.support[i] == x:
            return float(self.weights[i])
        return 0.0

    def mean(self) -> float:
        return float(self.support @ self.weights)

    def tail_beyond(self, y: float) -> float:
        """Mass strictly to the right of y."""
        i = int(np.searchsorted(self.support, y, side="right"))
        return float(self.weights[i:].sum())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Pmf)
            and np.array_equal(self.support, other.support)
            and np.array_equal(self.weights, other.weights)
        )

    def to_json(self) -> str:
        """Round-trip-exact plain-text record of the Pmf."""
        return json.dumps(
            {"support": self.support.tolist(), "weights": self.weights.tolist()}
        )

    @classmethod
    def from_json(cls, text: str) -> "Pmf":
        rec = json.loads(text)
        return cls(np.asarray(rec["support"]), np.asarray(rec["weights"]))


def make_pmf(support: Sequence[float], weights: Sequence[float]) -> Pmf:
    """Validating constructor: clamps round-off negatives and renormalizes
    weight sums within 1e-9 of 1."""
    sup = np.asarray(support, dtype=float)
    w = np.asarray(weights, dtype=float).copy()
    if sup.ndim != 1 or w.ndim != 1 or sup.shape != w.shape:
        raise LengthMismatch(f"{sup.shape} vs {w.shape}")
    if sup.size == 0:
        raise LengthMismatch("empty support")
    if np.any(w < -CLAMP_TOL):
        raise NegativeWeight(f"weight {w.min()!r} below clamp tolerance")
    w[w < 0.0] = 0.0
    total = w.sum()
    if abs(total - 1.0) > ACCEPT_TOL:
        raise NotNormalized(f"weights sum to {total!r}")
    order = np.argsort(sup, kind="stable")
    sup = sup[order]
    w = w[order]
    if np.any(np.diff(sup) == 0):
        raise ValueError("support points must be unique")
    return Pmf(sup, _exact_renormalize(w))


@dataclass(frozen=True)
class Sample:
    """An observed data sequence; observations are scalars or fixed-length
    tuples (the bivariate regression preset uses (x, y) pairs)."""

    observations: tuple

    def __post_init__(self):
        object.__setattr__(
            self,
            "observations",
            tuple(
                tuple(float(v) for v in o) if isinstance(o, (tuple, list, np.ndarray)) else float(o)
                for o in self.observations
            ),
        )

    @property
    def n(self) -> int:
        return len(self.observations)

    @property
    def is_scalar(self) -> bool:
        return self.n == 0 or not isinstance(self.observations[0], tuple)

    def values(self) -> np.ndarray:
        """Observations as an array: shape (n,) for scalars, (n, d) for pairs."""
        return np.asarray(self.observations, dtype=float)


def empirical_pmf(sample: Sample) -> Pmf:
    """Uniform distribution over the observations, collapsed to atoms with
    relative-frequency weights."""
    if sample.n == 0:
        raise EmptySample("cannot form an empirical pmf from no observations")
    if not sample.is_scalar:
        raise ValueError("empirical_pmf is defined for scalar observations")
    vals, counts = np.unique(sample.values(), return_counts=True)
    return Pmf(vals, _exact_renormalize(counts.astype(float)))


def tv_distance(p: Pmf, q: Pmf) -> float:
    """Total variation distance over the union of the two supports."""
    sup = np.union1d(p.support, q.support)

    def lookup(d: Pmf) -> np.ndarray:
        idx = np.searchsorted(d.support, sup)
        idx_c = np.clip(idx, 0, d.m - 1)
        hit = d.support[idx_c] == sup
        return np.where(hit, d.weights[idx_c], 0.0)

    return float(0.5 * np.abs(lookup(p) - lookup(q)).sum())


def support_dominates(p: Pmf, q: Pmf) -> bool:
    """True iff every atom of p with positive weight has positive weight
    under q."""
    for x, w in zip(p.support, p.weights):
        if w > 0.0 and q.mass(float(x)) <= 0.0:
            return False
    return True


# -- parameter domains -------------------------------------------------------


@dataclass(frozen=True)
class ParamDomain:
    """Finite union of (possibly unbounded) axis-aligned boxes in R^K."""

    boxes: tuple  # tuple of boxes; each box is a tuple of (lo, hi) pairs

    def __post_init__(self):
        boxes = tuple(
            tuple((float(lo), float(hi)) for lo, hi in box) for box in self.boxes
        )
        if not boxes:
            raise ValueError("domain needs at least one box")
        k = len(boxes[0])
        if any(len(b) != k for b in boxes):
            raise ValueError("all boxes must share one dimension")
        for box in boxes:
            for lo, hi in box:
                if not lo <= hi:
                    raise ValueError(f"empty interval ({lo}, {hi})")
        object.__setattr__(self, "boxes", boxes)

    @property
    def k(self) -> int:
        return len(self.boxes[0])

    def contains(self, theta) -> bool:
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.size != self.k:
            return False
        return any(
            all(lo <= t <= hi for t, (lo, hi) in zip(th, box)) for box in self.boxes
        )

    @classmethod
    def box(cls, *intervals) -> "ParamDomain":
        return cls((tuple(intervals),))

    @classmethod
    def real_line(cls, k: int = 1) -> "ParamDomain":
        return cls((tuple((-math.inf, math.inf) for _ in range(k)),))

    @classmethod
    def union(cls, *domains: "ParamDomain") -> "ParamDomain":
        return cls(tuple(box for d in domains for box in d.boxes))


@dataclass(frozen=True)
class EstimatingModel:
    """J estimating functions u(x; theta) with parameter domain Theta.

    ``u`` maps one observation and a parameter vector to a length-J array.
    The zero-moment conditions sum(q_i * u(x_i; theta)) = 0 define a linear
    family of distributions for each theta.
    """

    u: Callable[[object, np.ndarray], np.ndarray]
    domain: ParamDomain
    n_constraints: int
    n_params: int
    name: str = ""

    def u_matrix(self, points: Iterable, theta) -> np.ndarray:
        """Stack u(x; theta) over the given points into an (m, J) array."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        rows = [np.asarray(self.u(x, th), dtype=float).reshape(-1) for x in points]
        out = np.asarray(rows, dtype=float)
        if out.ndim == 1:  # J == 0
            out = out.reshape(len(rows), 0)
        if out.shape[1] != self.n_constraints:
            raise ValueError(
                f"u returned {out.shape[1]} components, expected {self.n_constraints}"
            )
        if not np.all(np.isfinite(out)):
            raise ValueError("u produced non-finite values")
        return out


@dataclass(frozen=True)
class LinearFamilySpec:
    """A linear family: a model, a parameter point and a base support."""

    model: EstimatingModel
    theta: np.ndarray
    base_support: np.ndarray

    def __post_init__(self):
        th = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if not self.model.domain.contains(th):
            raise ThetaOutOfDomain(f"theta {th} outside the parameter domain")
        object.__setattr__(self, "theta", th)
        object.__setattr__(
            self, "base_support", np.asarray(self.base_support, dtype=float)
        )

    def u_matrix(self) -> np.ndarray:
        return self.model.u_matrix(self.base_support, self.theta)


def moments(q: Pmf, model: EstimatingModel, theta) -> np.ndarray:
    """Componentwise sum(q_i * u(x_i; theta))."""
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if not model.domain.contains(th):
        raise ThetaOutOfDomain(f"theta {th} outside the parameter domain")
    umat = model.u_matrix(q.support, th)
    return q.weights @ umat


# -- model presets ------------------------------------------------------------


def mean_model(domain: ParamDomain | None = None) -> EstimatingModel:
    """Scalar location model, u(x; theta) = x - theta."""
    return EstimatingModel(
        u=lambda x, th: np.array([x - th[0]]),
        domain=domain if domain is not None else ParamDomain.real_line(1),
        n_constraints=1,
        n_params=1,
        name="mean",
    )


def linear_model(domain: ParamDomain | None = None) -> EstimatingModel:
    """Bivariate regression model on observations (x, y) with theta=(a, b):
    u1 = y - (a + b x), u2 = x (y - (a + b x))."""

    def u(xy, th):
        x, y = xy
        resid = y - (th[0] + th[1] * x)
        return np.array([resid, x * resid])

    return EstimatingModel(
        u=u,
        domain=domain if domain is not None else ParamDomain.real_line(2),
        n_constraints=2,
        n_params=2,
        name="linear",
    )


def log_mass_table(candidates: Sequence[Pmf], values: np.ndarray) -> np.ndarray:
    """Log candidate masses at the given support values, shape (K, len(values)).

    Values that are not atoms of a candidate get -inf.  This is the shared
    building block for exact posterior updates and likelihood rankings, so
    that both run the same summations in the same order.
    """
    vals = np.asarray(values, dtype=float)
    out = np.empty((len(candidates), vals.size))
    with np.errstate(divide="ignore"):
        for k, cand in enumerate(candidates):
            idx = np.searchsorted(cand.support, vals)
            idx_c = np.clip(idx, 0, cand.m - 1)
            hit = cand.support[idx_c] == vals
            out[k] = np.log(np.where(hit, cand.weights[idx_c], 0.0))
    return out
