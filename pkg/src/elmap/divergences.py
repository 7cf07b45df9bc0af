"""Discrepancy functionals between finite-support distributions.

The central quantity is the log-score divergence

    L(q || p) = -sum_i p_i log q(x_i),

which is finite exactly when q covers the support of p, reduces to
Kerridge's inaccuracy when p is an empirical pmf, and governs the decay
rate of posterior mass in the experiments downstream.  Infinite values are
meaningful results here, not errors.

Also provided: Kullback-Leibler, squared Euclidean, the Cressie-Read power
family, and the reinforced-urn variant of L used by the Polya experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, GammaSingular, SupportMismatch
from .prob import Pmf

_SINGULAR_TOL = 1e-12


def entropy(p: Pmf) -> float:
    """Shannon entropy -sum p log p (natural log); equals L(p || p)."""
    w = p.weights[p.weights > 0]
    return float(-(w @ np.log(w)))


def l_divergence(q: Pmf, p: Pmf) -> float:
    """-sum_i p_i log q(x_i); +inf unless q dominates the support of p."""
    total = 0.0
    for x, pw in zip(p.support, p.weights):
        if pw == 0.0:
            continue
        qw = q.mass(float(x))
        if qw <= 0.0:
            return math.inf
        total -= pw * math.log(qw)
    return total


def kl_divergence(q: Pmf, p: Pmf) -> float:
    """sum_i q_i log(q_i / p_i) with 0 log 0 = 0; +inf if q puts mass
    where p has none."""
    total = 0.0
    for x, qw in zip(q.support, q.weights):
        if qw == 0.0:
            continue
        pw = p.mass(float(x))
        if pw <= 0.0:
            return math.inf
        total += qw * math.log(qw / pw)
    return total


def _require_common_support(q: Pmf, mu: Pmf) -> None:
    if not np.array_equal(q.support, mu.support):
        raise SupportMismatch("distributions must share one support")


def euclidean_discrepancy(q: Pmf, mu: Pmf) -> float:
    """sum_i (q_i - mu_i)^2 on a common support."""
    _require_common_support(q, mu)
    d = q.weights - mu.weights
    return float(d @ d)


def cressie_read(q: Pmf, mu: Pmf, gamma: float) -> float:
    """Power divergence CR_gamma(q, mu) = sum_i q_i [(q_i/mu_i)^gamma - 1]
    / (gamma (gamma+1)).

    The normalization is fixed so that gamma -> 0 recovers KL(q||mu),
    gamma -> -1 recovers KL(mu||q) and gamma = 1 is half of Pearson's
    chi-square.  gamma in {0, -1} raises GammaSingular; use the KL limits
    directly there.
    """
    if abs(gamma) < _SINGULAR_TOL or abs(gamma + 1.0) < _SINGULAR_TOL:
        raise GammaSingular(f"gamma={gamma} needs the KL limit form")
    _require_common_support(q, mu)
    qw, mw = q.weights, mu.weights
    total = 0.0
    for qi, mi in zip(qw, mw):
        if qi == 0.0:
            # q_i^(1+gamma)/mu_i^gamma limit: zero for gamma > -1
            if gamma < -1.0 and mi > 0.0:
                return math.inf
            continue
        if mi == 0.0:
            if gamma > 0.0:
                return math.inf
            total += -qi  # (q/mu)^gamma -> 0 for gamma < 0
            continue
        total += qi * ((qi / mi) ** gamma - 1.0)
    return total / (gamma * (gamma + 1.0))


def polya_l_divergence(q: Pmf, p: Pmf, beta: float, c: int) -> float:
    """Reinforced-sampling variant of L with mixing ratio beta and
    reinforcement c:

        -sum_i p_i log(q_i + beta c p_i)
        + (1/(beta c)) sum_i q_i log(q_i / (q_i + beta c p_i)),

    taken over the union support.  c = 0 returns the continuity limit
    -sum_i p_i log q_i - 1 exactly.
    """
    if not 0.0 < beta < 1.0:
        raise DomainViolation(f"beta={beta} outside (0, 1)")
    if c == 0:
        val = l_divergence(q, p)
        return val - 1.0
    t = beta * float(c)
    sup = np.union1d(q.support, p.support)
    total = 0.0
    for x in sup:
        qi = q.mass(float(x))
        pi = p.mass(float(x))
        mix = qi + t * pi
        if (pi > 0.0 or qi > 0.0) and mix <= 0.0:
            raise DomainViolation(
                f"q + beta*c*p = {mix!r} at x={x} is not positive"
            )
        if pi > 0.0:
            total -= pi * math.log(mix)
        if qi > 0.0:
            total += qi * math.log(qi / mix) / t
    return total


@dataclass(frozen=True)
class DivergenceSpec:
    """Selector for the discrepancy minimized by the projection oracle.

    kind is one of "L", "KL", "Euclidean", "CR" (with gamma) or "PolyaL"
    (with beta and c).  ``value``/``grad``/``hess_diag`` operate on weight
    arrays aligned on a common support, with the second argument the base
    distribution.
    """

    kind: str
    gamma: float | None = None
    beta: float | None = None
    c: int | None = None

    def __post_init__(self):
        if self.kind not in {"L", "KL", "Euclidean", "CR", "PolyaL"}:
            raise ValueError(f"unknown divergence kind {self.kind!r}")
        if self.kind == "CR":
            if self.gamma is None:
                raise ValueError("CR needs gamma")
            if abs(self.gamma) < _SINGULAR_TOL or abs(self.gamma + 1) < _SINGULAR_TOL:
                raise GammaSingular(f"gamma={self.gamma}")
        if self.kind == "PolyaL":
            if self.beta is None or self.c is None:
                raise ValueError("PolyaL needs beta and c")
            if not 0.0 < self.beta < 1.0:
                raise DomainViolation(f"beta={self.beta} outside (0, 1)")

    # The array forms assume strictly positive q on atoms where the math
    # needs it; the mirror-descent oracle keeps its iterates interior.

    def value(self, q: np.ndarray, base: np.ndarray) -> float:
        if self.kind == "L":
            mask = base > 0
            return float(-(base[mask] @ np.log(q[mask])))
        if self.kind == "KL":
            mask = q > 0
            return float(q[mask] @ np.log(q[mask] / base[mask]))
        if self.kind == "Euclidean":
            d = q - base
            return float(d @ d)
        if self.kind == "CR":
            g = self.gamma
            return float((q @ ((q / base) ** g - 1.0)) / (g * (g + 1.0)))
        t = self.beta * float(self.c)
        if self.c == 0:
            mask = base > 0
            return float(-(base[mask] @ np.log(q[mask])) - 1.0)
        mix = q + t * base
        if np.any(mix <= 0):
            raise DomainViolation("q + beta*c*base must stay positive")
        out = -(base @ np.log(mix))
        mask = q > 0
        out += (q[mask] @ np.log(q[mask] / mix[mask])) / t
        return float(out)

    def grad(self, q: np.ndarray, base: np.ndarray) -> np.ndarray:
        if self.kind == "L":
            return -base / q
        if self.kind == "KL":
            return np.log(q / base) + 1.0
        if self.kind == "Euclidean":
            return 2.0 * (q - base)
        if self.kind == "CR":
            g = self.gamma
            return ((g + 1.0) * (q / base) ** g - 1.0) / (g * (g + 1.0))
        t = self.beta * float(self.c)
        if self.c == 0:
            return -base / q
        mix = q + t * base
        return -base / mix + (np.log(q / mix) + 1.0 - q / mix) / t

    def hess_diag(self, q: np.ndarray, base: np.ndarray) -> np.ndarray:
        if self.kind == "L":
            return base / q**2
        if self.kind == "KL":
            return 1.0 / q
        if self.kind == "Euclidean":
            return np.full_like(q, 2.0)
        if self.kind == "CR":
            g = self.gamma
            return (q / base) ** (g - 1.0) / base
        t = self.beta * float(self.c)
        if self.c == 0:
            return base / q**2
        mix = q + t * base
        return base / mix**2 + (1.0 / q - 1.0 / mix - t * base / mix**2) / t

    @classmethod
    def l(cls) -> "DivergenceSpec":
        return cls("L")

    @classmethod
    def kl(cls) -> "DivergenceSpec":
        return cls("KL")

    @classmethod
    def euclidean(cls) -> "DivergenceSpec":
        return cls("Euclidean")

    @classmethod
    def cr(cls, gamma: float) -> "DivergenceSpec":
        return cls("CR", gamma=gamma)

    @classmethod
    def polya_l(cls, beta: float, c: int) -> "DivergenceSpec":
        return cls("PolyaL", beta=beta, c=c)
