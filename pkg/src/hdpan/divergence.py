"""Closed-form Hölder and KL divergences over discrete and Bernoulli distributions.

The Hölder pseudo-divergence of a conjugate exponent pair (alpha, beta),
1/alpha + 1/beta = 1, is the negative log ratio of the two sides of the
Hölder inequality:

    D_alpha(p : q) = -log( <p, q> / (||p||_alpha ||q||_beta) )

It is non-negative, generally asymmetric, and zero exactly when p_i^alpha
is proportional to q_i^beta.  At alpha = beta = 2 it is the Cauchy-Schwarz
divergence, which vanishes iff p = q.

Bernoulli distributions are handled as the two-point vectors [p, 1-p], for
which every form below has a closed expression with analytic gradients.
Bernoulli inputs are clamped to [EPS, 1-EPS] before evaluation so that the
degenerate 0/1 targets used in training stay inside the log domain.  All
arithmetic is done in float64 regardless of what the caller passes in; the
Bernoulli functions broadcast over numpy arrays and return plain floats for
scalar inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-7

_CONJUGACY_TOL = 1e-12


class InfiniteDivergenceError(ArithmeticError):
    """The divergence is +infinity (zero inner product between the inputs).

    Raised instead of returning float('inf') so that training aborts loudly
    rather than silently propagating infinities.
    """


@dataclass(frozen=True)
class HolderExponents:
    """A conjugate exponent pair with 1/alpha + 1/beta = 1, both > 1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 1.0 and self.beta > 1.0):
            raise ValueError(
                f"exponents must both exceed 1, got ({self.alpha}, {self.beta})"
            )
        if abs(1.0 / self.alpha + 1.0 / self.beta - 1.0) > _CONJUGACY_TOL:
            raise ValueError(
                f"1/{self.alpha} + 1/{self.beta} != 1 within {_CONJUGACY_TOL}"
            )

    @classmethod
    def from_alpha(cls, alpha: float) -> "HolderExponents":
        return cls(alpha, conjugate(alpha))


def conjugate(alpha: float) -> float:
    """Conjugate exponent beta = alpha/(alpha-1).

    Only alpha > 1 is accepted; alpha < 1 would give a negative beta, a
    regime none of the supported divergences use.
    """
    if not alpha > 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    return alpha / (alpha - 1.0)


def clamp_prob(p):
    """Clamp probabilities into [EPS, 1-EPS] (float64)."""
    return np.clip(np.asarray(p, dtype=np.float64), EPS, 1.0 - EPS)


def _as_weights(v, name: str) -> np.ndarray:
    w = np.asarray(v, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {w.shape}")
    if np.any(w < 0.0):
        raise ValueError(f"{name} must be non-negative")
    if not np.any(w > 0.0):
        raise ValueError(f"{name} must have at least one positive entry")
    return w


def holder_inequality_sides(f, g, exps: HolderExponents) -> tuple[float, float]:
    """Both sides of the Hölder inequality: (sum f_i g_i, ||f||_a ||g||_b)."""
    f = np.asarray(f, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {f.shape} vs {g.shape}")
    lhs = float(np.dot(f, g))
    rhs = float(
        np.sum(f**exps.alpha) ** (1.0 / exps.alpha)
        * np.sum(g**exps.beta) ** (1.0 / exps.beta)
    )
    return lhs, rhs


def holder_div_discrete(p, q, exps: HolderExponents) -> float:
    """Hölder pseudo-divergence between two non-negative weight vectors.

    Raises InfiniteDivergenceError when the supports are disjoint
    (sum p_i q_i == 0), where the true value is +infinity.
    """
    p = _as_weights(p, "p")
    q = _as_weights(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    num = float(np.dot(p, q))
    if num <= 0.0:
        raise InfiniteDivergenceError("zero inner product: divergence is infinite")
    # log-domain: avoids overflow of the norms for large alpha
    log_norm_p = np.log(np.sum(p**exps.alpha)) / exps.alpha
    log_norm_q = np.log(np.sum(q**exps.beta)) / exps.beta
    return float(-(np.log(num) - log_norm_p - log_norm_q))


def holder_div_bernoulli(p, q, exps: HolderExponents):
    """Hölder pseudo-divergence between Bernoulli(p) and Bernoulli(q).

    Closed form over the two-point vectors [p, 1-p], [q, 1-q]:

        -log(pq + (1-p)(1-q)) + (1/a) log(p^a + (1-p)^a)
                              + (1/b) log(q^b + (1-q)^b)

    Broadcasts elementwise over array inputs.
    """
    p = clamp_prob(p)
    q = clamp_prob(q)
    a, b = exps.alpha, exps.beta
    d = (
        -np.log(p * q + (1.0 - p) * (1.0 - q))
        + np.log(p**a + (1.0 - p) ** a) / a
        + np.log(q**b + (1.0 - q) ** b) / b
    )
    return float(d) if np.ndim(d) == 0 else d


def holder_div_bernoulli_grad(p, q, exps: HolderExponents):
    """Analytic (d/dp, d/dq) of holder_div_bernoulli at the clamped point."""
    p = clamp_prob(p)
    q = clamp_prob(q)
    a, b = exps.alpha, exps.beta
    inner = p * q + (1.0 - p) * (1.0 - q)
    dp = -(2.0 * q - 1.0) / inner + (p ** (a - 1.0) - (1.0 - p) ** (a - 1.0)) / (
        p**a + (1.0 - p) ** a
    )
    dq = -(2.0 * p - 1.0) / inner + (q ** (b - 1.0) - (1.0 - q) ** (b - 1.0)) / (
        q**b + (1.0 - q) ** b
    )
    if np.ndim(dp) == 0:
        return float(dp), float(dq)
    return dp, dq


def kl_bernoulli(p, q):
    """KL divergence between Bernoulli(p) and Bernoulli(q), in nats.

        p log(p/q) + (1-p) log((1-p)/(1-q))
    """
    p = clamp_prob(p)
    q = clamp_prob(q)
    d = p * np.log(p / q) + (1.0 - p) * np.log((1.0 - p) / (1.0 - q))
    return float(d) if np.ndim(d) == 0 else d


def kl_bernoulli_grad(p, q):
    """Analytic (d/dp, d/dq) of kl_bernoulli at the clamped point."""
    p = clamp_prob(p)
    q = clamp_prob(q)
    dp = np.log(p / q) - np.log((1.0 - p) / (1.0 - q))
    dq = -p / q + (1.0 - p) / (1.0 - q)
    if np.ndim(dp) == 0:
        return float(dp), float(dq)
    return dp, dq
