"""The adversarial value function and its per-player output gradients.

The canonical objective pits a discriminator (probs d) against a classifier
(probs c on the unlabeled set):

    V = - [ mean_pos H(target=1 : d_i) + mean_unl H(target=0 : d_i) ]
        + lam * [ mean_unl H(d_j : c_j) - mean_unl H(d_j : 1 - c_j) ]

where H is the Bernoulli Hölder divergence and 1 - c is the classifier's
inverse distribution.  The discriminator ascends V (we implement this as
descent on loss_D = -V) and the classifier descends V.  The 0/1 targets are
clamped before evaluation.

The KL-form baseline value is

    V = mean_pos log d_i + mean_unl log(1 - d_j)
        + lam * mean_unl (log(1 - c_j) - log(c_j)) * (2 d_j - 1)

which equals the Hölder form with H replaced by KL, up to clamp slack.

Sums in both objectives are reduced per set; reduction="mean" (the default)
keeps lam's balance independent of batch size, reduction="sum" reproduces
the raw summed form.  Gradients treat the other player's outputs as
constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .divergence import (
    HolderExponents,
    clamp_prob,
    holder_div_bernoulli,
    holder_div_bernoulli_grad,
)

POSITIVE_TARGET = 1.0
UNLABELED_TARGET = 0.0


@dataclass
class BatchView:
    """One training batch as seen by the objective.

    d_pos: discriminator probs on labeled positives
    d_unl: discriminator probs on unlabeled samples
    c_unl: classifier probs on the same unlabeled samples
    """

    d_pos: np.ndarray
    d_unl: np.ndarray
    c_unl: np.ndarray
    lam: float
    exps: HolderExponents

    def __post_init__(self):
        self.d_pos = np.atleast_1d(np.asarray(self.d_pos, dtype=np.float64))
        self.d_unl = np.atleast_1d(np.asarray(self.d_unl, dtype=np.float64))
        self.c_unl = np.atleast_1d(np.asarray(self.c_unl, dtype=np.float64))
        if self.d_unl.shape != self.c_unl.shape:
            raise ValueError("d_unl and c_unl must align")
        if not np.isfinite(self.lam) or self.lam < 0.0:
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")


def _reduce(terms: np.ndarray, reduction: str) -> float:
    if terms.size == 0:
        return 0.0
    if reduction == "mean":
        return float(terms.mean())
    if reduction == "sum":
        return float(terms.sum())
    raise ValueError(f"unknown reduction {reduction!r}")


def _scale(n: int, reduction: str) -> float:
    return 1.0 / n if reduction == "mean" else 1.0


def hdpan_value(b: BatchView, reduction: str = "mean") -> float:
    """V of the Hölder objective for one batch."""
    if b.d_pos.size == 0 and b.d_unl.size == 0:
        raise ValueError("empty batch")
    fit = _reduce(
        holder_div_bernoulli(POSITIVE_TARGET, b.d_pos, b.exps), reduction
    ) + _reduce(holder_div_bernoulli(UNLABELED_TARGET, b.d_unl, b.exps), reduction)
    gap = _reduce(holder_div_bernoulli(b.d_unl, b.c_unl, b.exps), reduction) - _reduce(
        holder_div_bernoulli(b.d_unl, 1.0 - b.c_unl, b.exps), reduction
    )
    return -fit + b.lam * gap


def d_output_grads(
    b: BatchView, reduction: str = "mean", include_lambda: bool = True
) -> np.ndarray:
    """d(loss_D)/d(d_i) with loss_D = -V, aligned with d_pos ++ d_unl.

    Classifier outputs are constants here.  include_lambda=False drops the
    balance terms from the discriminator's update (ablation switch); the
    default keeps them, matching the full-objective update rule.
    """
    _, g_pos = holder_div_bernoulli_grad(POSITIVE_TARGET, b.d_pos, b.exps)
    _, g_unl = holder_div_bernoulli_grad(UNLABELED_TARGET, b.d_unl, b.exps)
    g_pos = np.atleast_1d(g_pos) * _scale(max(b.d_pos.size, 1), reduction)
    g_unl = np.atleast_1d(g_unl) * _scale(max(b.d_unl.size, 1), reduction)
    if include_lambda and b.lam != 0.0 and b.d_unl.size:
        g_c, _ = holder_div_bernoulli_grad(b.d_unl, b.c_unl, b.exps)
        g_inv, _ = holder_div_bernoulli_grad(b.d_unl, 1.0 - b.c_unl, b.exps)
        g_unl = g_unl - b.lam * _scale(b.d_unl.size, reduction) * (
            np.atleast_1d(g_c) - np.atleast_1d(g_inv)
        )
    return np.concatenate([g_pos, g_unl])


def c_output_grads(b: BatchView, reduction: str = "mean") -> np.ndarray:
    """d(loss_C)/d(c_j) with loss_C = +V; only the lam terms contribute.

    Discriminator outputs are constants here.  The inverse-distribution term
    enters through the chain rule: d/dc H(d : 1-c) = -H_q(d, 1-c).
    """
    if b.lam == 0.0 or b.c_unl.size == 0:
        return np.zeros_like(b.c_unl)
    _, hq_c = holder_div_bernoulli_grad(b.d_unl, b.c_unl, b.exps)
    _, hq_inv = holder_div_bernoulli_grad(b.d_unl, 1.0 - b.c_unl, b.exps)
    s = b.lam * _scale(b.c_unl.size, reduction)
    return s * (np.atleast_1d(hq_c) + np.atleast_1d(hq_inv))


def pan_kl_value(b: BatchView, reduction: str = "mean") -> float:
    """V of the simplified KL-form baseline objective for one batch."""
    if b.d_pos.size == 0 and b.d_unl.size == 0:
        raise ValueError("empty batch")
    d_pos = clamp_prob(b.d_pos)
    d_unl = clamp_prob(b.d_unl)
    c = clamp_prob(b.c_unl)
    fit = _reduce(np.log(d_pos), reduction) + _reduce(np.log1p(-d_unl), reduction)
    gap = _reduce((np.log1p(-c) - np.log(c)) * (2.0 * d_unl - 1.0), reduction)
    return fit + b.lam * gap


def pan_kl_d_grads(
    b: BatchView, reduction: str = "mean", include_lambda: bool = True
) -> np.ndarray:
    """KL-form d(loss_D)/d(d_i), aligned with d_pos ++ d_unl."""
    d_pos = clamp_prob(b.d_pos)
    d_unl = clamp_prob(b.d_unl)
    c = clamp_prob(b.c_unl)
    g_pos = -1.0 / d_pos * _scale(max(d_pos.size, 1), reduction)
    g_unl = 1.0 / (1.0 - d_unl) * _scale(max(d_unl.size, 1), reduction)
    if include_lambda and b.lam != 0.0 and d_unl.size:
        g_unl = g_unl - b.lam * _scale(d_unl.size, reduction) * 2.0 * (
            np.log1p(-c) - np.log(c)
        )
    return np.concatenate([np.atleast_1d(g_pos), np.atleast_1d(g_unl)])


def pan_kl_c_grads(b: BatchView, reduction: str = "mean") -> np.ndarray:
    """KL-form d(loss_C)/d(c_j)."""
    if b.lam == 0.0 or b.c_unl.size == 0:
        return np.zeros_like(b.c_unl)
    d_unl = clamp_prob(b.d_unl)
    c = clamp_prob(b.c_unl)
    s = b.lam * _scale(c.size, reduction)
    return s * (-1.0 / (1.0 - c) - 1.0 / c) * (2.0 * d_unl - 1.0)
