"""Logistic-regression classifier with per-sample selection weights.

Parameters are ``theta = [coef..., bias]`` (length ``d + 1``); raw sample weights ``w``
enter the training loss through ``sigmoid(w)``. Functions accept a single
parameter vector or a stack of them (leading particle axis).
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .data import GroupData, MetaSet

PROB_CLAMP = 1e-12


def sigmoid(t):
    return expit(t)


def augment(X) -> np.ndarray:
    """Append the constant bias feature."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])


def _logits(theta, X) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    Xa = augment(X)
    if theta.shape[-1] != Xa.shape[1]:
        raise ValueError(f"theta has length {theta.shape[-1]}, expected {Xa.shape[1]}")
    return theta @ Xa.T


def predict_prob(theta, x):
    """``sigmoid(theta . [x; 1])`` clamped into ``[1e-12, 1 - 1e-12]``.

    Scalar for a single ``x`` and single ``theta``; otherwise an array with shape
    ``theta.shape[:-1] + (n,)``.
    """
    x = np.asarray(x, dtype=float)
    p = np.clip(sigmoid(_logits(theta, x)), PROB_CLAMP, 1.0 - PROB_CLAMP)
    if x.ndim == 1:
        p = p[..., 0]
        return float(p) if np.ndim(p) == 0 else p
    return p


def cross_entropy(p, y) -> np.ndarray:
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -(y * np.log(p) + (1 - y) * np.log1p(-p))


def weighted_loss(theta, w, group: GroupData):
    """``sum_i sigmoid(w_i) * CE(f_theta(x_i), y_i)`` over the group."""
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != len(group):
        raise ValueError(f"weights have length {w.shape[-1]}, group has {len(group)} examples")
    if len(group) == 0:
        return np.zeros(np.shape(w)[:-1]) if np.ndim(w) > 1 else 0.0
    ce = cross_entropy(predict_prob(theta, group.X), group.y)
    out = np.sum(sigmoid(w) * ce, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def meta_loss(theta, meta: MetaSet):
    """Unweighted cross-entropy summed over the meta set."""
    if len(meta) == 0:
        return np.zeros(np.shape(theta)[:-1]) if np.ndim(theta) > 1 else 0.0
    out = np.sum(cross_entropy(predict_prob(theta, meta.X), meta.y), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def surrogate_meta_loss(theta, pseudo: MetaSet):
    """``sum_i KL(Bern(f_theta(x_i)) || Bern(q_i))`` with ``q_i`` the pseudo-label P(y=1)."""
    if pseudo.soft_labels is None:
        raise ValueError("surrogate meta loss needs soft labels")
    if len(pseudo) == 0:
        return np.zeros(np.shape(theta)[:-1]) if np.ndim(theta) > 1 else 0.0
    p = predict_prob(theta, pseudo.X)
    q = np.clip(pseudo.soft_labels[:, 1], PROB_CLAMP, 1.0 - PROB_CLAMP)
    kl = p * np.log(p / q) + (1 - p) * np.log((1 - p) / (1 - q))
    out = np.sum(kl, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def grad_meta_loss(theta, meta: MetaSet, surrogate: bool = False) -> np.ndarray:
    """Gradient of the (CE or KL-surrogate) meta loss with respect to ``theta``."""
    theta = np.asarray(theta, dtype=float)
    if len(meta) == 0:
        return np.zeros_like(theta)
    Xa = augment(meta.X)
    p = predict_prob(theta, meta.X)
    if surrogate:
        if meta.soft_labels is None:
            raise ValueError("surrogate meta loss needs soft labels")
        q = np.clip(meta.soft_labels[:, 1], PROB_CLAMP, 1.0 - PROB_CLAMP)
        # d KL / d logit = p (1 - p) * (logit(p) - logit(q))
        r = p * (1 - p) * (np.log(p / (1 - p)) - np.log(q / (1 - q)))
    else:
        r = p - meta.y
    return r @ Xa


def grads_log_likelihood(theta, w, group: GroupData, meta: MetaSet, surrogate: bool = False):
    """Analytic gradients of ``-(weighted training loss + meta loss)``.

    Returns ``(grad_theta, grad_w)``; ``grad_w`` only sees the weighted training loss.
    """
    theta = np.asarray(theta, dtype=float)
    w = np.asarray(w, dtype=float)
    if w.shape[-1] != len(group):
        raise ValueError(f"weights have length {w.shape[-1]}, group has {len(group)} examples")
    g_theta = -grad_meta_loss(theta, meta, surrogate)
    if len(group) == 0:
        return g_theta, np.zeros_like(w)
    p = predict_prob(theta, group.X)
    sw = sigmoid(w)
    g_theta = g_theta - (sw * (p - group.y)) @ augment(group.X)
    g_w = -sw * (1 - sw) * cross_entropy(p, group.y)
    return g_theta, g_w
