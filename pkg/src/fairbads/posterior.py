"""Group log-posterior over joint particles ``z = (theta, padded weights)``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import model
from .data import GroupData, MetaSet


@dataclass(frozen=True)
class PriorConfig:
    """Quadratic soft prior keeping the selected mass near ``beta * N``.

    ``over_padded`` sums the prior over all ``n_max`` slots with target ``beta * n_max``
    and ``reward_deviation`` flips the sign of the penalty; both reproduce the literal
    formula and are off by default.
    """

    beta: float = 0.005
    prior_scale: float = 1.0
    over_padded: bool = False
    reward_deviation: bool = False

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.prior_scale < 0:
            raise ValueError("prior_scale must be nonnegative")


@dataclass(frozen=True)
class GroupPosterior:
    group: GroupData
    meta: MetaSet
    prior: PriorConfig
    n_params: int
    n_max: int
    group_id: int = 0
    surrogate_meta: bool = False

    def __post_init__(self):
        if len(self.group) > self.n_max:
            raise ValueError("group larger than the padded weight block")
        if self.n_params != self.group.X.shape[1] + 1:
            raise ValueError("n_params must equal feature dimension + 1")

    @property
    def n_live(self) -> int:
        return len(self.group)

    @property
    def dim(self) -> int:
        return self.n_params + self.n_max

    def split(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.dim:
            raise ValueError(f"particle has dimension {z.shape[-1]}, expected {self.dim}")
        P = self.n_params
        return z[..., :P], z[..., P: P + self.n_live], z[..., P:]

    def _prior_terms(self, w_live, w_all):
        pc = self.prior
        w = w_all if pc.over_padded else w_live
        n = w.shape[-1]
        sw = model.sigmoid(w)
        dev = sw.sum(axis=-1) - pc.beta * n
        sign = 1.0 if pc.reward_deviation else -1.0
        value = sign * pc.prior_scale * dev**2
        grad = sign * 2.0 * pc.prior_scale * dev[..., None] * sw * (1 - sw)
        return value, grad


def _meta_value(gp: GroupPosterior, theta):
    if gp.surrogate_meta:
        return model.surrogate_meta_loss(theta, gp.meta)
    return model.meta_loss(theta, gp.meta)


def log_post(gp: GroupPosterior, z):
    """Unnormalized log density: ``-(weighted loss) - (meta loss) - prior penalty``."""
    theta, w_live, w_all = gp.split(z)
    prior, _ = gp._prior_terms(w_live, w_all)
    out = -model.weighted_loss(theta, w_live, gp.group) - _meta_value(gp, theta) + prior
    return float(out) if np.ndim(out) == 0 else out


def grad_log_post(gp: GroupPosterior, z) -> np.ndarray:
    """Gradient of :func:`log_post`; padded weight slots get exactly zero.

    Accepts one particle or a stack ``(M, dim)``.
    """
    z = np.asarray(z, dtype=float)
    theta, w_live, w_all = gp.split(z)
    g_theta, g_w = model.grads_log_likelihood(theta, w_live, gp.group, gp.meta, gp.surrogate_meta)
    _, g_prior = gp._prior_terms(w_live, w_all)
    out = np.zeros_like(z)
    P, n = gp.n_params, gp.n_live
    out[..., :P] = g_theta
    out[..., P: P + n] = g_w
    if gp.prior.over_padded:
        out[..., P:] += g_prior
    else:
        out[..., P: P + n] += g_prior
    return out
