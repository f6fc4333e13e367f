"""Stein variational gradient descent with an optional pull toward a central cloud."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .central import KdeConfig, kde_score, sq_dists
from .particles import ParticleSet, as_points
from .posterior import GroupPosterior, grad_log_post

Score = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SvgdConfig:
    """``bandwidth="median"`` uses the median heuristic; a float fixes ``h``."""

    step_size: float = 1e-2
    bandwidth: float | str = "median"
    fairness_weight: float = 1.0

    def __post_init__(self):
        if not self.step_size > 0:
            raise ValueError("step_size must be positive")
        if self.bandwidth != "median" and not float(self.bandwidth) > 0:
            raise ValueError("bandwidth must be 'median' or a positive number")
        if self.fairness_weight < 0:
            raise ValueError("fairness_weight must be nonnegative")


def rbf_kernel(a, b, h: float):
    """Return ``(k(a, b), grad_a k(a, b))`` for ``k = exp(-|a - b|^2 / 2h^2)``."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    diff = a - b
    k = float(np.exp(-(diff @ diff) / (2.0 * h * h)))
    return k, -diff / (h * h) * k


def median_bandwidth(ps) -> float:
    """Median pairwise distance over ``sqrt(2 log(M + 1))``; 1.0 when the median is 0."""
    z = as_points(ps)
    M = z.shape[0]
    if M < 2:
        raise ValueError("median bandwidth needs at least two particles")
    iu = np.triu_indices(M, k=1)
    med = float(np.median(np.sqrt(sq_dists(z, z)[iu])))
    if med == 0.0:
        return 1.0
    return med / np.sqrt(2.0 * np.log(M + 1.0))


def per_particle(fn: Callable[[np.ndarray], np.ndarray]) -> Score:
    """Lift a single-particle score ``z -> grad`` to act row-wise on a stack."""
    return lambda Z: np.stack([np.asarray(fn(z), dtype=float) for z in Z])


def svgd_direction(Z: np.ndarray, scores: np.ndarray, h: float) -> np.ndarray:
    """``phi(z_m) = (1/M) sum_l [k(z_l, z_m) score_l + grad_{z_l} k(z_l, z_m)]``."""
    M = Z.shape[0]
    K = np.exp(-sq_dists(Z, Z) / (2.0 * h * h))    # symmetric
    # sum_l grad_{z_l} k(z_l, z_m) = sum_l k_lm (z_m - z_l) / h^2
    repulse = (K.sum(axis=0)[:, None] * Z - K.T @ Z) / (h * h)
    return (K.T @ scores + repulse) / M


def svgd_step(ps, score: Score, cfg: SvgdConfig):
    """One synchronous SVGD update; ``score`` maps an (M, dim) stack to (M, dim)."""
    Z = as_points(ps)
    S = np.asarray(score(Z), dtype=float)
    if S.shape != Z.shape:
        raise ValueError(f"score returned shape {S.shape}, expected {Z.shape}")
    if not np.all(np.isfinite(S)):
        raise FloatingPointError("non-finite score")
    if Z.shape[0] == 1:
        h = 1.0
    elif cfg.bandwidth == "median":
        h = median_bandwidth(Z)
    else:
        h = float(cfg.bandwidth)
    new = Z + cfg.step_size * svgd_direction(Z, S, h)
    return ps.with_z(new) if isinstance(ps, ParticleSet) else ParticleSet(new)


def fair_score(gp: GroupPosterior, central, kde: KdeConfig, fairness_weight: float = 1.0) -> Score:
    """Score of ``log p_s(z) + fairness_weight * log(KDE of the central cloud)``."""
    if len(as_points(central)) == 0:
        raise ValueError("central particle set is empty")

    def score(Z):
        g = grad_log_post(gp, Z)
        if fairness_weight != 0.0:
            g = g + fairness_weight * kde_score(central, np.atleast_2d(Z), kde).reshape(g.shape)
        return g

    return score
