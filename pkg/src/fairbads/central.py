"""Central (barycenter) distribution of group particle sets.

Three discrepancies are supported: squared 2-Wasserstein via exact assignment, MMD with a
Gaussian kernel, and KDE-estimated f-divergences (KL, reverse KL, JS). The KDE score of
the central cloud is what pulls group particles toward it during sampling.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import xlogy

from .particles import ParticleSet, as_points

DIVERGENCES = ("wasserstein", "mmd", "fdiv")
F_CHOICES = ("kl", "reverse_kl", "js")
ARMIJO = 1e-4
_ALIASES = {"w2": "wasserstein", "wasserstein": "wasserstein", "mmd": "mmd", "fdiv": "fdiv",
            "f": "fdiv", "js": "fdiv"}


def canonical_divergence(name: str) -> str:
    try:
        return _ALIASES[name]
    except KeyError:
        raise ValueError(f"unknown divergence {name!r}; expected one of w2, mmd, fdiv") from None


@dataclass(frozen=True)
class KdeConfig:
    bandwidth: float = 0.1
    eps_stab: float = 1e-3

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError("KDE bandwidth must be positive")
        if not self.eps_stab > 0:
            raise ValueError("eps_stab must be positive")


@dataclass(frozen=True)
class BarycenterConfig:
    divergence: str = "wasserstein"
    group_weights: tuple[float, ...] | None = None
    inner_iters: int = 1
    gd_step: float = 0.1
    f_choice: str = "js"

    def __post_init__(self):
        object.__setattr__(self, "divergence", canonical_divergence(self.divergence))
        if self.f_choice not in F_CHOICES:
            raise ValueError(f"unknown f_choice {self.f_choice!r}")
        if self.inner_iters < 0:
            raise ValueError("inner_iters must be nonnegative")
        if self.gd_step <= 0:
            raise ValueError("gd_step must be positive")
        if self.group_weights is not None:
            lam = np.asarray(self.group_weights, dtype=float)
            if len(lam) > 1 and (np.any(lam <= 0) or np.any(lam >= 1)):
                raise ValueError("group weights must lie in (0, 1)")
            if abs(lam.sum() - 1.0) > 1e-9:
                raise ValueError("group weights must sum to 1")

    def weights_for(self, n_groups: int) -> np.ndarray:
        if self.group_weights is None:
            return np.full(n_groups, 1.0 / n_groups)
        if len(self.group_weights) != n_groups:
            raise ValueError("one group weight per group is required")
        return np.asarray(self.group_weights, dtype=float)


@dataclass(frozen=True)
class TransportPlan:
    T: np.ndarray
    cost: np.ndarray
    objective: float
    assignment: np.ndarray = field(repr=False, default=None)


def sq_dists(a, b) -> np.ndarray:
    """Pairwise squared distances.

    Small problems use explicit differences; large ones the Gram expansion after
    centering, which keeps cancellation error at the scale of the spread.
    """
    a, b = as_points(a), as_points(b)
    if a.shape[0] * b.shape[0] * a.shape[1] <= 200_000:
        diff = a[:, None, :] - b[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    mu = 0.5 * (a.mean(axis=0) + b.mean(axis=0))
    a, b = a - mu, b - mu
    d2 = np.sum(a * a, axis=1)[:, None] + np.sum(b * b, axis=1)[None, :] - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


# ---------------------------------------------------------------- Wasserstein

def solve_ot(source, target) -> TransportPlan:
    """Exact optimal transport between two uniform particle sets of equal size.

    With uniform marginals an optimal vertex is a permutation scaled by ``1/M``; it is
    found by exact linear assignment on the squared-distance cost.
    """
    a, b = as_points(source), as_points(target)
    if a.shape != b.shape:
        raise ValueError(f"particle sets differ in shape: {a.shape} vs {b.shape}")
    M = a.shape[0]
    C = sq_dists(a, b)
    rows, cols = linear_sum_assignment(C)
    T = np.zeros((M, M))
    T[rows, cols] = 1.0 / M
    return TransportPlan(T, C, float(C[rows, cols].sum() / M), cols)


def wasserstein_objective(groups: Sequence, central, cfg: BarycenterConfig | None = None) -> float:
    cfg = cfg or BarycenterConfig()
    lam = cfg.weights_for(len(groups))
    return float(sum(l * solve_ot(g, central).objective for l, g in zip(lam, groups)))


def wasserstein_barycenter_update(groups: Sequence, current, cfg: BarycenterConfig):
    """``inner_iters`` fixed-point sweeps: match every group to the center, then average.

    Each central particle becomes ``M * sum_s lambda_s sum_i T_s[i, j] z_s[i]``.
    """
    lam = cfg.weights_for(len(groups))
    Z = [as_points(g) for g in groups]
    c = as_points(current)
    M = c.shape[0]
    for _ in range(cfg.inner_iters):
        new = np.zeros_like(c)
        for l, Zs in zip(lam, Z):
            plan = solve_ot(Zs, c)
            new += l * M * (plan.T.T @ Zs)
        c = new
    return _like(current, c)


def _like(template, z):
    if isinstance(template, ParticleSet):
        return template.with_z(z)
    return ParticleSet(z)


# ---------------------------------------------------------------- kernels / KDE

def gaussian_gram(a, b, h: float) -> np.ndarray:
    return np.exp(-sq_dists(a, b) / (2.0 * h * h))


def kde_density(ps, z, kde: KdeConfig):
    """Unnormalized Gaussian KDE ``(1/M) sum_i exp(-|z - z_i|^2 / 2h^2)``."""
    pts = as_points(ps)
    q = np.atleast_2d(np.asarray(z, dtype=float))
    if q.shape[1] != pts.shape[1]:
        raise ValueError("dimension mismatch")
    out = gaussian_gram(q, pts, kde.bandwidth).mean(axis=1)
    return float(out[0]) if np.ndim(z) == 1 else out


def kde_score(ps, z, kde: KdeConfig) -> np.ndarray:
    """``grad_z log(kde_density(z) + eps_stab)`` for one query or a stack of queries."""
    pts = as_points(ps)
    q = np.atleast_2d(np.asarray(z, dtype=float))
    if q.shape[1] != pts.shape[1]:
        raise ValueError("dimension mismatch")
    h2 = kde.bandwidth**2
    K = gaussian_gram(q, pts, kde.bandwidth)              # (Q, M)
    num = (K @ pts - K.sum(axis=1, keepdims=True) * q) / h2
    den = K.sum(axis=1, keepdims=True) + pts.shape[0] * kde.eps_stab
    out = num / den
    return out[0] if np.ndim(z) == 1 else out


# ---------------------------------------------------------------- MMD

def mmd_sq(a, b, kde: KdeConfig) -> float:
    A, B = as_points(a), as_points(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch")
    h = kde.bandwidth
    val = (gaussian_gram(A, A, h).mean() + gaussian_gram(B, B, h).mean()
           - 2.0 * gaussian_gram(A, B, h).mean())
    return _clamp_mmd(val)


def mmd_grad(a, b, kde: KdeConfig) -> np.ndarray:
    """Gradient of ``mmd_sq(a, b)`` with respect to the points of ``a``."""
    A, B = as_points(a), as_points(b)
    Ma, Mb = A.shape[0], B.shape[0]
    h2 = kde.bandwidth**2
    Kaa = gaussian_gram(A, A, kde.bandwidth)
    Kab = gaussian_gram(A, B, kde.bandwidth)
    # d/da_i k(a_i, x) = -(a_i - x) / h^2 * k
    g_aa = -(Kaa.sum(axis=1)[:, None] * A - Kaa @ A) / h2
    g_ab = -(Kab.sum(axis=1)[:, None] * A - Kab @ B) / h2
    return 2.0 / Ma**2 * g_aa - 2.0 / (Ma * Mb) * g_ab


def _clamp_mmd(val: float) -> float:
    return 0.0 if -1e-12 <= val < 0.0 else float(val)


def _mmd_parts(groups, cfg: BarycenterConfig, kde: KdeConfig):
    """Group points, group weights and the center-independent ``mean k(b, b')`` terms."""
    B = [as_points(g) for g in groups]
    self_b = [gaussian_gram(b, b, kde.bandwidth).mean() for b in B]
    return B, cfg.weights_for(len(groups)), self_b


def _mmd_objective(parts, central, kde: KdeConfig) -> float:
    B, lam, self_b = parts
    A = as_points(central)
    self_a = gaussian_gram(A, A, kde.bandwidth).mean()
    return float(sum(l * _clamp_mmd(self_a + sb - 2.0 * gaussian_gram(A, b, kde.bandwidth).mean())
                     for l, b, sb in zip(lam, B, self_b)))


def _mmd_objective_grad(parts, central, kde: KdeConfig) -> np.ndarray:
    B, lam, _ = parts
    A = as_points(central)
    Ma, h2 = A.shape[0], kde.bandwidth**2
    Kaa = gaussian_gram(A, A, kde.bandwidth)
    g = -2.0 / Ma**2 * (Kaa.sum(axis=1)[:, None] * A - Kaa @ A) / h2
    for l, b in zip(lam, B):
        Kab = gaussian_gram(A, b, kde.bandwidth)
        g = g + l * 2.0 / (Ma * b.shape[0]) * (Kab.sum(axis=1)[:, None] * A - Kab @ b) / h2
    return g


def mmd_objective(groups, central, cfg: BarycenterConfig, kde: KdeConfig) -> float:
    return _mmd_objective(_mmd_parts(groups, cfg, kde), central, kde)


def mmd_objective_grad(groups, central, cfg: BarycenterConfig, kde: KdeConfig) -> np.ndarray:
    return _mmd_objective_grad(_mmd_parts(groups, cfg, kde), central, kde)


# ---------------------------------------------------------------- f-divergence

def f_value(t, f_choice: str) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("density ratio must be nonnegative")
    if f_choice == "kl":
        return xlogy(t, t)
    if f_choice == "reverse_kl":
        if np.any(t <= 0):
            raise ValueError("reverse KL needs a strictly positive density ratio")
        return -np.log(t)
    if f_choice == "js":
        return xlogy(t, 2.0 * t / (t + 1.0)) + np.log(2.0 / (t + 1.0))
    raise ValueError(f"unknown f_choice {f_choice!r}")


def f_prime(t, f_choice: str) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        if f_choice == "kl":
            return np.log(t) + 1.0
        if f_choice == "reverse_kl":
            return -1.0 / t
        if f_choice == "js":
            return np.log(2.0 * t / (t + 1.0))
    raise ValueError(f"unknown f_choice {f_choice!r}")


def _stabilized_self_density(b, kde: KdeConfig) -> np.ndarray:
    B = as_points(b)
    return gaussian_gram(B, B, kde.bandwidth).mean(axis=1) + kde.eps_stab


def _density_ratio(a, b, kde: KdeConfig, denom=None):
    """Ratio of the KDE of ``a`` to the stabilized KDE of ``b``, both at the points of ``b``."""
    A, B = as_points(a), as_points(b)
    if A.shape[1] != B.shape[1]:
        raise ValueError("dimension mismatch")
    K_ba = gaussian_gram(B, A, kde.bandwidth)         # (Mb, Ma)
    if denom is None:
        denom = _stabilized_self_density(B, kde)
    return K_ba.mean(axis=1) / denom, K_ba, denom


def f_divergence(a, b, cfg: BarycenterConfig, kde: KdeConfig, _denom=None) -> float:
    """KDE estimate of ``D_f(a || b)``: mean of ``f(p_a / (p_b + eps))`` over the points of ``b``."""
    t, _, _ = _density_ratio(a, b, kde, _denom)
    return float(np.mean(f_value(t, cfg.f_choice)))


def f_divergence_grad(a, b, cfg: BarycenterConfig, kde: KdeConfig, _denom=None) -> np.ndarray:
    """Gradient of :func:`f_divergence` with respect to the points of ``a``."""
    A, B = as_points(a), as_points(b)
    t, K_ba, denom = _density_ratio(A, B, kde, _denom)
    # rows with t == 0 have all-zero kernels and contribute nothing
    fp = np.where(t > 0, f_prime(np.where(t > 0, t, 1.0), cfg.f_choice), 0.0)
    # d t_j / d a_i = (1/Ma) k(b_j, a_i) (b_j - a_i) / h^2 / denom_j
    coef = np.where(K_ba > 0, K_ba * (fp / denom)[:, None], 0.0)   # (Mb, Ma)
    if not np.all(np.isfinite(coef)):
        raise FloatingPointError("non-finite f-divergence gradient")
    Ma, Mb = A.shape[0], B.shape[0]
    h2 = kde.bandwidth**2
    return (coef.T @ B - coef.sum(axis=0)[:, None] * A) / (h2 * Ma * Mb)


def fdiv_objective(groups, central, cfg: BarycenterConfig, kde: KdeConfig, _denoms=None) -> float:
    lam = cfg.weights_for(len(groups))
    denoms = _denoms or [None] * len(groups)
    return float(sum(l * f_divergence(central, g, cfg, kde, d) for l, g, d in zip(lam, groups, denoms)))


def fdiv_objective_grad(groups, central, cfg: BarycenterConfig, kde: KdeConfig,
                        _denoms=None) -> np.ndarray:
    lam = cfg.weights_for(len(groups))
    denoms = _denoms or [None] * len(groups)
    return sum(l * f_divergence_grad(central, g, cfg, kde, d) for l, g, d in zip(lam, groups, denoms))


# ---------------------------------------------------------------- descent updates

def _descend(objective, gradient, current, cfg: BarycenterConfig, trace: list | None):
    c = as_points(current).copy()
    val = objective(c)
    if trace is not None:
        trace.append(val)
    for _ in range(cfg.inner_iters):
        g = gradient(c)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite barycenter gradient")
        step = cfg.gd_step
        g2 = float(np.sum(g * g))
        for _ in range(21):
            cand = c - step * g
            cand_val = objective(cand)
            # Armijo condition: flat objectives (bounded f) must not accept huge jumps
            if cand_val <= val - ARMIJO * step * g2:
                c, val = cand, cand_val
                break
            step *= 0.5
        if trace is not None:
            trace.append(val)
    return _like(current, c)


def mmd_barycenter_update(groups, current, cfg: BarycenterConfig, kde: KdeConfig,
                          trace: list | None = None):
    """Gradient descent with backtracking on ``sum_s lambda_s MMD^2(center, group_s)``."""
    parts = _mmd_parts(groups, cfg, kde)
    return _descend(lambda c: _mmd_objective(parts, c, kde),
                    lambda c: _mmd_objective_grad(parts, c, kde), current, cfg, trace)


def fdiv_barycenter_update(groups, current, cfg: BarycenterConfig, kde: KdeConfig,
                           trace: list | None = None):
    """Gradient descent with backtracking on ``sum_s lambda_s D_f(center || group_s)``."""
    # group self-densities do not depend on the center
    denoms = [_stabilized_self_density(g, kde) for g in groups]
    return _descend(lambda c: fdiv_objective(groups, c, cfg, kde, denoms),
                    lambda c: fdiv_objective_grad(groups, c, cfg, kde, denoms), current, cfg, trace)


def barycenter_objective(groups, central, cfg: BarycenterConfig, kde: KdeConfig | None = None) -> float:
    kde = kde or KdeConfig()
    if cfg.divergence == "wasserstein":
        return wasserstein_objective(groups, central, cfg)
    if cfg.divergence == "mmd":
        return mmd_objective(groups, central, cfg, kde)
    return fdiv_objective(groups, central, cfg, kde)


def barycenter_update(groups, current, cfg: BarycenterConfig, kde: KdeConfig | None = None):
    kde = kde or KdeConfig()
    if cfg.divergence == "wasserstein":
        return wasserstein_barycenter_update(groups, current, cfg)
    if cfg.divergence == "mmd":
        return mmd_barycenter_update(groups, current, cfg, kde)
    return fdiv_barycenter_update(groups, current, cfg, kde)


def initial_center(groups, cfg: BarycenterConfig | None = None):
    """Particle-wise lambda-weighted Euclidean mean of the group sets."""
    cfg = cfg or BarycenterConfig()
    lam = cfg.weights_for(len(groups))
    z = sum(l * as_points(g) for l, g in zip(lam, groups))
    return _like(groups[0], z)


# ---------------------------------------------------------------- padding

def pad_particles(raw: ParticleSet, n_max: int) -> ParticleSet:
    """Append exact zeros to the weight block so it has ``n_max`` slots."""
    if raw.n_weights > n_max:
        raise ValueError(f"weight block of length {raw.n_weights} exceeds n_max={n_max}")
    extra = n_max - raw.n_weights
    z = np.hstack([raw.z, np.zeros((raw.M, extra))])
    return ParticleSet(z, raw.n_params, raw.live)
