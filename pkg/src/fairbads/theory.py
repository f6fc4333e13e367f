"""Runtime checks of the transfer bound, the group disparity bound and padding invariance.

Losses are callables mapping an (n, dim) stack of particles to n values. Lipschitz
constants are estimated from finite particle supports, so they are lower bounds of the
true constants; checks report the resulting slack rather than prove anything.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .central import (BarycenterConfig, KdeConfig, f_divergence, gaussian_gram, mmd_sq,
                      pad_particles, solve_ot)
from .particles import ParticleSet, as_points

Loss = Callable[[np.ndarray], np.ndarray]

# Pinsker-type constants; chi^2 has no constant one (its constant depends on t)
PINSKER = {"kl": 1.0, "js": 2.0}
PASS_TOL = 1e-9


@dataclass(frozen=True)
class KernelExpansion:
    """``L(z) = sum_i coef_i exp(-|z - c_i|^2 / 2h^2)``, an RKHS element with known norm."""

    centers: np.ndarray
    coefs: np.ndarray
    bandwidth: float

    def __call__(self, Z):
        return gaussian_gram(np.atleast_2d(Z), self.centers, self.bandwidth) @ self.coefs

    @property
    def rkhs_norm(self) -> float:
        K = gaussian_gram(self.centers, self.centers, self.bandwidth)
        return float(np.sqrt(max(self.coefs @ K @ self.coefs, 0.0)))


@dataclass
class BoundReport:
    lhs: float
    rhs: float
    divergence: str
    constants: dict = field(default_factory=dict)
    status: str = "PASS"

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def to_json(self) -> str:
        d = asdict(self)
        d["slack"] = self.slack
        return json.dumps(d, sort_keys=True)


def _eval(loss: Loss, Z) -> np.ndarray:
    return np.asarray(loss(as_points(Z)), dtype=float).reshape(-1)


def empirical_lipschitz(loss_fn: Loss, supports: Sequence) -> float:
    """Largest ``|L(z) - L(z')| / |z - z'|`` over all pairs of distinct support points."""
    Z = np.vstack([as_points(s) for s in supports])
    Z = np.unique(Z, axis=0)
    if len(Z) < 2:
        raise ValueError("need at least two distinct points")
    vals = _eval(loss_fn, Z)
    diff = Z[:, None, :] - Z[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    iu = np.triu_indices(len(Z), k=1)
    return float(np.max(np.abs(vals[:, None] - vals[None, :])[iu] / dist[iu]))


def _divergence_terms(groups, central, losses, divergence, cfg, kde):
    """Per-group discrepancies ``g_s`` and constants ``C_s`` with ``|dE L_s| <= C_s g_s``."""
    supports = list(groups) + [central]
    consts: dict = {}
    if divergence in ("w2", "wasserstein"):
        D = [np.sqrt(max(solve_ot(g, central).objective, 0.0)) for g in groups]
        C = [empirical_lipschitz(L, supports) for L in losses]
        consts["L_s"] = C
        return np.array(D), np.array(C), consts
    if divergence == "mmd":
        if not all(isinstance(L, KernelExpansion) and L.bandwidth == kde.bandwidth for L in losses):
            return None, None, consts
        D = [np.sqrt(mmd_sq(g, central, kde)) for g in groups]
        C = [L.rkhs_norm for L in losses]
        consts["rkhs_norm"] = C
        return np.array(D), np.array(C), consts
    f = cfg.f_choice
    if f not in PINSKER:
        return None, None, consts
    Df = [max(f_divergence(g, central, cfg, kde), 0.0) for g in groups]
    B = [float(np.max(_eval(L, np.vstack([as_points(s) for s in supports])))) for L in losses]
    c_f = PINSKER[f]
    consts.update(B_s=B, c_f=c_f, D_f=Df)
    # Pinsker form: C_s * sqrt(D_f) with C_s = B_s sqrt(2 c_f)
    return np.sqrt(Df), np.array(B) * np.sqrt(2.0 * c_f), consts


def _not_checkable(divergence, consts):
    return BoundReport(float("nan"), float("nan"), divergence, consts, status="NOT_CHECKABLE")


def _verdict(lhs, rhs):
    return "PASS" if rhs - lhs >= -PASS_TOL else "FAIL"


def check_transfer_bound(groups: Sequence, central, losses: Sequence[Loss], divergence: str = "w2",
                         cfg: BarycenterConfig | None = None, kde: KdeConfig | None = None) -> BoundReport:
    """``|R(center) - sum_s lambda_s R_s(group_s)| <= sum_s lambda_s C_s D(group_s, center)``.

    ``R`` is the lambda-averaged loss evaluated under the central cloud.
    """
    cfg = cfg or BarycenterConfig(f_choice="js")
    kde = kde or KdeConfig()
    lam = cfg.weights_for(len(groups))
    g, C, consts = _divergence_terms(groups, central, losses, divergence, cfg, kde)
    if g is None:
        return _not_checkable(divergence, consts)
    r_center = sum(l * _eval(L, central).mean() for l, L in zip(lam, losses))
    r_bar = sum(l * _eval(L, G).mean() for l, L, G in zip(lam, losses, groups))
    lhs = float(abs(r_center - r_bar))
    rhs = float(np.sum(lam * C * g))
    consts["divergences"] = g.tolist()
    return BoundReport(lhs, rhs, divergence, consts, _verdict(lhs, rhs))


def effective_gap(central, losses: Sequence[Loss]) -> float:
    """``K_eff``: largest cross-group loss difference over the central support."""
    vals = np.stack([_eval(L, central) for L in losses])
    return float(np.max(vals.max(axis=0) - vals.min(axis=0)))


def check_disparity_bound(groups: Sequence, central, losses: Sequence[Loss], divergence: str = "w2",
                          cfg: BarycenterConfig | None = None, kde: KdeConfig | None = None) -> BoundReport:
    """``max_{s,s'} |R_s - R_s'| <= 2 C_max max_s D(group_s, center) + K_eff``."""
    if len(groups) < 2:
        raise ValueError("disparity bound needs at least two groups")
    cfg = cfg or BarycenterConfig(f_choice="js")
    kde = kde or KdeConfig()
    g, C, consts = _divergence_terms(groups, central, losses, divergence, cfg, kde)
    if g is None:
        return _not_checkable(divergence, consts)
    risks = [_eval(L, G).mean() for L, G in zip(losses, groups)]
    lhs = float(max(abs(a - b) for a, b in itertools.combinations(risks, 2)))
    k_eff = effective_gap(central, losses)
    rhs = float(2.0 * C.max() * g.max() + k_eff)
    consts.update(K_eff=k_eff, C_max=float(C.max()), divergences=g.tolist())
    return BoundReport(lhs, rhs, divergence, consts, _verdict(lhs, rhs))


@dataclass
class PaddingReport:
    diffs: dict
    tolerances: dict

    @property
    def passed(self) -> bool:
        return all(self.diffs[k] <= self.tolerances[k] for k in self.diffs)


def check_padding_invariance(raw_a: ParticleSet, raw_b: ParticleSet, n_max: int, extra: int = 3,
                             kde: KdeConfig | None = None,
                             cfg: BarycenterConfig | None = None) -> PaddingReport:
    """Compare W2^2, MMD^2 and the KDE f-divergence before and after zero-padding.

    Sets of equal native dimension are compared natively and after padding to
    ``n_max``; sets of unequal dimension are compared after padding to ``n_max`` and
    again after ``extra`` further zeros.
    """
    kde = kde or KdeConfig()
    cfg = cfg or BarycenterConfig(f_choice="js")

    def divs(a, b):
        return {
            "w2_sq": solve_ot(a, b).objective,
            "mmd_sq": mmd_sq(a, b, kde),
            "fdiv": f_divergence(a, b, cfg, kde),
        }

    if raw_a.dim == raw_b.dim:
        before = divs(raw_a, raw_b)
        after = divs(pad_particles(raw_a, n_max), pad_particles(raw_b, n_max))
    else:
        a, b = pad_particles(raw_a, n_max), pad_particles(raw_b, n_max)
        before = divs(a, b)
        after = divs(pad_particles(a, n_max + extra), pad_particles(b, n_max + extra))
    diffs = {k: abs(after[k] - before[k]) for k in before}
    return PaddingReport(diffs, {"w2_sq": 1e-12, "mmd_sq": 1e-12, "fdiv": 1e-9})


# ---------------------------------------------------------------- randomized suites

def _sigmoid_loss(rng, dim, scale):
    a = rng.normal(size=dim) * rng.uniform(0.2, 1.5)
    c = rng.normal()
    B = rng.uniform(0.5, 2.0)
    return lambda Z: B / (1.0 + np.exp(-(np.atleast_2d(Z) @ a + c)))


def random_bound_instance(rng: np.random.Generator, n_groups: int = 2):
    """Random groups, their Wasserstein barycenter as center, and bounded smooth losses."""
    from .central import initial_center, wasserstein_barycenter_update

    M = int(rng.integers(2, 11))
    dim = int(rng.integers(1, 5))
    groups = [ParticleSet(rng.normal(size=(M, dim)) + rng.normal(scale=1.5, size=dim))
              for _ in range(n_groups)]
    cfg = BarycenterConfig(inner_iters=5)
    central = wasserstein_barycenter_update(groups, initial_center(groups, cfg), cfg)
    losses = [_sigmoid_loss(rng, dim, 1.0) for _ in range(n_groups)]
    return groups, central, losses


def run_bound_suite(trials: int, seed: int) -> dict:
    """Check both theorems under W2 and JS on ``trials`` random instances.

    A trial passes when all four checks pass.
    """
    rng = np.random.default_rng([seed, 1])
    counts = {"pass": 0, "fail": 0, "cases": {}}
    js = BarycenterConfig(f_choice="js")
    for _ in range(trials):
        groups, central, losses = random_bound_instance(rng, int(rng.integers(2, 4)))
        reports = {
            "transfer_w2": check_transfer_bound(groups, central, losses, "w2", js),
            "disparity_w2": check_disparity_bound(groups, central, losses, "w2", js),
            "transfer_js": check_transfer_bound(groups, central, losses, "fdiv", js),
            "disparity_js": check_disparity_bound(groups, central, losses, "fdiv", js),
        }
        for name, r in reports.items():
            counts["cases"].setdefault(name, [0, 0])[0 if r.passed else 1] += 1
        counts["pass" if all(r.passed for r in reports.values()) else "fail"] += 1
    return counts


def run_padding_suite(trials: int, seed: int) -> dict:
    rng = np.random.default_rng([seed, 2])
    counts = {"pass": 0, "fail": 0}
    for _ in range(trials):
        M = int(rng.integers(2, 9))
        P = int(rng.integers(1, 4))
        n_a = int(rng.integers(1, 6))
        n_b = n_a if rng.random() < 0.5 else int(rng.integers(1, 6))
        n_max = max(n_a, n_b) + int(rng.integers(0, 4))
        a = ParticleSet(rng.normal(scale=0.1, size=(M, P + n_a)), P)
        b = ParticleSet(rng.normal(scale=0.1, size=(M, P + n_b)) + 0.05, P)
        counts["pass" if check_padding_invariance(a, b, n_max).passed else "fail"] += 1
    return counts
