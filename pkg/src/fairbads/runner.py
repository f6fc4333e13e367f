"""End-to-end Fair-BADS training loop.

Each epoch moves every group's particles by SVGD on the group posterior plus the score
of the central cloud, then refreshes the central cloud under the configured divergence
and records a fairness snapshot on held-out data.
"""
from __future__ import annotations

import csv
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import model
from .central import BarycenterConfig, KdeConfig, barycenter_update, initial_center
from .config import ConfigError, ExperimentConfig
from .data import (Dataset, MetaSet, carve_meta, inject_label_bias, load_dataset, make_synthetic,
                   rng_for)
from .metrics import evaluate_probs, weight_distance
from .particles import ParticleSet
from .posterior import GroupPosterior, PriorConfig
from .svgd import SvgdConfig, fair_score, median_bandwidth, svgd_step
from .theory import check_disparity_bound, check_transfer_bound

log = logging.getLogger(__name__)


class RunAbort(RuntimeError):
    """Training produced a non-finite particle."""


@dataclass(frozen=True)
class RunData:
    train: Dataset
    meta: MetaSet
    test: Dataset


@dataclass
class RunState:
    groups: list[ParticleSet]
    central: ParticleSet
    epoch: int = 0
    history: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class RunContext:
    cfg: ExperimentConfig
    data: RunData
    posteriors: list[GroupPosterior]

    @property
    def bary_cfg(self) -> BarycenterConfig:
        div = {"w2": "wasserstein", "mmd": "mmd", "fdiv": "fdiv"}[self.cfg.divergence]
        return BarycenterConfig(div, inner_iters=self.cfg.bary_iters, gd_step=self.cfg.bary_step,
                                f_choice=self.cfg.f_choice)

    @property
    def svgd_cfg(self) -> SvgdConfig:
        bw = self.cfg.svgd_bandwidth
        return SvgdConfig(self.cfg.step_size, bw if bw == "median" else float(bw))


# ---------------------------------------------------------------- data

def _read_pseudo_labels(path, n: int) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != n or (rows and "p1" not in rows[0]):
        raise ConfigError(f"pseudo_labels: expected a 'p1' column with {n} rows")
    p1 = np.array([float(r["p1"]) for r in rows])
    if np.any((p1 < 0) | (p1 > 1)):
        raise ConfigError("pseudo_labels: probabilities must lie in [0, 1]")
    return np.column_stack([1.0 - p1, p1])


def prepare_data(cfg: ExperimentConfig) -> RunData:
    """Load or synthesize data, inject label bias, carve the meta set and a clean test set."""
    if cfg.data_path:
        full = load_dataset(cfg.data_path)
        perm = rng_for(cfg.seed, "split_test").permutation(len(full))
        n_test = int(round(cfg.test_fraction * len(full)))
        test, train = full.subset(np.sort(perm[:n_test])), full.subset(np.sort(perm[n_test:]))
    else:
        full = make_synthetic(cfg.n_samples + cfg.n_test, cfg.n_features, cfg.minority_frac,
                              cfg.seed, cfg.group_shift)
        train = full.subset(np.arange(cfg.n_samples))
        test = full.subset(np.arange(cfg.n_samples, len(full)))
    if not 0 <= cfg.bias_group < train.n_groups:
        raise ConfigError(f"bias_group: {cfg.bias_group} is not a group of the data")
    train = inject_label_bias(train, cfg.bias_amount, cfg.bias_group, cfg.seed, cfg.symmetric_bias)
    train, meta = carve_meta(train, cfg.meta_fraction, cfg.seed)
    if cfg.meta_mode == "kl":
        if not cfg.pseudo_labels:
            raise ConfigError("pseudo_labels: required when meta_mode=kl")
        meta = MetaSet(meta.X, meta.y, _read_pseudo_labels(cfg.pseudo_labels, len(meta)))
    return RunData(train, meta, test)


def build_context(cfg: ExperimentConfig, data: RunData | None = None) -> RunContext:
    data = data or prepare_data(cfg)
    prior = PriorConfig(cfg.beta, cfg.prior_scale)
    P, n_max = data.train.d + 1, data.train.n_max
    posteriors = [
        GroupPosterior(data.train.group(s), data.meta, prior, P, n_max, s, cfg.meta_mode == "kl")
        for s in range(data.train.n_groups)
    ]
    return RunContext(cfg, data, posteriors)


# ---------------------------------------------------------------- loop

def init_run(ctx: RunContext) -> RunState:
    """Small Gaussian theta blocks, live weights at ``logit(beta)``, padding at zero."""
    cfg = ctx.cfg
    rng = rng_for(cfg.seed, "init_run")
    w0 = float(np.log(cfg.beta / (1.0 - cfg.beta)))
    groups = []
    for gp in ctx.posteriors:
        z = np.zeros((cfg.particles, gp.dim))
        z[:, : gp.n_params] = rng.normal(0.0, cfg.init_scale, size=(cfg.particles, gp.n_params))
        z[:, gp.n_params: gp.n_params + gp.n_live] = w0
        groups.append(ParticleSet(z, gp.n_params, gp.n_live))
    central = initial_center(groups, ctx.bary_cfg)
    central = ParticleSet(central.z, groups[0].n_params)
    state = RunState(groups, central)
    state.history.append(snapshot(ctx, state))
    return state


def kde_config(ctx: RunContext, state: RunState) -> KdeConfig:
    """KDE bandwidth: fixed ``h`` or, adaptively, the median heuristic floored at ``h``."""
    cfg = ctx.cfg
    h = cfg.kde_bandwidth
    if cfg.kde_rule == "adaptive":
        cloud = np.vstack([g.z for g in state.groups] + [state.central.z])
        h = max(h, median_bandwidth(cloud))
    return KdeConfig(h, cfg.eps_stab)


def _threads() -> int:
    try:
        n = int(os.environ.get("FAIRBADS_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def _update_group(ctx: RunContext, gp: GroupPosterior, ps: ParticleSet, central: ParticleSet,
                  kde: KdeConfig, lam: float) -> ParticleSet:
    svgd_cfg = ctx.svgd_cfg
    for _ in range(ctx.cfg.inner_steps):
        ps = svgd_step(ps, fair_score(gp, central, kde, lam), svgd_cfg)
    return ps


def train_epoch(ctx: RunContext, state: RunState) -> RunState:
    epoch = state.epoch + 1
    lam = ctx.cfg.lambda_at(epoch)
    kde = kde_config(ctx, state)
    jobs = list(zip(ctx.posteriors, state.groups))
    n_workers = min(_threads(), len(jobs))
    try:
        if n_workers > 1:
            with ThreadPoolExecutor(n_workers) as pool:
                groups = list(pool.map(lambda j: _update_group(ctx, *j, state.central, kde, lam), jobs))
        else:
            groups = [_update_group(ctx, gp, ps, state.central, kde, lam) for gp, ps in jobs]
    except FloatingPointError as exc:
        raise RunAbort(f"epoch {epoch}: {exc}") from None
    for s, ps in enumerate(groups):
        bad = np.flatnonzero(~np.all(np.isfinite(ps.z), axis=1))
        if bad.size:
            raise RunAbort(f"epoch {epoch}: group {s} particle {int(bad[0])} is not finite")
    new_state = RunState(groups, state.central, epoch, state.history)
    kde = kde_config(ctx, new_state)
    # warm: continue from the previous central; mean: restart from the current group mean
    start = state.central
    if ctx.cfg.bary_init == "mean":
        start = ParticleSet(initial_center(groups, ctx.bary_cfg).z, groups[0].n_params)
    try:
        central = barycenter_update(groups, start, ctx.bary_cfg, kde)
    except FloatingPointError as exc:
        raise RunAbort(f"epoch {epoch}: central update failed: {exc}") from None
    if not np.all(np.isfinite(central.z)):
        raise RunAbort(f"epoch {epoch}: central particles are not finite")
    new_state.central = central
    new_state.history = state.history + [snapshot(ctx, new_state)]
    return new_state


# ---------------------------------------------------------------- evaluation

def predict_test(ctx: RunContext, state: RunState, X=None, s=None) -> np.ndarray:
    test = ctx.data.test
    X = test.X if X is None else X
    s = test.s if s is None else s
    P = state.groups[0].n_params
    mode = ctx.cfg.predict_mode
    if mode == "ensemble":
        thetas = np.vstack([g.theta for g in state.groups])
        return model.predict_prob(thetas, X).mean(axis=0)
    if mode == "central":
        return model.predict_prob(state.central.z[:, :P], X).mean(axis=0)
    probs = np.empty(len(X))
    for g, ps in enumerate(state.groups):
        m = s == g
        if m.any():
            probs[m] = model.predict_prob(ps.theta, X[m]).mean(axis=0)
    return probs


def largest_groups(ctx: RunContext) -> tuple[int, int]:
    sizes = ctx.data.train.group_sizes
    order = sorted(range(len(sizes)), key=lambda g: (-sizes[g], g))
    return order[0], order[1]


def snapshot(ctx: RunContext, state: RunState) -> dict:
    report = evaluate_probs(predict_test(ctx, state), ctx.data.test, ctx.cfg.threshold)
    wd = None
    if len(state.groups) >= 2:
        a, b = largest_groups(ctx)
        wd = weight_distance(state.groups[a], state.groups[b])
    return report.to_record(state.epoch, wd)


def group_losses(ctx: RunContext):
    """Per-group unweighted mean cross-entropy as a function of a particle's theta block."""
    P = ctx.posteriors[0].n_params

    def make(gd):
        return lambda Z: model.cross_entropy(model.predict_prob(np.atleast_2d(Z)[:, :P], gd.X),
                                             gd.y).mean(axis=-1)

    return [make(gp.group) for gp in ctx.posteriors]


def bound_summary(ctx: RunContext, state: RunState) -> dict:
    losses = group_losses(ctx)
    div = {"w2": "w2", "mmd": "mmd", "fdiv": "fdiv"}[ctx.cfg.divergence]
    kde = kde_config(ctx, state)
    out = {}
    for name, check in (("transfer", check_transfer_bound), ("disparity", check_disparity_bound)):
        if len(state.groups) < 2 and name == "disparity":
            continue
        r = check(state.groups, state.central, losses, div, ctx.bary_cfg, kde)
        out[name] = {"status": r.status, "lhs": r.lhs, "rhs": r.rhs,
                     "slack": r.slack if r.status != "NOT_CHECKABLE" else None}
    return out


def run_experiment(cfg: ExperimentConfig, on_epoch=None) -> tuple[RunContext, RunState]:
    ctx = build_context(cfg)
    state = init_run(ctx)
    if on_epoch:
        on_epoch(state.history[-1])
    for _ in range(cfg.epochs):
        state = train_epoch(ctx, state)
        if on_epoch:
            on_epoch(state.history[-1])
    return ctx, state
