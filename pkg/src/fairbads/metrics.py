"""Accuracy, group fairness gaps and distances between weight posteriors."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import model
from .central import solve_ot
from .data import Dataset
from .particles import ParticleSet, as_points


@dataclass(frozen=True)
class FairnessReport:
    """DP uses hard predictions, DDP soft scores, EO true-positive rates.

    With a single group every gap is 0.
    """

    acc: float
    dp: float
    ddp: float
    eo: float
    per_group_pos_rate: list[float]
    per_group_tpr: list[float | None]

    def to_record(self, epoch: int, w2_weights: float | None) -> dict:
        return {
            "epoch": epoch,
            "acc": self.acc,
            "dp": self.dp,
            "ddp": self.ddp,
            "eo": self.eo,
            "w2_weights": w2_weights,
            "group_pos_rates": self.per_group_pos_rate,
            "group_tprs": self.per_group_tpr,
        }


def evaluate_probs(probs, data: Dataset, threshold: float = 0.5) -> FairnessReport:
    probs = np.asarray(probs, dtype=float)
    groups = range(data.n_groups)
    yhat = (probs >= threshold).astype(int)
    acc = float(np.mean(yhat == data.y))
    pos, soft, tpr = [], [], []
    for s in groups:
        m = data.s == s
        if not m.any():
            raise ValueError(f"group {s} is absent from the evaluation data")
        pos.append(float(yhat[m].mean()))
        soft.append(float(probs[m].mean()))
        mp = m & (data.y == 1)
        tpr.append(float(yhat[mp].mean()) if mp.any() else None)
    overall = float(probs.mean())
    valid_tpr = [t for t in tpr if t is not None]
    return FairnessReport(
        acc=acc,
        dp=max(pos) - min(pos),
        ddp=max(abs(v - overall) for v in soft),
        eo=(max(valid_tpr) - min(valid_tpr)) if valid_tpr else 0.0,
        per_group_pos_rate=pos,
        per_group_tpr=tpr,
    )


def evaluate(theta, data: Dataset, threshold: float = 0.5) -> FairnessReport:
    """Fairness report of a single logistic model on ``data``."""
    return evaluate_probs(model.predict_prob(theta, data.X), data, threshold)


def posterior_predict(particles, x, n_params: int | None = None):
    """Average of ``predict_prob`` over the theta blocks of all particles."""
    z = as_points(particles)
    if n_params is None:
        if isinstance(particles, ParticleSet) and particles.n_params:
            n_params = particles.n_params
        else:
            n_params = np.atleast_2d(x).shape[1] + 1
    p = model.predict_prob(z[:, :n_params], x)
    return float(np.mean(p)) if np.ndim(p) == 1 and np.ndim(x) == 1 else np.mean(p, axis=0)


def effective_weights(ps: ParticleSet, n_slots: int | None = None) -> np.ndarray:
    """``sigmoid(w)`` over the first ``n_slots`` weight slots (default: live slots)."""
    n = ps.live if n_slots is None else n_slots
    return model.sigmoid(ps.z[:, ps.n_params: ps.n_params + n])


def weight_distance(group_a: ParticleSet, group_b: ParticleSet) -> float:
    """W2 between two groups' effective-weight clouds.

    Compared slots are the weight slots live in at least one of the two groups, mapped
    through the sigmoid; a slot live in only one group is compared against the other
    group's padding.
    """
    if group_a.M != group_b.M:
        raise ValueError("weight distance needs equal particle counts")
    if group_a.n_weights != group_b.n_weights:
        raise ValueError("groups must share the padded weight dimension")
    n = max(group_a.live, group_b.live)
    plan = solve_ot(effective_weights(group_a, n), effective_weights(group_b, n))
    return float(np.sqrt(max(plan.objective, 0.0)))


def summarize(report: FairnessReport) -> dict:
    return asdict(report)
