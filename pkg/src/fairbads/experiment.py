"""Direction-of-effect experiment: aligned runs against the no-alignment baseline.

Synthetic two-group data (70/30 split, five features) with one-sided label bias on the
minority group. Every variant shares data, initialization and schedule; only the
divergence and the fairness weight differ.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .runner import run_experiment

DIRECTION_CONFIG = ExperimentConfig(
    n_samples=2000,
    n_test=2000,
    n_features=5,
    minority_frac=0.3,
    bias_amount=0.4,
    bias_group=1,
    meta_fraction=0.01,
    particles=20,
    beta=0.005,
    kde_bandwidth=0.1,
    kde_rule="adaptive",
    eps_stab=1e-3,
    step_size=0.03,
    lambda_fair=300.0,
    epochs=600,
    bary_iters=3,
    bary_step=100.0,
    bary_init="mean",
    predict_mode="group",
)

# required DP ratio against the baseline, per divergence
DP_FACTORS = {"w2": 0.8, "mmd": 0.9, "fdiv": 0.9}
ACC_TOLERANCE = 0.02


@dataclass
class VariantResult:
    name: str
    acc: list[float] = field(default_factory=list)
    dp: list[float] = field(default_factory=list)
    eo: list[float] = field(default_factory=list)
    wd_initial: list[float] = field(default_factory=list)
    wd_final: list[float] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def mean_acc(self) -> float:
        return float(np.mean(self.acc))

    @property
    def mean_dp(self) -> float:
        return float(np.mean(self.dp))

    @property
    def weights_aligned(self) -> bool:
        """Final weight distance below the initial one for every seed."""
        return all(f < i for i, f in zip(self.wd_initial, self.wd_final))


def variant_config(name: str, seed: int, base: ExperimentConfig = DIRECTION_CONFIG) -> ExperimentConfig:
    if name == "baseline":
        return base.replace(seed=seed, baseline=True)
    return base.replace(seed=seed, divergence=name)


def run_variant(name: str, seeds, base: ExperimentConfig = DIRECTION_CONFIG) -> VariantResult:
    res = VariantResult(name)
    t0 = time.perf_counter()
    for seed in seeds:
        _, state = run_experiment(variant_config(name, seed, base))
        first, last = state.history[0], state.history[-1]
        res.acc.append(last["acc"])
        res.dp.append(last["dp"])
        res.eo.append(last["eo"])
        res.wd_initial.append(first["w2_weights"])
        res.wd_final.append(last["w2_weights"])
    res.seconds = time.perf_counter() - t0
    return res


def direction_of_effect(seeds=range(5), divergences=("w2", "mmd", "fdiv"),
                        base: ExperimentConfig = DIRECTION_CONFIG) -> dict[str, VariantResult]:
    out = {"baseline": run_variant("baseline", seeds, base)}
    for div in divergences:
        out[div] = run_variant(div, seeds, base)
    return out


def verdicts(results: dict[str, VariantResult]) -> dict[str, dict]:
    """Per-divergence DP-ratio, accuracy and weight-alignment verdicts."""
    base = results["baseline"]
    out = {}
    for div, res in results.items():
        if div == "baseline":
            continue
        ratio = res.mean_dp / base.mean_dp if base.mean_dp > 0 else float("inf")
        out[div] = {
            "dp_ratio": ratio,
            "dp_ok": ratio <= DP_FACTORS[div],
            "acc_gap": res.mean_acc - base.mean_acc,
            "acc_ok": abs(res.mean_acc - base.mean_acc) <= ACC_TOLERANCE,
            "wd_ok": res.weights_aligned,
        }
    return out
