"""Experiment configuration stored as flat ``key=value`` text."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path


class ConfigError(ValueError):
    pass


DIVERGENCE_FLAGS = ("w2", "mmd", "fdiv")
PREDICT_MODES = ("ensemble", "group", "central")
META_MODES = ("ce", "kl")
KDE_RULES = ("fixed", "adaptive")
BARY_INITS = ("warm", "mean")


@dataclass(frozen=True)
class ExperimentConfig:
    # alignment
    divergence: str = "w2"
    f_choice: str = "js"
    lambda_fair: float = 1.0
    lambda_ramp_epochs: int = 0
    baseline: bool = False
    # sampler
    particles: int = 20
    step_size: float = 0.01
    svgd_bandwidth: str = "median"
    inner_steps: int = 1
    init_scale: float = 0.01
    # posterior
    beta: float = 0.005
    prior_scale: float = 1.0
    meta_mode: str = "ce"
    # central distribution / KDE
    kde_bandwidth: float = 0.1
    kde_rule: str = "fixed"
    eps_stab: float = 1e-3
    bary_iters: int = 1
    bary_step: float = 0.1
    bary_init: str = "warm"
    # schedule
    epochs: int = 100
    seed: int = 0
    # data
    data_path: str = ""
    n_samples: int = 2000
    n_features: int = 5
    minority_frac: float = 0.3
    group_shift: float = 0.0
    n_test: int = 2000
    test_fraction: float = 0.3
    bias_amount: float = 0.4
    bias_group: int = 1
    symmetric_bias: bool = False
    meta_fraction: float = 0.01
    pseudo_labels: str = ""
    # evaluation
    predict_mode: str = "ensemble"
    threshold: float = 0.5

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def bad(key, msg):
            raise ConfigError(f"{key}: {msg}")

        if self.divergence not in DIVERGENCE_FLAGS:
            bad("divergence", f"must be one of {', '.join(DIVERGENCE_FLAGS)}, got {self.divergence!r}")
        if self.f_choice not in ("kl", "reverse_kl", "js"):
            bad("f_choice", f"unknown f {self.f_choice!r}")
        if self.predict_mode not in PREDICT_MODES:
            bad("predict_mode", f"must be one of {', '.join(PREDICT_MODES)}")
        if self.meta_mode not in META_MODES:
            bad("meta_mode", "must be ce or kl")
        if self.kde_rule not in KDE_RULES:
            bad("kde_rule", "must be fixed or adaptive")
        if self.bary_init not in BARY_INITS:
            bad("bary_init", "must be warm or mean")
        if self.svgd_bandwidth != "median":
            try:
                if float(self.svgd_bandwidth) <= 0:
                    bad("svgd_bandwidth", "must be positive")
            except ValueError:
                bad("svgd_bandwidth", "must be 'median' or a number")
        for key in ("particles", "n_samples", "n_features", "inner_steps"):
            if getattr(self, key) < 1:
                bad(key, "must be at least 1")
        for key in ("epochs", "bary_iters", "lambda_ramp_epochs", "n_test"):
            if getattr(self, key) < 0:
                bad(key, "must be nonnegative")
        for key in ("step_size", "kde_bandwidth", "eps_stab", "bary_step", "init_scale"):
            if not getattr(self, key) > 0:
                bad(key, "must be positive")
        if not 0 < self.beta < 1:
            bad("beta", "must lie in (0, 1)")
        if self.lambda_fair < 0 or self.prior_scale < 0:
            bad("lambda_fair" if self.lambda_fair < 0 else "prior_scale", "must be nonnegative")
        if not 0 <= self.bias_amount <= 1:
            bad("bias_amount", "must lie in [0, 1]")
        if not 0 < self.meta_fraction < 1:
            bad("meta_fraction", "must lie in (0, 1)")
        if not 0 < self.minority_frac < 1:
            bad("minority_frac", "must lie in (0, 1)")
        if not 0 < self.test_fraction < 1:
            bad("test_fraction", "must lie in (0, 1)")

    @property
    def effective_lambda(self) -> float:
        return 0.0 if self.baseline else self.lambda_fair

    def lambda_at(self, epoch: int) -> float:
        """Fairness weight used during ``epoch`` (1-based), with an optional linear ramp."""
        lam = self.effective_lambda
        if self.lambda_ramp_epochs > 0:
            lam *= min(1.0, epoch / self.lambda_ramp_epochs)
        return lam

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def dumps(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines) + "\n"


_TYPES = {f.name: str(f.type) for f in fields(ExperimentConfig)}


def coerce(key: str, text: str):
    if key not in _TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = _TYPES[key]
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {kind}") from None
    return text


def parse_config(text: str) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, val = line.split("=", 1)
        key = key.strip()
        values[key] = coerce(key, val)
    return values


def load_config(path, **overrides) -> ExperimentConfig:
    values = parse_config(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
