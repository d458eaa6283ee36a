"""Flat `key = value` experiment configuration with `#` comments."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields

from .curriculum import DEFAULT_DELTA_H, CurriculumConfig
from .nav_env import VARIANTS
from .td3 import RESET_MODES, Td3Config

METHODS = ("dgcrl", "naive", "itr", "etr", "scratch")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    variant: str = "V1"
    method: str = "dgcrl"
    num_tasks: int = 50
    episodes_per_task: int = 100
    seeds: list[int] = field(default_factory=lambda: [0])
    reset_mode: str = "both"
    demo_fraction: float = 1.0
    demo_count: int = 50
    # training episodes per bootstrap agent; 0 means episodes_per_task
    demo_episodes: int = 0
    task_seed: int = 0
    demo_seed: int = 1000
    # TD3
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    action_noise: float = 0.05
    policy_noise: float = 0.02
    noise_clip: float = 0.05
    actor_delay: int = 2
    batch_size: int = 100
    buffer_capacity: int = 100_000
    action_bound: float = 0.1
    actor_hidden: list[int] = field(default_factory=lambda: [400, 300])
    critic_hidden: list[int] = field(default_factory=lambda: [400, 300])
    # curriculum; delta_h 0 means the per-variant default
    horizon: int = 100
    delta_h: int = 0
    eval_noise: float = 0.0
    beta_pos: float = 0.9
    beta_neg: float = 1.3
    # reporting
    ft_offset: float = 100.0
    bootstrap_resamples: int = 2000
    confidence: float = 0.95
    output_dir: str = "runs"

    def td3(self) -> Td3Config:
        names = {f.name for f in fields(Td3Config)}
        return Td3Config(**{k: getattr(self, k) for k in names})

    def curriculum(self) -> CurriculumConfig:
        return CurriculumConfig(
            horizon=self.horizon,
            delta_h=self.delta_h or DEFAULT_DELTA_H[self.variant],
            episode_budget=self.episodes_per_task,
            eval_noise=self.eval_noise,
            beta_pos=self.beta_pos,
            beta_neg=self.beta_neg,
        )

    @property
    def bootstrap_episodes(self) -> int:
        return self.demo_episodes or self.episodes_per_task

    def validate(self) -> "ExperimentConfig":
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(f"{key}: {msg}")

        need(self.variant in VARIANTS, "variant", f"must be one of {VARIANTS}")
        need(self.method in METHODS, "method", f"must be one of {METHODS}")
        need(self.reset_mode in RESET_MODES, "reset_mode", f"must be one of {RESET_MODES}")
        need(self.num_tasks >= 1, "num_tasks", "must be >= 1")
        need(self.episodes_per_task >= 1, "episodes_per_task", "must be >= 1")
        need(len(self.seeds) >= 1, "seeds", "need at least one seed")
        need(0.0 < self.demo_fraction <= 1.0, "demo_fraction", "must be in (0, 1]")
        need(self.demo_count >= 1, "demo_count", "must be >= 1")
        need(self.demo_episodes >= 0, "demo_episodes", "must be >= 0")
        need(0.0 <= self.gamma < 1.0, "gamma", "must be in [0, 1)")
        need(0.0 <= self.tau <= 1.0, "tau", "must be in [0, 1]")
        for key in ("actor_lr", "critic_lr", "noise_clip", "action_bound"):
            need(getattr(self, key) > 0, key, "must be positive")
        for key in ("action_noise", "policy_noise", "eval_noise"):
            need(getattr(self, key) >= 0, key, "must be non-negative")
        need(self.actor_delay >= 1, "actor_delay", "must be >= 1")
        need(1 <= self.batch_size <= self.buffer_capacity, "batch_size",
             "must be in [1, buffer_capacity]")
        for key in ("actor_hidden", "critic_hidden"):
            need(len(getattr(self, key)) >= 1 and min(getattr(self, key)) >= 1, key,
                 "need at least one positive layer size")
        need(self.horizon == 100, "horizon", "the navigation tasks have a fixed horizon of 100")
        need(0 <= self.delta_h <= self.horizon, "delta_h", "must be in [0, horizon]")
        need(self.beta_pos > 0 and self.beta_pos <= 1, "beta_pos", "must be in (0, 1]")
        need(self.beta_neg >= 1, "beta_neg", "must be >= 1")
        need(self.ft_offset >= 0, "ft_offset", "must be non-negative")
        need(self.bootstrap_resamples >= 1, "bootstrap_resamples", "must be >= 1")
        need(0 < self.confidence < 1, "confidence", "must be in (0, 1)")
        return self


_FIELDS = {f.name: f for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    default = getattr(ExperimentConfig(), key)
    if isinstance(default, list):
        return [int(x) for x in raw.replace(" ", "").split(",") if x]
    if isinstance(default, bool):
        return raw.lower() in ("1", "true", "yes")
    return type(default)(raw)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected `key = value`")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key}: cannot parse {raw!r}") from None
    try:
        return ExperimentConfig(**values).validate()
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in dataclasses.asdict(cfg).items():
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
