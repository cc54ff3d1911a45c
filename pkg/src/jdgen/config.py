"""JSON run configuration: model + training + evaluation + artifact paths.

Every field is optional in the file; omitted fields take the defaults
below (the baseline experiment setup).  parse -> serialize -> parse is the
identity.
"""

import json
from dataclasses import dataclass, field, asdict

from .errors import ConfigError
from .levy_noise import ModelConfig
from .training import TrainConfig

DEFAULT_SEED = 20260810


@dataclass
class EvalConfig:
    alpha: float = 1.7
    n_gen: int = 25000
    xi: float = 0.95
    n_runs: int = 20

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0):
            raise ConfigError(f"alpha must be in (0, 2], got {self.alpha!r}")
        if not (0.0 < self.xi < 1.0):
            raise ConfigError(f"xi must be in (0, 1), got {self.xi!r}")
        if self.n_gen < 1000 or self.n_runs < 1:
            raise ConfigError("need n_gen >= 1000 and n_runs >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown eval config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = DEFAULT_SEED
    workdir: str = "jdgen_artifacts"

    def to_dict(self):
        return {
            "model": self.model.to_dict(),
            "train": self.train.to_dict(),
            "eval": self.eval.to_dict(),
            "seed": self.seed,
            "workdir": self.workdir,
        }

    @classmethod
    def from_dict(cls, data):
        known = {"model", "train", "eval", "seed", "workdir"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(
            model=ModelConfig.from_dict(data.get("model", {})),
            train=TrainConfig.from_dict(data.get("train", {})),
            eval=EvalConfig.from_dict(data.get("eval", {})),
            seed=int(data.get("seed", DEFAULT_SEED)),
            workdir=str(data.get("workdir", "jdgen_artifacts")),
        )


def load_config(path):
    if path is None:
        return RunConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be an object, got {type(data).__name__}")
    return RunConfig.from_dict(data)


def dump_config(cfg, path=None):
    text = json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
