"""Run configuration: a single versioned JSON document.

Sections: data (source CSV and featurization mode), model (architecture
and loss), optimizer, strategies (the three optional training add-ons),
training (loop controls and seed), split. Unknown keys are rejected so
typos fail loudly. CLI flags may override individual fields after load.

Example document:

{
  "schema_version": 1,
  "data": {
    "path": "wind.csv",
    "timestamp_col": "timestamp",
    "target_col": "power",
    "mode": "lags",
    "lag": 48,
    "horizon": 1
  },
  "model": {"hidden_sizes": [16], "loss": "mse"},
  "optimizer": {"kind": "adam", "fixed_lr": 0.001},
  "strategies": {"centralize": true, "cosine_lr": true, "initial_lr": 0.1,
                 "noise_tau": 0.0001, "noise_seed": 7},
  "training": {"epochs": 200, "seed": 0},
  "split": [0.8, 0.1, 0.1]
}
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import SchemaError, UsageError
from .metrics import DEFAULT_QUANTILE_LEVELS
from .optim import OPTIMIZER_KINDS

CONFIG_SCHEMA_VERSION = 1


def _check_keys(section: str, doc: dict, allowed) -> None:
    unknown = set(doc) - set(allowed)
    if unknown:
        raise SchemaError(f"config section {section!r}: unknown keys {sorted(unknown)}")


def _typed(section: str, key: str, value, types, allow_none=False):
    if value is None and allow_none:
        return None
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise SchemaError(f"config {section}.{key}: expected a number, got a boolean")
    if not isinstance(value, types):
        raise SchemaError(f"config {section}.{key}: bad type {type(value).__name__}")
    return value


@dataclass
class DataConfig:
    path: str
    timestamp_col: str
    target_col: str
    mode: str = "lags"  # "lags" or "nwp"
    feature_cols: tuple[str, ...] = ()
    lag: int = 48
    horizon: int = 1
    horizon_alignment: int = 0


@dataclass
class ModelConfig:
    hidden_sizes: tuple[int, ...] = (16,)
    hidden_activation: str = "relu"
    output_activation: str = "identity"
    loss: str = "mse"
    quantile_levels: tuple[float, ...] = ()


@dataclass
class OptimizerSection:
    kind: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    fixed_lr: float = 0.001


@dataclass
class StrategySection:
    centralize: bool = False
    cosine_lr: bool = False
    initial_lr: float = 0.1
    total_epochs: int | None = None  # None: use training.epochs
    noise_tau: float = 0.0
    noise_seed: int = 0


@dataclass
class TrainingSection:
    epochs: int = 100
    batch_size: int | None = None
    early_stop_patience: int | None = None
    seed: int = 0


@dataclass
class RunConfig:
    data: DataConfig
    model: ModelConfig = field(default_factory=ModelConfig)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    strategies: StrategySection = field(default_factory=StrategySection)
    training: TrainingSection = field(default_factory=TrainingSection)
    split: tuple[float, float, float] = (0.8, 0.1, 0.1)
    base_dir: str = "."

    @property
    def data_path(self) -> str:
        """Data path resolved relative to the config file's directory."""
        if os.path.isabs(self.data.path):
            return self.data.path
        return os.path.join(self.base_dir, self.data.path)


def _parse_data(doc: dict) -> DataConfig:
    _check_keys("data", doc, (
        "path", "timestamp_col", "target_col", "mode", "feature_cols",
        "lag", "horizon", "horizon_alignment",
    ))
    for key in ("path", "timestamp_col", "target_col"):
        if key not in doc:
            raise SchemaError(f"config data.{key} is required")
    cfg = DataConfig(
        path=_typed("data", "path", doc["path"], str),
        timestamp_col=_typed("data", "timestamp_col", doc["timestamp_col"], str),
        target_col=_typed("data", "target_col", doc["target_col"], str),
        mode=doc.get("mode", "lags"),
        feature_cols=tuple(doc.get("feature_cols", ())),
        lag=_typed("data", "lag", doc.get("lag", 48), int),
        horizon=_typed("data", "horizon", doc.get("horizon", 1), int),
        horizon_alignment=_typed(
            "data", "horizon_alignment", doc.get("horizon_alignment", 0), int
        ),
    )
    if cfg.mode not in ("lags", "nwp"):
        raise SchemaError(f"config data.mode must be 'lags' or 'nwp', got {cfg.mode!r}")
    if cfg.mode == "nwp" and not cfg.feature_cols:
        raise SchemaError("config data.feature_cols is required in nwp mode")
    if cfg.lag < 1 or cfg.horizon < 1 or cfg.horizon_alignment < 0:
        raise SchemaError("config data: lag/horizon must be >= 1, alignment >= 0")
    return cfg


def _parse_model(doc: dict) -> ModelConfig:
    _check_keys("model", doc, (
        "hidden_sizes", "hidden_activation", "output_activation",
        "loss", "quantile_levels",
    ))
    loss = doc.get("loss", "mse")
    if loss not in ("mse", "pinball"):
        raise SchemaError(f"config model.loss must be 'mse' or 'pinball', got {loss!r}")
    levels = doc.get("quantile_levels")
    if levels is None:
        levels = DEFAULT_QUANTILE_LEVELS if loss == "pinball" else ()
    hidden = tuple(doc.get("hidden_sizes", (16,)))
    if not hidden or any(not isinstance(s, int) or s < 1 for s in hidden):
        raise SchemaError("config model.hidden_sizes must be positive integers")
    return ModelConfig(
        hidden_sizes=hidden,
        hidden_activation=doc.get("hidden_activation", "relu"),
        output_activation=doc.get("output_activation", "identity"),
        loss=loss,
        quantile_levels=tuple(float(q) for q in levels),
    )


def _parse_optimizer(doc: dict) -> OptimizerSection:
    _check_keys("optimizer", doc, ("kind", "beta1", "beta2", "epsilon", "fixed_lr"))
    kind = doc.get("kind", "adam")
    if kind not in OPTIMIZER_KINDS:
        raise SchemaError(f"config optimizer.kind must be one of {OPTIMIZER_KINDS}")
    return OptimizerSection(
        kind=kind,
        beta1=float(_typed("optimizer", "beta1", doc.get("beta1", 0.9), (int, float))),
        beta2=float(_typed("optimizer", "beta2", doc.get("beta2", 0.999), (int, float))),
        epsilon=float(_typed("optimizer", "epsilon", doc.get("epsilon", 1e-8), (int, float))),
        fixed_lr=float(_typed("optimizer", "fixed_lr", doc.get("fixed_lr", 0.001), (int, float))),
    )


def _parse_strategies(doc: dict) -> StrategySection:
    _check_keys("strategies", doc, (
        "centralize", "cosine_lr", "initial_lr", "total_epochs",
        "noise_tau", "noise_seed",
    ))
    return StrategySection(
        centralize=_typed("strategies", "centralize", doc.get("centralize", False), bool),
        cosine_lr=_typed("strategies", "cosine_lr", doc.get("cosine_lr", False), bool),
        initial_lr=float(_typed("strategies", "initial_lr", doc.get("initial_lr", 0.1), (int, float))),
        total_epochs=_typed("strategies", "total_epochs", doc.get("total_epochs"), int, allow_none=True),
        noise_tau=float(_typed("strategies", "noise_tau", doc.get("noise_tau", 0.0), (int, float))),
        noise_seed=_typed("strategies", "noise_seed", doc.get("noise_seed", 0), int),
    )


def _parse_training(doc: dict) -> TrainingSection:
    _check_keys("training", doc, ("epochs", "batch_size", "early_stop_patience", "seed"))
    return TrainingSection(
        epochs=_typed("training", "epochs", doc.get("epochs", 100), int),
        batch_size=_typed("training", "batch_size", doc.get("batch_size"), int, allow_none=True),
        early_stop_patience=_typed(
            "training", "early_stop_patience", doc.get("early_stop_patience"), int, allow_none=True
        ),
        seed=_typed("training", "seed", doc.get("seed", 0), int),
    )


def parse_config(doc: dict, base_dir: str = ".") -> RunConfig:
    if not isinstance(doc, dict):
        raise SchemaError("config must be a JSON object")
    _check_keys("<root>", doc, (
        "schema_version", "data", "model", "optimizer", "strategies",
        "training", "split",
    ))
    version = doc.get("schema_version", CONFIG_SCHEMA_VERSION)
    if version != CONFIG_SCHEMA_VERSION:
        raise SchemaError(f"unsupported config schema_version {version!r}")
    if "data" not in doc:
        raise SchemaError("config section 'data' is required")
    split = tuple(doc.get("split", (0.8, 0.1, 0.1)))
    if len(split) != 3:
        raise SchemaError("config split must have three ratios")
    return RunConfig(
        data=_parse_data(doc["data"]),
        model=_parse_model(doc.get("model", {})),
        optimizer=_parse_optimizer(doc.get("optimizer", {})),
        strategies=_parse_strategies(doc.get("strategies", {})),
        training=_parse_training(doc.get("training", {})),
        split=(float(split[0]), float(split[1]), float(split[2])),
        base_dir=base_dir,
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(doc, base_dir=os.path.dirname(os.path.abspath(path)))
