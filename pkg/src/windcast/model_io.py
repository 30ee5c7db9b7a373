"""Saving and loading trained models as JSON.

The document carries the architecture, every weight and bias, the scaler
bounds, lag/feature bookkeeping and (for interval models) the quantile
levels. Floats are written with their shortest round-trip representation,
so save -> load reproduces parameters bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import read_json, write_json
from .data import Scaler
from .errors import SchemaError
from .network import Architecture, Network

FORMAT_NAME = "windcast-model"
SCHEMA_VERSION = 1


@dataclass
class ModelBundle:
    """Everything needed to turn raw series values into predictions."""

    network: Network
    scaler: Scaler
    target_name: str
    feature_names: tuple[str, ...]
    kind: str = "point"  # "point" or "quantile"
    loss_kind: str = "mse"
    quantile_levels: tuple[float, ...] = ()
    lag: int | None = None
    horizon: int = 1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("point", "quantile"):
            raise SchemaError(f"unknown model kind {self.kind!r}")
        if self.loss_kind not in ("mse", "pinball"):
            raise SchemaError(f"unknown loss kind {self.loss_kind!r}")
        if self.kind == "quantile":
            if len(self.quantile_levels) != self.network.architecture.n_outputs:
                raise SchemaError(
                    "quantile model must have one output per quantile level"
                )
        elif self.network.architecture.n_outputs != 1:
            raise SchemaError("point model must have exactly one output")


def save_model(path: str, bundle: ModelBundle) -> None:
    doc = {
        "format": FORMAT_NAME,
        "schema_version": SCHEMA_VERSION,
        "architecture": {
            "layer_sizes": list(bundle.network.architecture.layer_sizes),
            "hidden_activation": bundle.network.architecture.hidden_activation,
            "output_activation": bundle.network.architecture.output_activation,
        },
        "kind": bundle.kind,
        "loss_kind": bundle.loss_kind,
        "quantile_levels": list(bundle.quantile_levels),
        "lag": bundle.lag,
        "horizon": bundle.horizon,
        "target_name": bundle.target_name,
        "feature_names": list(bundle.feature_names),
        "scaler": bundle.scaler.to_dict(),
        "weights": [w.tolist() for w in bundle.network.weights],
        "biases": [b.tolist() for b in bundle.network.biases],
        "metadata": bundle.metadata,
    }
    write_json(path, doc)


def load_model(path: str) -> ModelBundle:
    doc = read_json(path)
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise SchemaError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise SchemaError(
            f"{path}: unsupported schema_version {doc.get('schema_version')!r}"
        )
    for key in ("architecture", "kind", "target_name", "feature_names",
                "scaler", "weights", "biases"):
        if key not in doc:
            raise SchemaError(f"{path}: missing key {key!r}")
    arch_doc = doc["architecture"]
    arch = Architecture(
        layer_sizes=tuple(arch_doc["layer_sizes"]),
        hidden_activation=arch_doc["hidden_activation"],
        output_activation=arch_doc["output_activation"],
    )
    net = Network(
        arch,
        [np.array(w, dtype=float) for w in doc["weights"]],
        [np.array(b, dtype=float) for b in doc["biases"]],
    )
    return ModelBundle(
        network=net,
        scaler=Scaler.from_dict(doc["scaler"]),
        target_name=doc["target_name"],
        feature_names=tuple(doc["feature_names"]),
        kind=doc["kind"],
        loss_kind=doc.get("loss_kind", "mse"),
        quantile_levels=tuple(float(q) for q in doc.get("quantile_levels", [])),
        lag=doc.get("lag"),
        horizon=int(doc.get("horizon", 1)),
        metadata=doc.get("metadata", {}),
    )
