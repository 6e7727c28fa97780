"""Tiny INT8 feed-forward classifier used for end-to-end fault studies.

The forward pass is plain quantized inference: int8 activations times
int8 weights accumulated in int32, plus int32 bias, rescaled by a
per-layer float multiplier, rounded, saturated back to int8, with ReLU
between layers.  A model is a JSON manifest naming layer shapes and
scales plus one binary blob holding the weights and biases.

Fault scenarios corrupt both the weights and the input activations of
every layer through :func:`mcaimem.fault.inject` before the layer runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import fault


@dataclass(frozen=True)
class QuantLayer:
    name: str
    weight: np.ndarray  # int8, shape (out_features, in_features)
    bias: np.ndarray  # int32, shape (out_features,)
    scale: float  # float multiplier applied to the int32 accumulator
    relu: bool


@dataclass(frozen=True)
class QuantClassifier:
    layers: tuple[QuantLayer, ...]

    def forward(self, x: np.ndarray, cfg: fault.InjectionConfig | None = None) -> np.ndarray:
        """Run inference; optionally corrupt weights and activations.

        Distinct deterministic substreams of ``cfg.seed`` are used per
        layer and per tensor, so a scenario is reproducible end to end.
        """
        acts = np.asarray(x, dtype=np.int8)
        if acts.ndim == 1:
            acts = acts[None, :]
        for index, layer in enumerate(self.layers):
            weight = layer.weight
            if cfg is not None:
                weight = fault.inject(weight, replace(cfg, seed=cfg.seed + 2 * index))
                acts = fault.inject(acts, replace(cfg, seed=cfg.seed + 2 * index + 1))
            acc = acts.astype(np.int32) @ weight.T.astype(np.int32) + layer.bias
            scaled = np.clip(np.rint(acc * layer.scale), -128, 127).astype(np.int8)
            acts = np.maximum(scaled, 0) if layer.relu else scaled
        return acts

    def predict(self, x: np.ndarray, cfg: fault.InjectionConfig | None = None) -> np.ndarray:
        return np.argmax(self.forward(x, cfg), axis=1)


def save_model(path: str | Path, model: QuantClassifier) -> None:
    """Write manifest JSON at ``path`` and the weight blob alongside it."""
    path = Path(path)
    blob = bytearray()
    manifest_layers = []
    for layer in model.layers:
        w = np.ascontiguousarray(layer.weight, dtype=np.int8)
        b = np.ascontiguousarray(layer.bias, dtype="<i4")
        manifest_layers.append(
            {
                "name": layer.name,
                "in_features": int(w.shape[1]),
                "out_features": int(w.shape[0]),
                "scale": float(layer.scale),
                "relu": bool(layer.relu),
                "weight_offset": len(blob),
                "bias_offset": len(blob) + w.nbytes,
            }
        )
        blob.extend(w.tobytes())
        blob.extend(b.tobytes())
    weights_name = path.stem + ".weights.bin"
    manifest = {
        "format": "int8-mlp",
        "version": 1,
        "weights_file": weights_name,
        "layers": manifest_layers,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    (path.parent / weights_name).write_bytes(bytes(blob))


def load_model(path: str | Path) -> QuantClassifier:
    path = Path(path)
    manifest = json.loads(path.read_text())
    if manifest.get("format") != "int8-mlp":
        raise ValueError(f"{path} is not an int8-mlp manifest")
    blob = (path.parent / manifest["weights_file"]).read_bytes()
    layers = []
    for entry in manifest["layers"]:
        rows, cols = entry["out_features"], entry["in_features"]
        w_off, b_off = entry["weight_offset"], entry["bias_offset"]
        weight = np.frombuffer(blob, dtype=np.int8, count=rows * cols, offset=w_off)
        bias = np.frombuffer(blob, dtype="<i4", count=rows, offset=b_off)
        layers.append(
            QuantLayer(
                name=entry["name"],
                weight=weight.reshape(rows, cols).copy(),
                bias=bias.astype(np.int32).copy(),
                scale=float(entry["scale"]),
                relu=bool(entry["relu"]),
            )
        )
    return QuantClassifier(layers=tuple(layers))


def load_dataset(data_path: str | Path, labels_path: str | Path | None = None):
    """Load (inputs, labels); labels default to ``<data>.labels.csv``."""
    from . import codec

    data_path = Path(data_path)
    if labels_path is None:
        labels_path = Path(str(data_path) + ".labels.csv")
    inputs = codec.load_tensor(data_path)
    lines = Path(labels_path).read_text().splitlines()
    if not lines or lines[0].strip() != "index,label":
        raise ValueError(f"labels file {labels_path} must start with 'index,label'")
    labels = np.full(inputs.shape[0], -1, dtype=np.int64)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        idx_text, label_text = (tok.strip() for tok in line.split(","))
        labels[int(idx_text)] = int(label_text)
    if np.any(labels < 0):
        raise ValueError(f"labels file {labels_path} does not cover every row")
    return inputs, labels


def accuracy(model: QuantClassifier, inputs, labels, cfg: fault.InjectionConfig | None = None) -> float:
    return float(np.mean(model.predict(inputs, cfg) == np.asarray(labels)))


def eval_classifier(
    model_file: str | Path,
    dataset_file: str | Path,
    cfg: fault.InjectionConfig,
    labels_file: str | Path | None = None,
) -> tuple[float, float]:
    """(clean accuracy, accuracy under the fault scenario)."""
    model = load_model(model_file)
    inputs, labels = load_dataset(dataset_file, labels_file)
    return accuracy(model, inputs, labels), accuracy(model, inputs, labels, cfg)
