"""Versioned on-disk containers for trained models, one JSON file per object.

Weights are stored as row-major (C-order) lists of 64-bit floats with their
shapes spelled out. JSON float round-tripping is exact for finite doubles, so
a load followed by a save is bit-stable.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import asdict

import numpy as np

from .anchor_ae import ModelConfig, NormStats, PARAM_NAMES, TrainedModel

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """The file is not a model container this version understands."""


def _array_out(arr: np.ndarray) -> dict:
    a = np.ascontiguousarray(np.asarray(arr, dtype=np.float64))
    return {"shape": list(a.shape), "data": a.ravel(order="C").tolist()}


def _array_in(obj: dict, what: str) -> np.ndarray:
    try:
        shape = tuple(obj["shape"])
        data = obj["data"]
    except (KeyError, TypeError):
        raise ModelFormatError(f"malformed array field {what!r}") from None
    arr = np.array(data, dtype=np.float64).reshape(shape, order="C")
    return arr


def save_model(model: TrainedModel, path: str | os.PathLike) -> None:
    """Write the model atomically (temp file + rename)."""
    if not model.calibrated:
        raise ValueError("refusing to store an uncalibrated model")
    doc = {
        "format_version": FORMAT_VERSION,
        "config": asdict(model.config),
        "norm": {"mean": _array_out(model.norm.mean), "std": _array_out(model.norm.std)},
        "weights": {name: _array_out(model.params[name]) for name in PARAM_NAMES},
        "calibration": {
            "err_mean": _array_out(model.err_mean),
            "err_std": _array_out(model.err_std),
        },
        "latent_ref": _array_out(model.latent_ref),
        "metadata": model.metadata,
    }
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, sort_keys=True)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: str | os.PathLike) -> TrainedModel:
    """Load a model container, refusing unknown format versions."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not a model container ({exc})") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: format version {version!r} not supported (expected {FORMAT_VERSION})"
        )
    cfg = ModelConfig(**doc["config"])
    norm = NormStats(
        mean=_array_in(doc["norm"]["mean"], "norm.mean"),
        std=_array_in(doc["norm"]["std"], "norm.std"),
    )
    params = {name: _array_in(doc["weights"][name], name) for name in PARAM_NAMES}
    return TrainedModel(
        config=cfg,
        norm=norm,
        params=params,
        err_mean=_array_in(doc["calibration"]["err_mean"], "err_mean"),
        err_std=_array_in(doc["calibration"]["err_std"], "err_std"),
        latent_ref=_array_in(doc["latent_ref"], "latent_ref"),
        metadata=doc.get("metadata", {}),
    )
