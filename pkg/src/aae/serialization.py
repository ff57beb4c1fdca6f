"""
Versioned JSON model files.

Floats are written with Python's shortest round-trip repr, so weights survive
save -> load bit-exactly and save -> load -> save reproduces the same bytes.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from ..data.csv_io import atomic_write_text
from ..exceptions import CorruptModelError, ModelVersionError
from ..nn.core import Activation, DenseLayer, Mlp
from .model import AaeModel
from .priors import prior_from_dict

logger = logging.getLogger(__name__)

FORMAT_NAME = "doping-aae"
FORMAT_VERSION = 1


def _mlp_to_dict(mlp: Mlp) -> List[Dict[str, Any]]:
    return [
        {
            "in": layer.in_dim,
            "out": layer.out_dim,
            "activation": layer.activation.value,
            "weights": layer.weights.reshape(-1).tolist(),
            "bias": layer.bias.tolist()
        }
        for layer in mlp.layers
    ]


def _mlp_from_dict(layers: List[Dict[str, Any]]) -> Mlp:
    built = []
    for entry in layers:
        weights = np.asarray(entry["weights"], dtype=np.float64)
        if weights.size != entry["in"] * entry["out"]:
            raise CorruptModelError(
                f"layer declares {entry['in']}x{entry['out']} weights but stores {weights.size}"
            )
        built.append(DenseLayer(
            weights.reshape(entry["in"], entry["out"]),
            np.asarray(entry["bias"], dtype=np.float64),
            Activation(entry["activation"])
        ))
    return Mlp(built)


def model_to_dict(model: AaeModel) -> Dict[str, Any]:
    """Convert to the on-disk document."""
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "input_dim": model.input_dim,
        "latent_dim": model.latent_dim,
        "label_width": model.label_width,
        "prior": model.prior.to_dict(),
        "anomaly_prior": model.anomaly_prior.to_dict() if model.anomaly_prior else None,
        "networks": {
            "encoder": _mlp_to_dict(model.encoder),
            "decoder": _mlp_to_dict(model.decoder),
            "discriminator": _mlp_to_dict(model.discriminator)
        }
    }


def model_from_dict(data: Dict[str, Any]) -> AaeModel:
    """Rebuild a model from ``model_to_dict`` output."""
    if not isinstance(data, dict) or data.get("format") != FORMAT_NAME:
        raise CorruptModelError("not a DOPING AAE model document")
    if data.get("version") != FORMAT_VERSION:
        raise ModelVersionError(
            f"model format version {data.get('version')!r} is not supported (expected {FORMAT_VERSION})"
        )
    try:
        networks = data["networks"]
        return AaeModel(
            encoder=_mlp_from_dict(networks["encoder"]),
            decoder=_mlp_from_dict(networks["decoder"]),
            discriminator=_mlp_from_dict(networks["discriminator"]),
            latent_dim=int(data["latent_dim"]),
            input_dim=int(data["input_dim"]),
            prior=prior_from_dict(data["prior"]),
            label_width=int(data.get("label_width", 0)),
            anomaly_prior=prior_from_dict(data["anomaly_prior"]) if data.get("anomaly_prior") else None
        )
    except CorruptModelError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise CorruptModelError(f"model document is invalid: {e}") from e


def save_model(model: AaeModel, path: Union[str, Path]) -> Path:
    """Write the model atomically as JSON."""
    try:
        text = json.dumps(model_to_dict(model), indent=1) + "\n"
        path = atomic_write_text(path, text)
        logger.info(f"💾 Saved AAE model to {path}")
        return path

    except Exception as e:
        logger.error(f"Failed to save model to {path}: {e}")
        raise


def load_model(path: Union[str, Path]) -> AaeModel:
    """Read a model written by ``save_model``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise CorruptModelError(f"model file {path} is corrupt: {e}") from e
    model = model_from_dict(data)
    logger.info(f"📂 Loaded AAE model from {path} (input={model.input_dim}, latent={model.latent_dim})")
    return model
