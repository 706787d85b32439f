"""Model and dictionary files.

Files are UTF-8 JSON with sorted keys.  Arrays are stored as
``{"shape": [...], "values": [...]}`` in row-major order; Python's float repr is
the shortest decimal that round-trips, so a load reproduces every value bit for
bit.  Saving the same model twice yields byte-identical files.
"""

from __future__ import annotations

import json

import numpy as np

from .datafiles import atomic_write_text
from .dictionary import Dictionary
from .errors import FormatVersionError, InputError, ModelFormatError
from .nnclf import NeuralNet, PcaModel
from .pipeline import SelfTaughtConfig, SelfTaughtModel

FORMAT_VERSION = 1
MODEL_KIND = "stlcode-model"
DICTIONARY_KIND = "stlcode-dictionary"

__all__ = [
    "FORMAT_VERSION",
    "save_model",
    "load_model",
    "save_dictionary",
    "load_dictionary",
    "model_to_json",
]


def _arr(a) -> dict:
    a = np.asarray(a, dtype=float)
    return {"shape": list(a.shape), "values": [float(v) for v in a.reshape(-1)]}


def _unarr(d) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in d["shape"])
        values = np.array(d["values"], dtype=float)
    except (KeyError, TypeError, ValueError) as err:
        raise ModelFormatError(f"malformed array block: {err}") from None
    if values.ndim != 1 or values.size != int(np.prod(shape)):
        raise ModelFormatError(f"array block holds {values.size} values for shape {shape}")
    return values.reshape(shape)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _dict_block(d: Dictionary) -> dict:
    return {
        "family": d.family_id.value,
        "norm_bound": float(d.norm_bound),
        "beta": float(d.beta),
        "meta": _jsonable(d.meta),
        "B": _arr(d.B),
    }


def _dict_from_block(b: dict) -> Dictionary:
    return Dictionary(
        B=_unarr(b["B"]),
        norm_bound=float(b["norm_bound"]),
        family_id=b["family"],
        beta=float(b["beta"]),
        meta=b.get("meta", {}),
    )


def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False) + "\n"


def model_to_json(model: SelfTaughtModel, run: dict | None = None) -> str:
    net = model.classifier
    doc = {
        "format": MODEL_KIND,
        "format_version": FORMAT_VERSION,
        "family": model.dictionary.family_id.value,
        "dictionary": _dict_block(model.dictionary),
        "reducer": None
        if model.reducer is None
        else {
            "mean": _arr(model.reducer.mean),
            "components": _arr(model.reducer.components),
            "explained_variance": _arr(model.reducer.explained_variance),
        },
        "classifier": {
            "dims": list(net.dims),
            "W1": _arr(net.W1),
            "b1": _arr(net.b1),
            "W2": _arr(net.W2),
            "b2": _arr(net.b2),
        },
        "config": _jsonable(model.config.to_dict()),
        "run": _jsonable(run or {}),
    }
    return _dump(doc)


def save_model(model: SelfTaughtModel, path, run: dict | None = None) -> None:
    atomic_write_text(path, model_to_json(model, run))


def _read_doc(path, kinds) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ModelFormatError(f"cannot read {path}: {err.strerror}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise ModelFormatError(f"{path} is not a valid model file: {err}") from None
    if not isinstance(doc, dict) or doc.get("format") not in kinds:
        raise ModelFormatError(f"{path} is not one of {sorted(kinds)}")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{path} has format_version {version!r}; this build reads {FORMAT_VERSION}"
        )
    return doc


def load_model(path) -> SelfTaughtModel:
    doc = _read_doc(path, {MODEL_KIND})
    try:
        dictionary = _dict_from_block(doc["dictionary"])
        r = doc["reducer"]
        reducer = None
        if r is not None:
            reducer = PcaModel(
                _unarr(r["mean"]), _unarr(r["components"]), _unarr(r["explained_variance"])
            )
        c = doc["classifier"]
        net = NeuralNet(_unarr(c["W1"]), _unarr(c["b1"]), _unarr(c["W2"]), _unarr(c["b2"]))
        if list(net.dims) != list(c["dims"]):
            raise ModelFormatError(f"classifier dims {c['dims']} disagree with weights")
        config = SelfTaughtConfig.from_dict(doc["config"])
        return SelfTaughtModel(dictionary, reducer, net, config)
    except ModelFormatError:
        raise
    except (KeyError, TypeError, InputError) as err:
        raise ModelFormatError(f"{path}: incomplete or inconsistent model: {err}") from None


def save_dictionary(dictionary: Dictionary, path, run: dict | None = None) -> None:
    doc = {
        "format": DICTIONARY_KIND,
        "format_version": FORMAT_VERSION,
        "dictionary": _dict_block(dictionary),
        "run": _jsonable(run or {}),
    }
    atomic_write_text(path, _dump(doc))


def load_dictionary(path) -> Dictionary:
    """Read a dictionary file, or the dictionary inside a model file."""
    doc = _read_doc(path, {DICTIONARY_KIND, MODEL_KIND})
    try:
        return _dict_from_block(doc["dictionary"])
    except (KeyError, TypeError, InputError) as err:
        raise ModelFormatError(f"{path}: bad dictionary block: {err}") from None
