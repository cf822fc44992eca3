"""Checkpoint persistence: a zip archive of JSON metadata plus one
shape-tagged little-endian float32 .npy entry per parameter.

The fingerprint is a SHA-256 over a canonical serialization of the
configuration, preprocessing options, vocabulary, and raw parameter bytes;
it changes iff any of those change, and binds vector indexes to the model
that produced them.
"""

from __future__ import annotations

import hashlib
import io
import json
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConsistencyError, InputError
from ..preprocess import PreprocessOptions, VocabularyMap
from .config import ModelConfig
from .network import ModelParameters

_FORMAT = "topomatch-checkpoint"
_VERSION = 1
# fixed zip timestamp so identical checkpoints are byte-identical
_EPOCH_STAMP = (1980, 1, 1, 0, 0, 0)


def compute_fingerprint(
    config: ModelConfig,
    preprocess: PreprocessOptions,
    vocab: VocabularyMap,
    params: ModelParameters,
) -> str:
    h = hashlib.sha256()
    meta = json.dumps(
        {
            "config": config.to_dict(),
            "preprocess": preprocess.to_dict(),
            "vocab": vocab.to_dict(),
        },
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    h.update(meta)
    for name in sorted(params.arrays):
        a = np.ascontiguousarray(params.arrays[name].astype("<f4"))
        h.update(name.encode("utf-8"))
        h.update(repr(a.shape).encode("ascii"))
        h.update(a.tobytes())
    return h.hexdigest()


@dataclass
class ModelCheckpoint:
    """Learned parameters plus everything needed to reuse them."""

    config: ModelConfig
    params: ModelParameters
    vocab: VocabularyMap
    preprocess: PreprocessOptions
    epoch: int = 0
    metrics: dict = field(default_factory=dict)
    parent_fingerprint: str | None = None

    @property
    def fingerprint(self) -> str:
        return compute_fingerprint(self.config, self.preprocess, self.vocab, self.params)


def save_checkpoint(checkpoint: ModelCheckpoint, path: str | Path) -> str:
    """Write the checkpoint archive; returns its fingerprint."""
    checkpoint.params.check_finite()
    fp = checkpoint.fingerprint
    metadata = {
        "format": _FORMAT,
        "version": _VERSION,
        "config": checkpoint.config.to_dict(),
        "preprocess": checkpoint.preprocess.to_dict(),
        "vocab": checkpoint.vocab.to_dict(),
        "epoch": checkpoint.epoch,
        "metrics": checkpoint.metrics,
        "parent_fingerprint": checkpoint.parent_fingerprint,
        "fingerprint": fp,
    }
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        info = zipfile.ZipInfo("metadata.json", date_time=_EPOCH_STAMP)
        zf.writestr(info, json.dumps(metadata, sort_keys=True, ensure_ascii=False, indent=1))
        for name in sorted(checkpoint.params.arrays):
            buf = io.BytesIO()
            np.lib.format.write_array(
                buf, np.ascontiguousarray(checkpoint.params.arrays[name].astype("<f4"))
            )
            info = zipfile.ZipInfo(f"params/{name}.npy", date_time=_EPOCH_STAMP)
            zf.writestr(info, buf.getvalue())
    return fp


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    """Read a checkpoint archive and verify its fingerprint."""
    path = Path(path)
    if not path.is_file():
        raise InputError(f"checkpoint file not found: {path}")
    try:
        with zipfile.ZipFile(path) as zf:
            metadata = json.loads(zf.read("metadata.json"))
            if metadata.get("format") != _FORMAT:
                raise InputError(f"{path} is not a checkpoint archive")
            arrays = {}
            for entry in zf.namelist():
                if entry.startswith("params/") and entry.endswith(".npy"):
                    name = entry[len("params/") : -len(".npy")]
                    arrays[name] = np.lib.format.read_array(io.BytesIO(zf.read(entry)))
    except (zipfile.BadZipFile, KeyError) as exc:
        raise InputError(f"unreadable checkpoint {path}: {exc}") from exc
    checkpoint = ModelCheckpoint(
        config=ModelConfig.from_dict(metadata["config"]),
        params=ModelParameters(arrays),
        vocab=VocabularyMap.from_dict(metadata["vocab"]),
        preprocess=PreprocessOptions.from_dict(metadata["preprocess"]),
        epoch=metadata["epoch"],
        metrics=metadata["metrics"],
        parent_fingerprint=metadata.get("parent_fingerprint"),
    )
    if checkpoint.fingerprint != metadata["fingerprint"]:
        raise ConsistencyError(f"checkpoint {path} fails its fingerprint check")
    return checkpoint
