"""Self-describing binary checkpoints.

Layout (all integers little-endian)::

    b"ASYM" | u32 version | u32 header length | header (UTF-8 JSON) | float64 LE data

The header records the component tag, vocabulary, hyperparameters, seed and a
tensor directory of ``{"name", "shape", "offset"}`` entries, offsets counted in
float64 values from the start of the data block. The JSON is written with sorted
keys and fixed separators, so save -> load -> save reproduces the same bytes.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calibration import CalibrationMap
from .config import ModelConfig
from .docnade import DocNadeModel
from .embed import CharBlstmParams, EmbeddingTable
from .encoder import Encoder
from .lstm import LstmParams
from .siamese import SiameseModel
from .text import Vocab

MAGIC = b"ASYM"
VERSION = 1
_PREFIX = struct.Struct("<4sII")


class CheckpointError(ValueError):
    """Unreadable, corrupted or mismatched checkpoint."""


@dataclass
class DocNadeBundle:
    model: DocNadeModel
    vocab: Vocab
    hyper: dict = field(default_factory=dict)
    seed: int = 42


def _encode(tag: str, vocab: Vocab, tensors: dict[str, np.ndarray], hyper: dict, seed: int) -> bytes:
    directory, offset = [], 0
    for name, arr in tensors.items():
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += int(arr.size)
    header = {"component": tag, "seed": int(seed), "hyper": hyper, "vocab": vocab.words,
              "tensors": directory, "n_values": offset}
    head = json.dumps(header, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode()
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in tensors.values())
    return _PREFIX.pack(MAGIC, VERSION, len(head)) + head + body


def _decode(blob: bytes):
    if len(blob) < _PREFIX.size:
        raise CheckpointError("truncated checkpoint: missing prefix")
    magic, version, hlen = _PREFIX.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointError("bad magic: not an ASYM checkpoint")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")
    start = _PREFIX.size
    if len(blob) < start + hlen:
        raise CheckpointError("truncated checkpoint: header incomplete")
    try:
        header = json.loads(blob[start:start + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError("corrupted checkpoint header") from None
    data = blob[start + hlen:]
    if len(data) != 8 * header["n_values"]:
        raise CheckpointError(f"truncated checkpoint: expected {8 * header['n_values']} data "
                              f"bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8")
    tensors = {}
    for entry in header["tensors"]:
        n = int(np.prod(entry["shape"])) if entry["shape"] else 1
        tensors[entry["name"]] = values[entry["offset"]:entry["offset"] + n].reshape(
            entry["shape"]).astype(np.float64)
    return header, tensors


# --------------------------------------------------------------------------- docnade


def docnade_bytes(bundle: DocNadeBundle) -> bytes:
    tensors = {f"docnade.{k}": v for k, v in bundle.model.arrays().items()}
    return _encode("docnade", bundle.vocab, tensors, bundle.hyper, bundle.seed)


def _docnade_from(tensors: dict, prefix: str = "docnade.") -> DocNadeModel:
    return DocNadeModel(*(tensors[prefix + k] for k in ("W", "c", "U", "b")))


# --------------------------------------------------------------------------- siamese


def _lstm_tensors(prefix: str, p: LstmParams) -> dict:
    return {f"{prefix}.{k}": v for k, v in p.arrays().items()}


def siamese_bytes(model: SiameseModel) -> bytes:
    enc = model.encoder
    tensors = {"emb.matrix": enc.embeddings.matrix,
               "emb.pretrained": enc.embeddings.pretrained.astype(np.float64)}
    tensors.update({f"char.{k}": v for k, v in enc.chars.arrays().items()})
    for key, p in enc.lstms.items():
        tensors.update(_lstm_tensors("lstm" if key == "all" else f"lstm.{key}", p))
    tensors.update({f"docnade.{k}": v for k, v in enc.docnade.arrays().items()})
    tensors["weights.channel"] = model.channel
    tensors["weights.pair"] = model.pair
    tensors["calib.knots"] = model.calibration.knots
    tensors["calib.values"] = model.calibration.values
    hyper = {"model": enc.config.to_dict(), "meta": model.meta}
    return _encode("siamese", enc.vocab, tensors, hyper, model.meta.get("seed", 42))


def _siamese_from(header: dict, tensors: dict) -> SiameseModel:
    config = ModelConfig(**header["hyper"]["model"])
    vocab = Vocab(header["vocab"])
    table = EmbeddingTable(tensors["emb.matrix"], tensors["emb.pretrained"] > 0.5)

    def lstm_at(prefix):
        return LstmParams(tensors[f"{prefix}.W"], tensors[f"{prefix}.U"], tensors[f"{prefix}.b"])

    chars = CharBlstmParams(tensors["char.emb"], lstm_at("char.fwd"), lstm_at("char.bwd"))
    if config.weight_sharing == "global":
        lstms = {"all": lstm_at("lstm")}
    else:
        lstms = {k: lstm_at(f"lstm.{k}") for k in ("SUB", "DESC", "SOL")}
    enc = Encoder(config, vocab, table, chars, lstms, _docnade_from(tensors))
    calib = CalibrationMap(tensors["calib.knots"], tensors["calib.values"])
    return SiameseModel(enc, tensors["weights.channel"], tensors["weights.pair"], calib,
                        meta=header["hyper"].get("meta", {}))


# --------------------------------------------------------------------------- public API


def to_bytes(obj) -> bytes:
    if isinstance(obj, SiameseModel):
        return siamese_bytes(obj)
    if isinstance(obj, DocNadeBundle):
        return docnade_bytes(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def from_bytes(blob: bytes, expect: str | None = None):
    header, tensors = _decode(blob)
    tag = header["component"]
    if expect is not None and tag != expect:
        raise CheckpointError(f"tag mismatch: checkpoint holds a {tag} model, expected {expect}")
    if tag == "siamese":
        return _siamese_from(header, tensors)
    if tag == "docnade":
        return DocNadeBundle(_docnade_from(tensors), Vocab(header["vocab"]), header["hyper"],
                             header["seed"])
    raise CheckpointError(f"unknown component tag {tag!r}")


def save_checkpoint(obj, path: str | Path) -> None:
    Path(path).write_bytes(to_bytes(obj))


def load_checkpoint(path: str | Path, expect: str | None = None):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    return from_bytes(blob, expect)


def model_hash(obj) -> str:
    return hashlib.sha256(to_bytes(obj)).hexdigest()
