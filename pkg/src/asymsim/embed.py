"""Composite word vectors: a frozen pretrained table plus a trainable char-BLSTM."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lstm
from .lstm import LstmParams
from .text import TokenSeq, Vocab


class EmbeddingFormatError(ValueError):
    """Malformed word2vec text file."""


@dataclass
class EmbeddingTable:
    matrix: np.ndarray       # (|V|, D)
    pretrained: np.ndarray   # (|V|,) bool

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def random(cls, vocab: Vocab, dim: int, rng: np.random.Generator) -> "EmbeddingTable":
        return cls(rng.uniform(-0.05, 0.05, size=(len(vocab), dim)),
                   np.zeros(len(vocab), dtype=bool))

    @classmethod
    def from_vectors(cls, vocab: Vocab, vectors: dict, rng: np.random.Generator,
                     dim: int = 300) -> "EmbeddingTable":
        """Random table with the rows of words present in ``vectors`` replaced."""
        table = cls.random(vocab, dim, rng)
        for word, vec in vectors.items():
            idx = vocab.index.get(word)
            if idx is not None:
                if len(vec) != dim:
                    raise EmbeddingFormatError(f"vector for {word!r} has dim {len(vec)} != {dim}")
                table.matrix[idx] = vec
                table.pretrained[idx] = True
        return table


def load_pretrained(path: str | Path, vocab: Vocab, rng: np.random.Generator,
                    dim: int = 300) -> EmbeddingTable:
    """Read word2vec text format; vocabulary words missing from the file stay random."""
    table = EmbeddingTable.random(vocab, dim, rng)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise EmbeddingFormatError(f"{path}:1: expected header 'count dim'")
        if int(header[1]) != dim:
            raise EmbeddingFormatError(f"{path}:1: dimension {header[1]} != expected {dim}")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").rstrip().split(" ")
            if len(parts) == 1 and not parts[0]:
                continue
            if len(parts) != dim + 1:
                raise EmbeddingFormatError(f"{path}:{lineno}: expected {dim} values")
            try:
                vec = np.array([float(v) for v in parts[1:]])
            except ValueError:
                raise EmbeddingFormatError(f"{path}:{lineno}: non-numeric value") from None
            idx = vocab.index.get(parts[0])
            if idx is not None:
                table.matrix[idx] = vec
                table.pretrained[idx] = True
    return table


@dataclass
class CharBlstmParams:
    emb: np.ndarray   # (|chars|, d_c)
    fwd: LstmParams
    bwd: LstmParams

    @property
    def out_dim(self) -> int:
        return self.fwd.hidden + self.bwd.hidden

    def arrays(self) -> dict[str, np.ndarray]:
        out = {"emb": self.emb}
        for d, p in (("fwd", self.fwd), ("bwd", self.bwd)):
            for k, v in p.arrays().items():
                out[f"{d}.{k}"] = v
        return out

    @classmethod
    def init(cls, rng: np.random.Generator, n_chars: int, emb_dim: int = 16, hidden: int = 25,
             forget_bias: float = 1.0, zero_bias: bool = False) -> "CharBlstmParams":
        emb = rng.uniform(-0.1, 0.1, size=(n_chars, emb_dim))
        return cls(emb, LstmParams.init(rng, emb_dim, hidden, forget_bias, zero_bias),
                   LstmParams.init(rng, emb_dim, hidden, forget_bias, zero_bias))

    @classmethod
    def zeros(cls, n_chars: int, emb_dim: int = 16, hidden: int = 25) -> "CharBlstmParams":
        return cls(np.zeros((n_chars, emb_dim)), LstmParams.zeros(emb_dim, hidden),
                   LstmParams.zeros(emb_dim, hidden))


@dataclass
class _CharCache:
    ids_f: np.ndarray
    ids_b: np.ndarray
    mask: np.ndarray
    cache_f: object
    cache_b: object


def char_embed_batch(words: list[list[int]], params: CharBlstmParams):
    """Char-BLSTM outputs for a batch of char-id sequences: (B, 2*hidden) plus cache."""
    if any(len(w) == 0 for w in words):
        raise ValueError("char_embed needs non-empty words")
    T = max(len(w) for w in words)
    B = len(words)
    ids_f = np.zeros((T, B), dtype=np.int64)
    ids_b = np.zeros((T, B), dtype=np.int64)
    mask = np.zeros((T, B), dtype=bool)
    for j, w in enumerate(words):
        n = len(w)
        ids_f[:n, j] = w
        ids_b[:n, j] = w[::-1]
        mask[:n, j] = True
    hf, cf = lstm.forward(params.emb[ids_f], mask, params.fwd)
    hb, cb = lstm.forward(params.emb[ids_b], mask, params.bwd)
    return np.concatenate([hf, hb], axis=1), _CharCache(ids_f, ids_b, mask, cf, cb)


def char_embed_backward(dout: np.ndarray, cache: _CharCache, params: CharBlstmParams):
    """Gradient of the loss w.r.t. every CharBlstmParams array, keyed as in ``arrays()``."""
    H = params.fwd.hidden
    dXf, gf = lstm.backward(dout[:, :H], cache.cache_f, params.fwd)
    dXb, gb = lstm.backward(dout[:, H:], cache.cache_b, params.bwd)
    demb = np.zeros_like(params.emb)
    np.add.at(demb, cache.ids_f.ravel(), (dXf * cache.mask[..., None]).reshape(-1, demb.shape[1]))
    np.add.at(demb, cache.ids_b.ravel(), (dXb * cache.mask[..., None]).reshape(-1, demb.shape[1]))
    grads = {"emb": demb}
    grads.update({f"fwd.{k}": v for k, v in gf.items()})
    grads.update({f"bwd.{k}": v for k, v in gb.items()})
    return grads


def char_embed(word: str, params: CharBlstmParams, vocab: Vocab) -> np.ndarray:
    """Concatenated final states of the left-to-right and right-to-left char LSTMs."""
    if not word:
        raise ValueError("char_embed needs a non-empty word")
    out, _ = char_embed_batch([vocab.char_ids(word)], params)
    return out[0]


def compose_word_vec(index: int, surface: str, table: EmbeddingTable,
                     params: CharBlstmParams, vocab: Vocab) -> np.ndarray:
    return np.concatenate([table.matrix[index], char_embed(surface, params, vocab)])


def compose_seq(seq: TokenSeq, table: EmbeddingTable, params: CharBlstmParams,
                vocab: Vocab) -> np.ndarray:
    """(T, D + 2*hidden) matrix of composed vectors for a token sequence."""
    uniq = sorted(set(seq.surfaces))
    pos = {s: k for k, s in enumerate(uniq)}
    chars, _ = char_embed_batch([vocab.char_ids(s) for s in uniq], params)
    return np.concatenate([table.matrix[seq.ids], chars[[pos[s] for s in seq.surfaces]]], axis=1)


def sum_emb(vectors: np.ndarray) -> np.ndarray:
    """SumEMB channel: the mean of a component's composed word vectors."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or len(vectors) == 0:
        raise ValueError("sum_emb needs a non-empty (T, D) matrix")
    return vectors.mean(axis=0)
