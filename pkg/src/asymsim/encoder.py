"""Component encoders producing the three channels (h, E, T) for queries and tickets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lstm
from .config import ModelConfig
from .corpus import Ticket
from .docnade import DocNadeModel, topic_vector
from .embed import CharBlstmParams, EmbeddingTable, char_embed_backward, char_embed_batch
from .lstm import LstmParams, lstm_step
from .text import TokenSeq, Vocab

COMPONENTS = ("SUB", "DESC", "SOL")
QUERY_SLOTS = ("SUB1", "DESC1")
TICKET_SLOTS = ("SUB2", "DESC2", "SOL2")

__all__ = ["ComponentRepr", "Encoder", "encode_sequence", "encode_ticket", "lstm_step",
           "COMPONENTS", "QUERY_SLOTS", "TICKET_SLOTS"]


@dataclass(frozen=True)
class ComponentRepr:
    component: str   # SUB, DESC or SOL
    branch: str      # query or ticket
    h: np.ndarray
    E: np.ndarray
    T: np.ndarray

    @property
    def slot(self) -> str:
        return self.component + ("1" if self.branch == "query" else "2")


def encode_sequence(vectors: np.ndarray, params: LstmParams) -> np.ndarray:
    """Final hidden state of the LSTM run from a zero state over (T, D) input vectors."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim != 2 or len(vectors) == 0:
        raise ValueError("encode_sequence needs at least one input vector")
    h, _ = lstm.forward(vectors[:, None, :], np.ones((len(vectors), 1), dtype=bool), params)
    return h[0]


def component_texts(ticket: Ticket) -> list[tuple[str, str]]:
    parts = [("SUB", ticket.subject), ("DESC", ticket.description)]
    if ticket.solution is not None:
        parts.append(("SOL", ticket.solution))
    return parts


@dataclass
class _Cache:
    seqs: list[TokenSeq]
    kinds: list[str]
    pos: list[np.ndarray]
    char_cache: object
    n_uniq: int
    drop_masks: list
    groups: dict
    lstm_caches: dict


@dataclass
class Encoder:
    config: ModelConfig
    vocab: Vocab
    embeddings: EmbeddingTable
    chars: CharBlstmParams
    lstms: dict[str, LstmParams]
    docnade: DocNadeModel
    _seq_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def init(cls, config: ModelConfig, vocab: Vocab, docnade: DocNadeModel,
             rng: np.random.Generator, embeddings: EmbeddingTable | None = None) -> "Encoder":
        if docnade.vocab_size != len(vocab):
            raise ValueError("DocNADE vocabulary size does not match the vocabulary")
        if embeddings is None:
            embeddings = EmbeddingTable.random(vocab, config.word_dim, rng)
        if embeddings.dim != config.word_dim:
            raise ValueError("embedding dimension does not match config.word_dim")
        chars = CharBlstmParams.init(rng, vocab.n_chars, config.char_emb_dim, config.char_hidden,
                                     config.forget_bias, config.paper_exact)
        keys = ["all"] if config.weight_sharing == "global" else list(COMPONENTS)
        lstms = {k: LstmParams.init(rng, config.input_dim, config.hidden, config.forget_bias,
                                    config.paper_exact) for k in keys}
        return cls(config, vocab, embeddings, chars, lstms, docnade)

    def lstm_key(self, component: str) -> str:
        return "all" if self.config.weight_sharing == "global" else component

    # ------------------------------------------------------------ parameters

    def arrays(self) -> dict[str, np.ndarray]:
        """Every parameter array by name (frozen ones included)."""
        out = {"emb.matrix": self.embeddings.matrix}
        out.update({f"char.{k}": v for k, v in self.chars.arrays().items()})
        for key, p in self.lstms.items():
            prefix = "lstm" if key == "all" else f"lstm.{key}"
            out.update({f"{prefix}.{k}": v for k, v in p.arrays().items()})
        out.update({f"docnade.{k}": v for k, v in self.docnade.arrays().items()})
        return out

    def trainable(self) -> dict[str, np.ndarray]:
        """Arrays updated by the Siamese trainer: word LSTM(s) and the char-BLSTM."""
        out = {}
        for name, arr in self.arrays().items():
            if name.startswith(("emb.", "docnade.")):
                continue
            if self.config.paper_exact and name.endswith(".b"):
                continue
            out[name] = arr
        return out

    # ------------------------------------------------------------ text

    def tokens(self, text: str) -> TokenSeq:
        seq = self._seq_cache.get(text)
        if seq is None:
            seq = self.vocab.encode(text, self.config.max_len)
            self._seq_cache[text] = seq
        return seq

    def component_tokens(self, ticket: Ticket) -> list[tuple[str, TokenSeq]]:
        return [(kind, self.tokens(text)) for kind, text in component_texts(ticket)]

    # ------------------------------------------------------------ forward / backward

    def forward(self, seqs: list[TokenSeq], kinds: list[str], dropout: float = 0.0,
                rng: np.random.Generator | None = None):
        """Channels for a batch of components. Returns (h, E, T, cache)."""
        cfg = self.config
        uniq = sorted({s for seq in seqs for s in seq.surfaces})
        where = {s: k for k, s in enumerate(uniq)}
        chars, char_cache = char_embed_batch([self.vocab.char_ids(s) for s in uniq], self.chars)
        pos, X, drop_masks = [], [], []
        for seq in seqs:
            p = np.fromiter((where[s] for s in seq.surfaces), dtype=np.int64, count=len(seq))
            pos.append(p)
            X.append(np.concatenate([self.embeddings.matrix[seq.ids], chars[p]], axis=1))
        E = np.stack([x.mean(axis=0) for x in X])
        if dropout > 0.0:
            if rng is None:
                raise ValueError("dropout needs an rng")
            for x in X:
                drop_masks.append((rng.random(x.shape) >= dropout) / (1.0 - dropout))
            X_in = [x * m for x, m in zip(X, drop_masks)]
        else:
            X_in = X
        h = np.zeros((len(seqs), cfg.hidden))
        groups: dict[str, list[int]] = {}
        for j, kind in enumerate(kinds):
            groups.setdefault(self.lstm_key(kind), []).append(j)
        lstm_caches = {}
        for key, members in groups.items():
            Xp, mask = lstm.pad_batch([X_in[j] for j in members], cfg.input_dim)
            hk, cache = lstm.forward(Xp, mask, self.lstms[key])
            h[members] = hk
            lstm_caches[key] = cache
        T = np.stack([topic_vector(self.docnade, seq.ids) for seq in seqs])
        cache = _Cache(seqs, kinds, pos, char_cache, len(uniq), drop_masks, groups, lstm_caches)
        return h, E, T, cache

    def backward(self, dh: np.ndarray, dE: np.ndarray, cache: _Cache) -> dict[str, np.ndarray]:
        """Gradients w.r.t. ``trainable()`` given upstream dL/dh and dL/dE per component."""
        cfg = self.config
        grads: dict[str, np.ndarray] = {}
        dX = [None] * len(cache.seqs)
        for key, members in cache.groups.items():
            dXp, g = lstm.backward(dh[members], cache.lstm_caches[key], self.lstms[key])
            prefix = "lstm" if key == "all" else f"lstm.{key}"
            for k, v in g.items():
                grads[f"{prefix}.{k}"] = v
            for col, j in enumerate(members):
                dX[j] = dXp[:len(cache.seqs[j]), col]
        dchars = np.zeros((cache.n_uniq, cfg.char_dim))
        for j, seq in enumerate(cache.seqs):
            d = dX[j] * cache.drop_masks[j] if cache.drop_masks else dX[j]
            d = d[:, cfg.word_dim:] + dE[j, cfg.word_dim:] / len(seq)
            np.add.at(dchars, cache.pos[j], d)
        for k, v in char_embed_backward(dchars, cache.char_cache, self.chars).items():
            grads[f"char.{k}"] = v
        if cfg.paper_exact:
            grads = {k: v for k, v in grads.items() if not k.endswith(".b")}
        return grads

    def encode(self, seqs: list[TokenSeq], kinds: list[str], batch: int = 64):
        """Inference-mode channels for many components, batched by length."""
        n = len(seqs)
        h = np.zeros((n, self.config.hidden))
        E = np.zeros((n, self.config.input_dim))
        T = np.zeros((n, self.docnade.topics))
        order = sorted(range(n), key=lambda j: len(seqs[j]))
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            hb, Eb, Tb, _ = self.forward([seqs[j] for j in idx], [kinds[j] for j in idx])
            h[idx], E[idx], T[idx] = hb, Eb, Tb
        return h, E, T


def encode_ticket(ticket: Ticket, encoder: Encoder) -> list[ComponentRepr]:
    """One ComponentRepr per present component: queries give 2, KB tickets 3."""
    parts = encoder.component_tokens(ticket)
    kinds = [k for k, _ in parts]
    h, E, T, _ = encoder.forward([s for _, s in parts], kinds)
    branch = "query" if ticket.is_query else "ticket"
    return [ComponentRepr(kind, branch, h[j], E[j], T[j]) for j, kind in enumerate(kinds)]

