"""DocNADE topic model with a full softmax output layer.

Word ``v_j`` of a document is predicted from the hidden state over its prefix,
``h_j = sigmoid(c + sum_{k<j} W[:, v_k])``, through ``softmax(b + U h_j)``. The
state after the whole document is the topic vector used as the T channel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .config import DocNadeConfig
from .lstm import sigmoid

log = logging.getLogger(__name__)


@dataclass
class DocNadeModel:
    W: np.ndarray  # (H, V)
    c: np.ndarray  # (H,)
    U: np.ndarray  # (V, H)
    b: np.ndarray  # (V,)

    @property
    def topics(self) -> int:
        return self.W.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.W.shape[1]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "c": self.c, "U": self.U, "b": self.b}

    def copy(self) -> "DocNadeModel":
        return DocNadeModel(self.W.copy(), self.c.copy(), self.U.copy(), self.b.copy())

    @classmethod
    def zeros(cls, vocab_size: int, topics: int = 100) -> "DocNadeModel":
        return cls(np.zeros((topics, vocab_size)), np.zeros(topics),
                   np.zeros((vocab_size, topics)), np.zeros(vocab_size))

    @classmethod
    def init(cls, vocab_size: int, topics: int, rng: np.random.Generator,
             scale: float = 0.01) -> "DocNadeModel":
        return cls(rng.uniform(-scale, scale, (topics, vocab_size)), np.zeros(topics),
                   rng.uniform(-scale, scale, (vocab_size, topics)), np.zeros(vocab_size))


def _ids(doc) -> np.ndarray:
    ids = getattr(doc, "ids", doc)
    return np.asarray(ids, dtype=np.int64)


def _prefix_states(ids: np.ndarray, model: DocNadeModel) -> np.ndarray:
    """(len+1, H): row j is the hidden state after the first j words."""
    cols = model.W[:, ids].T
    acc = np.zeros((len(ids) + 1, model.topics))
    np.cumsum(cols, axis=0, out=acc[1:])
    return sigmoid(acc + model.c)


def hidden(doc, i: int, model: DocNadeModel) -> np.ndarray:
    ids = _ids(doc)
    if not 0 <= i <= len(ids):
        raise IndexError(f"position {i} outside [0, {len(ids)}]")
    return sigmoid(model.c + model.W[:, ids[:i]].sum(axis=1))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def conditional(doc, i: int, model: DocNadeModel) -> np.ndarray:
    """p(v_i | v_<i) over the vocabulary, for 1 <= i <= len(doc)."""
    ids = _ids(doc)
    if not 1 <= i <= len(ids):
        raise IndexError(f"position {i} outside [1, {len(ids)}]")
    return np.exp(_log_softmax(model.b + model.U @ hidden(ids, i - 1, model)))


def doc_nll(doc, model: DocNadeModel) -> float:
    ids = _ids(doc)
    if len(ids) == 0:
        raise ValueError("doc_nll needs a non-empty document")
    hs = _prefix_states(ids, model)[:-1]
    logp = _log_softmax(hs @ model.U.T + model.b)
    return float(-logp[np.arange(len(ids)), ids].sum())


def nll_and_grad(doc, model: DocNadeModel) -> tuple[float, dict[str, np.ndarray]]:
    """Negative log-likelihood of one document and its exact gradient."""
    ids = _ids(doc)
    n = len(ids)
    hs = _prefix_states(ids, model)[:-1]            # (n, H)
    logp = _log_softmax(hs @ model.U.T + model.b)   # (n, V)
    nll = float(-logp[np.arange(n), ids].sum())
    dlogits = np.exp(logp)
    dlogits[np.arange(n), ids] -= 1.0
    dU = dlogits.T @ hs
    db = dlogits.sum(axis=0)
    da = (dlogits @ model.U) * hs * (1.0 - hs)      # (n, H)
    dc = da.sum(axis=0)
    # word k feeds every state j > k: reverse cumulative sum shifted by one
    suffix = np.cumsum(da[::-1], axis=0)[::-1]
    from_word = np.zeros_like(da)
    from_word[:-1] = suffix[1:]
    dW = np.zeros_like(model.W)
    np.add.at(dW.T, ids, from_word)
    return nll, {"W": dW, "c": dc, "U": dU, "b": db}


def topic_vector(model: DocNadeModel, doc) -> np.ndarray:
    ids = _ids(doc)
    if len(ids) == 0:
        raise ValueError("topic_vector needs a non-empty document")
    return hidden(ids, len(ids), model)


def perplexity(model: DocNadeModel, docs) -> float:
    """exp of the mean over documents of per-word NLL."""
    docs = list(docs)
    if not docs:
        raise ValueError("perplexity needs at least one document")
    per_word = [doc_nll(d, model) / len(_ids(d)) for d in docs]
    return float(np.exp(np.mean(per_word)))


def mean_nll(model: DocNadeModel, docs) -> float:
    return float(np.mean([doc_nll(d, model) / len(_ids(d)) for d in docs]))


def train_docnade(docs, vocab_size: int, config: DocNadeConfig = DocNadeConfig(),
                  init: DocNadeModel | None = None) -> DocNadeModel:
    """Per-document SGD on length-normalised NLL.

    Word order is reshuffled every epoch when ``config.shuffle_words`` is set. The
    learning rate halves whenever the epoch's mean training NLL has not improved
    on its best for ``config.patience`` epochs.
    """
    docs = [_ids(d) for d in docs]
    if not docs:
        raise ValueError("train_docnade needs a non-empty corpus")
    rng = np.random.default_rng(config.seed)
    model = init.copy() if init is not None else DocNadeModel.init(
        vocab_size, config.topics, rng, config.init_scale)
    lr = config.learning_rate
    best, stale = np.inf, 0
    for epoch in range(config.epochs):
        total = 0.0
        for d in rng.permutation(len(docs)):
            ids = docs[d]
            if config.shuffle_words:
                ids = ids[rng.permutation(len(ids))]
            nll, grads = nll_and_grad(ids, model)
            total += nll / len(ids)
            for name, g in grads.items():
                getattr(model, name)[...] -= (lr / len(ids)) * g
        epoch_nll = total / len(docs)
        log.info("docnade epoch %d  nll/word %.4f  lr %.4g", epoch + 1, epoch_nll, lr)
        if epoch_nll < best - 1e-6:
            best, stale = epoch_nll, 0
        else:
            stale += 1
            if stale >= config.patience:
                lr *= 0.5
                stale = 0
    return model
