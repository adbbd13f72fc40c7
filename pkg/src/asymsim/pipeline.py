"""End-to-end helpers shared by the CLI, experiment scripts and acceptance tests."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .config import DocNadeConfig, ModelConfig, SyntheticConfig, TrainConfig
from .corpus import SyntheticCorpus, TicketSet, gen_synthetic, split_pairs
from .docnade import DocNadeModel, train_docnade
from .embed import EmbeddingTable, load_pretrained
from .encoder import Encoder
from .evaluation import EvalReport, eval_baseline, eval_retrieval, eval_sts
from .siamese import ChannelWeights, PairWeights, SiameseModel, TrainResult, train
from .text import TokenSeq, Vocab, build_vocab

log = logging.getLogger(__name__)

# ablation ladder: multi-level h only, + cross-level terms, + E and T channels
ABLATIONS = {
    "ml": (ChannelWeights(0.7, 0.0, 0.0), PairWeights(0.3, 0.3, 0.0, 0.0, 0.0)),
    "cl": (ChannelWeights(0.7, 0.0, 0.0), PairWeights()),
    "full": (ChannelWeights(), PairWeights()),
}


def kb_documents(kb: TicketSet, vocab: Vocab) -> list[TokenSeq]:
    """SUB+DESC+SOL of every KB ticket merged into one document each."""
    return [vocab.encode(" ".join([t.subject, t.description, t.solution or ""])) for t in kb]


def fit_docnade(kb: TicketSet, vocab: Vocab, config: DocNadeConfig) -> DocNadeModel:
    return train_docnade([d.ids for d in kb_documents(kb, vocab)], len(vocab), config)


def new_model(vocab: Vocab, docnade: DocNadeModel, config: ModelConfig, seed: int,
              emb: str | dict | None = None, cw: ChannelWeights = ChannelWeights(),
              pw: PairWeights = PairWeights()) -> SiameseModel:
    """``emb`` is a word2vec text file, an in-memory {word: vector} map or None (random)."""
    rng = np.random.default_rng(seed)
    if isinstance(emb, dict):
        table = EmbeddingTable.from_vectors(vocab, emb, rng, config.word_dim)
    elif emb:
        table = load_pretrained(emb, vocab, rng, config.word_dim)
    else:
        table = EmbeddingTable.random(vocab, config.word_dim, rng)
    enc = Encoder.init(config, vocab, docnade, rng, table)
    return SiameseModel(enc, cw.array(), pw.array())


@dataclass
class Experiment:
    corpus: SyntheticCorpus
    vocab: Vocab
    docnade: DocNadeModel
    train_pairs: list
    dev_pairs: list


def prepare(syn: SyntheticConfig, dn: DocNadeConfig, seed: int) -> Experiment:
    corpus = gen_synthetic(syn)
    vocab = build_vocab(list(corpus.kb) + list(corpus.queries))
    docnade = fit_docnade(corpus.kb, vocab, replace(dn, seed=seed))
    tr, dev = split_pairs(corpus.pairs, 0.8, seed)
    return Experiment(corpus, vocab, docnade, tr, dev)


def train_variant(exp: Experiment, variant: str, model_cfg: ModelConfig,
                  train_cfg: TrainConfig) -> TrainResult:
    cw, pw = ABLATIONS[variant]
    model = new_model(exp.vocab, exp.docnade, model_cfg, train_cfg.seed,
                      exp.corpus.embeddings, cw, pw)
    c = exp.corpus
    return train(model, exp.train_pairs, exp.dev_pairs, c.queries, c.kb, train_cfg)


def evaluate(exp: Experiment, model: SiameseModel, policy: str = "yes") -> EvalReport:
    c = exp.corpus
    r, rho, err = eval_sts(model, exp.dev_pairs, c.queries, c.kb)
    rep = EvalReport(r=r, rho=rho, mse=err)
    return rep.update(eval_retrieval(model, c.heldout_queries, c.kb, c.heldout_gold,
                                     policy=policy))


def baselines(exp: Experiment, model_cfg: ModelConfig, seed: int, policy: str = "yes"):
    """Retrieval metrics of the unsupervised SumEMB (E) and DocNADE (T) baselines."""
    enc = new_model(exp.vocab, exp.docnade, model_cfg, seed, exp.corpus.embeddings).encoder
    c = exp.corpus
    return {ch: eval_baseline(enc, c.heldout_queries, c.kb, c.heldout_gold, ch, policy)
            for ch in ("E", "T")}
