"""Dataclass configs shared by the library, CLI and experiment scripts."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass

DEFAULT_SEED = 42


def default_seed() -> int:
    """Global seed, overridable through ``ASYMSIM_SEED``."""
    raw = os.environ.get("ASYMSIM_SEED")
    return int(raw) if raw else DEFAULT_SEED


@dataclass(frozen=True)
class ModelConfig:
    word_dim: int = 300
    char_emb_dim: int = 16
    char_hidden: int = 25
    hidden: int = 50
    topics: int = 100
    max_len: int = 256
    forget_bias: float = 1.0
    # zero, frozen gate biases: the gate equations with no additive terms
    paper_exact: bool = False
    # "global": one LSTM for every component slot; "per_component": one per SUB/DESC/SOL
    weight_sharing: str = "global"

    def __post_init__(self):
        if self.weight_sharing not in ("global", "per_component"):
            raise ValueError(f"unknown weight_sharing {self.weight_sharing!r}")
        for name in ("word_dim", "char_emb_dim", "char_hidden", "hidden", "topics", "max_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @property
    def char_dim(self) -> int:
        return 2 * self.char_hidden

    @property
    def input_dim(self) -> int:
        return self.word_dim + self.char_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def tiny(cls) -> "ModelConfig":
        """Gradient-check sized model: hidden 4, word-emb 8, char-emb 6, topics 3."""
        return cls(word_dim=8, char_emb_dim=4, char_hidden=3, hidden=4, topics=3)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    dropout: float = 0.25
    clip_norm: float = 5.0
    rho: float = 0.95
    eps: float = 1e-6
    learn_weights: bool = False
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive")
        if not 0.0 < self.rho < 1.0 or self.eps <= 0:
            raise ValueError("adadelta needs 0 < rho < 1 and eps > 0")


@dataclass(frozen=True)
class DocNadeConfig:
    topics: int = 100
    epochs: int = 20
    learning_rate: float = 0.05
    patience: int = 3
    shuffle_words: bool = True
    init_scale: float = 0.01
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class SyntheticConfig:
    n_clusters: int = 20
    tickets_per_cluster: int = 10
    vocab_size: int = 600
    mean_sub_len: float = 5.0
    mean_desc_len: float = 65.0
    mean_sol_len: float = 74.0
    noise_rate: float = 0.05
    seed: int = DEFAULT_SEED
    n_pairs: int = 200
    pairs_per_query: int = 5
    n_heldout_queries: int = 40
    unique_queries: bool = False
    background_fraction: float = 0.4
    # probability that a content word is topical, per component
    topic_rate: tuple = (0.9, 0.2, 0.35)
    # probability a topical word is borrowed from an adjacent cluster
    neighbor_rate: float = 0.2
    # probability a query uses an inflected/misspelt variant instead of the ticket form
    mismatch_rate: float = 0.3
    label_mix: tuple = (0.4, 0.2, 0.4)
    # solutions draw topical words from a per-cluster pool disjoint from problem words
    solution_vocab: bool = True
    # synthetic pretrained vectors: topical word = a*centroid + sqrt(1-a^2)*noise
    emb_dim: int = 300
    emb_cluster_weight: float = 0.6
    emb_background_scale: float = 2.0

    def __post_init__(self):
        if self.n_clusters < 1 or self.tickets_per_cluster < 1:
            raise ValueError("cluster counts must be >= 1")
        if self.vocab_size < 50:
            raise ValueError("vocab_size must be >= 50")
        if not 0.0 <= self.noise_rate < 1.0:
            raise ValueError("noise_rate must lie in [0, 1)")
        if min(self.mean_sub_len, self.mean_desc_len, self.mean_sol_len) < 1:
            raise ValueError("mean component lengths must be >= 1")
        if self.n_pairs < 0 or self.pairs_per_query < 1 or self.n_heldout_queries < 0:
            raise ValueError("pair/query counts invalid")
        if not 0.0 < self.background_fraction < 1.0:
            raise ValueError("background_fraction must lie in (0, 1)")
        topical = int(self.vocab_size * (1.0 - self.background_fraction))
        if topical < self.n_clusters * (2 if self.solution_vocab else 1):
            raise ValueError("vocab_size too small for the requested number of clusters")
        if not 0.0 <= self.emb_cluster_weight <= 1.0 or self.emb_background_scale <= 0:
            raise ValueError("embedding cluster weight must lie in [0, 1], scale positive")
