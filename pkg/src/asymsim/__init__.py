"""Replicated Siamese LSTM similarity and retrieval for asymmetric ticket texts."""

from .config import DocNadeConfig, ModelConfig, SyntheticConfig, TrainConfig
from .corpus import LabeledPair, RelatednessLabel, Ticket, TicketSet, gen_synthetic
from .siamese import ChannelWeights, PairWeights, SiameseModel, manhattan_similarity, predict, train

__all__ = [
    "ChannelWeights", "DocNadeConfig", "LabeledPair", "ModelConfig", "PairWeights",
    "RelatednessLabel", "SiameseModel", "SyntheticConfig", "Ticket", "TicketSet", "TrainConfig",
    "gen_synthetic", "manhattan_similarity", "predict", "train",
]
__version__ = "0.1.0"
