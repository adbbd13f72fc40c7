"""Shared tiny fixtures: a 20-word vocabulary and 3-token ticket components."""

from __future__ import annotations

import numpy as np
import pytest

from asymsim.config import ModelConfig
from asymsim.corpus import Ticket
from asymsim.docnade import DocNadeModel
from asymsim.siamese import SiameseModel
from asymsim.encoder import Encoder
from asymsim.text import PAD, UNK, Vocab

WORDS = ["disk", "full", "error", "printer", "jam", "paper", "login", "fails", "password",
         "reset", "vpn", "drops", "mail", "bounce", "server", "slow", "network", "cable"]


@pytest.fixture
def tiny_vocab() -> Vocab:
    vocab = Vocab([UNK, PAD] + WORDS)
    assert len(vocab) == 20
    return vocab


def tiny_model(vocab: Vocab, seed: int = 0, config: ModelConfig | None = None) -> SiameseModel:
    rng = np.random.default_rng(seed)
    config = config or ModelConfig.tiny()
    docnade = DocNadeModel.init(len(vocab), config.topics, rng, scale=0.5)
    enc = Encoder.init(config, vocab, docnade, rng)
    return SiameseModel(enc)


@pytest.fixture
def tiny_pair() -> tuple[Ticket, Ticket]:
    query = Ticket("q1", "disk full error", "printer jam paper")
    ticket = Ticket("t1", "login fails password", "reset vpn drops", "mail bounce server")
    return query, ticket


# acceptance verdicts, printed in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
