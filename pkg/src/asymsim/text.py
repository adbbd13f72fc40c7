"""Rule-based sentence splitting, tokenization and vocabulary construction."""

from __future__ import annotations

import re
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

UNK = "<unk>"
PAD = "<pad>"
UNK_ID = 0
PAD_ID = 1
UNK_CHAR_ID = 0

ABBREVIATIONS = frozenset({"e.g.", "i.e.", "no.", "fig."})
_STRIP = "".join(ch for ch in string.punctuation if ch != "#")
_BOUNDARY = re.compile(r"[.!?]+(?=\s+[A-Z]|\s*$)")


def split_sentences(text: str) -> list[str]:
    """Split on terminal punctuation followed by an uppercase word or the end of text."""
    sentences = []
    start = 0
    for match in _BOUNDARY.finditer(text):
        end = match.end()
        words = text[start:end].split()
        if words and words[-1].lower() in ABBREVIATIONS:
            continue
        piece = text[start:end].strip()
        if piece:
            sentences.append(piece)
        start = end
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


def tokenize(sentence: str) -> list[str]:
    """Lowercase, split on whitespace and strip edge punctuation ('#' survives)."""
    tokens = []
    for raw in sentence.lower().split():
        tok = raw.strip(_STRIP)
        if tok:
            tokens.append(tok)
    return tokens


def tokenize_text(text: str) -> list[str]:
    """Tokens of a whole (possibly multi-sentence) component, in order."""
    return [tok for sent in split_sentences(text) for tok in tokenize(sent)]


@dataclass(frozen=True)
class TokenSeq:
    ids: np.ndarray
    surfaces: tuple[str, ...]

    def __post_init__(self):
        if len(self.ids) != len(self.surfaces):
            raise ValueError("ids and surfaces differ in length")

    def __len__(self) -> int:
        return len(self.surfaces)

    def key(self) -> tuple:
        return tuple(int(i) for i in self.ids), self.surfaces

    def concat(self, other: "TokenSeq") -> "TokenSeq":
        return TokenSeq(np.concatenate([self.ids, other.ids]), self.surfaces + other.surfaces)


@dataclass
class Vocab:
    words: list[str]
    index: dict[str, int] = field(init=False)
    chars: list[str] = field(init=False)
    char_index: dict[str, int] = field(init=False)

    def __post_init__(self):
        if self.words[:2] != [UNK, PAD]:
            raise ValueError("vocabulary must start with the UNK and PAD entries")
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("duplicate words in vocabulary")
        inventory = sorted({ch for w in self.words[2:] for ch in w})
        # index 0 is the unknown character
        self.chars = ["\0"] + inventory
        self.char_index = {ch: i for i, ch in enumerate(self.chars)}

    def __len__(self) -> int:
        return len(self.words)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def n_chars(self) -> int:
        return len(self.chars)

    def lookup(self, word: str) -> int:
        return self.index.get(word, UNK_ID)

    def char_ids(self, word: str) -> list[int]:
        return [self.char_index.get(ch, UNK_CHAR_ID) for ch in word]

    def encode(self, text: str, max_len: int | None = None) -> TokenSeq:
        """Token sequence for a component; blank text becomes a single UNK."""
        toks = tokenize_text(text)
        if max_len is not None:
            toks = toks[:max_len]
        if not toks:
            return TokenSeq(np.array([UNK_ID], dtype=np.int64), (UNK,))
        ids = np.array([self.lookup(t) for t in toks], dtype=np.int64)
        return TokenSeq(ids, tuple(toks))

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(w + "\n" for w in self.words), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines)


def _texts(ticket) -> Iterable[str]:
    yield ticket.subject
    yield ticket.description
    if ticket.solution is not None:
        yield ticket.solution


def build_vocab(corpus, min_count: int = 1) -> Vocab:
    """Frequency-ordered vocabulary over every component of every ticket.

    ``corpus`` is any iterable of tickets (a TicketSet, or KB and queries chained).
    Ties in frequency are broken lexicographically, so rebuilding is deterministic.
    """
    counts: Counter[str] = Counter()
    n = 0
    for ticket in corpus:
        n += 1
        for text in _texts(ticket):
            counts.update(tokenize_text(text))
    if n == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted((w for w, c in counts.items() if c >= min_count and w not in (UNK, PAD)),
                  key=lambda w: (-counts[w], w))
    return Vocab([UNK, PAD] + kept)
