"""Ticket/query records, relatedness labels, JSONL ingestion and a synthetic corpus.

The synthetic generator draws every random number from :class:`SplitMix64`, a
fully specified 64-bit generator, so a given config produces byte-identical
files on any host and can be reproduced outside Python.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .config import SyntheticConfig

_MASK64 = (1 << 64) - 1


class CorpusError(ValueError):
    """Malformed or inconsistent ticket/pair data."""


class RelatednessLabel(enum.Enum):
    NO = 1
    REL = 2
    YES = 3

    def __lt__(self, other):
        if not isinstance(other, RelatednessLabel):
            return NotImplemented
        return self.value < other.value


_SCORES = {RelatednessLabel.YES: 5.0, RelatednessLabel.REL: 3.0, RelatednessLabel.NO: 1.0}


def label_to_score(label: RelatednessLabel) -> float:
    return _SCORES[label]


def rescale_target(score: float) -> float:
    """Map a relatedness score in [1, 5] onto the [0, 1] training target."""
    if not 1.0 <= score <= 5.0:
        raise ValueError(f"score {score} outside [1, 5]")
    return (score - 1.0) / 4.0


@dataclass(frozen=True)
class Ticket:
    id: str
    subject: str
    description: str
    solution: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusError("ticket id must be non-empty")
        if not self.subject.strip():
            raise CorpusError(f"ticket {self.id!r} has an empty subject")

    @property
    def is_query(self) -> bool:
        return self.solution is None

    def to_json(self) -> dict:
        obj = {"id": self.id, "subject": self.subject, "description": self.description}
        if self.solution is not None:
            obj["solution"] = self.solution
        return obj


Query = Ticket


@dataclass(frozen=True)
class LabeledPair:
    query_id: str
    ticket_id: str
    label: RelatednessLabel
    score: float
    target: float

    @classmethod
    def make(cls, query_id: str, ticket_id: str, label: RelatednessLabel) -> "LabeledPair":
        score = label_to_score(label)
        return cls(query_id, ticket_id, label, score, rescale_target(score))

    def to_json(self) -> dict:
        return {"query_id": self.query_id, "ticket_id": self.ticket_id, "label": self.label.name}


class TicketSet:
    """Ordered, id-indexed collection of tickets."""

    def __init__(self, tickets: Iterable[Ticket] = ()):
        self.tickets: list[Ticket] = []
        self.index: dict[str, int] = {}
        for t in tickets:
            self.add(t)

    def add(self, ticket: Ticket) -> None:
        if ticket.id in self.index:
            raise CorpusError(f"duplicate ticket id {ticket.id!r}")
        self.index[ticket.id] = len(self.tickets)
        self.tickets.append(ticket)

    def __len__(self) -> int:
        return len(self.tickets)

    def __iter__(self) -> Iterator[Ticket]:
        return iter(self.tickets)

    def __getitem__(self, ticket_id: str) -> Ticket:
        return self.tickets[self.index[ticket_id]]

    def __contains__(self, ticket_id: str) -> bool:
        return ticket_id in self.index

    @property
    def ids(self) -> list[str]:
        return [t.id for t in self.tickets]


# --------------------------------------------------------------------------- files


def _read_jsonl(path: str | Path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def load_tickets(path: str | Path, kind: str) -> TicketSet:
    """Read a ticket JSONL file; ``kind`` is "kb" (solution required) or "query" (forbidden)."""
    if kind not in ("kb", "query"):
        raise ValueError("kind must be 'kb' or 'query'")
    out = TicketSet()
    for lineno, obj in _read_jsonl(path):
        for key in ("id", "subject", "description"):
            if not isinstance(obj.get(key), str):
                raise CorpusError(f"{path}:{lineno}: missing or non-string field {key!r}")
        has_sol = "solution" in obj
        if kind == "kb" and not isinstance(obj.get("solution"), str):
            raise CorpusError(f"{path}:{lineno}: KB ticket {obj['id']!r} needs a solution")
        if kind == "query" and has_sol:
            raise CorpusError(f"{path}:{lineno}: query {obj['id']!r} must not carry a solution")
        try:
            out.add(Ticket(obj["id"], obj["subject"], obj["description"], obj.get("solution")))
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
    return out


def load_pairs(path: str | Path, queries: TicketSet | None = None,
               kb: TicketSet | None = None) -> list[LabeledPair]:
    pairs = []
    for lineno, obj in _read_jsonl(path):
        try:
            label = RelatednessLabel[obj["label"]]
            qid, tid = obj["query_id"], obj["ticket_id"]
        except (KeyError, TypeError):
            raise CorpusError(f"{path}:{lineno}: bad pair record") from None
        if queries is not None and qid not in queries:
            raise CorpusError(f"{path}:{lineno}: unknown query id {qid!r}")
        if kb is not None and tid not in kb:
            raise CorpusError(f"{path}:{lineno}: unknown ticket id {tid!r}")
        pairs.append(LabeledPair.make(qid, tid, label))
    return pairs


def write_jsonl(path: str | Path, records: Iterable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------- splits


def split_pairs(pairs: list[LabeledPair], train_fraction: float = 0.8,
                seed: int = 42) -> tuple[list[LabeledPair], list[LabeledPair]]:
    """Seeded shuffle, then floor(N*fraction + 0.5) pairs to train and the rest to dev."""
    if not pairs:
        raise ValueError("cannot split an empty pair list")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    order = list(range(len(pairs)))
    SplitMix64(seed).shuffle(order)
    n_train = math.floor(len(pairs) * train_fraction + 0.5)
    return [pairs[i] for i in order[:n_train]], [pairs[i] for i in order[n_train:]]


# --------------------------------------------------------------------------- synthetic


class SplitMix64:
    """SplitMix64 (Steele, Lea & Flood). Bounded ints use the 128-bit multiply-high map."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def below(self, n: int) -> int:
        if n <= 0:
            raise ValueError("n must be positive")
        return (self.next_u64() * n) >> 64

    def choice(self, seq):
        return seq[self.below(len(seq))]

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]


_ONSETS = ["b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v", "w",
           "z", "st", "tr", "pl", "gr", "fl", "br", "sh", "ch", "th"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou", "ea"]
_CODAS = ["", "", "", "n", "r", "s", "t", "l", "m", "x", "ck"]
_SUFFIXES = ["s", "ed", "ing", "er"]


def _pseudo_word(rng: SplitMix64) -> str:
    n_syll = 1 + rng.below(3)
    return "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS)
                   for _ in range(n_syll))


def _variant(word: str, rng: SplitMix64) -> str:
    """Inflected or misspelt form of a ticket-side word, as a query author might write it."""
    kind = rng.below(3)
    if kind == 0:
        return word + rng.choice(_SUFFIXES)
    if kind == 1 and len(word) > 3:
        i = 1 + rng.below(len(word) - 2)
        return word[:i] + word[i + 1] + word[i] + word[i + 2:]
    return word + word[-1]


def _length(rng: SplitMix64, mean: float) -> int:
    """Integer length, uniform on [lo, hi] with lo + hi = 2 * mean (mean preserved)."""
    lo = max(1, int(math.floor(mean / 2)))
    hi = max(lo, int(round(2 * mean - lo)))
    return lo + rng.below(hi - lo + 1)


@dataclass
class SyntheticCorpus:
    kb: TicketSet
    pairs: list[LabeledPair]
    queries: TicketSet
    heldout_queries: TicketSet
    heldout_gold: list[LabeledPair]
    clusters: dict[str, int] = field(default_factory=dict)
    embeddings: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(out / "kb.jsonl", self.kb)
        write_jsonl(out / "queries.jsonl", self.queries)
        write_jsonl(out / "pairs.jsonl", self.pairs)
        write_jsonl(out / "heldout_queries.jsonl", self.heldout_queries)
        write_jsonl(out / "heldout_pairs.jsonl", self.heldout_gold)
        if self.embeddings:
            write_word2vec(out / "embeddings.txt", self.embeddings)

    @classmethod
    def load(cls, in_dir: str | Path) -> "SyntheticCorpus":
        d = Path(in_dir)
        kb = load_tickets(d / "kb.jsonl", "kb")
        queries = load_tickets(d / "queries.jsonl", "query")
        heldout = load_tickets(d / "heldout_queries.jsonl", "query")
        return cls(kb, load_pairs(d / "pairs.jsonl", queries, kb), queries, heldout,
                   load_pairs(d / "heldout_pairs.jsonl", heldout, kb))


def write_word2vec(path: str | Path, vectors: dict[str, np.ndarray]) -> None:
    """word2vec text format; ``repr`` floats so reloading is exact."""
    dim = len(next(iter(vectors.values())))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vectors)} {dim}\n")
        for word, vec in vectors.items():
            fh.write(word + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def cluster_label(qc: int, tc: int) -> RelatednessLabel:
    if qc == tc:
        return RelatednessLabel.YES
    if abs(qc - tc) == 1:
        return RelatednessLabel.REL
    return RelatednessLabel.NO


class _Writer:
    def __init__(self, cfg: SyntheticConfig, rng: SplitMix64):
        self.cfg = cfg
        self.rng = rng
        lexicon: list[str] = []
        seen: set[str] = set()
        while len(lexicon) < cfg.vocab_size:
            w = _pseudo_word(rng)
            if w not in seen:
                seen.add(w)
                lexicon.append(w)
        n_topical = int(cfg.vocab_size * (1.0 - cfg.background_fraction))
        n_pools = cfg.n_clusters * (2 if cfg.solution_vocab else 1)
        per = n_topical // n_pools
        self.background = lexicon[n_topical:] + lexicon[per * n_pools:n_topical]
        self.pools = [lexicon[c * per:(c + 1) * per] for c in range(cfg.n_clusters)]
        self.solution_pools = ([lexicon[(cfg.n_clusters + c) * per:(cfg.n_clusters + c + 1) * per]
                                for c in range(cfg.n_clusters)]
                               if cfg.solution_vocab else self.pools)
        self.variants: dict[str, str] = {}
        for pool in self.pools:
            for w in pool:
                v = _variant(w, rng)
                while v in seen:
                    v = v + v[-1]
                seen.add(v)
                self.variants[w] = v
        # Zipf-like background usage: cumulative weights 1/(r+1)
        weights = [1.0 / (r + 1) for r in range(len(self.background))]
        total = sum(weights)
        acc = 0.0
        self.bg_cdf = []
        for w in weights:
            acc += w / total
            self.bg_cdf.append(acc)

    def background_word(self) -> str:
        u = self.rng.random()
        lo, hi = 0, len(self.bg_cdf) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.bg_cdf[mid] < u:
                lo = mid + 1
            else:
                hi = mid
        return self.background[lo]

    def topical_word(self, cluster: int, query_side: bool, solution: bool = False) -> str:
        rng, cfg = self.rng, self.cfg
        c = cluster
        if rng.random() < cfg.neighbor_rate:
            nbrs = [x for x in (cluster - 1, cluster + 1) if 0 <= x < cfg.n_clusters]
            if nbrs:
                c = rng.choice(nbrs)
        word = rng.choice((self.solution_pools if solution else self.pools)[c])
        if query_side and rng.random() < cfg.mismatch_rate:
            word = self.variants[word]
        return word

    def words(self, cluster: int, n: int, topic_rate: float, query_side: bool,
              solution: bool = False) -> list[str]:
        out = []
        for _ in range(n):
            if self.rng.random() < topic_rate:
                out.append(self.topical_word(cluster, query_side, solution))
            else:
                out.append(self.background_word())
        return out

    def subject(self, cluster: int, query_side: bool) -> str:
        n = _length(self.rng, self.cfg.mean_sub_len)
        words = self.words(cluster, n, self.cfg.topic_rate[0], query_side)
        return " ".join(w.capitalize() for w in words)

    def paragraph(self, cluster: int, mean: float, rate: float, query_side: bool,
                  solution: bool = False) -> str:
        words = self.words(cluster, _length(self.rng, mean), rate, query_side, solution)
        sentences, i = [], 0
        while i < len(words):
            n = 6 + self.rng.below(9)
            chunk = words[i:i + n]
            i += n
            sentences.append(" ".join([chunk[0].capitalize()] + chunk[1:]) + ".")
        return " ".join(sentences)

    def ticket(self, tid: str, cluster: int) -> Ticket:
        cfg = self.cfg
        return Ticket(tid, self.subject(cluster, False),
                      self.paragraph(cluster, cfg.mean_desc_len, cfg.topic_rate[1], False),
                      self.paragraph(cluster, cfg.mean_sol_len, cfg.topic_rate[2], False, True))

    def embeddings(self) -> dict[str, np.ndarray]:
        """Pretrained-style vectors: topical words share a per-pool centroid.

        Query-side variants get no vector, as misspellings and rare inflections
        are missing from a pretrained vocabulary.
        """
        cfg = self.cfg
        rng = np.random.default_rng(cfg.seed)
        sd = 0.05 / math.sqrt(3.0)   # std of the uniform [-0.05, 0.05] fallback rows
        a = cfg.emb_cluster_weight
        out: dict[str, np.ndarray] = {}
        pools = self.pools + (self.solution_pools if cfg.solution_vocab else [])
        for pool in pools:
            centroid = rng.normal(0.0, sd, cfg.emb_dim)
            for w in pool:
                out[w] = a * centroid + math.sqrt(1.0 - a * a) * rng.normal(0.0, sd, cfg.emb_dim)
        for w in self.background:
            out[w] = cfg.emb_background_scale * rng.normal(0.0, sd, cfg.emb_dim)
        return out

    def query(self, qid: str, cluster: int) -> Ticket:
        cfg = self.cfg
        return Ticket(qid, self.subject(cluster, True),
                      self.paragraph(cluster, cfg.mean_desc_len, cfg.topic_rate[1], True))


def gen_synthetic(config: SyntheticConfig) -> SyntheticCorpus:
    """Clustered ticket corpus with computable relevance.

    Tickets in the same cluster are YES, adjacent clusters (|i - j| = 1) REL, all
    others NO. Labeled pairs get label noise at ``config.noise_rate``; the held-out
    gold judgments are noiseless and cover every (held-out query, KB ticket) pair.
    """
    rng = SplitMix64(config.seed)
    writer = _Writer(config, rng)
    clusters: dict[str, int] = {}

    kb = TicketSet()
    n_kb = config.n_clusters * config.tickets_per_cluster
    width = max(4, len(str(n_kb)))
    for c in range(config.n_clusters):
        for j in range(config.tickets_per_cluster):
            tid = f"t{c * config.tickets_per_cluster + j:0{width}d}"
            kb.add(writer.ticket(tid, c))
            clusters[tid] = c
    by_cluster = [[t.id for t in kb if clusters[t.id] == c] for c in range(config.n_clusters)]

    per_query = 1 if config.unique_queries else config.pairs_per_query
    n_labeled = -(-config.n_pairs // per_query) if config.n_pairs else 0
    queries = TicketSet()
    pairs: list[LabeledPair] = []
    labels = list(RelatednessLabel)
    for qi in range(n_labeled):
        qid = f"q{qi:0{width}d}"
        qc = rng.below(config.n_clusters)
        queries.add(writer.query(qid, qc))
        clusters[qid] = qc
        used: set[str] = set()
        for _ in range(min(per_query, config.n_pairs - len(pairs), n_kb)):
            tid = _pick_ticket(rng, config, qc, by_cluster, used)
            used.add(tid)
            label = cluster_label(qc, clusters[tid])
            if rng.random() < config.noise_rate:
                others = [lab for lab in labels if lab is not label]
                label = rng.choice(others)
            pairs.append(LabeledPair.make(qid, tid, label))

    heldout = TicketSet()
    gold: list[LabeledPair] = []
    for hi in range(config.n_heldout_queries):
        hid = f"h{hi:0{width}d}"
        hc = hi % config.n_clusters
        heldout.add(writer.query(hid, hc))
        clusters[hid] = hc
        for t in kb:
            gold.append(LabeledPair.make(hid, t.id, cluster_label(hc, clusters[t.id])))
    return SyntheticCorpus(kb, pairs, queries, heldout, gold, clusters, writer.embeddings())


def _pick_ticket(rng: SplitMix64, cfg: SyntheticConfig, qc: int,
                 by_cluster: list[list[str]], used: set[str]) -> str:
    yes = [c for c in range(cfg.n_clusters) if c == qc]
    rel = [c for c in range(cfg.n_clusters) if abs(c - qc) == 1]
    no = [c for c in range(cfg.n_clusters) if abs(c - qc) > 1]
    u = rng.random()
    p_yes, p_rel, _ = cfg.label_mix
    order = [yes, rel, no] if u < p_yes else [rel, yes, no] if u < p_yes + p_rel else [no, rel, yes]
    for group in order:
        pool = [t for c in group for t in by_cluster[c] if t not in used]
        if pool:
            return rng.choice(pool)
    raise CorpusError("ran out of tickets to pair with a query")
