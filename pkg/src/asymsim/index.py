"""In-memory KB index: encode every ticket once, then rank queries against the cache."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import model_hash
from .corpus import Ticket, TicketSet
from .siamese import SiameseModel, encode_many, similarity_matrix


class EmptyIndexError(ValueError):
    """Retrieval against an index without tickets."""


@dataclass(frozen=True)
class KbIndex:
    tickets: TicketSet
    reprs: tuple[np.ndarray, np.ndarray, np.ndarray]   # (h, E, T), each (N, 3, dim)
    model_hash: str

    def __len__(self) -> int:
        return len(self.tickets)


@dataclass(frozen=True)
class RetrievedTicket:
    ticket_id: str
    rank: int
    score: float
    raw: float
    solution: str

    def to_json(self) -> dict:
        return {"ticket_id": self.ticket_id, "rank": self.rank, "score": self.score,
                "solution": self.solution}


def build_index(kb: TicketSet, model: SiameseModel, previous: KbIndex | None = None) -> KbIndex:
    """Encode ``kb`` with ``model``; reuse ``previous`` when the model hash is unchanged."""
    digest = model_hash(model)
    if previous is not None and previous.model_hash == digest and previous.tickets is kb:
        return previous
    tickets = list(kb)
    if tickets:
        reprs = encode_many(model, tickets)
    else:
        reprs = tuple(np.zeros((0, 3, 0)) for _ in range(3))
    return KbIndex(kb, reprs, digest)


def retrieve_topk(query: Ticket, index: KbIndex, model: SiameseModel,
                  k: int) -> list[RetrievedTicket]:
    """Top ``k`` KB tickets (clamped to the KB size).

    Ordered by calibrated score descending. The calibration map is a step
    function, so tickets sharing a calibrated value are ordered by raw g and only
    then by ticket id.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(index) == 0:
        raise EmptyIndexError("cannot retrieve from an empty index")
    raw = similarity_matrix(model, encode_many(model, [query]), index.reprs)[0]
    cal = np.asarray(model.calibration(raw), dtype=float)
    ids = index.tickets.ids
    order = sorted(range(len(ids)), key=lambda i: (-cal[i], -raw[i], ids[i]))[:k]
    return [RetrievedTicket(ids[i], rank, float(cal[i]), float(raw[i]),
                            index.tickets[ids[i]].solution or "")
            for rank, i in enumerate(order, start=1)]
