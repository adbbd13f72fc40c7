"""STS metrics (Pearson, Spearman, MSE) and ranking metrics (MAP@k, MRR@k, Acc@k)."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np
from scipy.stats import rankdata

from .corpus import LabeledPair, RelatednessLabel, TicketSet
from .siamese import SiameseModel, encode_many, score_pairs, similarity_matrix
from .text import TokenSeq

KS = (1, 5, 10)


class UndefinedMetricError(ValueError):
    """The metric has no value for this input (zero variance, no relevant items)."""


def pearson(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("pearson needs two equal-length vectors of length >= 2")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(dx @ dx), np.sqrt(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedMetricError("correlation undefined for a constant vector")
    return float(np.clip((dx @ dy) / (sx * sy), -1.0, 1.0))


def spearman(xs, ys) -> float:
    """Pearson correlation of average (fractional) ranks."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("spearman needs two equal-length vectors of length >= 2")
    return pearson(rankdata(x), rankdata(y))


def mse(preds, golds) -> float:
    p = np.asarray(preds, dtype=float)
    g = np.asarray(golds, dtype=float)
    if p.shape != g.shape or p.size == 0:
        raise ValueError("mse needs two non-empty equal-length vectors")
    return float(np.mean((p - g) ** 2))


# --------------------------------------------------------------------------- ranking


@dataclass(frozen=True)
class RankedList:
    query_id: str
    ticket_ids: tuple[str, ...]
    scores: tuple[float, ...]
    relevant: tuple[bool, ...]
    n_relevant: int

    @classmethod
    def build(cls, query_id: str, ticket_ids, scores, relevant_ids: set[str],
              k: int | None = None) -> "RankedList":
        """Sort by score descending, ties by ticket id ascending; keep the top k."""
        order = sorted(range(len(ticket_ids)), key=lambda i: (-scores[i], ticket_ids[i]))
        if k is not None:
            order = order[:k]
        ids = tuple(ticket_ids[i] for i in order)
        return cls(query_id, ids, tuple(float(scores[i]) for i in order),
                   tuple(t in relevant_ids for t in ids), len(relevant_ids))


def average_precision_at_k(rel: tuple[bool, ...], k: int, n_relevant: int) -> float:
    hits, total = 0, 0.0
    for i, r in enumerate(rel[:k], start=1):
        if r:
            hits += 1
            total += hits / i
    return total / min(k, n_relevant)


def reciprocal_rank_at_k(rel: tuple[bool, ...], k: int) -> float:
    for i, r in enumerate(rel[:k], start=1):
        if r:
            return 1.0 / i
    return 0.0


def retrieval_metrics(ranked: Iterable[RankedList], ks=KS) -> dict[str, float]:
    """MAP@k, MRR@k and Acc@k; queries without relevant tickets are skipped."""
    lists = [r for r in ranked if r.n_relevant > 0]
    if not lists:
        raise UndefinedMetricError("no query has a relevant ticket")
    out = {}
    for k in ks:
        out[f"map@{k}"] = float(np.mean([average_precision_at_k(r.relevant, k, r.n_relevant)
                                         for r in lists]))
    for k in ks:
        out[f"mrr@{k}"] = float(np.mean([reciprocal_rank_at_k(r.relevant, k) for r in lists]))
    for k in ks:
        out[f"acc@{k}"] = float(np.mean([any(r.relevant[:k]) for r in lists]))
    return out


@dataclass
class EvalReport:
    r: float = float("nan")
    rho: float = float("nan")
    mse: float = float("nan")
    map_1: float = float("nan")
    map_5: float = float("nan")
    map_10: float = float("nan")
    mrr_1: float = float("nan")
    mrr_5: float = float("nan")
    mrr_10: float = float("nan")
    acc_1: float = float("nan")
    acc_5: float = float("nan")
    acc_10: float = float("nan")

    def update(self, metrics: dict[str, float]) -> "EvalReport":
        for key, value in metrics.items():
            setattr(self, key.replace("@", "_"), value)
        return self

    def to_dict(self) -> dict[str, float]:
        return {k.replace("_", "@") if k[-1].isdigit() else k: v for k, v in asdict(self).items()}

    def table(self) -> str:
        rows = [f"{name:<8}{value:>9.4f}" for name, value in self.to_dict().items()]
        return "\n".join(rows)


# --------------------------------------------------------------------------- model evaluation


def relevant_ids(gold: list[LabeledPair], policy: str = "yes") -> dict[str, set[str]]:
    if policy not in ("yes", "yes+rel"):
        raise ValueError("relevance policy must be 'yes' or 'yes+rel'")
    ok = {RelatednessLabel.YES} if policy == "yes" else {RelatednessLabel.YES, RelatednessLabel.REL}
    out: dict[str, set[str]] = {}
    for p in gold:
        out.setdefault(p.query_id, set())
        if p.label in ok:
            out[p.query_id].add(p.ticket_id)
    return out


def rank_all(scores: np.ndarray, query_ids: list[str], ticket_ids: list[str],
             relevant: dict[str, set[str]], k: int | None = None) -> list[RankedList]:
    return [RankedList.build(q, ticket_ids, scores[i], relevant.get(q, set()), k)
            for i, q in enumerate(query_ids)]


def eval_sts(model: SiameseModel, pairs: list[LabeledPair], queries: TicketSet,
             kb: TicketSet) -> tuple[float, float, float]:
    """(Pearson r, Spearman rho, MSE) of calibrated predictions against gold [1, 5] scores."""
    if not pairs:
        raise ValueError("eval_sts needs at least one pair")
    preds = model.calibration(score_pairs(model, pairs, queries, kb))
    golds = np.array([p.score for p in pairs])
    return pearson(preds, golds), spearman(preds, golds), mse(preds, golds)


def eval_retrieval(model: SiameseModel, queries: TicketSet, kb: TicketSet,
                   gold: list[LabeledPair], k: int = 10, policy: str = "yes",
                   ks=KS) -> dict[str, float]:
    """Rank the whole KB for every judged query and score the top of each list."""
    relevant = relevant_ids(gold, policy)
    qids = [q for q in queries.ids if q in relevant]
    S = similarity_matrix(model, encode_many(model, [queries[q] for q in qids]),
                          encode_many(model, list(kb)))
    return retrieval_metrics(rank_all(S, qids, kb.ids, relevant, max(k, *ks)), ks)


def full_report(model, dev_pairs, queries, kb, rq, gold, policy="yes") -> EvalReport:
    r, rho, err = eval_sts(model, dev_pairs, queries, kb)
    rep = EvalReport(r=r, rho=rho, mse=err)
    return rep.update(eval_retrieval(model, rq, kb, gold, policy=policy))


# --------------------------------------------------------------------------- unsupervised baselines


def merged_tokens(encoder, ticket, parts=None) -> TokenSeq:
    """Components merged into one document (SUB then DESC then SOL)."""
    seqs = [s for kind, s in encoder.component_tokens(ticket) if parts is None or kind in parts]
    out = seqs[0]
    for s in seqs[1:]:
        out = out.concat(s)
    return out


def unsupervised_scores(encoder, queries: list, tickets: list, channel: str,
                        query_parts=None, ticket_parts=None) -> np.ndarray:
    """exp(-L1) similarity on a single channel ("E" SumEMB or "T" DocNADE) of merged texts."""
    if channel not in ("E", "T"):
        raise ValueError("channel must be 'E' or 'T'")
    q_seqs = [merged_tokens(encoder, q, query_parts) for q in queries]
    t_seqs = [merged_tokens(encoder, t, ticket_parts) for t in tickets]
    _, qE, qT = encoder.encode(q_seqs, ["DESC"] * len(q_seqs))
    _, tE, tT = encoder.encode(t_seqs, ["DESC"] * len(t_seqs))
    a, b = (qE, tE) if channel == "E" else (qT, tT)
    D = np.stack([np.abs(b - row).sum(axis=1) for row in a])
    return np.exp(-D)


def eval_baseline(encoder, queries: TicketSet, kb: TicketSet, gold: list[LabeledPair],
                  channel: str, policy: str = "yes", ks=KS) -> dict[str, float]:
    relevant = relevant_ids(gold, policy)
    qids = [q for q in queries.ids if q in relevant]
    S = unsupervised_scores(encoder, [queries[q] for q in qids], list(kb), channel)
    return retrieval_metrics(rank_all(S, qids, kb.ids, relevant, max(ks)), ks)
