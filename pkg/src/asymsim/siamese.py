"""Replicated Siamese similarity: multi-channel Manhattan metric, training and prediction.

A query (SUB1, DESC1) is compared with a ticket (SUB2, DESC2, SOL2) through all six
ordered component pairs::

    g = exp(-sum_{p,q} V_pq * (W_h |h_p - h_q|_1 + W_E |E_p - E_q|_1 + W_T |T_p - T_q|_1))

The SUB/DESC cross weight is shared by (SUB1, DESC2) and (DESC1, SUB2).
"""

from __future__ import annotations

import copy
import logging
from dataclasses import astuple, dataclass, field

import numpy as np

from .calibration import CalibrationMap, calibrate
from .config import TrainConfig
from .corpus import LabeledPair, Ticket, TicketSet
from .encoder import QUERY_SLOTS, TICKET_SLOTS, ComponentRepr, Encoder

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChannelWeights:
    W_h: float = 0.7
    W_E: float = 0.1
    W_T: float = 0.2

    def __post_init__(self):
        if min(astuple(self)) < 0:
            raise ValueError("channel weights must be non-negative")

    def array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


@dataclass(frozen=True)
class PairWeights:
    v_sub_sub: float = 0.3
    v_desc_desc: float = 0.3
    v_sub_desc: float = 0.2
    v_sub_sol: float = 0.1
    v_desc_sol: float = 0.1

    def __post_init__(self):
        if min(astuple(self)) < 0:
            raise ValueError("pair weights must be non-negative")

    def array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


# (query slot index, ticket slot index, pair-weight index) for the six ordered terms
PAIR_TERMS = (
    (0, 0, 0),  # SUB1-SUB2
    (0, 1, 2),  # SUB1-DESC2
    (0, 2, 3),  # SUB1-SOL2
    (1, 0, 2),  # DESC1-SUB2, shares the SUB/DESC weight
    (1, 1, 1),  # DESC1-DESC2
    (1, 2, 4),  # DESC1-SOL2
)


def _by_slot(reprs: list[ComponentRepr], slots: tuple[str, ...]) -> list[ComponentRepr]:
    found = {r.slot: r for r in reprs}
    missing = [s for s in slots if s not in found]
    if missing:
        raise ValueError(f"missing component representations: {missing}")
    return [found[s] for s in slots]


def channel_distances(qh, qE, qT, th, tE, tT) -> np.ndarray:
    """(6, 3) L1 distances per ordered term and channel."""
    out = np.empty((len(PAIR_TERMS), 3))
    for k, (p, q, _) in enumerate(PAIR_TERMS):
        for c, (a, b) in enumerate(((qh, th), (qE, tE), (qT, tT))):
            if a[p].shape != b[q].shape:
                raise ValueError("channel dimension mismatch between branches")
            out[k, c] = np.abs(a[p] - b[q]).sum()
    return out


def _pair_vector(pw: np.ndarray) -> np.ndarray:
    return np.array([pw[v] for _, _, v in PAIR_TERMS])


def metric_exponent(dist: np.ndarray, cw: np.ndarray, pw: np.ndarray) -> float:
    return float(_pair_vector(pw) @ (dist @ cw))


def manhattan_similarity(query: list[ComponentRepr], ticket: list[ComponentRepr],
                         cw: ChannelWeights = ChannelWeights(),
                         pw: PairWeights = PairWeights()) -> float:
    q = _by_slot(query, QUERY_SLOTS)
    t = _by_slot(ticket, TICKET_SLOTS)
    dist = channel_distances([r.h for r in q], [r.E for r in q], [r.T for r in q],
                             [r.h for r in t], [r.E for r in t], [r.T for r in t])
    return float(np.exp(-metric_exponent(dist, cw.array(), pw.array())))


# --------------------------------------------------------------------------- model


@dataclass
class SiameseModel:
    encoder: Encoder
    channel: np.ndarray = field(default_factory=lambda: ChannelWeights().array())
    pair: np.ndarray = field(default_factory=lambda: PairWeights().array())
    calibration: CalibrationMap = field(default_factory=CalibrationMap)
    meta: dict = field(default_factory=dict)

    @property
    def channel_weights(self) -> ChannelWeights:
        return ChannelWeights(*map(float, self.channel))

    @property
    def pair_weights(self) -> PairWeights:
        return PairWeights(*map(float, self.pair))

    def trainable(self, learn_weights: bool = False) -> dict[str, np.ndarray]:
        out = self.encoder.trainable()
        if learn_weights:
            out["weights.channel"] = self.channel
            out["weights.pair"] = self.pair
        return out

    def copy(self) -> "SiameseModel":
        return copy.deepcopy(self)


_KINDS = ["SUB", "DESC", "SUB", "DESC", "SOL"]


@dataclass
class PairTrace:
    g: float
    dist: np.ndarray
    diffs: tuple
    cache: object


def pair_forward(model: SiameseModel, query: Ticket, ticket: Ticket,
                 dropout: float = 0.0, rng: np.random.Generator | None = None) -> PairTrace:
    enc = model.encoder
    seqs = [s for _, s in enc.component_tokens(query)] + [s for _, s in enc.component_tokens(ticket)]
    if len(seqs) != 5:
        raise ValueError("expected a query (SUB, DESC) and a KB ticket (SUB, DESC, SOL)")
    h, E, T, cache = enc.forward(seqs, _KINDS, dropout, rng)
    dist = channel_distances(h[:2], E[:2], T[:2], h[2:], E[2:], T[2:])
    g = float(np.exp(-metric_exponent(dist, model.channel, model.pair)))
    diffs = tuple((h[p] - h[2 + q], E[p] - E[2 + q]) for p, q, _ in PAIR_TERMS)
    return PairTrace(g, dist, diffs, cache)


def forward_loss(model: SiameseModel, query: Ticket, ticket: Ticket, target: float,
                 dropout: float = 0.0, rng=None) -> tuple[float, float, PairTrace]:
    if not 0.0 <= target <= 1.0:
        raise ValueError("target must lie in [0, 1]")
    trace = pair_forward(model, query, ticket, dropout, rng)
    return trace.g, (trace.g - target) ** 2, trace


def backward(model: SiameseModel, trace: PairTrace, target: float,
             learn_weights: bool = False, scale: float = 1.0) -> dict[str, np.ndarray]:
    """Exact gradient of ``scale * (g - target)^2``; the L1 subgradient at 0 is 0."""
    enc = model.encoder
    cw, pw = model.channel, model.pair
    g = trace.g
    d_expo = scale * 2.0 * (g - target) * (-g)   # dL/d(exponent)
    n_h, n_E = enc.config.hidden, enc.config.input_dim
    dh = np.zeros((5, n_h))
    dE = np.zeros((5, n_E))
    for k, (p, q, v) in enumerate(PAIR_TERMS):
        sh, sE = (np.sign(x) for x in trace.diffs[k])
        wh = d_expo * pw[v] * cw[0]
        wE = d_expo * pw[v] * cw[1]
        dh[p] += wh * sh
        dh[2 + q] -= wh * sh
        dE[p] += wE * sE
        dE[2 + q] -= wE * sE
    grads = enc.backward(dh, dE, trace.cache)
    if learn_weights:
        grads["weights.channel"] = d_expo * (_pair_vector(pw) @ trace.dist)
        dpw = np.zeros(5)
        per_term = trace.dist @ cw
        for k, (_, _, v) in enumerate(PAIR_TERMS):
            dpw[v] += d_expo * per_term[k]
        grads["weights.pair"] = dpw
    return grads


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Rescale all gradients together when their global L2 norm exceeds ``max_norm``."""
    if max_norm <= 0:
        raise ValueError("max_norm must be positive")
    norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if norm <= max_norm:
        return grads
    s = max_norm / norm
    return {k: g * s for k, g in grads.items()}


@dataclass
class AdadeltaState:
    rho: float = 0.95
    eps: float = 1e-6
    sq_grad: dict = field(default_factory=dict)
    sq_step: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0 or self.eps <= 0:
            raise ValueError("adadelta needs 0 < rho < 1 and eps > 0")


def adadelta_update(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
                    state: AdadeltaState) -> None:
    """In-place Adadelta step (Zeiler 2012) for every parameter that has a gradient."""
    rho, eps = state.rho, state.eps
    for name, g in grads.items():
        x = params[name]
        if g.shape != x.shape:
            raise ValueError(f"gradient shape mismatch for {name}")
        eg = state.sq_grad.setdefault(name, np.zeros_like(x))
        ex = state.sq_step.setdefault(name, np.zeros_like(x))
        eg *= rho
        eg += (1.0 - rho) * g * g
        step = -np.sqrt(ex + eps) / np.sqrt(eg + eps) * g
        ex *= rho
        ex += (1.0 - rho) * step * step
        x += step


# --------------------------------------------------------------------------- scoring


def _resolve(pair: LabeledPair, queries: TicketSet, kb: TicketSet) -> tuple[Ticket, Ticket]:
    return queries[pair.query_id], kb[pair.ticket_id]


def encode_many(model: SiameseModel, tickets: list[Ticket]):
    """(h, E, T) arrays of shape (N, slots, dim) for same-kind tickets."""
    enc = model.encoder
    seqs, kinds = [], []
    for t in tickets:
        for kind, seq in enc.component_tokens(t):
            seqs.append(seq)
            kinds.append(kind)
    n_slots = len(seqs) // max(len(tickets), 1)
    h, E, T = enc.encode(seqs, kinds)
    shape = (len(tickets), n_slots)
    return h.reshape(shape + (-1,)), E.reshape(shape + (-1,)), T.reshape(shape + (-1,))


def similarity_matrix(model: SiameseModel, q_reprs, t_reprs) -> np.ndarray:
    """Raw g for every (query, ticket) combination of pre-encoded representations."""
    qh, qE, qT = q_reprs
    th, tE, tT = t_reprs
    cw, pw = model.channel, model.pair
    expo = np.zeros((len(qh), len(th)))
    for p, q, v in PAIR_TERMS:
        for c, (a, b) in enumerate(((qh, th), (qE, tE), (qT, tT))):
            if cw[c] == 0.0 or pw[v] == 0.0:
                continue
            for i in range(len(a)):
                expo[i] += pw[v] * cw[c] * np.abs(b[:, q] - a[i, p]).sum(axis=1)
    return np.exp(-expo)


def score_pairs(model: SiameseModel, pairs: list[LabeledPair], queries: TicketSet,
                kb: TicketSet) -> np.ndarray:
    """Raw similarities for labeled pairs, encoding each distinct text once."""
    qids = sorted({p.query_id for p in pairs})
    tids = sorted({p.ticket_id for p in pairs})
    S = similarity_matrix(model, encode_many(model, [queries[i] for i in qids]),
                          encode_many(model, [kb[i] for i in tids]))
    qpos = {q: i for i, q in enumerate(qids)}
    tpos = {t: i for i, t in enumerate(tids)}
    return np.array([S[qpos[p.query_id], tpos[p.ticket_id]] for p in pairs])


# --------------------------------------------------------------------------- training


@dataclass
class EpochLog:
    epoch: int
    train_mse: float
    dev_mse: float | None


@dataclass
class TrainResult:
    model: SiameseModel
    history: list[EpochLog]
    best_epoch: int


def pair_mse(model, pairs, queries, kb) -> float:
    g = score_pairs(model, pairs, queries, kb)
    return float(np.mean((g - np.array([p.target for p in pairs])) ** 2))


def train(model: SiameseModel, train_pairs: list[LabeledPair], dev_pairs: list[LabeledPair],
          queries: TicketSet, kb: TicketSet, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Per-pair Adadelta on the MSE between g and the [0, 1] target.

    Dropout hits the LSTM word inputs during updates only. After every epoch the
    eval-mode train and dev MSE are logged; the parameters with the best dev MSE
    are kept, and the calibration map is fit on the dev set (train set if no dev).
    The input model is not modified.
    """
    if not train_pairs:
        raise ValueError("training needs at least one labeled pair")
    model = model.copy()
    rng = np.random.default_rng(config.seed)
    params = model.trainable(config.learn_weights)
    roots = {}
    if config.learn_weights:
        # non-negativity through w = theta^2; the optimiser sees theta
        roots = {k: np.sqrt(params[k]) for k in ("weights.channel", "weights.pair")}
        params.update(roots)
    state = AdadeltaState(config.rho, config.eps)
    history: list[EpochLog] = []
    best_dev, best_epoch = np.inf, 0
    snapshot = {k: v.copy() for k, v in params.items()}
    resolved = [_resolve(p, queries, kb) for p in train_pairs]

    for epoch in range(1, config.epochs + 1):
        for idx in rng.permutation(len(train_pairs)):
            q, t = resolved[idx]
            target = train_pairs[idx].target
            _, _, trace = forward_loss(model, q, t, target, config.dropout, rng)
            grads = backward(model, trace, target, config.learn_weights)
            if roots:
                grads["weights.channel"] = grads["weights.channel"] * 2.0 * roots["weights.channel"]
                grads["weights.pair"] = grads["weights.pair"] * 2.0 * roots["weights.pair"]
            adadelta_update(params, clip_gradients(grads, config.clip_norm), state)
            if roots:
                model.channel[...] = roots["weights.channel"] ** 2
                model.pair[...] = roots["weights.pair"] ** 2
        train_mse = pair_mse(model, train_pairs, queries, kb)
        dev_mse = pair_mse(model, dev_pairs, queries, kb) if dev_pairs else None
        history.append(EpochLog(epoch, train_mse, dev_mse))
        log.info("epoch %d  train mse %.5f  dev mse %s", epoch, train_mse,
                 "n/a" if dev_mse is None else f"{dev_mse:.5f}")
        score = dev_mse if dev_mse is not None else train_mse
        if score < best_dev:
            best_dev, best_epoch = score, epoch
            snapshot = {k: v.copy() for k, v in params.items()}

    if config.epochs > 0:
        for k, v in snapshot.items():
            params[k][...] = v
        if roots:
            model.channel[...] = roots["weights.channel"] ** 2
            model.pair[...] = roots["weights.pair"] ** 2
    fit_pairs = dev_pairs if len(dev_pairs) >= 2 else train_pairs
    if len(fit_pairs) >= 2:
        raw = score_pairs(model, fit_pairs, queries, kb)
        model.calibration = calibrate(raw, [p.score for p in fit_pairs])
    return TrainResult(model, history, best_epoch)


@dataclass(frozen=True)
class Prediction:
    raw: float
    calibrated: float


def predict(model: SiameseModel, query: Ticket, ticket: Ticket) -> Prediction:
    g = pair_forward(model, query, ticket).g
    return Prediction(g, float(model.calibration(g)))
