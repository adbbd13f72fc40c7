"""Batched LSTM forward/backward used by both the word encoder and the char-BLSTM.

Gate rows are stacked in the order input, forget, output, candidate::

    i = sigmoid(W_i x + U_i h + b_i)      f = sigmoid(W_f x + U_f h + b_f)
    o = sigmoid(W_o x + U_o h + b_o)      c~ = tanh(W_c x + U_c h + b_c)
    c_t = i * c~ + f * c_{t-1}            h_t = o * tanh(c_t)

Sequences in a batch have different lengths; a step mask freezes the state of a
sequence once it has ended, so the returned state is each sequence's own last state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATES = ("i", "f", "o", "c")


class NumericError(ArithmeticError):
    """Non-finite values reached the recurrence."""


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmParams:
    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        k = GATES.index(name)
        H = self.hidden
        sl = slice(k * H, (k + 1) * H)
        return self.W[sl], self.U[sl], self.b[sl]

    def arrays(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "U": self.U, "b": self.b}

    def copy(self) -> "LstmParams":
        return LstmParams(self.W.copy(), self.U.copy(), self.b.copy())

    @classmethod
    def init(cls, rng: np.random.Generator, input_dim: int, hidden: int,
             forget_bias: float = 1.0, zero_bias: bool = False) -> "LstmParams":
        scale = 1.0 / np.sqrt(hidden)
        W = rng.uniform(-scale, scale, size=(4 * hidden, input_dim))
        U = rng.uniform(-scale, scale, size=(4 * hidden, hidden))
        b = np.zeros(4 * hidden)
        if not zero_bias:
            b[hidden:2 * hidden] = forget_bias
        return cls(W, U, b)

    @classmethod
    def zeros(cls, input_dim: int, hidden: int) -> "LstmParams":
        return cls(np.zeros((4 * hidden, input_dim)), np.zeros((4 * hidden, hidden)),
                   np.zeros(4 * hidden))


def lstm_step(x, h_prev, c_prev, params: LstmParams):
    """One step of the recurrence for a single (unbatched) input vector."""
    x, h_prev, c_prev = (np.asarray(a, dtype=float) for a in (x, h_prev, c_prev))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(h_prev)) and np.all(np.isfinite(c_prev))):
        raise NumericError("non-finite input to lstm_step")
    H = params.hidden
    z = params.W @ x + params.U @ h_prev + params.b
    i, f, o = sigmoid(z[:H]), sigmoid(z[H:2 * H]), sigmoid(z[2 * H:3 * H])
    g = np.tanh(z[3 * H:])
    c = i * g + f * c_prev
    return o * np.tanh(c), c


@dataclass
class _Cache:
    X: np.ndarray
    mask: np.ndarray
    hs: np.ndarray      # (T+1, B, H); hs[0] = 0
    cs: np.ndarray
    gates: np.ndarray   # (T, B, 4H) post-activation
    tanh_c: np.ndarray  # (T, B, H) tanh of the *new* cell, before masking


def forward(X: np.ndarray, mask: np.ndarray, params: LstmParams):
    """Run a padded batch. X: (T, B, D), mask: (T, B) with 1 for real steps.

    Returns the final hidden state (B, H) and a cache for :func:`backward`.
    """
    if not np.all(np.isfinite(X)):
        raise NumericError("non-finite input to the LSTM")
    T, B, _ = X.shape
    H = params.hidden
    xz = X @ params.W.T + params.b  # (T, B, 4H)
    hs = np.zeros((T + 1, B, H))
    cs = np.zeros((T + 1, B, H))
    gates = np.empty((T, B, 4 * H))
    tanh_c = np.empty((T, B, H))
    m = mask[..., None].astype(float)
    for t in range(T):
        z = xz[t] + hs[t] @ params.U.T
        ifo = sigmoid(z[:, :3 * H])
        g = np.tanh(z[:, 3 * H:])
        gates[t, :, :3 * H] = ifo
        gates[t, :, 3 * H:] = g
        c_new = ifo[:, :H] * g + ifo[:, H:2 * H] * cs[t]
        tc = np.tanh(c_new)
        tanh_c[t] = tc
        h_new = ifo[:, 2 * H:3 * H] * tc
        cs[t + 1] = m[t] * c_new + (1.0 - m[t]) * cs[t]
        hs[t + 1] = m[t] * h_new + (1.0 - m[t]) * hs[t]
    return hs[T].copy(), _Cache(X, mask, hs, cs, gates, tanh_c)


def backward(dh_final: np.ndarray, cache: _Cache, params: LstmParams):
    """Gradients of a loss with respect to the inputs and parameters.

    ``dh_final`` is dL/dh_T (B, H). Returns (dX, {"W", "U", "b"}).
    """
    X, hs, cs, gates, tanh_c = cache.X, cache.hs, cache.cs, cache.gates, cache.tanh_c
    T, B, _ = X.shape
    H = params.hidden
    m = cache.mask[..., None].astype(float)
    dz_all = np.zeros((T, B, 4 * H))
    dh = dh_final.copy()
    dc = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        i, f, o = gates[t, :, :H], gates[t, :, H:2 * H], gates[t, :, 2 * H:3 * H]
        g = gates[t, :, 3 * H:]
        tc = tanh_c[t]
        dh_new = m[t] * dh
        dc_new = m[t] * dc + dh_new * o * (1.0 - tc * tc)
        dz = dz_all[t]
        dz[:, :H] = dc_new * g * i * (1.0 - i)
        dz[:, H:2 * H] = dc_new * cs[t] * f * (1.0 - f)
        dz[:, 2 * H:3 * H] = dh_new * tc * o * (1.0 - o)
        dz[:, 3 * H:] = dc_new * i * (1.0 - g * g)
        dh = (1.0 - m[t]) * dh + dz @ params.U
        dc = (1.0 - m[t]) * dc + dc_new * f
    dX = dz_all @ params.W
    flat = dz_all.reshape(T * B, 4 * H)
    grads = {
        "W": flat.T @ X.reshape(T * B, -1),
        "U": flat.T @ hs[:T].reshape(T * B, H),
        "b": flat.sum(axis=0),
    }
    return dX, grads


def pad_batch(seqs: list[np.ndarray], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Right-pad a list of (T_i, D) arrays into (T, B, D) plus a (T, B) mask."""
    T = max(len(s) for s in seqs)
    X = np.zeros((T, len(seqs), dim))
    mask = np.zeros((T, len(seqs)), dtype=bool)
    for j, s in enumerate(seqs):
        X[:len(s), j] = s
        mask[:len(s), j] = True
    return X, mask
