"""Monotone post-hoc calibration of raw similarities onto the [1, 5] scale."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def pool_adjacent_violators(y, w=None) -> np.ndarray:
    """Least-squares non-decreasing fit to ``y`` (already ordered by x)."""
    y = np.asarray(y, dtype=float)
    w = np.ones_like(y) if w is None else np.asarray(w, dtype=float)
    means, weights, sizes = [], [], []
    for yi, wi in zip(y, w):
        means.append(yi)
        weights.append(wi)
        sizes.append(1)
        while len(means) > 1 and means[-2] > means[-1]:
            m2, w2, s2 = means.pop(), weights.pop(), sizes.pop()
            m1, w1, s1 = means.pop(), weights.pop(), sizes.pop()
            wt = w1 + w2
            means.append((m1 * w1 + m2 * w2) / wt)
            weights.append(wt)
            sizes.append(s1 + s2)
    return np.repeat(means, sizes)


@dataclass(frozen=True)
class CalibrationMap:
    """Step function from mapped raw score (1 + 4g) to [1, 5].

    With no knots the map is the identity on the mapped score, i.e. 1 + 4g.
    Below the first knot the first fitted value applies.
    """

    knots: np.ndarray = field(default_factory=lambda: np.zeros(0))
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def fitted(self) -> bool:
        return len(self.knots) > 0

    def __call__(self, g):
        x = 1.0 + 4.0 * np.asarray(g, dtype=float)
        if not self.fitted:
            return np.clip(x, 1.0, 5.0)
        k = np.searchsorted(self.knots, x, side="right") - 1
        return self.values[np.clip(k, 0, len(self.values) - 1)]


def calibrate(raw_scores, gold_scores) -> CalibrationMap:
    """Isotonic regression of gold [1, 5] scores on 1 + 4g, clamped to [1, 5]."""
    raw = np.asarray(raw_scores, dtype=float)
    gold = np.asarray(gold_scores, dtype=float)
    if raw.shape != gold.shape or raw.ndim != 1:
        raise ValueError("raw and gold scores must be equal-length vectors")
    if len(raw) < 2:
        raise ValueError("calibration needs at least two points")
    x = 1.0 + 4.0 * raw
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], gold[order]
    # tied x values are pooled first so the map stays a function
    knots, first = np.unique(xs, return_index=True)
    counts = np.diff(np.append(first, len(xs)))
    sums = np.add.reduceat(ys, first)
    fit = pool_adjacent_violators(sums / counts, counts)
    return CalibrationMap(knots, np.clip(fit, 1.0, 5.0))
