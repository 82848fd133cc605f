"""Greedy univariate scan producing the candidate change-point superset.

Each predictor is scanned independently: thresholds are added one at a time
at the position minimizing the full MDL criterion for a model that breaks on
that predictor alone, with every region fitted under the full variable mask.
The scan stops at the per-predictor cap, when no position satisfies the
minimum-segment constraint, or when the best addition no longer lowers the
criterion.
"""

from __future__ import annotations

import math

import numpy as np

from .fitting import (
    DEGENERATE_CLIP,
    _newton_glm,
    classification_nll,
    full_design,
    link_forward,
)
from .mdl import residual_code_regression
from .model import Dataset, TASK_REGRESSION

DEFAULT_MAX_PER_PREDICTOR = 3


def default_min_segment(P: int) -> int:
    """Minimum observations per 1-D segment: max(P + 2, 10)."""
    return max(P + 2, 10)


class _RegressionSegments:
    """O(1) full-mask RSS of any sorted-order segment via prefix Gram sums."""

    def __init__(self, data: Dataset, j: int):
        rows = data.order[j]
        D = full_design(data, rows)
        y = data.y[rows]
        k = D.shape[1]
        self._G = np.zeros((data.n + 1, k, k))
        np.cumsum(D[:, :, None] * D[:, None, :], axis=0, out=self._G[1:])
        self._c = np.zeros((data.n + 1, k))
        np.cumsum(D * y[:, None], axis=0, out=self._c[1:])
        self._yy = np.zeros(data.n + 1)
        np.cumsum(y * y, out=self._yy[1:])

    def stat(self, lo: int, hi: int) -> float:
        G = self._G[hi] - self._G[lo]
        c = self._c[hi] - self._c[lo]
        yy = self._yy[hi] - self._yy[lo]
        try:
            beta = np.linalg.solve(G, c)
            if not np.isfinite(beta).all():
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            beta = np.linalg.lstsq(G, c, rcond=None)[0]
        return max(float(yy - beta @ c), 0.0)


class _BinarySegments:
    """Full-mask negative log-likelihood of sorted-order segments."""

    def __init__(self, data: Dataset, j: int, task: str):
        rows = data.order[j]
        self._D = full_design(data, rows)
        self._y = data.y[rows]
        self.task = task
        self._beta: dict[tuple[int, int], np.ndarray] = {}

    def stat(self, lo: int, hi: int, parent: tuple[int, int] | None = None) -> float:
        D = self._D[lo:hi]
        y = self._y[lo:hi]
        if y.min() == y.max():
            p = float(np.clip(y[0], DEGENERATE_CLIP, 1.0 - DEGENERATE_CLIP))
            t = np.full(y.size, link_forward(self.task, p))
            return classification_nll(self.task, t, y)
        beta0 = self._beta.get(parent) if parent is not None else None
        beta, nll, _conv, _stab = _newton_glm(D, y, self.task, beta0)
        self._beta[(lo, hi)] = beta
        return nll


def _one_predictor_mdl(
    n: int,
    P: int,
    boundaries: list[int],
    stats: dict[tuple[int, int], float],
    task: str,
) -> float:
    """Full-mask MDL of a model breaking on a single predictor only.

    ``boundaries`` is ``[0, c_1+1, .., c_l+1, n]`` in sorted-order positions.
    With no cuts this reduces to the no-break criterion.
    """
    segs = list(zip(boundaries[:-1], boundaries[1:]))
    l = len(segs) - 1
    total_stat = sum(stats[s] for s in segs)
    if task == TASK_REGRESSION:
        residual = residual_code_regression(n, total_stat)
    else:
        residual = total_stat
    s_full = P + 1
    counts = [hi - lo for lo, hi in segs]
    region = sum(math.log2(l + 1) + 0.5 * s_full * math.log2(c) for c in counts)
    if l == 0:
        return region + residual
    structural = (
        math.log2(P)
        + math.log2(2)
        + math.log2(l + 1)
        + sum(math.log2(c) for c in counts)
    )
    return structural + region + residual


def _scan_one(
    data: Dataset,
    j: int,
    task: str,
    max_per: int,
    min_segment: int,
    require_improvement: bool,
) -> list[float]:
    cuts = data.cut_positions(j)
    if cuts.size == 0:
        return []
    segments = (
        _RegressionSegments(data, j)
        if task == TASK_REGRESSION
        else _BinarySegments(data, j, task)
    )
    stats: dict[tuple[int, int], float] = {}

    def stat(lo: int, hi: int, parent=None) -> float:
        hit = stats.get((lo, hi))
        if hit is None:
            if task == TASK_REGRESSION:
                hit = segments.stat(lo, hi)
            else:
                hit = segments.stat(lo, hi, parent)
            stats[(lo, hi)] = hit
        return hit

    boundaries = [0, data.n]
    stat(0, data.n)
    current = _one_predictor_mdl(data.n, data.P, boundaries, stats, task)

    chosen: list[int] = []
    while len(chosen) < max_per:
        best_pos = None
        best_mdl = np.inf
        for pos in cuts:
            pos = int(pos)
            if pos in chosen:
                continue
            b = pos + 1  # boundary position of this cut
            seg_idx = np.searchsorted(boundaries, b) - 1
            lo, hi = boundaries[seg_idx], boundaries[seg_idx + 1]
            if b - lo < min_segment or hi - b < min_segment:
                continue
            stat(lo, b, parent=(lo, hi))
            stat(b, hi, parent=(lo, hi))
            trial = sorted(boundaries + [b])
            m = _one_predictor_mdl(data.n, data.P, trial, stats, task)
            if m < best_mdl:
                best_mdl = m
                best_pos = pos
        if best_pos is None:
            break
        if require_improvement and best_mdl >= current:
            break
        chosen.append(best_pos)
        boundaries = sorted(boundaries + [best_pos + 1])
        current = best_mdl
    return [data.midpoint(j, p) for p in sorted(chosen)]


def scan_candidates(
    data: Dataset,
    task: str,
    max_per_predictor: int = DEFAULT_MAX_PER_PREDICTOR,
    min_segment: int | None = None,
    require_improvement: bool = True,
) -> dict[int, list[float]]:
    """Candidate thresholds per predictor for seeding the swarm search.

    Returns a mapping from predictor index to an ascending list of midpoint
    thresholds; predictors contributing no candidates are omitted.

    With ``require_improvement`` (the default) a predictor's greedy sequence
    also stops as soon as the best addition no longer lowers the one-predictor
    criterion, so structureless predictors yield empty lists.  The full
    fitting pipeline disables it: a break that only pays off jointly with a
    break on another predictor can look useless to every one-predictor score,
    and the swarm search needs the candidate in the superset to find it.
    Discarding such candidates costs recall that the downstream subset search
    cannot recover, while keeping them only costs the search a little time.
    """
    data.validate_task(task)
    if max_per_predictor < 1:
        raise ValueError("max_per_predictor must be at least 1")
    if min_segment is None:
        min_segment = default_min_segment(data.P)
    elif min_segment < data.P + 2:
        raise ValueError(f"min_segment must be at least P + 2 = {data.P + 2}")
    out: dict[int, list[float]] = {}
    for j in range(data.P):
        found = _scan_one(
            data, j, task, max_per_predictor, min_segment, require_improvement
        )
        if found:
            out[j] = found
    return out
