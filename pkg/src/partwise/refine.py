"""Per-region feature selection and post-search adjustment.

``select_features`` cycles region by region, replacing one region's variable
mask with the total-MDL minimizer while all others are held fixed, until a
full cycle changes nothing.  ``final_adjust`` enumerates change-point subsets
and small threshold shifts around a search solution and returns the best.

``ConfigScorer`` wraps partition induction + feature selection + MDL into a
single memoized evaluation, keyed by cut positions, so search loops never
score the same configuration twice.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .fitting import RegionDesign, _fit_binary, FitRequest
from .mdl import MdlBreakdown, SIGMA2_FLOOR, mdl_score
from .model import (
    ChangePointConfig,
    Dataset,
    InvalidConfigError,
    PartitionGrid,
    RegionFit,
    TASK_REGRESSION,
    induce_partition,
    region_counts_for,
)

EXHAUSTIVE_MASK_LIMIT = 15  # exhaustive 2^(P+1) enumeration up to this many columns
MAX_CYCLES = 60
SUBSET_CAP = 12  # beyond this many change points, only single-drop subsets


def _mask_table(n_params: int):
    """All masks as (mask_int, column indices, popcount, lex tuple)."""
    out = []
    for m in range(1 << n_params):
        bools = tuple((m >> i) & 1 for i in range(n_params))
        cols = np.flatnonzero(np.array(bools, dtype=bool))
        out.append((m, cols, len(cols), bools))
    return out


_MASK_TABLES: dict[int, list] = {}


def _masks_for(n_params: int):
    table = _MASK_TABLES.get(n_params)
    if table is None:
        table = _mask_table(n_params)
        _MASK_TABLES[n_params] = table
    return table


def _bools_to_mask(bools: Sequence[int]) -> np.ndarray:
    return np.array(bools, dtype=bool)


def _stepwise_candidates(current: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Single-bit add/drop neighbours of a mask, as lex tuples."""
    out = []
    for i in range(len(current)):
        flipped = list(current)
        flipped[i] = 1 - flipped[i]
        out.append(tuple(flipped))
    return out


@dataclass
class SelectionResult:
    """Feature-selection outcome for a fixed partition."""

    masks: list[np.ndarray]
    fits: list[RegionFit]
    breakdown: MdlBreakdown

    @property
    def total(self) -> float:
        return self.breakdown.total


def _region_menu(design: RegionDesign, n_params: int, exhaustive: bool):
    """Feasible (value-relevant) fits of one region for every candidate mask.

    Returns a list of ``(s, lex, mask_int, fit_stat, beta, stabilized)``
    sorted by (s, lex), which is exactly the tie-break order.
    """
    menu = []
    if exhaustive:
        for mask_int, cols, s, bools in _masks_for(n_params):
            res = design.fit_mask(mask_int, cols)
            if res is None:
                continue
            beta, stat, stab = res
            menu.append((s, bools, mask_int, stat, beta, stab))
        menu.sort(key=lambda e: (e[0], e[1]))
    else:
        # Greedy bidirectional stepwise on fit_stat alone would ignore the
        # (s/2) log2 n_r cost, so step on the per-region MDL contribution.
        half_log2n = 0.5 * math.log2(design.n_r)
        seen: set[tuple[int, ...]] = set()

        def consider(bools):
            if bools in seen:
                return None
            seen.add(bools)
            cols = np.flatnonzero(np.array(bools, dtype=bool))
            mask_int = sum(1 << i for i, b in enumerate(bools) if b)
            res = design.fit_mask(mask_int, cols)
            if res is None:
                return None
            beta, stat, stab = res
            entry = (sum(bools), bools, mask_int, stat, beta, stab)
            menu.append(entry)
            return entry

        current = tuple([1] * n_params)
        entry = consider(current)
        if entry is None:
            current = tuple([0] * n_params)
            entry = consider(current)
        while True:
            value = entry[0] * half_log2n + entry[3]
            best = None
            for cand in _stepwise_candidates(current):
                e = consider(cand)
                if e is None:
                    continue
                v = e[0] * half_log2n + e[3]
                if v < value and (best is None or v < best[0]):
                    best = (v, cand, e)
            if best is None:
                break
            _, current, entry = best
        menu.sort(key=lambda e: (e[0], e[1]))
    return menu


def select_features(
    data: Dataset,
    task: str,
    grid: PartitionGrid,
    region_cache: dict | None = None,
) -> SelectionResult:
    """Choose each region's variable mask by total-MDL coordinate descent.

    Every region starts from the full mask; regions are visited in index
    order and each takes the mask minimizing the total criterion with the
    other regions fixed.  The per-region search is exhaustive over all
    ``2^(P+1)`` masks when P+1 <= 15 and greedy bidirectional stepwise
    beyond that.  Stops after the first cycle with no change.

    ``region_cache`` (keyed by region membership) lets callers reuse the
    per-mask fit menus across configurations that share regions.
    """
    n_params = data.P + 1
    exhaustive = n_params <= EXHAUSTIVE_MASK_LIMIT

    # Degenerate single-class regions have one canonical fit.
    fixed: dict[int, RegionFit] = {}
    menus: dict[int, list] = {}
    half_log2n: dict[int, float] = {}
    for r, rows in enumerate(grid.memberships):
        half_log2n[r] = 0.5 * math.log2(rows.size)
        ck = rows.tobytes() if region_cache is not None else None
        hit = region_cache.get(ck) if ck is not None else None
        if hit is None:
            design = RegionDesign(data, rows, task)
            if task != TASK_REGRESSION and design._constant_response:
                full = np.ones(n_params, dtype=bool)
                hit = ("fixed", _fit_binary(data, FitRequest(rows, full, task)))
            else:
                menu = _region_menu(design, n_params, exhaustive)
                if not menu:
                    raise RuntimeError("no feasible mask for a region")
                hit = ("menu", menu)
            if ck is not None:
                region_cache[ck] = hit
        if hit[0] == "fixed":
            fixed[r] = hit[1]
        else:
            menus[r] = hit[1]

    def pick(r, chosen, stats):
        """Best menu entry for region r given the other regions' stats."""
        menu = menus[r]
        if task == TASK_REGRESSION:
            other = sum(stats) - stats[r]
            n = data.n
            best = None
            best_val = np.inf
            for entry in menu:
                s, _, _, stat, _, _ = entry
                sigma2 = max((other + stat) / n, SIGMA2_FLOOR)
                val = s * half_log2n[r] + 0.5 * n * math.log(sigma2)
                if val < best_val:
                    best_val = val
                    best = entry
            return best
        best = None
        best_val = np.inf
        for entry in menu:
            s, _, _, stat, _, _ = entry
            val = s * half_log2n[r] + stat
            if val < best_val:
                best_val = val
                best = entry
        return best

    R = grid.R
    chosen: list = [None] * R
    stats = [0.0] * R
    for r in range(R):
        if r in fixed:
            stats[r] = fixed[r].fit_stat
        else:
            full_entry = max(menus[r], key=lambda e: e[0])
            chosen[r] = full_entry
            stats[r] = full_entry[3]

    for _ in range(MAX_CYCLES):
        changed = False
        for r in range(R):
            if r in fixed:
                continue
            entry = pick(r, chosen, stats)
            if entry is not chosen[r]:
                changed = True
                chosen[r] = entry
                stats[r] = entry[3]
        if not changed:
            break

    masks = []
    fits = []
    for r in range(R):
        if r in fixed:
            fits.append(fixed[r])
            masks.append(fixed[r].mask)
        else:
            s, bools, mask_int, stat, beta, stab = chosen[r]
            mask = _bools_to_mask(bools)
            fits.append(RegionFit(mask, beta, stat, stabilized=stab))
            masks.append(mask)
    config = ChangePointConfig(
        {j: ts for j, ts in zip(grid.break_predictors, grid.thresholds)}
    )
    breakdown = mdl_score(data, config, grid, fits, task)
    return SelectionResult(masks=masks, fits=fits, breakdown=breakdown)


@dataclass
class ScoredConfig:
    """A configuration together with its feature-selected fit and score."""

    key: tuple
    config: ChangePointConfig
    grid: PartitionGrid
    selection: SelectionResult

    @property
    def total(self) -> float:
        return self.selection.total


class ConfigScorer:
    """Memoized feature-selected MDL evaluation of configurations.

    Keys are tuples of ``(predictor, (cut positions...))`` pairs, ascending.
    Scoring the same key twice returns the cached result, which keeps the
    swarm search cheap once it concentrates.
    """

    def __init__(self, data: Dataset, task: str, min_obs: int | None = None):
        data.validate_task(task)
        self.data = data
        self.task = task
        self.min_obs = int(data.P if min_obs is None else min_obs)
        self._cache: dict[tuple, ScoredConfig] = {}
        self._region_cache: dict = {}

    # -- key plumbing ------------------------------------------------------

    def key_of_config(self, config: ChangePointConfig) -> tuple:
        return tuple(
            (j, tuple(self.data.cut_of_threshold(j, t) for t in ts))
            for j, ts in config.breaks
        )

    def config_of_key(self, key: tuple) -> ChangePointConfig:
        return ChangePointConfig(
            {j: [self.data.midpoint(j, p) for p in ps] for j, ps in key}
        )

    def breaks_of_key(self, key: tuple):
        return [
            (j, tuple(self.data.midpoint(j, p) for p in ps)) for j, ps in key
        ]

    def feasible(self, key: tuple) -> bool:
        """Every induced region holds at least ``min_obs`` observations."""
        counts = region_counts_for(self.data, self.breaks_of_key(key))
        return int(counts.min()) >= self.min_obs

    # -- scoring -----------------------------------------------------------

    def score_key(self, key: tuple) -> ScoredConfig:
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        config = self.config_of_key(key)
        grid = induce_partition(self.data, config)
        if int(grid.region_counts.min()) < 1:
            raise InvalidConfigError("configuration induces an empty region")
        selection = select_features(
            self.data, self.task, grid, region_cache=self._region_cache
        )
        scored = ScoredConfig(key=key, config=config, grid=grid, selection=selection)
        self._cache[key] = scored
        return scored

    def score_config(self, config: ChangePointConfig) -> ScoredConfig:
        return self.score_key(self.key_of_config(config))

    @property
    def evaluations(self) -> int:
        return len(self._cache)


def final_adjust(
    data: Dataset,
    task: str,
    config: ChangePointConfig,
    shift_radius: int = 3,
    scorer: ConfigScorer | None = None,
    subset_cap: int = SUBSET_CAP,
) -> ScoredConfig:
    """Search subsets and small shifts of ``config``'s change points.

    Every subset of the change points is evaluated (all ``2^m`` subsets up
    to ``subset_cap`` points, otherwise the full set plus single-drop
    subsets).  Around each subset, each retained threshold is additionally
    shifted one at a time by ``+-1..shift_radius`` order-statistic positions.
    The feature-selected MDL minimizer is returned; the incumbent is among
    the candidates, so the result never scores worse than the input.
    """
    if scorer is None:
        scorer = ConfigScorer(data, task)
    pairs = [
        (j, scorer.data.cut_of_threshold(j, t))
        for j, ts in config.breaks
        for t in ts
    ]
    pairs.sort()
    m = len(pairs)
    incumbent_key = _key_from_pairs(pairs)
    best = scorer.score_key(incumbent_key)

    if m == 0:
        return best

    if m <= subset_cap:
        keep_sets = [
            [i for i in range(m) if (mask >> i) & 1] for mask in range(1 << m)
        ]
    else:
        keep_sets = [list(range(m))]
        keep_sets += [
            [i for i in range(m) if i != drop] for drop in range(m)
        ]

    seen_infeasible: set[tuple] = set()

    def try_key(key):
        nonlocal best
        if key in seen_infeasible:
            return
        if key != incumbent_key and key not in scorer._cache:
            if not scorer.feasible(key):
                seen_infeasible.add(key)
                return
        sc = scorer.score_key(key)
        if sc.total < best.total:
            best = sc

    for keep in keep_sets:
        kept = [pairs[i] for i in keep]
        try_key(_key_from_pairs(kept))
        for slot in range(len(kept)):
            j, pos = kept[slot]
            for delta in itertools.chain(
                range(-shift_radius, 0), range(1, shift_radius + 1)
            ):
                moved = data.snap_cut(j, pos + delta)
                if moved is None or moved == pos:
                    continue
                variant = kept[:slot] + [(j, moved)] + kept[slot + 1 :]
                if len({p for p in variant}) < len(variant):
                    continue
                try_key(_key_from_pairs(variant))
    return best


def _key_from_pairs(pairs) -> tuple:
    by_pred: dict[int, list[int]] = {}
    for j, pos in sorted(pairs):
        by_pred.setdefault(j, []).append(pos)
    return tuple((j, tuple(sorted(set(ps)))) for j, ps in sorted(by_pred.items()))
