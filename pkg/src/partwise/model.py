"""Core domain types: datasets, change-point configurations, partitions, fits.

Everything in this module is structural: values in, values out, no fitting
and no search.  All containers are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .mdl import MdlBreakdown

TASK_REGRESSION = "regression"
TASK_LOGISTIC = "logistic"
TASK_PROBIT = "probit"
TASKS = (TASK_REGRESSION, TASK_LOGISTIC, TASK_PROBIT)
CLASSIFICATION_TASKS = (TASK_LOGISTIC, TASK_PROBIT)


class PartwiseError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(PartwiseError):
    """A change-point configuration is inconsistent with the data."""


class SingularFitError(PartwiseError):
    """A least-squares design is rank deficient for the requested mask."""


class InputError(PartwiseError):
    """User-supplied tabular input is malformed."""


class SchemaError(PartwiseError):
    """A model document and a data table disagree on columns."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Dataset:
    """Observations ``(X, y)`` plus per-predictor sorted-order machinery.

    Parameters
    ----------
    X : array-like, shape (n, P)
        Predictor values.  Must be finite.
    y : array-like, shape (n,)
        Response.  Real valued for regression; exactly 0/1 for the
        classification tasks.
    column_names : sequence of str, optional
        Predictor labels; defaults to ``x1..xP``.

    Notes
    -----
    Design vectors implicitly carry a leading 1 for the intercept, so masks
    and coefficient vectors have length ``P + 1`` with index 0 = intercept.

    Thresholds are real values on the predictor scale.  The representable
    split points of predictor ``j`` are the midpoints between consecutive
    distinct sorted values; they are indexed by "cut positions": a cut at
    position ``k`` separates sorted values ``v[k]`` and ``v[k+1]``.
    """

    def __init__(self, X, y, column_names: Sequence[str] | None = None):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        if X.ndim != 2:
            raise InputError(f"X must be 2-D, got shape {X.shape}")
        n, P = X.shape
        if y.shape != (n,):
            raise InputError(f"y must have shape ({n},), got {y.shape}")
        if n == 0 or P == 0:
            raise InputError("need at least one observation and one predictor")
        if not np.isfinite(X).all():
            i, j = np.argwhere(~np.isfinite(X))[0]
            raise InputError(f"non-finite predictor value at row {i}, column {j}")
        if not np.isfinite(y).all():
            i = int(np.flatnonzero(~np.isfinite(y))[0])
            raise InputError(f"non-finite response value at row {i}")
        if column_names is None:
            column_names = tuple(f"x{j + 1}" for j in range(P))
        else:
            column_names = tuple(str(c) for c in column_names)
            if len(column_names) != P:
                raise InputError(
                    f"{len(column_names)} column names for {P} predictors"
                )
        self.X = _readonly(X)
        self.y = _readonly(y)
        self.n = n
        self.P = P
        self.column_names = column_names
        self.order = _readonly(np.argsort(X, axis=0, kind="stable").T)
        self.sorted_values = _readonly(np.sort(X, axis=0).T)
        # Admissible cut positions: k such that sorted v[k] < v[k+1].
        self._cuts = tuple(
            _readonly(np.flatnonzero(sv[1:] > sv[:-1]).astype(np.int64))
            for sv in self.sorted_values
        )

    def validate_task(self, task: str) -> None:
        if task not in TASKS:
            raise InputError(f"unknown task {task!r}; expected one of {TASKS}")
        if task in CLASSIFICATION_TASKS:
            bad = np.flatnonzero((self.y != 0.0) & (self.y != 1.0))
            if bad.size:
                raise InputError(
                    f"classification response must be 0/1; row {int(bad[0])} "
                    f"has value {self.y[bad[0]]!r}"
                )

    # -- cut-position machinery -------------------------------------------

    def cut_positions(self, j: int) -> np.ndarray:
        """Admissible cut positions of predictor ``j`` (may be empty)."""
        return self._cuts[j]

    def midpoint(self, j: int, pos: int) -> float:
        """Threshold value for the cut at position ``pos``."""
        sv = self.sorted_values[j]
        return float(0.5 * (sv[pos] + sv[pos + 1]))

    def snap_cut(self, j: int, pos: int) -> int | None:
        """Map an arbitrary order-statistic position to an admissible cut.

        Positions inside a run of tied values snap forward to the end of the
        run; positions past the last admissible cut snap back to it.  Returns
        None when the predictor is constant.
        """
        cuts = self._cuts[j]
        if cuts.size == 0:
            return None
        pos = max(0, min(int(pos), self.n - 2))
        k = int(np.searchsorted(cuts, pos, side="left"))
        if k == cuts.size:
            return int(cuts[-1])
        return int(cuts[k])

    def cut_of_threshold(self, j: int, t: float) -> int:
        """Cut position equivalent to threshold ``t`` on predictor ``j``."""
        sv = self.sorted_values[j]
        c = int(np.searchsorted(sv, t, side="right"))
        if c == 0 or c == self.n:
            raise InvalidConfigError(
                f"threshold {t} outside the open range of predictor {j}"
            )
        return c - 1

    def floor_value(self, j: int, t: float) -> float:
        """Largest observed value of predictor ``j`` that is <= ``t``.

        Thresholds are identified only up to the partition they induce, so
        comparisons between thresholds are made after mapping each to the
        boundary order statistic of its lower segment.
        """
        sv = self.sorted_values[j]
        c = int(np.searchsorted(sv, t, side="right"))
        if c == 0:
            raise InvalidConfigError(
                f"threshold {t} below every value of predictor {j}"
            )
        return float(sv[c - 1])


@dataclass(frozen=True)
class ChangePointConfig:
    """Which predictors break, how many times, and at which thresholds.

    ``breaks`` maps predictor index -> strictly increasing threshold values
    (on the predictor scale).  Predictors with no thresholds are omitted.
    """

    breaks: tuple[tuple[int, tuple[float, ...]], ...]

    def __init__(self, breaks: Mapping[int, Sequence[float]]):
        items = []
        for j in sorted(breaks):
            ts = tuple(float(t) for t in breaks[j])
            if not ts:
                continue
            if any(b <= a for a, b in zip(ts, ts[1:])):
                raise InvalidConfigError(
                    f"thresholds for predictor {j} must be strictly increasing"
                )
            items.append((int(j), ts))
        object.__setattr__(self, "breaks", tuple(items))

    @property
    def break_predictors(self) -> tuple[int, ...]:
        return tuple(j for j, _ in self.breaks)

    @property
    def B(self) -> int:
        return len(self.breaks)

    def thresholds(self, j: int) -> tuple[float, ...]:
        for jj, ts in self.breaks:
            if jj == j:
                return ts
        return ()

    @property
    def num_change_points(self) -> int:
        return sum(len(ts) for _, ts in self.breaks)

    @property
    def num_regions(self) -> int:
        r = 1
        for _, ts in self.breaks:
            r *= len(ts) + 1
        return r

    def as_dict(self) -> dict[int, tuple[float, ...]]:
        return {j: ts for j, ts in self.breaks}


EMPTY_CONFIG = ChangePointConfig({})


def _validate_thresholds(data: Dataset, config: ChangePointConfig) -> None:
    for j, ts in config.breaks:
        if not 0 <= j < data.P:
            raise InvalidConfigError(f"no predictor with index {j}")
        lo = data.sorted_values[j][0]
        hi = data.sorted_values[j][-1]
        for t in ts:
            if not lo < t < hi:
                raise InvalidConfigError(
                    f"threshold {t} outside the open range ({lo}, {hi}) "
                    f"of predictor {j}"
                )


def _region_index(
    breaks: Sequence[tuple[int, Sequence[float]]], X: np.ndarray
) -> np.ndarray:
    """Region index of each row of ``X`` under the half-open convention.

    A value equal to a threshold belongs to the lower segment.  Regions are
    numbered with the first (lowest-index) break predictor varying fastest.
    """
    idx = np.zeros(X.shape[0], dtype=np.int64)
    stride = 1
    for j, ts in breaks:
        seg = np.searchsorted(np.asarray(ts, dtype=np.float64), X[:, j], side="left")
        idx += stride * seg
        stride *= len(ts) + 1
    return idx


@dataclass(frozen=True)
class PartitionGrid:
    """The grid of regions induced by a configuration on a dataset.

    ``region_of[i]`` is the region index of observation ``i``; memberships
    and counts are derived from it.  ``segment_counts[b][z]`` is the number
    of observations whose value on break predictor ``b`` falls in that
    predictor's ``z``-th one-dimensional segment.
    """

    break_predictors: tuple[int, ...]
    thresholds: tuple[tuple[float, ...], ...]
    R: int
    region_of: np.ndarray
    memberships: tuple[np.ndarray, ...]
    region_counts: np.ndarray
    segment_counts: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return int(self.region_of.shape[0])

    def segments_of_region(self, r: int) -> tuple[int, ...]:
        """Per break predictor, the 1-D segment index of region ``r``."""
        out = []
        for ts in self.thresholds:
            out.append(r % (len(ts) + 1))
            r //= len(ts) + 1
        return tuple(out)

    def region_bounds(self, r: int) -> tuple[tuple[float, float], ...]:
        """Per break predictor, the half-open interval ``(lo, hi]`` of ``r``."""
        out = []
        for z, ts in zip(self.segments_of_region(r), self.thresholds):
            lo = -np.inf if z == 0 else ts[z - 1]
            hi = np.inf if z == len(ts) else ts[z]
            out.append((lo, hi))
        return tuple(out)


def induce_partition(data: Dataset, config: ChangePointConfig) -> PartitionGrid:
    """Partition ``data`` into the grid of regions defined by ``config``.

    Observation ``i`` lies in segment ``z`` of break predictor ``b`` iff
    ``k[z-1] < x[i, b] <= k[z]`` with ``-inf``/``+inf`` sentinels at the ends.

    Raises
    ------
    InvalidConfigError
        If any threshold falls outside the open range of its predictor.
    """
    _validate_thresholds(data, config)
    region_of = _region_index(config.breaks, data.X)
    R = config.num_regions
    region_counts = np.bincount(region_of, minlength=R)
    by_region = np.argsort(region_of, kind="stable")
    memberships = tuple(
        np.split(by_region, np.cumsum(region_counts)[:-1])
    )
    segment_counts = tuple(
        np.bincount(
            np.searchsorted(np.asarray(ts), data.X[:, j], side="left"),
            minlength=len(ts) + 1,
        )
        for j, ts in config.breaks
    )
    return PartitionGrid(
        break_predictors=config.break_predictors,
        thresholds=tuple(ts for _, ts in config.breaks),
        R=R,
        region_of=_readonly(region_of),
        memberships=memberships,
        region_counts=_readonly(region_counts),
        segment_counts=segment_counts,
    )


def region_counts_for(data: Dataset, breaks) -> np.ndarray:
    """Region occupancy counts only, without building memberships.

    ``breaks`` is a sequence of ``(predictor, thresholds)`` pairs sorted by
    predictor index.  Used by search loops that only need feasibility.
    """
    region_of = _region_index(breaks, data.X)
    R = 1
    for _, ts in breaks:
        R *= len(ts) + 1
    return np.bincount(region_of, minlength=R)


def assign_region(thresholds: Mapping[int, Sequence[float]], x) -> int:
    """Region index of a single point under a threshold set.

    Points beyond the training range fall into the outermost segment; a
    value equal to a threshold belongs to the lower segment.
    """
    x = np.asarray(x, dtype=np.float64)
    breaks = [(j, tuple(thresholds[j])) for j in sorted(thresholds)]
    return int(_region_index(breaks, x[None, :])[0])


def assign_regions(thresholds: Mapping[int, Sequence[float]], X) -> np.ndarray:
    """Vectorized :func:`assign_region` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64)
    breaks = [(j, tuple(thresholds[j])) for j in sorted(thresholds)]
    return _region_index(breaks, X)


@dataclass
class RegionFit:
    """A fitted submodel for one region.

    ``mask`` selects the active columns of the implicit design
    ``(1, x_1, .., x_P)``; ``beta`` holds the coefficients of the selected
    columns in order.  ``fit_stat`` is the residual sum of squares for
    regression and the negative Bernoulli log-likelihood for classification.
    """

    mask: np.ndarray
    beta: np.ndarray
    fit_stat: float
    stabilized: bool = False

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        if self.beta.shape != (int(self.mask.sum()),):
            raise ValueError("beta length must equal the mask popcount")

    @property
    def s(self) -> int:
        """Number of selected variables (intercept included)."""
        return int(self.mask.sum())

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        """``x'beta`` for each row of the raw predictor matrix ``X``."""
        out = np.zeros(X.shape[0])
        if self.mask[0]:
            out += self.beta[0]
            rest = self.beta[1:]
        else:
            rest = self.beta
        cols = np.flatnonzero(self.mask[1:])
        if cols.size:
            out += X[:, cols] @ rest
        return out


@dataclass
class FittedModel:
    """A complete partition-wise model: configuration, fits, and score."""

    task: str
    config: ChangePointConfig
    column_names: tuple[str, ...]
    response_name: str
    region_fits: list[RegionFit]
    mdl: "MdlBreakdown"
    sigma2_hat: float | None
    converged: bool
    n_obs: int

    def __post_init__(self):
        if len(self.region_fits) != self.config.num_regions:
            raise ValueError(
                f"{len(self.region_fits)} fits for "
                f"{self.config.num_regions} regions"
            )

    @property
    def thresholds_by_name(self) -> dict[str, tuple[float, ...]]:
        return {
            self.column_names[j]: ts for j, ts in self.config.breaks
        }
