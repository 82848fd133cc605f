"""End-to-end fitting pipeline and prediction.

``fit_model`` chains the candidate scan, the swarm search, the final
adjustment, and per-region feature selection into a single fitted model.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .bpso import BpsoParams, run_bpso
from .fitting import link_inverse
from .mdl import SIGMA2_FLOOR
from .model import (
    CLASSIFICATION_TASKS,
    Dataset,
    FittedModel,
    SchemaError,
    TASK_REGRESSION,
    assign_regions,
)
from .refine import ConfigScorer, ScoredConfig, final_adjust
from .scan import DEFAULT_MAX_PER_PREDICTOR, default_min_segment, scan_candidates


@dataclass
class FitParams:
    """Everything tunable about the fitting pipeline."""

    max_cp_per_predictor: int = DEFAULT_MAX_PER_PREDICTOR
    min_segment: int | None = None
    swarm: BpsoParams = field(default_factory=BpsoParams)
    shift_radius: int = 3
    seed: int = 0
    threads: int = 1


@dataclass
class FitOutcome:
    """A fitted model plus diagnostics of the search that produced it."""

    model: FittedModel
    candidates: dict[int, list[float]]
    bpso_iterations: int
    bpso_converged: bool
    evaluations: int


def fit_model(
    data: Dataset,
    task: str,
    params: FitParams | None = None,
    response_name: str = "y",
) -> FitOutcome:
    """Fit a partition-wise model by MDL minimization.

    Runs ``scan_candidates -> run_bpso -> final_adjust`` (feature selection
    is part of every configuration's score).  When no candidate survives
    the scan the model degenerates to the no-break configuration.
    """
    if params is None:
        params = FitParams()
    data.validate_task(task)
    min_segment = (
        default_min_segment(data.P)
        if params.min_segment is None
        else params.min_segment
    )
    if data.n < 2 * min_segment:
        warnings.warn(
            f"n={data.n} < 2*min_segment={2 * min_segment}: "
            "no split is admissible, fitting the no-break model",
            stacklevel=2,
        )
    candidates = scan_candidates(
        data,
        task,
        params.max_cp_per_predictor,
        min_segment,
        require_improvement=False,
    )
    swarm_params = params.swarm
    if params.threads > 1 and swarm_params.threads <= 1:
        swarm_params = replace(swarm_params, threads=params.threads)
    scorer = ConfigScorer(data, task, min_obs=swarm_params.min_obs)
    result = run_bpso(
        data, task, candidates, swarm_params, seed=params.seed, scorer=scorer
    )
    # Iterate the adjustment to a fixpoint: each pass only shifts around the
    # positions it was handed, so chained moves need repeated passes.  The
    # score strictly decreases across passes, which bounds the loop.
    best = scorer.score_key(result.key)
    for _ in range(50):
        adj = final_adjust(
            data,
            task,
            best.config,
            shift_radius=params.shift_radius,
            scorer=scorer,
        )
        if adj.key == best.key:
            break
        best = adj
    model = _to_model(data, task, best, response_name, result.converged)
    return FitOutcome(
        model=model,
        candidates=candidates,
        bpso_iterations=result.iterations,
        bpso_converged=result.converged,
        evaluations=scorer.evaluations,
    )


def _to_model(
    data: Dataset,
    task: str,
    scored: ScoredConfig,
    response_name: str,
    converged: bool,
) -> FittedModel:
    sigma2 = None
    if task == TASK_REGRESSION:
        rss = sum(f.fit_stat for f in scored.selection.fits)
        sigma2 = max(rss / data.n, SIGMA2_FLOOR)
    return FittedModel(
        task=task,
        config=scored.config,
        column_names=data.column_names,
        response_name=response_name,
        region_fits=scored.selection.fits,
        mdl=scored.selection.breakdown,
        sigma2_hat=sigma2,
        converged=converged,
        n_obs=data.n,
    )


def predict(model: FittedModel, X) -> np.ndarray:
    """Point predictions for the rows of ``X``.

    Regression returns fitted values; classification returns success
    probabilities.  Rows beyond the training range use the outermost region.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(model.column_names):
        raise SchemaError(
            f"expected {len(model.column_names)} predictor columns, "
            f"got shape {X.shape}"
        )
    regions = assign_regions(model.config.as_dict(), X)
    out = np.empty(X.shape[0])
    for r, fit in enumerate(model.region_fits):
        rows = regions == r
        if not rows.any():
            continue
        t = fit.linear_predictor(X[rows])
        if model.task in CLASSIFICATION_TASKS:
            out[rows] = link_inverse(model.task, t)
        else:
            out[rows] = t
    return out


def predict_labels(model: FittedModel, X) -> np.ndarray:
    """0/1 labels at probability threshold 0.5 (0.5 maps to 1)."""
    if model.task not in CLASSIFICATION_TASKS:
        raise ValueError("labels are only defined for classification models")
    return (predict(model, X) >= 0.5).astype(np.int64)
