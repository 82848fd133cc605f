"""Binary particle swarm search over break-candidate matrices.

Particles are P-by-n bit matrices: bit ``(j, k)`` set means the midpoint
above the k-th order statistic of predictor ``j`` is a threshold.  Velocity
updates squash through a sigmoid of an absolute value, so velocities live in
``[0.5, 1)``; position updates copy bits from the particle itself, its pbest,
or the global best depending on which velocity band is hit.  Elitist
mutation clones the best tenth of the swarm over the worst tenth each
iteration, and the search stops once the global best score is unchanged for
five consecutive iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import Dataset, ChangePointConfig, region_counts_for
from .refine import ConfigScorer, ScoredConfig

SHIFT_SPAN = 3  # random bit adjustments are drawn from {-3, ..., +3}


@dataclass
class BpsoParams:
    """Swarm-search tuning parameters."""

    swarm_size: int = 100
    omega: float = 1.0
    c1: float = 2.0
    c2: float = 2.0
    a: float = 0.5
    max_iter: int = 200
    stall_iters: int = 5
    tol: float = 1e-12
    min_obs: int | None = None  # defaults to P when None
    threads: int = 1  # worker threads for particle scoring


@dataclass
class Particle:
    bits: np.ndarray  # (P, n) bool
    key: tuple
    score: float


@dataclass
class SwarmState:
    particles: list[Particle]
    velocities: np.ndarray  # (N, P, n) in [0, 1]
    pbest: list[Particle]
    gbest: Particle
    stall_count: int = 0

    @property
    def size(self) -> int:
        return len(self.particles)


@dataclass
class BpsoResult:
    config: ChangePointConfig
    key: tuple
    score: float
    converged: bool
    iterations: int
    scored: ScoredConfig


def _rng(seed: int, stream: int, iteration: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, stream, iteration, index])


def sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


def update_velocity(
    v_prev: float,
    x_prev_bit: int,
    pbest_bit: int,
    gbest_bit: int,
    omega: float = 1.0,
    c1: float = 2.0,
    c2: float = 2.0,
    rng: np.random.Generator | None = None,
    r1: float | None = None,
    r2: float | None = None,
) -> float:
    """One velocity-element update; result always lies in [0.5, 1).

    ``r1`` and ``r2`` default to fresh U(0,1) draws from ``rng``.
    """
    if r1 is None or r2 is None:
        if rng is None:
            raise ValueError("need either rng or explicit r1/r2")
        draws = rng.random(2)
        r1 = draws[0] if r1 is None else r1
        r2 = draws[1] if r2 is None else r2
    inner = (
        omega * v_prev
        + c1 * r1 * (pbest_bit - x_prev_bit)
        + c2 * r2 * (gbest_bit - x_prev_bit)
    )
    return float(sigmoid(abs(inner)))


def update_particle_bit(
    x_prev_bit: int, pbest_bit: int, gbest_bit: int, v_new: float, a: float = 0.5
) -> int:
    """Band rule: keep own bit, copy pbest's, or copy gbest's."""
    if v_new <= a:
        return x_prev_bit
    if v_new <= 0.5 * (1.0 + a):
        return pbest_bit
    return gbest_bit


def _candidate_pairs(
    data: Dataset, candidates: Mapping[int, Sequence[float]]
) -> list[tuple[int, int]]:
    pairs = []
    for j in sorted(candidates):
        for t in candidates[j]:
            pairs.append((j, data.cut_of_threshold(j, t)))
    return sorted(set(pairs))


def _key_of_bits(bits: np.ndarray) -> tuple:
    out = []
    for j in range(bits.shape[0]):
        pos = np.flatnonzero(bits[j])
        if pos.size:
            out.append((j, tuple(int(p) for p in pos)))
    return tuple(out)


def _breaks_of_bits(data: Dataset, bits: np.ndarray):
    return [
        (j, tuple(data.midpoint(j, int(p)) for p in np.flatnonzero(bits[j])))
        for j in range(bits.shape[0])
        if bits[j].any()
    ]


def _repair(
    bits: np.ndarray, data: Dataset, min_obs: int, rng: np.random.Generator
) -> None:
    """Drop random set bits until every induced region holds >= min_obs."""
    while True:
        counts = region_counts_for(data, _breaks_of_bits(data, bits))
        if int(counts.min()) >= min_obs:
            return
        set_pos = np.argwhere(bits)
        drop = set_pos[int(rng.integers(set_pos.shape[0]))]
        bits[drop[0], drop[1]] = False


def _set_snapped(bits: np.ndarray, data: Dataset, j: int, pos: int) -> None:
    snapped = data.snap_cut(j, pos)
    if snapped is not None:
        bits[j, snapped] = True


def _make_particle(
    bits: np.ndarray, data: Dataset, min_obs: int, rng, scorer: ConfigScorer
) -> Particle:
    _repair(bits, data, min_obs, rng)
    key = _key_of_bits(bits)
    score = scorer.score_key(key).total
    return Particle(bits=bits, key=key, score=score)


def init_swarm(
    data: Dataset,
    candidates: Mapping[int, Sequence[float]],
    params: BpsoParams,
    seed: int,
    scorer: ConfigScorer,
) -> SwarmState:
    """Build and score the initial swarm.

    Particle 1 encodes the whole candidate set; the next half encodes
    random subsets (each candidate kept with probability 1/2); the rest
    encode random subsets with every kept bit shifted by a random offset in
    ``{-3..+3}`` order-statistic positions.  All velocities start at 0.  An
    empty candidate set degenerates to a single all-zeros particle.
    """
    pairs = _candidate_pairs(data, candidates)
    P, n = data.P, data.n
    min_obs = data.P if params.min_obs is None else params.min_obs
    if not pairs:
        bits = np.zeros((P, n), dtype=bool)
        particle = _make_particle(
            bits, data, min_obs, _rng(seed, 0, 0, 0), scorer
        )
        particles = [particle]
    else:
        N = params.swarm_size
        if N < 3:
            raise ValueError("swarm_size must be at least 3")
        half = math.ceil(N / 2)
        particles = []
        for i in range(N):
            rng = _rng(seed, 0, 0, i)
            bits = np.zeros((P, n), dtype=bool)
            if i == 0:
                for j, pos in pairs:
                    bits[j, pos] = True
            elif i < half:
                keep = rng.random(len(pairs)) < 0.5
                for (j, pos), k in zip(pairs, keep):
                    if k:
                        bits[j, pos] = True
            else:
                keep = rng.random(len(pairs)) < 0.5
                offsets = rng.integers(-SHIFT_SPAN, SHIFT_SPAN + 1, len(pairs))
                for (j, pos), k, off in zip(pairs, keep, offsets):
                    if k:
                        _set_snapped(bits, data, j, pos + int(off))
            particles.append(_make_particle(bits, data, min_obs, rng, scorer))
    velocities = np.zeros((len(particles), P, n))
    pbest = [Particle(p.bits.copy(), p.key, p.score) for p in particles]
    g = min(range(len(pbest)), key=lambda i: (pbest[i].score, i))
    gbest = Particle(pbest[g].bits.copy(), pbest[g].key, pbest[g].score)
    return SwarmState(
        particles=particles, velocities=velocities, pbest=pbest, gbest=gbest
    )


def _mutate_bits(
    bits: np.ndarray,
    data: Dataset,
    pairs: list[tuple[int, int]],
    rng: np.random.Generator,
) -> np.ndarray:
    """One mutation: resize the bit set, shift the bits, or both."""
    out = bits.copy()
    choice = int(rng.integers(3))

    def resize():
        here = {(int(j), int(p)) for j, p in np.argwhere(out)}
        add_pool = [pr for pr in pairs if pr not in here]
        want_add = bool(rng.integers(2))
        if want_add and not add_pool:
            want_add = False
        if not want_add and not here:
            want_add = bool(add_pool)
        if want_add and add_pool:
            j, pos = add_pool[int(rng.integers(len(add_pool)))]
            out[j, pos] = True
        elif here:
            drops = sorted(here)
            j, pos = drops[int(rng.integers(len(drops)))]
            out[j, pos] = False

    def shift():
        set_pos = np.argwhere(out)
        if set_pos.shape[0] == 0:
            return
        offsets = rng.integers(-SHIFT_SPAN, SHIFT_SPAN + 1, set_pos.shape[0])
        out[:] = False
        for (j, pos), off in zip(set_pos, offsets):
            _set_snapped(out, data, int(j), int(pos) + int(off))

    if choice == 0:
        resize()
    elif choice == 1:
        shift()
    else:
        resize()
        shift()
    return out


def mutate(
    swarm: SwarmState,
    data: Dataset,
    pairs: list[tuple[int, int]],
    params: BpsoParams,
    seed: int,
    iteration: int,
    scorer: ConfigScorer,
) -> None:
    """Clone-and-mutate the best tenth of the swarm over the worst tenth.

    Mutants are repaired to the minimum-observations constraint before
    scoring.  A mutant that beats the pbest of the slot it lands in updates
    that pbest, so the global best never worsens across a mutation step.
    """
    N = swarm.size
    k = math.ceil(N / 10)
    min_obs = data.P if params.min_obs is None else params.min_obs
    order = sorted(range(N), key=lambda i: (swarm.particles[i].score, i))
    best_idx = order[:k]
    worst_idx = order[::-1][:k]
    for rank, src in enumerate(best_idx):
        rng = _rng(seed, 2, iteration, rank)
        bits = _mutate_bits(swarm.particles[src].bits, data, pairs, rng)
        mutant = _make_particle(bits, data, min_obs, rng, scorer)
        slot = worst_idx[rank]
        swarm.particles[slot] = mutant
        if mutant.score < swarm.pbest[slot].score:
            swarm.pbest[slot] = Particle(mutant.bits.copy(), mutant.key, mutant.score)


def _advance(
    swarm: SwarmState,
    data: Dataset,
    params: BpsoParams,
    seed: int,
    iteration: int,
    scorer: ConfigScorer,
) -> None:
    """Velocity + position updates and rescoring for one iteration."""
    min_obs = data.P if params.min_obs is None else params.min_obs
    gb = swarm.gbest.bits.astype(np.float64)
    gbits = swarm.gbest.bits
    band = 0.5 * (1.0 + params.a)

    def step(i: int) -> Particle:
        particle = swarm.particles[i]
        rng = _rng(seed, 1, iteration, i)
        r = rng.random((2,) + particle.bits.shape)
        x = particle.bits.astype(np.float64)
        pb = swarm.pbest[i].bits.astype(np.float64)
        inner = (
            params.omega * swarm.velocities[i]
            + params.c1 * r[0] * (pb - x)
            + params.c2 * r[1] * (gb - x)
        )
        v = sigmoid(np.abs(inner))
        swarm.velocities[i] = v
        bits = np.where(
            v <= params.a,
            particle.bits,
            np.where(v <= band, swarm.pbest[i].bits, gbits),
        )
        return _make_particle(bits.copy(), data, min_obs, rng, scorer)

    if params.threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=params.threads) as pool:
            moved = list(pool.map(step, range(swarm.size)))
    else:
        moved = [step(i) for i in range(swarm.size)]
    for i, particle in enumerate(moved):
        swarm.particles[i] = particle
        if particle.score < swarm.pbest[i].score:
            swarm.pbest[i] = Particle(particle.bits.copy(), particle.key, particle.score)


def _refresh_gbest(swarm: SwarmState) -> None:
    g = min(range(swarm.size), key=lambda i: (swarm.pbest[i].score, i))
    if swarm.pbest[g].score < swarm.gbest.score:
        p = swarm.pbest[g]
        swarm.gbest = Particle(p.bits.copy(), p.key, p.score)


def run_bpso(
    data: Dataset,
    task: str,
    candidates: Mapping[int, Sequence[float]],
    params: BpsoParams | None = None,
    seed: int = 0,
    scorer: ConfigScorer | None = None,
) -> BpsoResult:
    """Minimize the feature-selected MDL over subsets of the candidate set.

    Runs velocity/position updates, per-particle best tracking, elitist
    mutation, and global-best bookkeeping until the global best is
    unchanged (within ``params.tol``) for ``params.stall_iters`` consecutive
    iterations, or ``params.max_iter`` is reached (the result is then
    flagged as not converged).
    """
    if params is None:
        params = BpsoParams()
    if scorer is None:
        scorer = ConfigScorer(data, task, min_obs=params.min_obs)
    pairs = _candidate_pairs(data, candidates)
    swarm = init_swarm(data, candidates, params, seed, scorer)
    converged = False
    iterations = 0
    for t in range(1, params.max_iter + 1):
        iterations = t
        prev = swarm.gbest.score
        _advance(swarm, data, params, seed, t, scorer)
        mutate(swarm, data, pairs, params, seed, t, scorer)
        _refresh_gbest(swarm)
        if prev - swarm.gbest.score <= params.tol:
            swarm.stall_count += 1
        else:
            swarm.stall_count = 0
        if swarm.stall_count >= params.stall_iters:
            converged = True
            break
    key = swarm.gbest.key
    scored = scorer.score_key(key)
    return BpsoResult(
        config=scored.config,
        key=key,
        score=swarm.gbest.score,
        converged=converged,
        iterations=iterations,
        scored=scored,
    )
