"""Trajectory generation: initial states, sweeps, sampling, ensembles.

One measurement step t_m is a sweep of blocks i = 1..L/2 in ascending
order (the wrap-around block last).  Outcomes are encoded 0 = up
(no click), 1 = down (click).  Each trajectory owns an independent RNG
stream derived from (seed, trajectory_id), so ensembles are reproducible
under any worker count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from multiprocessing import get_context

import numpy as np

from . import _kernels
from .basis import FockBasis, enumerate_basis
from .blocks import BlockChannel, build_channel
from .config import InitialStateKind, InitialStateSpec, RunConfig, SamplingMode
from .entanglement import entropies_with_mutual_information, standard_cut_indices
from .errors import (
    ConfigError,
    NumericalCheckError,
    NumericalUnderflowError,
    PostSelectionImpossibleError,
)
from .state import StateVector

STATIONARITY_TOL = 1e-10

_MODE_CODE = {SamplingMode.BORN: 0, SamplingMode.FORCED_UNIFORM: 1, SamplingMode.NO_CLICK: 2}


@lru_cache(maxsize=8)
def _cached_basis(L: int) -> FockBasis:
    return enumerate_basis(L)


def _rng_for(seed: int, trajectory_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, trajectory_id))))


def prepare_initial(spec: InitialStateSpec, basis: FockBasis) -> StateVector:
    """Normalized half-filled initial state; deterministic under spec.seed."""
    kind = spec.kind
    if kind is InitialStateKind.PRODUCT_FILLED:
        word = 0
        for i in range(1, basis.L // 2 + 1):
            word |= 1 << basis.layout.mode_of_main(i)
        return StateVector.from_word(basis, word)
    if kind is InitialStateKind.EQUAL_SUPERPOSITION:
        amps = np.full(basis.dim, 1.0 / np.sqrt(basis.dim), dtype=np.complex128)
        return StateVector(basis, amps)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(spec.seed)))
    if kind is InitialStateKind.RANDOM_PRODUCT:
        word = int(basis.states[rng.integers(basis.dim)])
        return StateVector.from_word(basis, word)
    if kind is InitialStateKind.RANDOM_SUPERPOSITION:
        reals = rng.random(basis.dim)
        if spec.signed_amplitudes:
            reals = 2.0 * reals - 1.0
        return StateVector.from_amplitudes(basis, reals)
    raise ConfigError(f"unknown initial state kind {kind!r}")


def derived_initial_spec(spec: InitialStateSpec, trajectory_id: int) -> InitialStateSpec:
    """Per-trajectory redraw: fold the trajectory id into the initial seed."""
    child = np.random.SeedSequence([spec.seed, trajectory_id])
    seed = int(child.generate_state(1, np.uint64)[0])
    return InitialStateSpec(kind=spec.kind, seed=seed, signed_amplitudes=spec.signed_amplitudes)


def _block_tables(basis: FockBasis, convention: str):
    """(groups, use_par) per block, in sweep order i = 1..L/2."""
    tables = []
    for i in range(1, basis.layout.n_blocks + 1):
        groups = basis.sector_groups_cached(i)
        use_par = convention == "jw-exact" and groups.addr.is_boundary
        tables.append((groups, use_par))
    return tables


def measure_block(
    state: StateVector,
    addr,
    channel: BlockChannel,
    mode: SamplingMode,
    rng: np.random.Generator,
    convention: str = "block-local",
):
    """Measure one block in place; returns (state, outcome, p_taken).

    Born and forced modes consume exactly one uniform draw; no-click
    consumes none.
    """
    mode = SamplingMode(mode)
    code = _MODE_CODE[mode]
    r = rng.random() if code != 2 else 0.0
    groups = state.basis.sector_groups_cached(addr.i)
    use_par = convention == "jw-exact" and addr.is_boundary
    outcome, p_up, p_down = _kernels.measure_inplace(
        state.amps, groups, channel, use_par, r, code
    )
    if outcome == -1:
        raise PostSelectionImpossibleError(
            f"no-click branch has probability {p_up:.3e} < {_kernels.P_UP_MIN_NOCLICK} "
            f"at block {addr.i}"
        )
    if outcome == -2:
        raise NumericalUnderflowError(
            f"selected branch probability underflows 1e-300 at block {addr.i}"
        )
    return state, outcome, (p_up if outcome == 0 else p_down)


def sweep(
    state: StateVector,
    channel: BlockChannel,
    mode: SamplingMode,
    rng: np.random.Generator,
    convention: str = "block-local",
):
    """One measurement step: blocks 1..L/2 in order. Returns (state, outcomes)."""
    n = state.basis.layout.n_blocks
    outcomes = np.zeros(n, dtype=np.uint8)
    for i in range(1, n + 1):
        addr = state.basis.block_address(i)
        _, outcomes[i - 1], _ = measure_block(state, addr, channel, mode, rng, convention)
    return state, outcomes


def is_stationary(state_prev: StateVector, state_next: StateVector, tol: float = STATIONARITY_TOL) -> bool:
    """Global-phase-insensitive fidelity test |<prev|next>| > 1 - tol."""
    return abs(state_prev.overlap(state_next)) > 1.0 - tol


@dataclass
class TrajectoryRecord:
    """Everything recorded along one trajectory."""

    trajectory_id: int
    steps: int
    n_blocks: int
    click_count: int
    log_born_weight: float  # sum of ln p_taken over all measurements
    clicks_per_step: np.ndarray  # (steps,) int32
    entropy_steps: np.ndarray  # (n_rec,) int64 recorded t_m values (0 = initial)
    entropies: np.ndarray  # (n_rec, 4): S_B, S_Bprime, S_C, I_BBprime
    log_weight_series: np.ndarray  # (n_rec,) running log weight at recorded steps
    outcomes: np.ndarray | None = None  # (steps, n_blocks) uint8 when kept
    final_state: StateVector | None = None
    last_change_step: int = 0  # last t_m with fidelity deficit > STATIONARITY_TOL

    def entropy_at(self, t_m: int, column: int) -> float:
        pos = np.searchsorted(self.entropy_steps, t_m)
        if pos >= len(self.entropy_steps) or self.entropy_steps[pos] != t_m:
            raise ValueError(f"step {t_m} was not recorded")
        return float(self.entropies[pos, column])


def _recorded_steps(steps: int, record_every: int, record_steps) -> np.ndarray:
    if record_steps is not None:
        out = sorted({int(t) for t in record_steps})
        if any(t < 0 or t > steps for t in out):
            raise ConfigError(f"record_steps outside 0..{steps}")
        return np.asarray(out, dtype=np.int64)
    ts = set(range(0, steps + 1, record_every))
    ts.add(steps)
    return np.asarray(sorted(ts), dtype=np.int64)


def click_fraction(record: TrajectoryRecord) -> float:
    """Fraction of down outcomes among all steps * L/2 measurements."""
    return record.click_count / (record.steps * record.n_blocks)


def run_trajectory(
    config: RunConfig,
    trajectory_id: int = 0,
    *,
    basis: FockBasis | None = None,
    keep_outcomes: bool = True,
    keep_final_state: bool = True,
    record_steps=None,
) -> TrajectoryRecord:
    """Run `config.steps` sweeps from the configured initial state.

    Deterministic for fixed (config.seed, trajectory_id) regardless of
    worker placement.  Entropies are recorded at t_m = 0, every
    `config.record_every` steps, and the final step, unless an explicit
    `record_steps` iterable overrides the schedule.
    """
    if basis is None:
        basis = _cached_basis(config.L)
    if config.L % 4 != 0:
        raise ConfigError(f"entropy cuts require L divisible by 4, got L={config.L}")
    channel = build_channel(config.model, config.alpha_tilde)
    ispec = config.initial
    if config.redraw_initial:
        ispec = derived_initial_spec(ispec, trajectory_id)
    state = prepare_initial(ispec, basis)
    rng = _rng_for(config.seed, trajectory_id)
    mode_code = _MODE_CODE[config.sampling]
    tables = _block_tables(basis, config.convention)
    cut_ixs = standard_cut_indices(basis, config.convention)

    rec_ts = _recorded_steps(config.steps, config.record_every, record_steps)
    n_rec = len(rec_ts)
    entropies = np.zeros((n_rec, 4))
    log_weight_series = np.zeros(n_rec)
    clicks_per_step = np.zeros(config.steps, dtype=np.int32)
    outcomes = np.zeros((config.steps, basis.layout.n_blocks), dtype=np.uint8) if keep_outcomes else None

    rec_pos = {int(t): k for k, t in enumerate(rec_ts)}
    log_w = 0.0
    click_count = 0
    last_change = 0
    if 0 in rec_pos:
        entropies[rec_pos[0]] = entropies_with_mutual_information(state, cut_ixs)
        log_weight_series[rec_pos[0]] = 0.0

    amps = state.amps
    prev = np.empty_like(amps)
    n_blocks = basis.layout.n_blocks
    zeros = np.zeros(n_blocks)
    for t_m in range(1, config.steps + 1):
        prev[:] = amps
        step_clicks = 0
        rs = rng.random(n_blocks) if mode_code != 2 else zeros
        for b, (groups, use_par) in enumerate(tables):
            outcome, p_up, p_down = _kernels.measure_inplace(
                amps, groups, channel, use_par, rs[b], mode_code
            )
            if outcome == -1:
                raise PostSelectionImpossibleError(
                    f"no-click branch has probability {p_up:.3e} at t_m={t_m}, block {b + 1}"
                )
            if outcome == -2:
                raise NumericalUnderflowError(
                    f"branch probability underflow at t_m={t_m}, block {b + 1}"
                )
            log_w += np.log(p_up if outcome == 0 else p_down)
            if outcome == 1:
                step_clicks += 1
            if outcomes is not None:
                outcomes[t_m - 1, b] = outcome
        clicks_per_step[t_m - 1] = step_clicks
        click_count += step_clicks
        nrm2 = float(np.vdot(amps, amps).real)
        if abs(nrm2 - 1.0) > 1e-8:
            raise NumericalCheckError(f"norm drifted to {nrm2!r} at t_m={t_m}")
        amps *= 1.0 / np.sqrt(nrm2)
        fid = abs(np.vdot(prev, amps))
        if 1.0 - fid > STATIONARITY_TOL:
            last_change = t_m
        if t_m in rec_pos:
            k = rec_pos[t_m]
            entropies[k] = entropies_with_mutual_information(state, cut_ixs)
            log_weight_series[k] = log_w

    return TrajectoryRecord(
        trajectory_id=trajectory_id,
        steps=config.steps,
        n_blocks=basis.layout.n_blocks,
        click_count=click_count,
        log_born_weight=log_w,
        clicks_per_step=clicks_per_step,
        entropy_steps=rec_ts,
        entropies=entropies,
        log_weight_series=log_weight_series,
        outcomes=outcomes,
        final_state=state if keep_final_state else None,
        last_change_step=last_change,
    )


def _worker(args) -> TrajectoryRecord:
    config, tid, keep_outcomes, keep_final_state, record_steps = args
    return run_trajectory(
        config,
        tid,
        keep_outcomes=keep_outcomes,
        keep_final_state=keep_final_state,
        record_steps=record_steps,
    )


def resolve_workers(config: RunConfig) -> int:
    env = os.environ.get("QTRAJ_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"QTRAJ_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ConfigError(f"QTRAJ_THREADS must be >= 1, got {n}")
        return n
    return config.workers


def run_ensemble(
    config: RunConfig,
    *,
    keep_outcomes: bool = False,
    keep_final_state: bool = False,
    record_steps=None,
) -> list[TrajectoryRecord]:
    """Run trajectory ids 0..n_traj-1; result order is by trajectory_id."""
    workers = resolve_workers(config)
    tids = range(config.n_traj)
    if workers == 1 or config.n_traj == 1:
        return [
            run_trajectory(
                config,
                tid,
                keep_outcomes=keep_outcomes,
                keep_final_state=keep_final_state,
                record_steps=record_steps,
            )
            for tid in tids
        ]
    jobs = [(config, tid, keep_outcomes, keep_final_state, record_steps) for tid in tids]
    ctx = get_context("fork")
    chunk = max(1, config.n_traj // (workers * 8))
    with ctx.Pool(processes=workers) as pool:
        return pool.map(_worker, jobs, chunksize=chunk)
