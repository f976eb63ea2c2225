"""Ensemble statistics: KDE curves, TVD, IPR, Born weights, averages.

Sample values here are entropy samples (nats), so KDE grids are clipped
at zero from below.  Atom clustering treats values closer than a
tolerance as the same discrete outcome; stationary-state entropies are
exact reals separated by O(0.1) while roundoff is <= 1e-12, so the
default 1e-6 tolerance cleanly separates the two scales.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import TrajectoryRecord

KDE_GRID_POINTS = 2048
BANDWIDTH_FLOOR = 1e-3
ATOM_TOLERANCE = 1e-6

OBSERVABLE_COLUMNS = {"S_B": 0, "S_Bprime": 1, "S_C": 2, "I_BBprime": 3}


@dataclass(frozen=True)
class SampleSet:
    """Real-valued samples with optional nonnegative weights."""

    values: np.ndarray
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)
        if v.size == 0:
            raise ValueError("empty sample set")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float).ravel()
            if w.shape != v.shape:
                raise ValueError("weights must match values in length")
            if np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValueError("weights must be finite and nonnegative")
            if w.sum() <= 0:
                raise ValueError("weights must sum to a positive value")
            object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class KdeCurve:
    """Gaussian-kernel density on a uniform grid, unit trapezoidal integral."""

    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    degenerate: bool = False  # all samples equal; bandwidth floored

    def __post_init__(self) -> None:
        integral = float(np.trapezoid(self.density, self.grid))
        if abs(integral - 1.0) > 1e-6:
            raise ValueError(f"KDE integral {integral!r} not within 1e-6 of 1")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if np.any(self.density < 0):
            raise ValueError("density must be nonnegative")


@dataclass(frozen=True)
class DiscreteDistribution:
    """Clustered atoms (value, probability); values separated by > tolerance."""

    atoms: tuple[tuple[float, float], ...]
    tolerance: float = ATOM_TOLERANCE

    def __post_init__(self) -> None:
        total = sum(p for _, p in self.atoms)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"atom probabilities sum to {total!r}")
        vals = [v for v, _ in self.atoms]
        for a, b in zip(vals, vals[1:]):
            if b - a <= self.tolerance:
                raise ValueError("atom values not separated by more than the tolerance")


def silverman_bandwidth(values: np.ndarray) -> tuple[float, bool]:
    """0.9 * min(sigma, IQR/1.34) * n^(-1/5), floored when the spread is zero."""
    v = np.asarray(values, dtype=float)
    n = v.size
    sigma = float(np.std(v, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(v, [75.0, 25.0])
    spread = min(sigma, float(q75 - q25) / 1.34)
    if spread <= 0.0:
        return BANDWIDTH_FLOOR, bool(sigma == 0.0)
    return 0.9 * spread * n ** (-0.2), False


def kde(samples: SampleSet, grid_points: int = KDE_GRID_POINTS) -> KdeCurve:
    """Gaussian KDE with Silverman bandwidth on [max(0, min-3h), max+3h]."""
    if samples.n < 2:
        raise ValueError("kde needs at least 2 samples")
    v = samples.values
    h, degenerate = silverman_bandwidth(v)
    lo = max(0.0, float(v.min()) - 3.0 * h)
    hi = float(v.max()) + 3.0 * h
    grid = np.linspace(lo, hi, grid_points)
    w = samples.weights
    if w is None:
        w = np.ones(samples.n)
    w = w / w.sum()
    # (grid, samples) kernel matrix; fine at 2048 x N_t <= a few thousand
    z = (grid[:, None] - v[None, :]) / h
    density = (np.exp(-0.5 * z * z) @ w) / (h * np.sqrt(2.0 * np.pi))
    integral = float(np.trapezoid(density, grid))
    if integral <= 0:
        raise ValueError("KDE integral vanished")
    density = density / integral
    return KdeCurve(grid=grid, density=density, bandwidth=h, degenerate=degenerate)


def tvd(p: KdeCurve, q: KdeCurve) -> float:
    """Half the integral of |p - q| after resampling onto a union grid."""
    lo = min(float(p.grid[0]), float(q.grid[0]))
    hi = max(float(p.grid[-1]), float(q.grid[-1]))
    n = max(len(p.grid), len(q.grid)) * 2
    grid = np.linspace(lo, hi, n)
    pv = np.interp(grid, p.grid, p.density, left=0.0, right=0.0)
    qv = np.interp(grid, q.grid, q.density, left=0.0, right=0.0)
    val = 0.5 * float(np.trapezoid(np.abs(pv - qv), grid))
    return min(max(val, 0.0), 1.0)


def cluster_atoms(values, tolerance: float = ATOM_TOLERANCE, weights=None) -> DiscreteDistribution:
    """Greedy gap clustering of sorted samples into discrete atoms.

    A new atom starts wherever the gap between consecutive sorted values
    exceeds the tolerance; the atom value is the weighted mean of its
    members.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("no samples to cluster")
    w = np.ones(v.size) if weights is None else np.asarray(weights, dtype=float).ravel()
    order = np.argsort(v)
    v, w = v[order], w[order]
    cuts = np.flatnonzero(np.diff(v) > tolerance) + 1
    atoms = []
    total = w.sum()
    for chunk_v, chunk_w in zip(np.split(v, cuts), np.split(w, cuts)):
        mass = chunk_w.sum()
        atoms.append((float(np.average(chunk_v, weights=chunk_w)), float(mass / total)))
    return DiscreteDistribution(atoms=tuple(atoms), tolerance=tolerance)


def discrete_tvd(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Half the total atom-mass difference, matching atoms by gap clustering."""
    tol = max(p.tolerance, q.tolerance)
    vals = np.array([v for v, _ in p.atoms] + [v for v, _ in q.atoms])
    pm = np.array([m for _, m in p.atoms] + [0.0] * len(q.atoms))
    qm = np.array([0.0] * len(p.atoms) + [m for _, m in q.atoms])
    order = np.argsort(vals)
    vals, pm, qm = vals[order], pm[order], qm[order]
    cuts = np.flatnonzero(np.diff(vals) > tol) + 1
    total = 0.0
    for cp, cq in zip(np.split(pm, cuts), np.split(qm, cuts)):
        total += abs(cp.sum() - cq.sum())
    return min(max(0.5 * total, 0.0), 1.0)


def ipr(samples, tolerance: float = ATOM_TOLERANCE) -> float:
    """Sum of squared atom probabilities after clustering; in (0, 1]."""
    if isinstance(samples, DiscreteDistribution):
        dist = samples
    elif isinstance(samples, SampleSet):
        dist = cluster_atoms(samples.values, tolerance, samples.weights)
    else:
        dist = cluster_atoms(samples, tolerance)
    return float(sum(p * p for _, p in dist.atoms))


def ipr_vs_ensemble_size(values, sizes, tolerance: float = ATOM_TOLERANCE):
    """[(N_t, ipr over the first N_t samples)] for each requested size."""
    v = np.asarray(values, dtype=float).ravel()
    out = []
    for n in sizes:
        n = int(n)
        if not (1 <= n <= v.size):
            raise ValueError(f"ensemble size {n} outside 1..{v.size}")
        out.append((n, ipr(v[:n], tolerance)))
    return out


def relative_born_weights(records: list[TrajectoryRecord]) -> np.ndarray:
    """exp(logW_k - max_j logW_j); the maximum entry is exactly 1."""
    if not records:
        raise ValueError("empty ensemble")
    logw = np.array([r.log_born_weight for r in records])
    return np.exp(logw - logw.max())


def _check_shared_schedule(records: list[TrajectoryRecord]) -> None:
    first = records[0]
    for r in records[1:]:
        if r.steps != first.steps or r.n_blocks != first.n_blocks:
            raise ValueError("records come from mismatched configs")
        if not np.array_equal(r.entropy_steps, first.entropy_steps):
            raise ValueError("records have mismatched recording schedules")


def ensemble_average(
    records: list[TrajectoryRecord], observable: str, t_m: int
) -> tuple[float, float]:
    """(mean, standard error) of an observable across trajectories at t_m."""
    if not records:
        raise ValueError("empty ensemble")
    if observable not in OBSERVABLE_COLUMNS:
        raise ValueError(f"observable must be one of {sorted(OBSERVABLE_COLUMNS)}")
    _check_shared_schedule(records)
    col = OBSERVABLE_COLUMNS[observable]
    vals = np.array([r.entropy_at(t_m, col) for r in records])
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0
    return mean, stderr


def samples_at_step(records: list[TrajectoryRecord], observable: str, t_m: int) -> SampleSet:
    """Cross-trajectory samples of an observable at one recorded step."""
    if observable not in OBSERVABLE_COLUMNS:
        raise ValueError(f"observable must be one of {sorted(OBSERVABLE_COLUMNS)}")
    _check_shared_schedule(records)
    col = OBSERVABLE_COLUMNS[observable]
    return SampleSet(np.array([r.entropy_at(t_m, col) for r in records]))


def time_window_distribution(record: TrajectoryRecord, window) -> SampleSet:
    """S_B samples at this record's recorded steps inside [t_lo, t_hi]."""
    t_lo, t_hi = window
    if t_lo > t_hi or t_lo < 0 or t_hi > record.steps:
        raise ValueError(f"window {window!r} outside recorded range 0..{record.steps}")
    mask = (record.entropy_steps >= t_lo) & (record.entropy_steps <= t_hi)
    if not mask.any():
        raise ValueError(f"no recorded steps inside window {window!r}")
    return SampleSet(record.entropies[mask, 0])
