"""Statistics toolkit: KDE, TVD, atom clustering, IPR, weights, averages."""

import numpy as np
import pytest

from qtraj.config import InitialStateKind, InitialStateSpec, RunConfig
from qtraj.engine import TrajectoryRecord, run_ensemble, run_trajectory
from qtraj.stats import (
    BANDWIDTH_FLOOR,
    DiscreteDistribution,
    KdeCurve,
    SampleSet,
    cluster_atoms,
    discrete_tvd,
    ensemble_average,
    ipr,
    ipr_vs_ensemble_size,
    kde,
    relative_born_weights,
    samples_at_step,
    silverman_bandwidth,
    time_window_distribution,
    tvd,
)

import oracles


def make_records(n_traj=3, steps=10, record_steps=None, seed=3):
    config = RunConfig(
        model="one-body",
        L=8,
        alpha_tilde=0.8,
        steps=steps,
        n_traj=n_traj,
        initial=InitialStateSpec(kind=InitialStateKind.RANDOM_SUPERPOSITION, seed=1),
        seed=seed,
    )
    return run_ensemble(config, record_steps=record_steps)


def stub_record(logw: float) -> TrajectoryRecord:
    return TrajectoryRecord(
        trajectory_id=0,
        steps=2,
        n_blocks=4,
        click_count=0,
        log_born_weight=logw,
        clicks_per_step=np.zeros(2, dtype=np.int32),
        entropy_steps=np.array([0, 1, 2], dtype=np.int64),
        entropies=np.zeros((3, 4)),
        log_weight_series=np.zeros(3),
    )


# ---------------------------------------------------------------- sample containers


def test_sample_set_validation():
    with pytest.raises(ValueError):
        SampleSet(np.array([]))
    with pytest.raises(ValueError):
        SampleSet([1.0, np.nan])
    with pytest.raises(ValueError):
        SampleSet([1.0, 2.0], weights=[1.0])
    with pytest.raises(ValueError):
        SampleSet([1.0, 2.0], weights=[1.0, -0.5])
    with pytest.raises(ValueError):
        SampleSet([1.0, 2.0], weights=[0.0, 0.0])
    s = SampleSet([[1.0, 2.0], [3.0, 4.0]])
    assert s.n == 4  # flattened


def test_kde_curve_validation():
    g = np.linspace(0, 1, 100)
    with pytest.raises(ValueError):
        KdeCurve(grid=g, density=np.full(100, 2.0), bandwidth=0.1)
    with pytest.raises(ValueError):
        KdeCurve(grid=g, density=np.ones(100), bandwidth=-0.1)


def test_discrete_distribution_validation():
    DiscreteDistribution(atoms=((0.0, 0.5), (1.0, 0.5)))
    with pytest.raises(ValueError):
        DiscreteDistribution(atoms=((0.0, 0.5), (1.0, 0.6)))
    with pytest.raises(ValueError):
        DiscreteDistribution(atoms=((0.0, 0.5), (1e-9, 0.5)))


# ---------------------------------------------------------------- bandwidth and kde


def test_silverman_hand_value():
    # sigma = sqrt(1/2), IQR = 0.5: spread = 0.5/1.34, h = 0.9*spread*2^(-1/5)
    h, degenerate = silverman_bandwidth(np.array([0.0, 1.0]))
    assert abs(h - 0.2923490697636237) < 1e-12
    assert not degenerate


def test_silverman_degenerate_cases():
    h, degenerate = silverman_bandwidth(np.full(50, 1.3))
    assert h == BANDWIDTH_FLOOR and degenerate
    # zero IQR but nonzero variance: floored bandwidth, not degenerate
    v = np.zeros(9)
    v[-1] = 1.0
    h, degenerate = silverman_bandwidth(v)
    assert h == BANDWIDTH_FLOOR and not degenerate


def test_kde_matches_kernel_sum_oracle():
    rng = np.random.default_rng(5)
    vals = np.abs(np.concatenate([rng.normal(1.0, 0.2, 25), rng.normal(3.0, 0.3, 15)]))
    curve = kde(SampleSet(vals))
    ref = oracles.kde_kernel_sum(vals, curve.bandwidth, curve.grid)
    ref = ref / np.trapezoid(ref, curve.grid)
    assert np.abs(curve.density - ref).max() < 1e-9
    assert len(curve.grid) == 2048
    assert abs(np.trapezoid(curve.density, curve.grid) - 1.0) < 1e-12


def test_kde_grid_clipped_at_zero():
    curve = kde(SampleSet([0.01, 0.5, 1.0, 1.5]))
    assert curve.grid[0] == 0.0
    assert curve.grid[-1] > 1.5


def test_kde_degenerate_samples():
    curve = kde(SampleSet(np.full(20, 1.7)))
    assert curve.degenerate and curve.bandwidth == BANDWIDTH_FLOOR
    assert abs(curve.grid[np.argmax(curve.density)] - 1.7) < 1e-3


def test_kde_bimodal_and_weights():
    rng = np.random.default_rng(8)
    vals = np.concatenate([rng.normal(1.0, 0.05, 200), rng.normal(3.0, 0.05, 200)])
    curve = kde(SampleSet(vals))
    near = lambda x: curve.density[np.abs(curve.grid - x) < 0.15].max()
    assert near(1.0) > 4 * near(2.0) and near(3.0) > 4 * near(2.0)
    heavy = kde(SampleSet([1.0, 2.0], weights=[1000.0, 1.0]))
    assert abs(heavy.grid[np.argmax(heavy.density)] - 1.0) < 2 * heavy.bandwidth
    with pytest.raises(ValueError):
        kde(SampleSet([1.0]))


# ---------------------------------------------------------------- tvd


def test_tvd_identity_symmetry_triangle():
    rng = np.random.default_rng(2)
    a = kde(SampleSet(rng.normal(1, 0.2, 50)))
    b = kde(SampleSet(rng.normal(2, 0.3, 50)))
    c = kde(SampleSet(rng.normal(4, 0.25, 50)))
    assert tvd(a, a) == 0.0
    assert abs(tvd(a, b) - tvd(b, a)) < 1e-12
    assert tvd(a, c) <= tvd(a, b) + tvd(b, c) + 1e-9
    assert 0.0 <= tvd(a, b) <= 1.0


def test_tvd_disjoint_supports():
    rng = np.random.default_rng(3)
    a = kde(SampleSet(rng.normal(1, 0.05, 60)))
    b = kde(SampleSet(rng.normal(100, 0.05, 60)))
    assert abs(tvd(a, b) - 1.0) < 1e-3


# ---------------------------------------------------------------- atoms, ipr


def test_cluster_atoms_merges_within_tolerance():
    vals = [1.0, 1.0 + 1e-9, 2.0, 2.0 - 1e-9, 5.0]
    dist = cluster_atoms(vals)
    assert len(dist.atoms) == 3
    assert abs(dist.atoms[0][0] - 1.0) < 1e-9 and abs(dist.atoms[0][1] - 0.4) < 1e-15
    assert abs(dist.atoms[1][1] - 0.4) < 1e-15 and abs(dist.atoms[2][1] - 0.2) < 1e-15
    weighted = cluster_atoms(vals, weights=[1, 1, 1, 1, 6])
    assert abs(weighted.atoms[2][1] - 0.6) < 1e-15
    with pytest.raises(ValueError):
        cluster_atoms([])


def test_discrete_tvd_values():
    p = DiscreteDistribution(atoms=((1.0, 0.5), (2.0, 0.5)))
    assert discrete_tvd(p, p) == 0.0
    q = DiscreteDistribution(atoms=((1.0, 0.25), (2.0, 0.75)))
    assert abs(discrete_tvd(p, q) - 0.25) < 1e-15
    r = DiscreteDistribution(atoms=((3.0, 1.0),))
    assert discrete_tvd(p, r) == 1.0
    # atoms within tolerance of each other are compared as one outcome
    s = DiscreteDistribution(atoms=((1.0 + 1e-9, 1.0),))
    assert abs(discrete_tvd(p, s) - 0.5) < 1e-12


def test_ipr_closed_forms():
    assert ipr(np.full(17, 2.5)) == 1.0
    assert ipr([1.0, 2.0, 3.0, 4.0]) == 0.25
    assert abs(ipr([1.0, 1.0, 2.0]) - (4.0 / 9.0 + 1.0 / 9.0)) < 1e-15
    dist = DiscreteDistribution(atoms=((0.0, 0.5), (1.0, 0.5)))
    assert ipr(dist) == 0.5
    weighted = ipr(SampleSet([1.0, 2.0], weights=[3.0, 1.0]))
    assert abs(weighted - (0.75**2 + 0.25**2)) < 1e-15


def test_ipr_vs_ensemble_size():
    vals = [1.0, 1.0, 2.0, 2.0]
    out = ipr_vs_ensemble_size(vals, [1, 2, 4])
    assert out == [(1, 1.0), (2, 1.0), (4, 0.5)]
    with pytest.raises(ValueError):
        ipr_vs_ensemble_size(vals, [5])


# ---------------------------------------------------------------- ensemble reductions


def test_relative_born_weights():
    recs = [stub_record(-1.0), stub_record(-3.0)]
    w = relative_born_weights(recs)
    assert w[0] == 1.0
    assert abs(w[1] - np.exp(-2.0)) < 1e-15
    with pytest.raises(ValueError):
        relative_born_weights([])


def test_ensemble_average_matches_direct_mean():
    records = make_records(n_traj=5, steps=10)
    vals = np.array([r.entropy_at(10, 0) for r in records])
    mean, err = ensemble_average(records, "S_B", 10)
    assert abs(mean - vals.mean()) < 1e-15
    assert abs(err - vals.std(ddof=1) / np.sqrt(5)) < 1e-15
    # initial state is shared: zero spread at t_m = 0
    mean0, err0 = ensemble_average(records, "S_C", 0)
    assert err0 == 0.0
    with pytest.raises(ValueError):
        ensemble_average(records, "S_X", 10)
    with pytest.raises(ValueError):
        ensemble_average([], "S_B", 10)


def test_ensemble_average_identical_records_zero_stderr():
    a = run_trajectory(
        RunConfig(model="one-body", L=8, alpha_tilde=0.8, steps=5, seed=4), 0
    )
    mean, err = ensemble_average([a, a], "S_B", 5)
    assert err == 0.0 and mean == a.entropy_at(5, 0)


def test_mismatched_schedules_rejected():
    a = make_records(n_traj=1, steps=10)[0]
    b = make_records(n_traj=1, steps=10, record_steps=[0, 5, 10])[0]
    with pytest.raises(ValueError):
        ensemble_average([a, b], "S_B", 10)
    with pytest.raises(ValueError):
        samples_at_step([a, b], "S_B", 10)


def test_samples_at_step():
    records = make_records(n_traj=4, steps=6)
    s = samples_at_step(records, "I_BBprime", 6)
    assert s.n == 4
    assert np.array_equal(s.values, [r.entropy_at(6, 3) for r in records])


def test_time_window_distribution():
    rec = make_records(n_traj=1, steps=10)[0]
    s = time_window_distribution(rec, (3, 7))
    assert np.array_equal(s.values, rec.entropies[3:8, 0])
    assert time_window_distribution(rec, (0, 0)).n == 1
    with pytest.raises(ValueError):
        time_window_distribution(rec, (7, 3))
    with pytest.raises(ValueError):
        time_window_distribution(rec, (0, 11))
    sparse = make_records(n_traj=1, steps=10, record_steps=[0, 10])[0]
    with pytest.raises(ValueError):
        time_window_distribution(sparse, (2, 5))
