"""Command-line entry point.

Subcommands:
  run          single trajectory -> trajectory.csv + outcomes.csv
  ensemble     trajectory ensemble -> ensemble_entropy.csv, kde_<t>.csv,
               tvd_series.csv, summary.json
  scaling      sweep over system sizes -> scaling.csv
  oracle       exact enumeration vs Monte Carlo at L=4 -> oracle_report.json
  kraus-check  channel self-checks (completeness, unitarity, periodicity,
               particle-hole symmetry, projective limit)

Exit codes: 0 success, 2 config error, 3 numerical-check failure, 4 I/O
error.  QTRAJ_THREADS overrides the configured worker count.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import blocks, stats
from .blocks import ModelKind, build_channel, measurement_operator, projective_kraus
from .config import (
    SCALING_ENSEMBLE_SIZES,
    InitialStateKind,
    RunConfig,
    SamplingMode,
    parse_alpha_tilde,
)
from .engine import click_fraction, run_ensemble, run_trajectory
from .errors import (
    ConfigError,
    NumericalCheckError,
    NumericalUnderflowError,
    PostSelectionImpossibleError,
)
from .exact import enumerate_outcome_sequences, exact_entropy_distribution
from .outputs import write_csv, write_json

DEFAULT_CHECK_ALPHAS = ("0.14", "pi/4", "pi/2", "3pi/4")


def _add_config_args(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    sp.add_argument("--model", choices=[m.value for m in ModelKind])
    sp.add_argument("--L", type=int, dest="L")
    sp.add_argument("--alpha-tilde", help='decimal or one of "pi/4", "pi/2", "3pi/4"')
    sp.add_argument("--steps", type=int)
    sp.add_argument("--n-traj", type=int)
    sp.add_argument("--initial-kind", choices=[k.value for k in InitialStateKind])
    sp.add_argument("--initial-seed", type=int)
    sp.add_argument(
        "--signed-amplitudes", action="store_const", const=True, default=None,
        help="random-superposition amplitudes uniform on [-1,1) instead of [0,1)",
    )
    sp.add_argument("--sampling", choices=[s.value for s in SamplingMode])
    sp.add_argument("--convention", choices=["block-local", "jw-exact"])
    sp.add_argument("--redraw-initial", action="store_const", const=True, default=None)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--record-every", type=int)
    sp.add_argument("--output-dir")
    sp.add_argument("--workers", type=int)


def _load_config_file(path: str) -> dict:
    import json

    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path}: invalid JSON at line {e.lineno}: {e.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path}: top level must be a JSON object")
    return data


def _build_config(args: argparse.Namespace) -> tuple[RunConfig, dict]:
    """Merge config file and CLI flags (flags win); returns (config, raw dict)."""
    data = _load_config_file(args.config) if args.config else {}
    flat = {
        "model": args.model,
        "L": args.L,
        "alpha_tilde": args.alpha_tilde,
        "steps": args.steps,
        "n_traj": args.n_traj,
        "sampling": args.sampling,
        "convention": args.convention,
        "redraw_initial": args.redraw_initial,
        "seed": args.seed,
        "record_every": args.record_every,
        "output_dir": args.output_dir,
        "workers": args.workers,
    }
    for key, value in flat.items():
        if value is not None:
            data[key] = value
    initial = dict(data.get("initial", {}))
    if args.initial_kind is not None:
        initial["kind"] = args.initial_kind
    if args.initial_seed is not None:
        initial["seed"] = args.initial_seed
    if args.signed_amplitudes is not None:
        initial["signed_amplitudes"] = args.signed_amplitudes
    if initial:
        data["initial"] = initial
    return RunConfig.from_dict(data), data


def _entropy_display(value_nats: float, bits: bool) -> str:
    if bits:
        return f"{value_nats / math.log(2.0):.6f} bits"
    return f"{value_nats:.6f} nats"


def cmd_run(args: argparse.Namespace) -> int:
    config, _ = _build_config(args)
    if config.n_traj != 1:
        raise ConfigError(f"run requires n_traj = 1, got {config.n_traj}")
    record = run_trajectory(config, 0, keep_outcomes=True, keep_final_state=False)
    out = config.output_dir
    rows = []
    for k, t in enumerate(record.entropy_steps):
        t = int(t)
        clicks = int(record.clicks_per_step[t - 1]) if t >= 1 else 0
        s_b, s_bp, s_c, i_bb = record.entropies[k]
        rows.append((t, s_b, s_bp, s_c, i_bb, clicks, float(record.log_weight_series[k])))
    write_csv(
        os.path.join(out, "trajectory.csv"),
        ["t_m", "S_B", "S_Bprime", "S_C", "I_BB", "clicks_this_step", "log_born_weight"],
        rows,
        config,
    )
    orows = []
    for t in range(1, record.steps + 1):
        for b in range(record.n_blocks):
            orows.append((t, b + 1, int(record.outcomes[t - 1, b])))
    write_csv(
        os.path.join(out, "outcomes.csv"), ["t_m", "block", "outcome"], orows, config
    )
    final_sb = float(record.entropies[-1, 0])
    print(
        f"run: {record.steps} steps, {record.click_count} clicks, "
        f"final S_B = {_entropy_display(final_sb, args.bits)}"
    )
    return 0


def _kde_or_none(values: np.ndarray):
    try:
        return stats.kde(stats.SampleSet(values))
    except ValueError:
        return None


def cmd_ensemble(args: argparse.Namespace) -> int:
    config, _ = _build_config(args)
    if config.n_traj < 2:
        raise ConfigError(f"ensemble requires n_traj >= 2, got {config.n_traj}")
    records = run_ensemble(config)
    out = config.output_dir

    erows = []
    for r in records:
        for k, t in enumerate(r.entropy_steps):
            erows.append(
                (r.trajectory_id, int(t), r.entropies[k, 0], r.entropies[k, 2], r.entropies[k, 3])
            )
    write_csv(
        os.path.join(out, "ensemble_entropy.csv"),
        ["trajectory_id", "t_m", "S_B", "S_C", "I_BB"],
        erows,
        config,
    )

    steps_rec = records[0].entropy_steps
    curves = {}
    for k, t in enumerate(steps_rec):
        values = np.array([r.entropies[k, 0] for r in records])
        curve = _kde_or_none(values)
        if curve is None:
            continue
        curves[int(t)] = curve
        write_csv(
            os.path.join(out, f"kde_{int(t)}.csv"),
            ["grid", "density"],
            zip(curve.grid, curve.density),
            config,
            extra_meta={"t_m": int(t), "bandwidth": curve.bandwidth,
                        "degenerate": curve.degenerate},
        )

    final_t = int(steps_rec[-1])
    trows = []
    if final_t in curves:
        ref = curves[final_t]
        for t, curve in sorted(curves.items()):
            trows.append((t, stats.tvd(curve, ref)))
    write_csv(
        os.path.join(out, "tvd_series.csv"), ["t_m", "tvd_vs_final"], trows, config,
        extra_meta={"reference_t_m": final_t},
    )

    final_sb = np.array([r.entropy_at(final_t, 0) for r in records])
    sizes = [n for n in (2 ** k for k in range(1, 40)) if n < len(records)] + [len(records)]
    ipr_curve = stats.ipr_vs_ensemble_size(final_sb, sizes)
    fractions = np.array([click_fraction(r) for r in records])
    hist, edges = np.histogram(fractions, bins=40, range=(0.0, 1.0))
    weights = stats.relative_born_weights(records)
    means = {}
    for obs in stats.OBSERVABLE_COLUMNS:
        mean, stderr = stats.ensemble_average(records, obs, final_t)
        means[obs] = {"mean": mean, "stderr": stderr}
    write_json(
        os.path.join(out, "summary.json"),
        {
            "final_t_m": final_t,
            "means": means,
            "ipr_vs_N_t": [[n, v] for n, v in ipr_curve],
            "click_fraction_histogram": {
                "bin_edges": edges.tolist(),
                "counts": hist.tolist(),
            },
            "relative_born_weights": weights.tolist(),
            "kde_bandwidth_final": curves[final_t].bandwidth if final_t in curves else None,
        },
        config,
    )
    print(
        f"ensemble: {len(records)} trajectories, final mean S_B = "
        f"{_entropy_display(means['S_B']['mean'], args.bits)}"
    )
    return 0


def cmd_scaling(args: argparse.Namespace) -> int:
    try:
        l_values = [int(tok) for tok in args.L_list.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--L-list must be a comma list of integers, got {args.L_list!r}") from None
    allowed = sorted(SCALING_ENSEMBLE_SIZES)
    if not l_values or any(L not in SCALING_ENSEMBLE_SIZES for L in l_values):
        raise ConfigError(f"--L-list must be a comma list drawn from {allowed}")
    if args.L is None:
        args.L = l_values[0]
    config, raw = _build_config(args)
    n_traj_overridden = "n_traj" in raw
    rows = []
    for L in l_values:
        n_traj = config.n_traj if n_traj_overridden else SCALING_ENSEMBLE_SIZES[L]
        sub = replace(config, L=L, n_traj=n_traj)
        records = run_ensemble(sub, record_steps=[0, sub.steps])
        for obs in ("S_B", "S_C", "I_BBprime"):
            mean, stderr = stats.ensemble_average(records, obs, sub.steps)
            rows.append((L, obs, mean, stderr))
        print(f"scaling: L={L} done ({n_traj} trajectories)")
    write_csv(
        os.path.join(config.output_dir, "scaling.csv"),
        ["L", "observable", "mean", "stderr"],
        rows,
        config,
        extra_meta={"L_list": ",".join(str(L) for L in l_values)},
    )
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    config, _ = _build_config(args)
    if config.L != 4:
        raise ConfigError(f"oracle requires L = 4, got {config.L}")
    if config.steps > 3:
        raise ConfigError(f"oracle requires steps <= 3, got {config.steps}")
    leaves = enumerate_outcome_sequences(config)
    prob_sum = float(sum(leaf.prob for leaf in leaves))
    prob_ok = abs(prob_sum - 1.0) <= 1e-12

    n_mc = args.n_mc
    mc_config = replace(config, n_traj=n_mc, sampling=SamplingMode.BORN)
    records = run_ensemble(mc_config, keep_outcomes=True, record_steps=[config.steps])
    counts: dict[tuple[int, ...], int] = {}
    for r in records:
        key = tuple(int(x) for x in r.outcomes.ravel())
        counts[key] = counts.get(key, 0) + 1

    per_seq = []
    max_sigma = 0.0
    seen_mass = 0.0
    for leaf in leaves:
        freq = counts.pop(leaf.outcomes, 0) / n_mc
        seen_mass += leaf.prob
        sigma = math.sqrt(leaf.prob * (1.0 - leaf.prob) / n_mc)
        dev = abs(freq - leaf.prob) / sigma if sigma > 0 else 0.0
        max_sigma = max(max_sigma, dev)
        per_seq.append(
            {
                "outcomes": "".join(str(x) for x in leaf.outcomes),
                "prob": leaf.prob,
                "mc_freq": freq,
                "sigma_dev": dev,
            }
        )
    unexpected = sum(counts.values()) / n_mc  # sampled sequences absent from enumeration

    vals, probs = exact_entropy_distribution(leaves, config.convention)
    exact_dist = stats.cluster_atoms(vals, weights=probs)
    mc_sb = np.array([r.entropy_at(config.steps, 0) for r in records])
    mc_dist = stats.cluster_atoms(mc_sb)
    sb_tvd = stats.discrete_tvd(exact_dist, mc_dist)

    sb_tvd = float(sb_tvd)
    sigma_ok = bool(max_sigma < 3.0 and unexpected == 0.0)
    tvd_ok = bool(sb_tvd < 0.01)
    report = {
        "n_sequences": len(leaves),
        "prob_sum": prob_sum,
        "prob_sum_ok": prob_ok,
        "n_mc": n_mc,
        "max_binomial_sigma_dev": max_sigma,
        "unenumerated_mc_mass": unexpected,
        "sigma_ok": sigma_ok,
        "sb_tvd": sb_tvd,
        "sb_tvd_ok": tvd_ok,
        "per_sequence": per_seq,
        "pass": bool(prob_ok and sigma_ok and tvd_ok),
    }
    write_json(os.path.join(config.output_dir, "oracle_report.json"), report, config)
    print(
        f"oracle: {len(leaves)} sequences, prob sum dev {abs(prob_sum - 1.0):.2e}, "
        f"max sigma dev {max_sigma:.2f}, S_B TVD {sb_tvd:.4f} -> "
        f"{'PASS' if report['pass'] else 'FAIL'}"
    )
    if not report["pass"]:
        raise NumericalCheckError("oracle comparison failed; see oracle_report.json")
    return 0


_PH_PERM = np.array([[0.0, 1, 0], [0, 0, 1], [1, 0, 0]])


def _kraus_checks(model: ModelKind, alpha_tilde: float) -> list[tuple[str, float, float]]:
    """(name, max deviation, tolerance) triples for one channel."""
    ch = build_channel(model, alpha_tilde)
    ch2pi = build_channel(model, alpha_tilde + 2.0 * math.pi)
    eye = np.eye(3)
    checks = []
    for sector, ku, kd in ((1, ch.k1_up, ch.k1_down), (2, ch.k2_up, ch.k2_down)):
        dev = float(np.abs(ku.conj().T @ ku + kd.conj().T @ kd - eye).max())
        checks.append((f"completeness sector {sector}", dev, 1e-12))
    u = blocks._block_unitary(model, alpha_tilde)
    checks.append(
        ("block unitarity", float(np.abs(u.conj().T @ u - np.eye(16)).max()), 1e-12)
    )
    dev = max(
        float(np.abs(a - b).max())
        for a, b in (
            (ch.k1_up, ch2pi.k1_up), (ch.k1_down, ch2pi.k1_down),
            (ch.k2_up, ch2pi.k2_up), (ch.k2_down, ch2pi.k2_down),
        )
    )
    checks.append(("2pi periodicity", dev, 1e-12))
    dev = max(
        float(np.abs(k2 - _PH_PERM @ k1 @ _PH_PERM.T).max())
        for k1, k2 in ((ch.k1_up, ch.k2_up), (ch.k1_down, ch.k2_down))
    )
    checks.append(("particle-hole symmetry", dev, 1e-12))
    if abs(alpha_tilde - math.pi / 2.0) < 1e-12 and model is ModelKind.ONE_BODY:
        p1 = projective_kraus(1)[0.0]
        p2 = projective_kraus(2)[0.0]
        dev = max(
            float(np.abs(ch.k1_up - p1).max()), float(np.abs(ch.k2_up - p2).max())
        )
        checks.append(("pi/2 projective limit", dev, 1e-15))
        m1 = measurement_operator(1)
        scale = -1j / math.sqrt(2.0)
        dev = float(np.abs(ch.k1_down - scale * m1).max())
        checks.append(("pi/2 click operator", dev, 1e-15))
    return checks


def cmd_kraus_check(args: argparse.Namespace) -> int:
    models = [ModelKind(args.model)] if args.model else list(ModelKind)
    alphas = args.alpha_tilde if args.alpha_tilde else list(DEFAULT_CHECK_ALPHAS)
    failed = 0
    for model in models:
        for alpha_text in alphas:
            value, label = parse_alpha_tilde(alpha_text)
            for name, dev, tol in _kraus_checks(model, value):
                ok = dev <= tol
                failed += 0 if ok else 1
                print(
                    f"kraus-check [{model.value} alpha={label}] {name}: "
                    f"{'PASS' if ok else 'FAIL'} (dev {dev:.3e}, tol {tol:.0e})"
                )
    if failed:
        raise NumericalCheckError(f"{failed} kraus checks failed")
    print("kraus-check: all checks passed")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qtraj",
        description="Measurement-only trajectory simulator on a main/ancilla fermion chain",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="single trajectory")
    _add_config_args(sp)
    sp.add_argument("--bits", action="store_true", help="display entropies in bits")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("ensemble", help="trajectory ensemble with KDE/TVD/IPR outputs")
    _add_config_args(sp)
    sp.add_argument("--bits", action="store_true", help="display entropies in bits")
    sp.set_defaults(func=cmd_ensemble)

    sp = sub.add_parser("scaling", help="system-size sweep")
    _add_config_args(sp)
    sp.add_argument(
        "--L-list", required=True, dest="L_list",
        help=f"comma-separated sizes from {sorted(SCALING_ENSEMBLE_SIZES)}",
    )
    sp.set_defaults(func=cmd_scaling)

    sp = sub.add_parser("oracle", help="exact enumeration vs Monte Carlo at L=4")
    _add_config_args(sp)
    sp.add_argument("--n-mc", type=int, default=100_000, help="Monte Carlo sample count")
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("kraus-check", help="channel self-checks")
    sp.add_argument("--model", choices=[m.value for m in ModelKind])
    sp.add_argument(
        "--alpha-tilde", action="append",
        help="angle to check (repeatable); default 0.14, pi/4, pi/2, 3pi/4",
    )
    sp.set_defaults(func=cmd_kraus_check)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (NumericalCheckError, PostSelectionImpossibleError, NumericalUnderflowError) as e:
        print(f"numerical check failed: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
