"""The six figure kinds, drawn from persisted outputs.

Everything here is display only: files are parsed, columns selected and
plotted.  The only numeric knobs are the axis-scale flags; physics is
never recomputed.  Rendering is deterministic: fixed canvas sizes, fixed
dpi, default fonts, and a pinned PNG metadata block.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.ticker import ScalarFormatter

from .io import (
    FigureInputError,
    check_consistent,
    config_label,
    read_summary,
    read_table,
)

_DPI = 120
# fixed text chunk so repeated renders are byte-identical
_PNG_META = {"Software": "figs 0.1.0"}


class FigureKind(Enum):
    TRAJECTORY_SERIES = "trajectory_series"
    DENSITY_PANELS = "density_panels"
    TVD_DECAY = "tvd_decay"
    SCALING = "scaling"
    BORN_WEIGHT_SCATTER = "born_weight_scatter"
    IPR_VS_NT = "ipr_vs_Nt"


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: a figure kind, its input files, and axis-scale flags."""

    kind: FigureKind
    inputs: tuple
    log_x: bool = False
    log_y: bool = False


def render(spec: FigureSpec, out_dir: str) -> list:
    """Render one figure kind to `<out_dir>/<kind>.png`; returns written paths."""
    if not spec.inputs:
        raise FigureInputError("no input files")
    fig = _RENDERERS[spec.kind](spec)
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f"{spec.kind.value}.png")
    fig.savefig(path, dpi=_DPI, metadata=_PNG_META)
    plt.close(fig)
    return [path]


def _apply_scales(ax, spec: FigureSpec) -> None:
    if spec.log_x:
        ax.set_xscale("log")
    if spec.log_y:
        ax.set_yscale("log")


def _trajectory_series(spec: FigureSpec):
    tables = [read_table(p) for p in spec.inputs]
    for table in tables:
        for name in ("t_m", "S_B", "S_C"):
            table.col(name)
    check_consistent(tables, keys=("model", "L"))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for table in tables:
        t_m = table.col("t_m")
        # a log axis cannot show the t_m = 0 record
        mask = t_m > 0 if spec.log_x else slice(None)
        tag = f"alpha={table.config.get('alpha_tilde')} seed={table.config.get('seed')}"
        (line,) = ax.plot(t_m[mask], table.col("S_B")[mask], label=f"S_B {tag}")
        ax.plot(
            t_m[mask], table.col("S_C")[mask],
            linestyle="--", color=line.get_color(), label=f"S_C {tag}",
        )
    _apply_scales(ax, spec)
    ax.set_xlabel("t_m")
    ax.set_ylabel("entropy (nats)")
    ax.set_title(config_label(tables[0].config).replace(f"alpha={tables[0].config.get('alpha_tilde')} ", ""))
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _density_panels(spec: FigureSpec):
    tables = [read_table(p) for p in spec.inputs]
    check_consistent(tables)  # density panels must come from one ensemble run
    for table in tables:
        table.col("grid")
        table.col("density")
        if "t_m" not in table.meta:
            raise FigureInputError(f"{table.path}: header lacks the t_m stamp")
    tables.sort(key=lambda t: int(t.meta["t_m"]))
    n = len(tables)
    ncols = min(3, n)
    nrows = math.ceil(n / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(3.4 * ncols, 2.7 * nrows), squeeze=False
    )
    for ax in axes.flat[n:]:
        ax.set_visible(False)
    for ax, table in zip(axes.flat, tables):
        grid = table.col("grid")
        density = table.col("density")
        ax.fill_between(grid, density, alpha=0.3)
        ax.plot(grid, density)
        title = f"t_m = {int(table.meta['t_m'])}"
        if table.meta.get("degenerate") == "1":
            title += " (degenerate)"
        ax.set_title(title, fontsize=9)
        ax.grid(True, alpha=0.3)
        _apply_scales(ax, spec)
    fig.suptitle(config_label(tables[0].config), fontsize=10)
    fig.supxlabel("S_B (nats)")
    fig.supylabel("P(S_B)")
    fig.tight_layout(rect=(0.02, 0.02, 1.0, 0.94))
    return fig


def _tvd_decay(spec: FigureSpec):
    tables = [read_table(p) for p in spec.inputs]
    for table in tables:
        table.col("t_m")
        table.col("tvd_vs_final")
    check_consistent(tables, keys=("model", "L"))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for table in tables:
        ref = table.meta.get("reference_t_m", "?")
        ax.plot(
            table.col("t_m"), table.col("tvd_vs_final"),
            marker="o", markersize=4,
            label=f"{config_label(table.config)}, ref t_m={ref}",
        )
    ax.axhline(0.05, color="0.4", linestyle=":", linewidth=1)
    _apply_scales(ax, spec)
    ax.set_xlabel("t_m")
    ax.set_ylabel("TVD to final density")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_SCALING_MARKERS = {"S_B": "o", "S_C": "s", "I_BBprime": "^"}


def _scaling(spec: FigureSpec):
    tables = [read_table(p) for p in spec.inputs]
    for table in tables:
        for name in ("L", "observable", "mean", "stderr"):
            table.col(name)
    check_consistent(tables, keys=("model", "alpha_tilde"))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for table in tables:
        obs_col = table.col("observable")
        seen = []
        for name in obs_col:
            if name not in seen:
                seen.append(name)
        suffix = "" if len(tables) == 1 else f" (seed {table.config.get('seed')})"
        for obs in seen:
            rows = obs_col == obs
            ax.errorbar(
                table.col("L")[rows], table.col("mean")[rows],
                yerr=table.col("stderr")[rows],
                marker=_SCALING_MARKERS.get(obs, "d"), capsize=3, label=obs + suffix,
            )
    _apply_scales(ax, spec)
    if spec.log_x:
        # label the actual system sizes instead of powers of ten
        sizes = sorted({int(v) for table in tables for v in table.col("L")})
        ax.set_xticks(sizes)
        ax.get_xaxis().set_major_formatter(ScalarFormatter())
    ax.set_xlabel("L")
    ax.set_ylabel("long-time mean (nats)")
    ax.set_title(f"{tables[0].config.get('model')} alpha={tables[0].config.get('alpha_tilde')}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _born_weight_scatter(spec: FigureSpec):
    if len(spec.inputs) != 2:
        raise FigureInputError(
            "born_weight_scatter needs exactly two inputs: the per-trajectory "
            "entropy table and the ensemble summary JSON"
        )
    table = summary = None
    for path in spec.inputs:
        if path.endswith(".json"):
            summary = read_summary(path)
        else:
            table = read_table(path)
    if table is None or summary is None:
        raise FigureInputError("born_weight_scatter needs one CSV table and one JSON summary")
    check_consistent([table, summary])  # both files must describe the same run

    weights = np.asarray(summary.entry("relative_born_weights"), dtype=float)
    final_t = summary.entry("final_t_m")
    tids = table.col("trajectory_id")
    rows = table.col("t_m") == final_t
    s_final = np.full(len(weights), np.nan)
    for tid, value in zip(tids[rows], table.col("S_B")[rows]):
        k = int(tid)
        if not 0 <= k < len(weights):
            raise FigureInputError(
                f"{table.path}: trajectory_id {k} outside the {len(weights)} summary weights"
            )
        s_final[k] = value
    if np.isnan(s_final).any():
        raise FigureInputError(
            f"{table.path}: no t_m={final_t} entropy row for some trajectory in {summary.path}"
        )

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.scatter(s_final, weights, s=14, alpha=0.6, linewidths=0)
    top = int(np.argmax(weights))
    ax.scatter(
        [s_final[top]], [weights[top]],
        s=70, marker="*", color="C3", label=f"max weight (trajectory {top})",
    )
    _apply_scales(ax, spec)
    ax.set_xlabel(f"S_B at t_m = {final_t} (nats)")
    ax.set_ylabel("relative Born weight")
    ax.set_title(config_label(table.config))
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


def _ipr_vs_nt(spec: FigureSpec):
    summaries = [read_summary(p) for p in spec.inputs]
    check_consistent(summaries, keys=("model", "L"))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for summary in summaries:
        curve = np.asarray(summary.entry("ipr_vs_N_t"), dtype=float)
        if curve.ndim != 2 or curve.shape[1] != 2:
            raise FigureInputError(f"{summary.path}: ipr_vs_N_t is not a list of [N_t, IPR] pairs")
        ax.plot(curve[:, 0], curve[:, 1], marker="o", label=config_label(summary.config))
    _apply_scales(ax, spec)
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("N_t")
    ax.set_ylabel("IPR of the S_B distribution")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return fig


_RENDERERS = {
    FigureKind.TRAJECTORY_SERIES: _trajectory_series,
    FigureKind.DENSITY_PANELS: _density_panels,
    FigureKind.TVD_DECAY: _tvd_decay,
    FigureKind.SCALING: _scaling,
    FigureKind.BORN_WEIGHT_SCATTER: _born_weight_scatter,
    FigureKind.IPR_VS_NT: _ipr_vs_nt,
}
