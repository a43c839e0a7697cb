"""
SVG figures for experiment results.

Usage:
    from extremescore.plots import render_figures

    render_figures(result, Path("out/scale"))   # -> [Path("out/scale/scale_threshold.svg")]

Figures are drawn from the summary and record frames only, so they can be
regenerated from the CSVs. Output is byte-stable: Agg backend, fixed SVG hash
salt and no date metadata.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from extremescore.results import ExperimentResult  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "extremescore"
plt.rcParams["svg.fonttype"] = "none"


def _label_value(label: str, key: str) -> float:
    for part in label.split("/"):
        k, _, v = part.partition("=")
        if k == key:
            return float(v)
    return math.nan


def _p_text(p: float) -> str:
    return "unweighted" if p == -math.inf else f"p={p:g}"


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# ---------------------------------------------------------------------------
# One function per experiment
# ---------------------------------------------------------------------------
def plot_benchmark(summary: pd.DataFrame, out: Path) -> list[Path]:
    power = summary[summary["label"].str.startswith("power/")].copy()
    if power.empty:
        return []
    power["nu"] = power["label"].map(lambda s: _label_value(s, "nu"))
    fig, (ax_p, ax_w) = plt.subplots(1, 2, figsize=(10, 4))
    for score, grp in power.groupby("score", sort=True):
        piv = grp.pivot_table(index="nu", columns="stat", values="value").sort_index()
        ax_p.plot(piv.index, piv["p_median"], label=score)
        ax_p.fill_between(piv.index, piv["p_q1"], piv["p_q3"], alpha=0.25)
        ax_w.plot(piv.index, piv["power"], marker="o", label=score)
    ax_p.set(xlabel="nu", ylabel="p-value (quartiles)")
    ax_w.set(xlabel="nu", ylabel="power", ylim=(0, 1))
    ax_w.legend()
    return [_save(fig, out / "benchmark_power.svg")]


def plot_scale_threshold(summary: pd.DataFrame, out: Path) -> list[Path]:
    df = summary[summary["label"].str.startswith("sigma=")].copy()
    if df.empty:
        return []
    df["sigma"] = df["label"].map(lambda s: _label_value(s, "sigma"))
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for (score, p), grp in df.groupby(["score", "threshold_p"], sort=True):
        piv = grp.pivot_table(index="sigma", columns="stat", values="value").sort_index()
        style = "-" if score == "swCRPS" else "--"
        axes[0].plot(piv.index, piv["mean"], style, marker="o", label=f"{score} {_p_text(p)}")
        axes[1].plot(piv.index, piv["sd"], style, marker="o")
    axes[0].set(xlabel="sigma", ylabel="mean score difference", xscale="log")
    axes[1].set(xlabel="sigma", ylabel="sd of score difference", xscale="log")
    axes[0].legend(fontsize="small")
    return [_save(fig, out / "scale_threshold.svg")]


def plot_paired_scale(records: pd.DataFrame, out: Path) -> list[Path]:
    df = records[records["label"].str.startswith("k1=")].copy()
    written = []
    if df.empty:
        return written
    df["k1"] = df["label"].map(lambda s: _label_value(s, "k1"))
    df["k2"] = df["label"].map(lambda s: _label_value(s, "k2"))
    for (score, p), grp in df.groupby(["score", "threshold_p"], sort=True):
        piv = grp.pivot_table(index="k2", columns="k1", values="value").sort_index().sort_index(axis=1)
        fig, ax = plt.subplots(figsize=(5, 4.5))
        mesh = ax.pcolormesh(piv.columns.to_numpy(), piv.index.to_numpy(), piv.to_numpy(), shading="nearest")
        ax.contour(piv.columns.to_numpy(), piv.index.to_numpy(), piv.to_numpy(), colors="k", linewidths=0.5)
        fig.colorbar(mesh, ax=ax)
        ax.set(xlabel="k1", ylabel="k2", title=f"{score} {_p_text(p)}")
        written.append(_save(fig, out / f"paired_{score}_{p:g}.svg"))
    return written


def plot_lakes(summary: pd.DataFrame, out: Path) -> list[Path]:
    st = summary[summary["label"].str.startswith("station=")].copy()
    if st.empty:
        return []
    st["station"] = st["label"].map(lambda s: _label_value(s, "station"))
    cells = sorted(set(zip(st["score"], st["threshold_p"])))
    fig, axes = plt.subplots(1, len(cells), figsize=(3.2 * len(cells), 3.5), squeeze=False)
    for ax, (score, p) in zip(axes[0], cells):
        grp = st[(st["score"] == score) & (st["threshold_p"] == p)]
        piv = grp.pivot_table(index="station", columns="stat", values="value").sort_index()
        ax.errorbar(piv.index, piv["mean"], yerr=piv["sd"], fmt="o", capsize=3)
        ax.set(xlabel="station", title=f"{score} {_p_text(p)}", xticks=piv.index)
    written = [_save(fig, out / "lakes_delta.svg")]

    ab = summary[summary["label"].str.startswith("ab=")]
    if not ab.empty:
        piv = ab.pivot_table(index=["score", "threshold_p"], columns="stat", values="value").sort_index()
        fig, ax = plt.subplots(figsize=(6, 3.5))
        x = np.arange(len(piv))
        ax.bar(x, piv["proportion"])
        ax.errorbar(
            x,
            piv["proportion"],
            yerr=[piv["proportion"] - piv["wilson_low"], piv["wilson_high"] - piv["proportion"]],
            fmt="none",
            color="k",
            capsize=3,
        )
        ax.axhline(0.5, color="grey", linestyle=":")
        ax.set_xticks(x, [f"{s}\n{_p_text(p)}" for s, p in piv.index], fontsize="small")
        ax.set(ylabel="proportion preferring A", ylim=(0, 1))
        written.append(_save(fig, out / "lakes_ab.svg"))
    return written


def plot_station_eval(summary: pd.DataFrame, out: Path) -> list[Path]:
    comp = summary[summary["label"].str.startswith("comparison=")]
    if comp.empty:
        return []
    piv = comp.pivot_table(index=["label", "score", "threshold_p"], columns="stat", values="value").sort_index()
    keys = sorted(set(i[0] for i in piv.index))
    fig, axes = plt.subplots(1, len(keys), figsize=(3.5 * len(keys), 4), squeeze=False, sharey=True)
    for ax, key in zip(axes[0], keys):
        sub = piv.loc[key]
        x = np.arange(len(sub))
        ax.plot(x, sub["prop_negative"], "o")
        if "reject_below" in sub:
            ax.plot(x, sub["reject_below"], "_", color="red", markersize=12)
            ax.plot(x, 1.0 - sub["reject_below"], "_", color="red", markersize=12)
        ax.set_xticks(x, [f"{s}\n{_p_text(p)}" for s, p in sub.index], fontsize="x-small", rotation=90)
        ax.set(title=key.split("=")[1], ylim=(0, 1))
    axes[0][0].set_ylabel("proportion of negative differences")
    return [_save(fig, out / "station_comparisons.svg")]


def plot_permutation(records: pd.DataFrame, out: Path) -> list[Path]:
    orig = records[records["label"].str.startswith("original/")]
    perm = records[(records["label"].str.startswith("permuted/")) & (records["replicate"] == 0)]
    if orig.empty or perm.empty:
        return []
    written = []
    for (score, p), grp in orig.groupby(["score", "threshold_p"], sort=True):
        pg = perm[(perm["score"] == score) & (perm["threshold_p"] == p)].sort_values("label")
        og = grp.sort_values("label")
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        ax.plot(pg["value"].to_numpy(), og["value"].to_numpy(), ".")
        lo = float(min(og["value"].min(), pg["value"].min()))
        hi = float(max(og["value"].max(), pg["value"].max()))
        ax.plot([lo, hi], [lo, hi], color="grey", linewidth=0.8)
        ax.set(xlabel="permuted covariate", ylabel="original covariate", title=f"{score} {_p_text(p)}")
        written.append(_save(fig, out / f"permutation_{score}_{p:g}.svg"))
    return written


def render_figures(result: ExperimentResult, out: Path) -> list[Path]:
    """Draw the figures that fit this experiment into `out`; returns the files written."""
    out = Path(out)
    summary, records = result.summary_frame(), result.records_frame()
    kind = result.experiment
    if kind == "Benchmark":
        written = plot_benchmark(summary, out)
    elif kind == "ScaleThreshold":
        written = plot_scale_threshold(summary, out)
    elif kind == "PairedScale":
        written = plot_paired_scale(records, out)
    elif kind == "LakesSim":
        written = plot_lakes(summary, out)
    elif kind == "StationEval":
        written = plot_station_eval(summary, out)
    elif kind == "PermTrend":
        written = plot_permutation(records, out)
    else:
        written = []
    logger.info("%d figure(s) for %s", len(written), kind)
    return written
