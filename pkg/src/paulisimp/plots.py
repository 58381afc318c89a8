"""Figure rendering for experiment reports.

Each experiment gets one PNG summarising its headline comparison.  Rendering
uses the Agg backend and strips writer metadata so repeated runs with the
same seed produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import ExperimentReport

_SAVE_OPTS = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path: str) -> str:
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)
    return path


def _plot_counts(report: ExperimentReport, path: str) -> str:
    rows = report.rows
    labels = [f"{r['kind']} n={r['n']}" for r in rows]
    oracles = [r["oracle"] for r in rows]
    colors = ["tab:blue" if r["match"] else "tab:red" for r in rows]
    fig, ax = plt.subplots(figsize=(8, 0.32 * len(rows) + 1.2))
    ax.barh(range(len(rows)), oracles, color=colors)
    ax.set_yticks(range(len(rows)), labels, fontsize=7)
    ax.invert_yaxis()
    ax.set_xscale("log")
    ax.set_xlabel("oracle coefficient count")
    ax.set_title("closed form vs oracle (red = documented mismatch)")
    fig.tight_layout()
    return _save(fig, path)


def _plot_converge(report: ExperimentReport, path: str) -> str:
    medians = report.summary["residual_medians"]
    counts = sorted(int(k) for k in medians)
    values = [medians[str(c)] for c in counts]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(counts, values, "o-")
    ax.set_xlabel("channels averaged")
    ax.set_ylabel("median fit residual")
    ax.set_title(
        f"failure fraction {report.summary['failure_fraction']:.3f} "
        f"at N={report.summary['hoeffding_n']}"
    )
    fig.tight_layout()
    return _save(fig, path)


def _plot_readout(report: ExperimentReport, path: str) -> str:
    full = [r["tvd_after"] for r in report.rows if r["calibration"] == "full"]
    sym = [r["tvd_after"] for r in report.rows if r["calibration"] == "symmetric"]
    before = report.summary["tvd_before"]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.boxplot(
        [full, sym],
        tick_labels=[
            f"full ({report.summary['samples_full']})",
            f"symmetric ({report.summary['samples_symmetric']})",
        ],
    )
    ax.axhline(before, color="tab:red", linestyle="--", label="before mitigation")
    ax.set_ylabel("total variation distance")
    ax.set_title("readout mitigation by calibration budget")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def _plot_noise(report: ExperimentReport, path: str) -> str:
    per_target = report.summary["per_target"]
    targets = sorted(per_target, key=float)
    individual = [per_target[t]["individual_median"] for t in targets]
    randomised = [per_target[t]["randomised_median"] for t in targets]
    x = np.arange(len(targets))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(x - 0.18, individual, width=0.36, label="individual")
    ax.bar(x + 0.18, randomised, width=0.36, label="randomised")
    ax.set_xticks(x, targets)
    ax.set_xlabel("target expectation value")
    ax.set_ylabel("median absolute error")
    ax.set_title("noise-estimation mitigation")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def _plot_time_series(report: ExperimentReport, path: str) -> str:
    first = [r for r in report.rows if r["trial"] == report.rows[0]["trial"]]
    circuits = sorted({r["circuit"] for r in first if r["circuit"] != "average"})
    fig, ax = plt.subplots(figsize=(7, 4))
    for c in circuits:
        series = [r["abs_deviation"] for r in first if r["circuit"] == c]
        ax.plot(series, color="0.75", linewidth=0.7)
    averaged = [r["abs_deviation"] for r in first if r["circuit"] == "average"]
    ax.plot(averaged, color="tab:blue", linewidth=2.0, label="circuit average")
    ax.set_xlabel("timestep")
    ax.set_ylabel("|error - series mean|")
    ax.set_title(
        f"median std ratio {report.summary['median_std_ratio']:.2f} "
        f"(expected ~{report.summary['expected_ratio']:.2f})"
    )
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


_PLOTTERS = {
    "counts": _plot_counts,
    "converge": _plot_converge,
    "readout-mitigation": _plot_readout,
    "noise-estimation": _plot_noise,
    "time-series": _plot_time_series,
}


def render_report(report: ExperimentReport, path: str) -> str:
    """Render the experiment's figure to ``path`` and return the path."""
    return _PLOTTERS[report.experiment](report, path)
