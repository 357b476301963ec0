"""Figures for a finished report (matplotlib, file output only)."""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import summary_rows  # noqa: E402


def write_summary(report: dict, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter="\t")
        w.writerow(["target", "suite", "claim", "expected", "observed", "status"])
        w.writerows(summary_rows(report))


def plot_claims(report: dict, path: str) -> None:
    """Passed and failed claim counts per suite."""
    names, good, bad = [], [], []
    for s in report["suites"]:
        names.append(s["suite"])
        oks = [c["ok"] for c in s["claims"].values()]
        good.append(sum(oks))
        bad.append(len(oks) - sum(oks))
    fig, ax = plt.subplots(figsize=(6, 0.5 + 0.5 * max(1, len(names))))
    ax.barh(names, good, color="tab:green", label="pass")
    ax.barh(names, bad, left=good, color="tab:red", label="fail")
    ax.set_xlabel("claims")
    ax.set_title(f"{report['config']['target']}: {report['status']}")
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_ranks(report: dict, path: str) -> bool:
    """Recorded rank bounds of the exact suites next to the certified values."""
    labels, values, expected = [], [], []
    for s in report["suites"]:
        d, c = s["data"], s["claims"]
        if s["suite"] == "kernel":
            labels += ["rank", "kernel"]
            values += [d.get("rank_lower_bound", 0), c["kernel_dim"]["observed"]]
            expected += [None, c["kernel_dim"]["expected"]]
        elif s["suite"] == "indecomposable" and "pairing_rank" in c:
            labels += ["rank G", "rank [G F]", "pairing"]
            values += [d.get("rank_G_lower_bound", 0), d.get("rank_GF_lower_bound", 0), c["pairing_rank"]["observed"]]
            expected += [None, None, c["pairing_rank"]["expected"]]
    if not labels:
        return False
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bars = ax.bar(labels, values, color="tab:blue")
    for bar, e in zip(bars, expected):
        if e is not None:
            ax.plot([bar.get_x(), bar.get_x() + bar.get_width()], [e, e], color="black", lw=2)
    ax.bar_label(bars)
    ax.set_yscale("symlog")
    ax.set_title("ranks (black: expected)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def plot_flow(report: dict, path: str) -> bool:
    """Worst float residuals of the transport check against the tolerance."""
    flow = next((s for s in report["suites"] if s["suite"] == "flow" and "worst" in s["data"]), None)
    if flow is None:
        return False
    worst = {k: float(v) for k, v in flow["data"]["worst"].items()}
    tol = flow["params"]["tol"]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(list(worst), [max(v, 1e-300) for v in worst.values()], color="tab:orange")
    ax.axhline(tol, color="black", ls="--", label=f"tol {tol:g}")
    ax.set_yscale("log")
    ax.set_ylim(1e-18, max(tol * 10, 1e-8))
    ax.set_ylabel("worst residual")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return True


def render(report: dict, directory: str) -> list[str]:
    """Write the TSV summary and every applicable figure into directory."""
    os.makedirs(directory, exist_ok=True)
    stem = report["config"]["target"]
    written = []
    path = os.path.join(directory, f"{stem}_summary.tsv")
    write_summary(report, path)
    written.append(path)
    path = os.path.join(directory, f"{stem}_claims.png")
    plot_claims(report, path)
    written.append(path)
    for name, fn in (("ranks", plot_ranks), ("flow", plot_flow)):
        path = os.path.join(directory, f"{stem}_{name}.png")
        if fn(report, path):
            written.append(path)
    return written
