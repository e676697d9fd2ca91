"""Static figures written next to the JSON/CSV reports."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_convergence(report: dict, out_dir: str) -> list[str]:
    """One panel per check: |estimate - oracle| against N, with 3-sigma bars."""
    recs = report["records"]
    checks = list(dict.fromkeys(r["check"] for r in recs))
    if not checks:
        return []
    fig, axes = plt.subplots(1, len(checks), figsize=(3.2 * len(checks), 3.0), squeeze=False)
    for ax, c in zip(axes[0], checks):
        rows = [r for r in recs if r["check"] == c]
        N = np.array([r["N"] for r in rows], dtype=float)
        if c == "ks":
            y = np.array([r["estimate"] for r in rows], dtype=float)
            ax.plot(N, y, "o-")
            ax.set_ylabel("KS statistic")
        else:
            y = np.abs(np.array([r["estimate"] - r["oracle"] for r in rows], dtype=float))
            se = np.array([r["stderr"] for r in rows], dtype=float)
            ax.errorbar(N, y, yerr=3 * se, fmt="o-", capsize=3)
            ax.set_ylabel("|estimate - oracle|")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("N")
        ax.set_title(c)
    fig.tight_layout()
    path = os.path.join(out_dir, "convergence.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [path]


def plot_quantiles(report: dict, out_dir: str) -> list[str]:
    q = report.get("diagnostics", {}).get("z_quantiles")
    if not q:
        return []
    fig, ax = plt.subplots(figsize=(4.0, 3.0))
    Ns = sorted(int(k) for k in q)
    arr = np.array([q[str(N)] for N in Ns])
    for j, lab in enumerate(("5%", "25%", "50%", "75%", "95%")):
        ax.plot(Ns, arr[:, j], "o-", label=lab)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N")
    ax.set_ylabel("quantile of Z")
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = os.path.join(out_dir, "z_quantiles.png")
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return [path]


def render_figures(report: dict, out_dir: str) -> list[str]:
    os.makedirs(out_dir, exist_ok=True)
    return plot_convergence(report, out_dir) + plot_quantiles(report, out_dir)
