"""Log-scale figures for scans and traces."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import save_figure  # noqa: E402

__all__ = ["plot_resolvent_scan", "plot_trace", "plot_observability"]


def _finish(fig, ax, path, title):
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    save_figure(fig, path)
    plt.close(fig)
    return path


def plot_resolvent_scan(scan, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    kb = np.sqrt(1 + scan.k_grid ** 2)
    ax.loglog(scan.k_grid, scan.norms, "o-", ms=3, label=f"{scan.space_pair} norm")
    ref = kb ** scan.bound_exponent
    ax.loglog(scan.k_grid, ref * scan.norms[0] / ref[0], "--", label=f"<k>^{scan.bound_exponent:.3g}")
    ax.set_xlabel("k")
    ax.set_ylabel("resolvent norm")
    return _finish(fig, ax, path, f"s = {scan.s:g}, m = {scan.m:g}")


def plot_trace(trace, path, s: float, fit=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(trace.times, trace.energy_norm, lw=1, label="energy norm")
    if fit is not None:
        t = trace.times[trace.times >= trace.times[-1] * (1 - fit.tail_fraction)]
        ax.semilogy(t, np.exp(fit.intercept + fit.slope * t), "--", label=f"envelope, rate {fit.rate:.4g}")
    ax.set_xlabel("t")
    ax.set_ylabel("||(u, u_t)||")
    return _finish(fig, ax, path, f"s = {s:g}")


def plot_observability(lams, cqs, path, s: float, delta: float):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(lams, cqs, "o-", ms=3, label="C_q")
    ax.set_xlabel("lambda")
    ax.set_ylabel("observability constant")
    return _finish(fig, ax, path, f"s = {s:g}, delta = {delta:g}")
