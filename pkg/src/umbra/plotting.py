"""Figures for the command-line pipelines (PNG via the Agg backend)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

golden_mean = (math.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
colors = ["#08589e", "#2b8cbe", "#4eb3d3", "#7bccc4", "#a8ddb5", "#e34a33"]

params = {
    "axes.prop_cycle": matplotlib.cycler(color=colors),
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 120,
    "lines.linewidth": 1.2,
    "lines.markersize": 3,
    "svg.hashsalt": "umbra",
}


def _figure(width: float = fig_width, height: float | None = None):
    with plt.rc_context(params):
        fig = plt.figure(figsize=(width, height or width * golden_mean))
    return fig


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(params):
        fig.savefig(path, metadata={"Software": None}, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_shadow_curve(curve, report, path) -> Path:
    """Traced boundary in ambient coordinates (first three) and its plane deviation."""
    X = curve.ambient[curve.converged]
    dev = X @ report.normal - report.offset
    fig = _figure(fig_width * 1.6)
    if X.shape[1] >= 3:
        ax = fig.add_subplot(1, 2, 1, projection="3d")
        ax.scatter(X[:, 0], X[:, 1], X[:, 2], c=colors[0], s=6)
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        ax.set_zlabel("$x_3$")
    else:
        ax = fig.add_subplot(1, 2, 1)
        ax.plot(X[:, 0], X[:, 1], "o")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
    ax.set_title("shadow boundary")
    ax2 = fig.add_subplot(1, 2, 2)
    ax2.semilogy(np.arange(len(dev)), np.abs(dev) + 1e-18, "o")
    ax2.axhline(report.threshold, color=colors[-1], ls="--", label="threshold")
    ax2.set_xlabel("sample")
    ax2.set_ylabel("plane deviation")
    ax2.set_title(report.verdict)
    ax2.legend()
    return _save(fig, path)


def plot_certification(report, path) -> Path:
    """Per-source decomposition residuals and the cubic norm before/after the shear."""
    fig = _figure(fig_width * 1.6)
    ax = fig.add_subplot(1, 2, 1)
    res = [max(e.residual, 1e-18) for e in report.entries]
    ax.semilogy(range(len(res)), res, "o")
    ax.set_xlabel("source")
    ax.set_ylabel("decomposition residual")
    ax2 = fig.add_subplot(1, 2, 2)
    ax2.bar(["before", "after"], [max(report.initial_cubic_norm, 1e-18), max(report.final_cubic_norm, 1e-18)], color=colors[:2])
    ax2.set_yscale("log")
    ax2.set_ylabel("$|D^3 f|$")
    ax2.set_title(f"route: {report.route}")
    return _save(fig, path)


def plot_graphs(graphs, names, path) -> Path:
    """Circular drawings of small graphs."""
    k = max(len(graphs), 1)
    cols = min(k, 5)
    rows = math.ceil(k / cols)
    fig = _figure(2.0 * cols, 2.2 * rows)
    for idx, (g, name) in enumerate(zip(graphs, names)):
        ax = fig.add_subplot(rows, cols, idx + 1)
        ang = 2 * np.pi * np.arange(g.v) / max(g.v, 1)
        P = np.c_[np.cos(ang), np.sin(ang)]
        for a, b in g.edges():
            ax.plot(*P[[a, b]].T, color=colors[1], lw=1)
        ax.plot(P[:, 0], P[:, 1], "o", color=colors[0], ms=5)
        ax.set_title(name, fontsize=8)
        ax.set_aspect("equal")
        ax.axis("off")
    return _save(fig, path)


def plot_profile(profile, path) -> Path:
    """Rotation profile samples with its trigonometric interpolant and spectrum."""
    fig = _figure(fig_width * 1.6)
    ax = fig.add_subplot(1, 2, 1)
    t = np.linspace(0, 2 * np.pi, 600)
    ax.plot(t, profile.evaluate(t), label="interpolant")
    ax.plot(profile.samples, profile.values, "o", label="samples")
    ax.set_xlabel("$t$")
    ax.set_ylabel("residual")
    ax.legend()
    ax2 = fig.add_subplot(1, 2, 2)
    N = len(profile.coefficients)
    ks = np.fft.fftshift(np.fft.fftfreq(N, 1.0 / N))
    mags = np.fft.fftshift(np.abs(profile.coefficients))
    ax2.semilogy(ks, mags + 1e-30, "o")
    ax2.set_xlabel("frequency $k$")
    ax2.set_ylabel("$|c_k|$")
    return _save(fig, path)


def plot_polar_pair(P, Pp, path) -> Path:
    """A planar polytope and its polar (first two coordinates)."""
    fig = _figure(fig_width, fig_width)
    ax = fig.add_subplot(1, 1, 1)
    for poly, label, col in ((P, "K", colors[0]), (Pp, "polar", colors[-1])):
        V = poly.extreme_vertices()[:, :2]
        ang = np.arctan2(V[:, 1] - V[:, 1].mean(), V[:, 0] - V[:, 0].mean())
        V = V[np.argsort(ang)]
        V = np.vstack([V, V[:1]])
        ax.plot(V[:, 0], V[:, 1], "-o", color=col, label=label)
    ax.plot([0], [0], "k+")
    ax.set_aspect("equal")
    ax.legend()
    return _save(fig, path)


def plot_residual_field(field, path) -> Path:
    """Histogram of Frobenius residuals over the grid."""
    fig = _figure()
    ax = fig.add_subplot(1, 1, 1)
    vals = field.residuals[~field.skipped]
    vals = np.log10(np.maximum(vals, 1e-18))
    ax.hist(vals, bins=30, color=colors[1])
    ax.set_xlabel(r"$\log_{10}$ residual")
    ax.set_ylabel("grid points")
    return _save(fig, path)


__all__ = [
    "plot_certification",
    "plot_graphs",
    "plot_polar_pair",
    "plot_profile",
    "plot_residual_field",
    "plot_shadow_curve",
]
