"""Matplotlib figure rendering for the report paths.

Figures are written to SVG (default) or PNG next to the delimited output.
SVG ids are salted with a fixed string and the creation date is stripped,
so figure bytes are reproducible from (spec, seed).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "glbm"

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["save_figure", "render_scatter", "render_loglog", "render_curves"]


def save_figure(fig, path) -> None:
    path = str(path)
    if path.endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path, dpi=150)
    plt.close(fig)


def render_scatter(path, clouds, boundaries=(), highlights=(), title="") -> None:
    """Eigenvalue scatter with optional boundary polylines and highlighted points."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for cloud in clouds:
        ax.scatter(cloud.real, cloud.imag, s=2.0, linewidths=0, alpha=0.6, color="#1f4e8c")
    for loop in boundaries:
        ax.plot(loop.real, loop.imag, color="#c23b22", lw=1.2)
    for pts in highlights:
        ax.scatter(pts.real, pts.imag, s=36.0, marker="x", color="#111111", zorder=5)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def render_loglog(path, xs, ys, slope=None, xlabel="", ylabel="", title="") -> None:
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(xs, ys, "o-", color="#1f4e8c")
    if slope is not None:
        ref = ys[0] * (xs / xs[0]) ** slope
        ax.loglog(xs, ref, "--", color="#888888", label=f"slope {slope:g}")
        ax.legend()
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)


def render_curves(path, xs, curves: dict, xlabel="", ylabel="", title="",
                  logx=False, logy=False) -> None:
    fig, ax = plt.subplots(figsize=(5, 4))
    for label, ys in curves.items():
        ax.plot(xs, ys, "o-", label=str(label))
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    save_figure(fig, path)
