"""Figure rendering: envelope convergence, per-pair bounds, strategy
comparison, mesh/order maps, and the 1D envelope and Fourier figures.

Output is deterministic: the Agg backend, a fixed SVG hash salt, and
SOURCE_DATE_EPOCH pin everything that normally varies between runs.
"""

from __future__ import annotations

import os
from pathlib import Path

os.environ.setdefault("SOURCE_DATE_EPOCH", "0")

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib import cm, colors
from matplotlib.collections import PatchCollection
from matplotlib.patches import Rectangle

from .io import ParseError, pair_columns, read_lab1d_csv, read_mesh_dump, \
    read_run_csv

matplotlib.rcParams["svg.hashsalt"] = "plotkit"

PAPER_STYLE = {
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    "figure.figsize": (4.2, 3.2),
    "figure.dpi": 150,
    "savefig.dpi": 150,
}


def slope_final_half(x: np.ndarray, logy: np.ndarray) -> float:
    """Least-squares slope of logy vs x over the final half of the steps."""
    n = len(x)
    if n < 2:
        raise ParseError("need at least 2 steps to fit a slope")
    k = max(2, (n + 1) // 2)
    xs, ys = x[-k:], logy[-k:]
    return float(np.polyfit(xs, ys, 1)[0])


def _abscissa(cols: dict, fixed_p: bool):
    dof = cols["dof"]
    if fixed_p:
        return np.log10(dof), "log10 DOF"
    return np.sqrt(dof), "sqrt(DOF)"


def _quantity(cols: dict, column: str, path=""):
    if column not in cols:
        raise ParseError(f"{path}: missing required column '{column}'")
    y = cols[column]
    if np.any(y <= 0):
        y = np.where(y > 0, y, np.nan)
    return y


def _style(style: str | None):
    return plt.rc_context(PAPER_STYLE if style == "paper" else {})


def _finish(fig, out):
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out)
    plt.close(fig)
    return out


def envelope_figure(in_path, out, style=None, fixed_p=False,
                    column="eta_max_rel"):
    """Semi-log envelope decay vs sqrt(DOF) (or log-log vs DOF) with the
    fitted slope over the final half of steps annotated."""
    cols = read_run_csv(in_path)
    y = _quantity(cols, column, in_path)
    x, xlabel = _abscissa(cols, fixed_p)
    slope = slope_final_half(x, np.log10(y))
    with _style(style):
        fig, ax = plt.subplots()
        ax.semilogy(x, y, "o-")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(column)
        ax.set_title(Path(in_path).stem)
        ax.annotate(f"slope {slope:.6g}", xy=(0.05, 0.05),
                    xycoords="axes fraction")
        return _finish(fig, out), slope


def per_pair_figure(in_path, out, style=None, fixed_p=False):
    """One curve per pair: eta2_j / lambda_j against the run abscissa."""
    cols = read_run_csv(in_path)
    lam_cols = pair_columns(cols, "lambda")
    eta_cols = pair_columns(cols, "eta2")
    if not lam_cols or not eta_cols:
        raise ParseError(f"{in_path}: missing required column 'lambda_1' / "
                         "'eta2_1' (per-pair figure needs per-pair columns)")
    x, xlabel = _abscissa(cols, fixed_p)
    with _style(style):
        fig, ax = plt.subplots()
        for lam_c, eta_c in zip(lam_cols, eta_cols):
            ax.semilogy(x, cols[eta_c] / cols[lam_c], "-", lw=0.9)
        ax.set_xlabel(xlabel)
        ax.set_ylabel("eta2_j / lambda_j")
        ax.set_title(f"{Path(in_path).stem} ({len(lam_cols)} pairs)")
        return _finish(fig, out), None


def compare_figure(in_paths, out, style=None, fixed_p=False,
                   column="eta_max_rel"):
    """Labeled envelope curves from several runs on shared axes."""
    with _style(style):
        fig, ax = plt.subplots()
        for path in in_paths:
            cols = read_run_csv(path)
            y = _quantity(cols, column, path)
            x, xlabel = _abscissa(cols, fixed_p)
            ax.semilogy(x, y, "o-", label=Path(path).stem)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(column)
        ax.legend()
        return _finish(fig, out), None


def mesh_figure(in_path, out, style=None):
    """One rectangle per leaf cell, colored by local polynomial degree."""
    cells = read_mesh_dump(in_path)
    p_vals = sorted({c.p for c in cells})
    norm = colors.BoundaryNorm(
        [p - 0.5 for p in range(min(p_vals), max(p_vals) + 2)],
        cm.viridis.N)
    with _style(style):
        fig, ax = plt.subplots()
        patches = [Rectangle((c.x0, c.y0), c.x1 - c.x0, c.y1 - c.y0)
                   for c in cells]
        pc = PatchCollection(patches, cmap="viridis", norm=norm,
                             edgecolor="black", linewidth=0.3)
        pc.set_array(np.array([c.p for c in cells]))
        ax.add_collection(pc)
        ax.autoscale_view()
        ax.set_aspect("equal")
        fig.colorbar(pc, ax=ax, ticks=p_vals, label="p")
        ax.set_title(f"{Path(in_path).stem} ({len(cells)} cells)")
        return _finish(fig, out), None


def lab1d_envelope_figure(in_path, out, style=None):
    """Scaled eigenvectors against the +/- landscape envelope."""
    cols = read_lab1d_csv(in_path, required=("x", "u", "neg_u"))
    x = cols["x"]
    with _style(style):
        fig, ax = plt.subplots()
        ax.plot(x, cols["u"], "k-", lw=1.5, label="u")
        ax.plot(x, cols["neg_u"], "k-", lw=1.5)
        for name in cols:
            if name.startswith("psi"):
                ax.plot(x, cols[name], lw=0.8, label=name)
        ax.set_xlabel("x")
        ax.legend(fontsize=6)
        return _finish(fig, out), None


def lab1d_fourier_figure(in_path, out, style=None):
    """Landscape function against truncated eigenvector expansions."""
    cols = read_lab1d_csv(in_path, required=("x", "u"))
    x = cols["x"]
    with _style(style):
        fig, ax = plt.subplots()
        ax.plot(x, cols["u"], "k-", lw=1.5, label="u")
        for name in cols:
            if name.startswith("partial"):
                ax.plot(x, cols[name], "--", lw=0.9,
                        label=f"N={name[len('partial'):]}")
        ax.set_xlabel("x")
        ax.legend(fontsize=7)
        return _finish(fig, out), None


def render(kind, in_paths, out, style=None, fixed_p=False):
    """Dispatch one figure kind; returns (output path, slope or None)."""
    in_paths = [str(p) for p in in_paths]
    if not in_paths:
        raise ParseError("no input files given")
    if kind == "compare":
        return compare_figure(in_paths, out, style, fixed_p)
    if len(in_paths) != 1:
        raise ParseError(f"kind '{kind}' takes exactly one input file")
    single = in_paths[0]
    if kind == "envelope":
        return envelope_figure(single, out, style, fixed_p)
    if kind == "per-pair":
        return per_pair_figure(single, out, style, fixed_p)
    if kind == "mesh":
        return mesh_figure(single, out, style)
    if kind == "lab1d-envelope":
        return lab1d_envelope_figure(single, out, style)
    if kind == "lab1d-fourier":
        return lab1d_fourier_figure(single, out, style)
    raise ParseError(f"unknown figure kind '{kind}'")
