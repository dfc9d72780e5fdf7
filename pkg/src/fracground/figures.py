"""Optional matplotlib renderings of the main artifacts.

Every CLI report path can also emit PNG figures next to the delimited
output when --plots is passed; nothing here is needed for the numerics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130, bbox_inches="tight")
    plt.close(fig)
    return path


def render_field(field, path, title="ground state profile") -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(field.grid.x, field.values, lw=1.2)
    ax1.set_xlabel("x")
    ax1.set_ylabel("Q(x)")
    ax1.set_title(title)
    mask = np.abs(field.values) > 0
    ax2.semilogy(field.grid.x[mask], np.abs(field.values[mask]), lw=1.0)
    ax2.set_xlabel("x")
    ax2.set_ylabel("|Q| (log)")
    ax2.set_title("decay")
    return _save(fig, path)


def render_spectrum(even_vals, odd_vals, essential_edge, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    k = min(len(even_vals), 12)
    ax.plot(range(k), even_vals[:k], "o", label="even sector")
    j = min(len(odd_vals), 12)
    ax.plot(range(j), odd_vals[:j], "s", label="odd sector", alpha=0.7)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.axhline(essential_edge, color="r", lw=0.8, ls="--",
               label="continuum edge")
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("linearized spectrum")
    ax.legend(fontsize=8)
    return _save(fig, path)


def render_branch(branch, path) -> Path:
    s_vals = [pt.s for pt in branch.points]
    lam_vals = [pt.lam for pt in branch.points]
    mass = [pt.monitors["l2_norm_sq"] for pt in branch.points]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(s_vals, lam_vals, "-o", ms=3)
    ax1.set_xlabel("s")
    ax1.set_ylabel("lambda(s)")
    ax1.set_title("multiplier along the branch")
    ax2.plot(s_vals, mass, "-o", ms=3)
    ax2.set_xlabel("s")
    ax2.set_ylabel("mass")
    ax2.set_title("L2 norm squared")
    return _save(fig, path)


def render_kernel(x, kernel_vals, path, title="heat kernel") -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.plot(x, kernel_vals, lw=1.2)
    ax.set_xlabel("x")
    ax.set_ylabel("K_t(x)")
    ax.set_title(title)
    return _save(fig, path)


def render_extension(ext, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.6))
    stride = max(1, ext.levels.size // 200)
    mesh = ax.pcolormesh(ext.grid.x, ext.levels[::stride],
                         ext.values[::stride], shading="auto",
                         cmap="RdBu_r")
    ax.set_yscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("y (log)")
    ax.set_title("half-plane extension")
    fig.colorbar(mesh, ax=ax)
    return _save(fig, path)
