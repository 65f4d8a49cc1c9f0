"""Optional figures (matplotlib is imported lazily so the solver never needs it)."""

import numpy as np

from .geometry import STAR


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_geometry(components, path):
    """Boundary components (visco-thermal in blue, Robin in green) with fins in red."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 5))
    for c in components:
        x = c.nodes()
        ax.plot(x[:, 0], x[:, 1], "-", color="tab:blue" if c.kind == STAR else "tab:green", lw=1.5)
        for f in c.fins:
            fx = f.x.reshape(-1, 2)
            ax.plot(fx[:, 0], fx[:, 1], "-", color="tab:red", lw=1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_field(grid, u, flag, path, components=None):
    """``|u|`` on the target grid; points flagged as outside the domain are masked."""
    plt = _plt()
    nx, ny = grid.nx, grid.ny
    val = np.abs(u).reshape(ny, nx)
    val = np.ma.masked_where(np.asarray(flag).reshape(ny, nx) == 2, val)
    fig, ax = plt.subplots(figsize=(6, 5))
    im = ax.imshow(val, origin="lower", extent=(grid.xmin, grid.xmax, grid.ymin, grid.ymax), cmap="viridis")
    fig.colorbar(im, ax=ax, label="|u|")
    if components is not None:
        for c in components:
            x = c.nodes()
            ax.plot(x[:, 0], x[:, 1], "w-", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
