"""Report figures written straight to files (no display backend needed)."""

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

FIG_DPI = 120
METRIC_LABELS = (("br", "Boundary recall"), ("use", "Under-segmentation error"), ("asa", "ASA"))


def _save(fig, path):
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=FIG_DPI, metadata={"Software": None})


def plot_convergence(report, path):
    """Objective value and primal residuals against iteration."""
    trace = np.asarray(report.objective_trace, dtype=float)
    resid = np.asarray(report.residual_trace, dtype=float).reshape(-1, 2)
    its = np.arange(1, len(trace) + 1)

    fig = Figure(figsize=(8, 3.2))
    ax_obj, ax_res = fig.subplots(1, 2)
    ax_obj.semilogy(its, np.maximum(trace, np.finfo(float).tiny), "o-", ms=3)
    ax_obj.set_xlabel("iteration")
    ax_obj.set_ylabel("objective")
    ax_res.semilogy(its, resid[:, 0], "o-", ms=3, label=r"$\|Z-U\|_\infty$")
    ax_res.semilogy(its, resid[:, 1], "s-", ms=3, label=r"$\|V-UW\|_\infty$")
    ax_res.set_xlabel("iteration")
    ax_res.set_ylabel("primal residual")
    ax_res.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
    return fig


def plot_metrics_vs_k(series, path):
    """BR, USE and ASA means against the requested superpixel count."""
    series = [s for s in series if s.get("n_images")]
    ks = [s["k"] for s in series]

    fig = Figure(figsize=(10, 3))
    axes = fig.subplots(1, len(METRIC_LABELS))
    for ax, (key, label) in zip(axes, METRIC_LABELS):
        ax.plot(ks, [s[key] for s in series], "o-")
        ax.set_xlabel("number of superpixels")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
    return fig
