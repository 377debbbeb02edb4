"""Paper-style log-scale summary figures from a benchmark sweep CSV."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .frame import ResultFrame, ResultFrameError

_LABELS = {
    "error_u": "relative velocity error",
    "error_p": "relative pressure error",
    "error_div": "divergence error (RMS)",
}
DIV_BAND = 1e-10


def _plot(frame: ResultFrame, x_key, metric, out_path, log_x):
    frame.require_metric(metric)
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    plotted = 0
    for method in frame.methods():
        xs, ys = frame.series(method, x_key, metric)
        if xs.size < 2:
            raise ResultFrameError(
                f"need at least 2 distinct {x_key} values per method, "
                f"got {xs.size} for {method!r}"
            )
        ax.plot(xs, ys, marker="o", label=method)
        plotted += 1
    ax.set_yscale("log")
    if log_x:
        ax.set_xscale("log")
    if metric == "error_div":
        ax.axhline(DIV_BAND, color="gray", linestyle="--", linewidth=1,
                   label=f"{DIV_BAND:g} band")
    ax.set_xlabel("basis size M" if x_key == "m" else "viscosity")
    ax.set_ylabel(_LABELS.get(metric, metric))
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return plotted


def plot_error_vs_m(csv_path, metric, out_path):
    """Log-y error against basis size, one series per method."""
    frame = ResultFrame.read_csv(csv_path)
    return _plot(frame, "m", metric, out_path, log_x=False)


def plot_error_vs_nu(csv_path, metric, out_path):
    """Log-log error against viscosity, one series per method."""
    frame = ResultFrame.read_csv(csv_path)
    return _plot(frame, "nu", metric, out_path, log_x=True)
