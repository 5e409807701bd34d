"""Figure rendering for report outputs.

Each renderer consumes the same long-format rows that emit_plot_data writes,
so a figure is always a faithful view of its CSV.  The Agg backend is forced
before pyplot loads; rendering works headless and never pops a window.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

plt.rcParams.update({
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
})


def _by_series(rows, metric):
    series = {}
    for x, s, m, v in rows:
        if m == metric:
            series.setdefault(s, []).append((x, v))
    return {s: sorted(pts) for s, pts in series.items()}


def render_validation_curve(rows, path, title="cross-validation"):
    """Mean validation loss vs penalty level, with +/- one SE when present."""
    mean = _by_series(rows, "mean_loss")
    se = _by_series(rows, "se_loss")
    fig, ax = plt.subplots(figsize=(5.5, 4))
    for name, pts in sorted(mean.items()):
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        ax.plot(xs, ys, marker=".", label=name)
        err = dict(se.get(name, ()))
        if err:
            lo = [y - err.get(x, 0.0) for x, y in zip(xs, ys)]
            hi = [y + err.get(x, 0.0) for x, y in zip(xs, ys)]
            ax.fill_between(xs, lo, hi, alpha=0.2)
    ax.set_xscale("log")
    ax.set_xlabel("penalty level")
    ax.set_ylabel("validation check loss")
    ax.set_title(title)
    if len(mean) > 1:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_step_functions(rows, path, title="fitted effects"):
    """One panel per covariate: its fitted piecewise-constant effect."""
    theta = _by_series(rows, "theta")
    names = sorted(theta)
    cols = min(3, max(1, len(names)))
    rows_n = (len(names) + cols - 1) // cols
    fig, axes = plt.subplots(rows_n, cols, figsize=(3.2 * cols, 2.6 * rows_n),
                             squeeze=False)
    for k, name in enumerate(names):
        ax = axes[k // cols][k % cols]
        pts = theta[name]
        ax.step([p[0] for p in pts], [p[1] for p in pts], where="post")
        ax.set_title(name)
    for k in range(len(names), rows_n * cols):
        axes[k // cols][k % cols].axis("off")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_metric_curves(rows, path, xlabel="p", title="benchmark",
                         log_y_metrics=("seconds",)):
    """One panel per metric, one line per series (benchmark-style output)."""
    metrics = sorted({m for _, _, m, _ in rows})
    if not metrics:
        metrics = ["value"]
    fig, axes = plt.subplots(1, len(metrics), figsize=(4.2 * len(metrics), 3.4),
                             squeeze=False)
    for k, metric in enumerate(metrics):
        ax = axes[0][k]
        for name, pts in sorted(_by_series(rows, metric).items()):
            ax.plot([p[0] for p in pts], [p[1] for p in pts],
                    marker="o", label=name)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(metric)
        if metric in log_y_metrics:
            ax.set_yscale("log")
        ax.legend()
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
