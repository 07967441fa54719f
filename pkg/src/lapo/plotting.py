"""PNG figures written next to the CSV/JSON artifacts (headless Agg backend)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_histogram(hist, path, reference=None, title=None, label="policy", ref_label="dataset"):
    """Bar chart of a :class:`Histogram`, optionally over a reference histogram."""
    fig, ax = plt.subplots(figsize=(6, 3.2))
    widths = np.diff(hist.edges)
    if reference is not None:
        ref = reference.counts / max(reference.total, 1)
        ax.bar(reference.edges[:-1], ref, widths, align="edge", color="0.75", label=ref_label)
    ax.bar(hist.edges[:-1], hist.counts / max(hist.total, 1), widths, align="edge", alpha=0.7,
           color="tab:blue", label=label)
    ax.set_xlabel(f"action[{hist.dim}]")
    ax.set_ylabel("fraction")
    if title:
        ax.set_title(title)
    if reference is not None:
        ax.legend(frameon=False)
    return _save(fig, path)


def plot_metrics(rows, path, title=None):
    """Evaluation return and training losses against the step count."""
    steps = [r["step"] for r in rows]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.2))
    ax1.plot(steps, [r["eval_return"] for r in rows], marker="o")
    ax1.set_xlabel("step")
    ax1.set_ylabel("eval return")
    for key in ("critic_loss", "recon_loss", "kl_loss"):
        vals = np.array([r[key] for r in rows], dtype=float)
        if np.isfinite(vals).any():
            ax2.plot(steps, vals, label=key)
    ax2.set_xlabel("step")
    ax2.set_yscale("symlog", linthresh=1e-3)
    ax2.legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def plot_sweep(returns, mean, half_width, path, title=None):
    """Per-seed returns with the mean and its 95% interval."""
    fig, ax = plt.subplots(figsize=(4, 3.2))
    seeds = sorted(returns)
    ax.scatter(range(len(seeds)), [returns[s] for s in seeds], color="tab:blue", zorder=3)
    ax.axhline(mean, color="k")
    if half_width is not None and np.isfinite(half_width):
        ax.axhspan(mean - half_width, mean + half_width, color="0.85")
    ax.set_xticks(range(len(seeds)), [str(s) for s in seeds])
    ax.set_xlabel("seed")
    ax.set_ylabel("mean return")
    if title:
        ax.set_title(title)
    return _save(fig, path)
