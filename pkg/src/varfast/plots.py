"""Figure rendering for the reporting commands.

Each report command can write a PNG next to its delimited output: the bench
gets a log-log scaling chart with fitted slopes, the phase sweep gets the
degree-versus-c frontier, and the verifier gets a ratio bar chart.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def plot_bench(result, path: Path):
    """Log-log multiplication counts per stage and mode, with fitted slopes."""
    fig, ax = plt.subplots(figsize=(7.0, 5.0))
    styles = {"exact": "o-", "fast": "s--"}
    for (stage, mode), report in sorted(result.slopes.items()):
        ns = [p[0] for p in report.points]
        counts = [p[1] for p in report.points]
        ax.loglog(
            ns,
            counts,
            styles.get(mode, "o-"),
            label=f"{stage} {mode} (slope {report.slope:.2f})",
        )
    ax.set_xlabel("n (final map side)")
    ax.set_ylabel("multiplications")
    ax.set_title("Per-stage multiplication counts")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_phase(rows, path: Path):
    """Required degree against c, with the infeasible region marked."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ok = [r for r in rows if r.status == "ok"]
    fail = [r for r in rows if r.status != "ok"]
    if ok:
        ax.plot([r.c for r in ok], [r.degree for r in ok], "o-", label="feasible")
    if fail:
        ymax = max([r.degree for r in ok], default=1)
        ax.plot(
            [r.c for r in fail],
            [ymax * 1.1] * len(fail),
            "rx",
            label="infeasible (degree cap)",
        )
    ax.set_xlabel("c  (entry bound R = c sqrt(ln n))")
    ax.set_ylabel("required degree g")
    ax.set_title("Degree blow-up across the feasibility frontier")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_image(image, path: Path):
    """Per-channel heatmaps of a generated image tensor."""
    c = image.channels
    fig, axes = plt.subplots(1, c, figsize=(3.2 * c, 3.2))
    if c == 1:
        axes = [axes]
    for ch, ax in enumerate(axes):
        im = ax.imshow(image.data[:, :, ch], cmap="viridis")
        ax.set_title(f"channel {ch}", fontsize=9)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_verify(reports: dict, path: Path):
    """Worst observed bound ratio per suite; 1.0 marks the bound itself."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    names = list(reports)
    ratios = [max(reports[n].max_ratio, 1e-12) for n in names]
    colors = ["tab:red" if reports[n].violations else "tab:blue" for n in names]
    ax.bar(names, ratios, color=colors)
    ax.axhline(1.0, color="k", lw=1, ls=":")
    ax.set_yscale("log")
    ax.set_ylabel("max observed LHS / RHS")
    ax.set_title("Bound suite headroom")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
