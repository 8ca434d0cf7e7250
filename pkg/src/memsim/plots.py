"""Matplotlib renderings of the report outputs (written to files, headless)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_CURVE_STYLE = {
    "mems_i": dict(ls="-", color="C0", label="MEMS I"),
    "mems_ii": dict(ls="--", color="C1", label="MEMS II"),
    "werner": dict(ls=":", color="C2", label="Werner"),
}


def _entropy_tangle_axes(ax):
    ax.set_xlabel("linear entropy $S_L$")
    ax.set_ylabel("tangle $T$")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(0.0, 1.05)


def _draw_curves(ax, rows):
    for name, style in _CURVE_STYLE.items():
        pts = [(r.s_l, r.t) for r in rows if r.curve == name]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, **style)


def plot_curves(rows, path):
    fig, ax = plt.subplots(figsize=(6, 4.5))
    _draw_curves(ax, rows)
    _entropy_tangle_axes(ax)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_patch(samples, target, path):
    """Scatter of patch samples in the S_L-T plane with the target starred."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter([s.s_l for s in samples], [s.t for s in samples], s=4, alpha=0.25, label="samples")
    ax.plot(*target, marker="*", ms=16, color="C3", ls="none", label="target")
    _entropy_tangle_axes(ax)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_trajectory(points, path, curves_rows=None):
    """Concentration path in the S_L-T plane, annotated with piece counts."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if curves_rows:
        _draw_curves(ax, curves_rows)
    xs = [p.s_l for p in points]
    ys = [p.t for p in points]
    ax.plot(xs, ys, marker="o", ms=4, color="C3", label="filtering path")
    for p in points:
        ax.annotate(str(p.n), (p.s_l, p.t), textcoords="offset points", xytext=(4, 4), fontsize=7)
    _entropy_tangle_axes(ax)
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_scheme_table(rows, path):
    """Per-scheme success probability and entanglement yield per pair."""
    fig, ax = plt.subplots(figsize=(6.5, 4))
    labels = [r.scheme for r in rows]
    x = range(len(rows))
    ax.bar([i - 0.2 for i in x], [r.success_prob for r in rows], width=0.35, label="success prob.")
    ax.bar([i + 0.2 for i in x], [r.ef_per_pair for r in rows], width=0.35, label="$E_F$ per pair")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylim(0, 1)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
