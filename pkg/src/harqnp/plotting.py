"""Vector-graphics alpha-beta plots with a logarithmic beta axis."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LABELS = {
    "np_exact": "NP", "np_coset": "NP (coset)", "np_quant": "NP (quantized)",
    "np_kde": "NP (KDE)", "llr_mean": "LLR", "subcode": "subcode",
    "mi_full": "MI (all messages)", "mi_valid": "MI (valid messages)",
    "decode_based": "decode-based",
}

LINESTYLES = {19: "--", 21: "-"}


def plot_curves(curves, path, points=None, title=None, beta_floor=1e-4):
    """Write an SVG of ``curves`` (``{(kind, p): (alpha, beta)}``).

    ``points`` maps ``(kind, p)`` to single ``(alpha, beta)`` operating points.
    """
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    kinds = sorted({k for k, _ in curves} | {k for k, _ in (points or {})},
                   key=lambda k: list(LABELS).index(k) if k in LABELS else 99)
    colors = {k: f"C{j}" for j, k in enumerate(kinds)}
    for (kind, p), (alpha, beta) in sorted(curves.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        a = np.asarray(alpha, dtype=float)
        b = np.maximum(np.asarray(beta, dtype=float), beta_floor)
        ax.plot(a, b, LINESTYLES.get(p, "-."), color=colors[kind], lw=1.2,
                label=f"{LABELS.get(kind, kind)}, p={p}")
    for (kind, p), (a, b) in sorted((points or {}).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ax.plot([a], [max(b, beta_floor)], "o" if p == max(q for _, q in points) else "s",
                color=colors[kind], label=f"{LABELS.get(kind, kind)}, p={p}")
    ax.set_yscale("log")
    ax.set_xlim(0, 1)
    ax.set_ylim(beta_floor, 1.05)
    ax.set_xlabel(r"$\alpha$ (decodable rejected)")
    ax.set_ylabel(r"$\beta$ (undecodable accepted)")
    ax.grid(True, which="both", lw=0.3)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    # fixed id salt keeps the SVG byte-identical across runs
    with plt.rc_context({"svg.hashsalt": "harqnp"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_from_csv(csv_rows, path, title=None):
    """Plot rows from :func:`harqnp.campaign.read_curves_csv`."""
    curves, points = {}, {}
    for (kind, p), pts in csv_rows.items():
        a, b = zip(*pts)
        if kind == "decode_based" and len(pts) == 3:
            points[(kind, p)] = (a[1], b[1])
        else:
            curves[(kind, p)] = (a, b)
    return plot_curves(curves, path, points, title)
