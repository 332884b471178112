"""Static SVG line plots of a diagnostics trajectory."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["emit_plots"]

# fixed metadata keeps reruns byte-identical
_SVG_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path


def emit_plots(trajectory, out_dir, eta: float | None = None) -> list[Path]:
    """Write h3_norms.svg, energy.svg and lemma_ratios.svg into ``out_dir``.

    ``eta`` draws the bootstrap threshold on the norm plot.  Raises before
    touching the filesystem if the trajectory has no records.
    """
    recs = list(trajectory)
    if not recs:
        raise ValueError("cannot plot an empty trajectory")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    plt.rcParams["svg.hashsalt"] = "largemhd"
    t = np.array([r.t for r in recs])
    col = lambda name: np.array([getattr(r, name) for r in recs])  # noqa: E731
    paths = []

    fig, ax = plt.subplots(figsize=(6, 4))
    gamma = col("h3_v") ** 2 + col("h3_c") ** 2
    for name in ("h3_v", "h3_c"):
        ax.plot(t, col(name), marker=".", label=name)
    ax.plot(t, gamma, marker=".", label="h3_v^2 + h3_c^2")
    if eta is not None:
        ax.axhline(eta, color="k", linestyle="--", label=f"eta = {eta:.3g}")
    positive = np.concatenate([col("h3_v"), col("h3_c"), gamma, [eta or 0.0]])
    if np.any(positive > 0):
        ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("H3 norm")
    ax.legend()
    paths.append(_save(fig, out / "h3_norms.svg"))

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t, col("l2_energy"), marker=".", label="energy")
    ax.plot(t, col("dissipation_rate"), marker=".", label="dissipation rate")
    ax.plot(t, col("source_rate"), marker=".", label="source rate")
    ax.set_xlabel("t")
    ax.legend()
    paths.append(_save(fig, out / "energy.svg"))

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("lemma33_ratio_f", "lemma33_ratio_G", "bernstein_ratio_U", "bernstein_ratio_B"):
        ax.plot(t, col(name), marker=".", label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("measured / bound")
    ax.legend()
    paths.append(_save(fig, out / "lemma_ratios.svg"))
    return paths
