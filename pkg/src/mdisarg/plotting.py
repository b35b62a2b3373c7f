"""Figures for study output: key rate and total bit error versus distance."""

from __future__ import annotations

import itertools
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLES = ("-", "--", ":", "-.")


def plot_study(rows, path, title: str = "") -> Path:
    """Render K(L) on a log axis and e_tot(L) below it, one line per scenario and type."""
    curves = defaultdict(list)
    for r in rows:
        curves[(r.scenario, r.point.type)].append((r.point.L, r.point.K, r.e_tot))

    fig, (ax_k, ax_e) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True, gridspec_kw={"height_ratios": [2, 1]})
    any_positive = False
    styles = itertools.cycle(_STYLES)
    for (label, event), pts in curves.items():
        ls = next(styles)
        L = [p[0] for p in pts]
        K = [p[1] if p[1] > 0 else float("nan") for p in pts]
        any_positive |= any(k == k for k in K)
        ax_k.plot(L, K, ls, label=f"{label}, {event.label}")
        ax_e.plot(L, [p[2] for p in pts], ls, label=f"{label}, {event.label}")

    if any_positive:
        ax_k.set_yscale("log")
    else:
        ax_k.text(0.5, 0.5, "no positive key rate on this grid", transform=ax_k.transAxes, ha="center", va="center")
    ax_k.set_ylabel("K (bits per signal)")
    ax_e.set_ylabel(r"$e_{tot}$")
    ax_e.set_xlabel("L (km)")
    ax_k.legend(fontsize="small")
    if title:
        ax_k.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path
