"""Result emission: per-round CSV, summary JSON and regret-curve SVG.

All byte outputs are deterministic functions of their inputs (floats are
written with ``repr`` so they round-trip exactly; JSON keys are sorted).
"""

from __future__ import annotations

import csv
import io
import json
from typing import Iterable

import numpy as np

from .core import RegretRecord

CSV_COLUMNS = ("replicate", "t", "learner_loss", "cum_regret", "bound_value")


def dumps_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n").encode()


def runs_csv(records: list[RegretRecord], bound_value: float | None = None) -> bytes:
    """One row per (replicate, round); ``bound_value`` is empty when no bound applies."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    b = "" if bound_value is None else repr(float(bound_value))
    for r, rec in enumerate(records):
        losses = rec.per_round_loss.tolist()
        cum = rec.cumulative_regret.tolist()
        w.writerows((r, t + 1, repr(losses[t]), repr(cum[t]), b) for t in range(len(losses)))
    return buf.getvalue().encode()


def summary(records: list[RegretRecord], bound: float | None, verdict: str | None) -> dict:
    final = np.array([r.final_regret for r in records])
    return {
        "mean_final_regret": float(final.mean()),
        "max_final_regret": float(final.max()),
        "bound": None if bound is None else float(bound),
        "verdict": verdict,
        "seeds": [int(r.seed) for r in records],
    }


def regret_svg(curves: Iterable[tuple[str, list[RegretRecord]]], bound: float | None = None,
               title: str = "") -> bytes:
    """Mean cumulative regret against the round index, bound as a horizontal line."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "adversim"
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, records in curves:
        cum = np.mean([r.cumulative_regret for r in records], axis=0)
        ax.plot(np.arange(1, len(cum) + 1), cum, label=label, lw=1.2)
    if bound is not None:
        ax.axhline(bound, color="k", ls="--", lw=1, label="bound")
    ax.set_xlabel("round t")
    ax.set_ylabel("cumulative regret")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    plt.close(fig)
    return buf.getvalue()
