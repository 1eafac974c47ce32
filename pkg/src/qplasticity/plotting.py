"""Static SVG plots of per-task metrics: moving mean with a +-1 std band."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import moving_stats, relative_normalize
from .runner import read_records


@dataclass
class Series:
    label: str
    x: np.ndarray  # task index at the end of each window
    mean: np.ndarray
    std: np.ndarray


def series_from_jsonl(paths, metric: str, window: int, labels=None, relative: bool = False) -> list[Series]:
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValueError("no input series")
    labels = labels or [p.parent.name or p.stem for p in paths]
    out = []
    for path, label in zip(paths, labels):
        rows = read_records(path)
        if not rows:
            raise ValueError(f"{path}: no records")
        if metric not in rows[0]:
            raise KeyError(f"{path}: records have no field {metric!r}")
        y = np.array([r[metric] for r in rows], dtype=float)
        if relative:
            y = relative_normalize(y, min(10, len(y)))
        w = min(window, len(y))
        ms = moving_stats(y, w)
        x = np.array([r["task_index"] for r in rows])[w - 1 :]
        out.append(Series(label, x, ms.mean, ms.std))
    return out


def emit_plot(paths, metric: str, window: int, out, labels=None, relative: bool = False) -> Path:
    """Write an SVG with one line and shaded band per JSONL file; returns the path.

    Output bytes depend only on the inputs (fixed SVG hash salt, no date).
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series = series_from_jsonl(paths, metric, window, labels, relative)
    out = Path(out)
    with plt.rc_context({"svg.hashsalt": "qplasticity", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in series:
            (line,) = ax.plot(s.x, s.mean, label=s.label, lw=1.5)
            ax.fill_between(s.x, s.mean - s.std, s.mean + s.std, color=line.get_color(), alpha=0.25, lw=0)
        ax.set_xlabel("task index")
        ylabel = f"relative {metric}" if relative else metric
        ax.set_ylabel(f"{ylabel} (moving mean, window {window})")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out, format="svg", metadata={"Date": None})
        plt.close(fig)
    return out
