"""Plasticity diagnostics: norms, Fisher traces, window statistics, trends."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from scipy.special import expit

from .tasks import Dataset


@dataclass
class ProbeSet:
    """Fixed inputs/labels frozen at stream start; ``features`` are model-prepared."""

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.inputs = np.array(self.inputs, copy=True)
        self.labels = np.array(self.labels, copy=True)
        self.inputs.setflags(write=False)
        self.labels.setflags(write=False)
        if len(self.labels) == 0:
            raise ValueError("probe set must be non-empty")

    @classmethod
    def from_dataset(cls, ds: Dataset, size: int | None = None, rng=None) -> "ProbeSet":
        idx = np.arange(len(ds))
        if size is not None and size < len(ds):
            idx = np.sort(rng.choice(len(ds), size=size, replace=False))
        return cls(ds.inputs[idx], ds.labels[idx])

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class MetricsRecord:
    task_index: int
    train_accuracy: float
    test_accuracy: float
    weight_norm: float
    grad_norm: float
    fim_trace: float
    wall_time_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class WindowStats:
    window: int
    mean: np.ndarray
    std: np.ndarray


@dataclass
class DropStats:
    drop: float  # mean(first 10) - mean(last 10 of the horizon)
    rate_per_100: float  # -100 * OLS slope over the horizon


def weight_l2(model) -> float:
    return model.weight_norm()


def grad_l2(model, features, labels) -> float:
    """L2 norm of the mean loss gradient over a batch."""
    if len(labels) == 0:
        raise ValueError("empty batch")
    _, grad, _ = model.loss_and_grad(features, np.asarray(labels))
    return float(np.linalg.norm(grad))


def fim_trace_empirical(model, features, labels) -> float:
    """Mean squared norm of the score ``grad log p(y|x)`` over the probe."""
    if len(labels) == 0:
        raise ValueError("empty probe")
    return float(np.mean(model.per_sample(features, np.asarray(labels)).sq_grad_norms))


def fim_trace_bce_analytic(model, features) -> float:
    """Label-free ``mean p(1-p) ||grad f||^2`` for a binary (scalar-logit) model."""
    if model.loss != "bce":
        raise ValueError("the analytic Fisher trace needs a binary sigmoid readout")
    per = model.per_sample(features, None, loss="expval")
    p = expit(per.logits)
    return float(np.mean(p * (1 - p) * per.sq_grad_norms))


def curvature(logits) -> np.ndarray:
    p = expit(np.asarray(logits, dtype=float))
    return p * (1 - p)


def moving_stats(series, window: int) -> WindowStats:
    """Sliding mean and population standard deviation."""
    x = np.asarray(series, dtype=float)
    if window < 1 or window > len(x):
        raise ValueError("window must lie in [1, len(series)]")
    views = np.lib.stride_tricks.sliding_window_view(x, window)
    return WindowStats(window, views.mean(axis=1), views.std(axis=1))


def relative_normalize(series, baseline_window: int = 10) -> np.ndarray:
    x = np.asarray(series, dtype=float)
    if len(x) < baseline_window:
        raise ValueError("series shorter than the baseline window")
    base = x[:baseline_window].mean()
    if base == 0:
        raise ZeroDivisionError("baseline mean is zero")
    return x / base


def slope_pvalue(series) -> tuple[float, float]:
    """OLS slope per task and the two-sided p-value of a zero-slope t-test.

    With zero residual variance the p-value is 1 for zero slope, else 0.
    """
    y = np.asarray(series, dtype=float)
    n = len(y)
    if n < 3:
        raise ValueError("slope estimation needs at least 3 points")
    t = np.arange(n, dtype=float)
    tc = t - t.mean()
    yc = y - y.mean()
    sst = float(np.dot(yc, yc))
    if sst == 0.0:
        return 0.0, 1.0
    slope = float(np.dot(tc, yc) / np.dot(tc, tc))
    resid = yc - slope * tc
    sse = float(np.dot(resid, resid))
    # exact fit up to rounding
    if sse <= 1e-20 * sst:
        return slope, 1.0 if slope == 0.0 else 0.0
    se = np.sqrt(sse / (n - 2) / np.dot(tc, tc))
    return slope, float(2 * stats.t.sf(abs(slope / se), n - 2))


def accuracy_drop(series, horizon: int, window: int = 10) -> DropStats:
    x = np.asarray(series, dtype=float)
    if horizon > len(x) or horizon < max(window, 3):
        raise ValueError("series too short for the requested horizon")
    head = x[:window].mean()
    tail = x[horizon - window : horizon].mean()
    slope, _ = slope_pvalue(x[:horizon])
    return DropStats(float(head - tail), float(-100.0 * slope))
