"""Continual-learning loop with crash-safe JSONL output.

Output directory layout::

    manifest.json     config snapshot, status, timestamps
    metrics.jsonl     one MetricsRecord per finished task
    timings.jsonl     wall-clock seconds per task (not part of the determinism contract)
    checkpoint.npz    model + optimizer after the last finished task
    summary.csv       per-metric trend table, written when the run completes

Re-running a config whose manifest is incomplete resumes after the last
checkpointed task. Every random draw is keyed by ``(seed, task index)``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .ansatz import Layout, build_circuit, init_params
from .config import ExperimentConfig
from .errors import ConfigError
from .metrics import (
    MetricsRecord,
    ProbeSet,
    accuracy_drop,
    fim_trace_empirical,
    grad_l2,
    slope_pvalue,
)
from .mlp import MLPSpec, mlp_init
from .readout import LogProbTop10, ZQubitSigmoid
from .rng import stream
from .tasks import (
    Dataset,
    PermutedStream,
    SplitPairStream,
    XXZConfig,
    XXZStream,
    complex_to_real_features,
    l2_normalize_inputs,
    load_cifar100_binary,
    load_idx,
    synthetic_prototypes,
    train_test_split,
)
from .training import AdamState, MLPModel, QNNModel, TrainConfig, train_task

MANIFEST = "manifest.json"
METRICS = "metrics.jsonl"
TIMINGS = "timings.jsonl"
CHECKPOINT = "checkpoint.npz"
SUMMARY = "summary.csv"
SUMMARY_METRICS = ("train_accuracy", "test_accuracy", "weight_norm", "grad_norm", "fim_trace")
LAYOUTS = {"qnn_su4_brickwall": Layout.BRICKWALL, "qnn_su4_ladder": Layout.LADDER, "qnn_hea": Layout.HEA_RING}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config: dict
    code_version: str
    started_at: str
    jsonl_path: str = METRICS
    summary_path: str = SUMMARY
    finished_at: str | None = None
    status: str = "running"
    completed_tasks: int = 0
    error: str | None = None
    base_dir: str = "."
    directory: str = field(default=".", compare=False, repr=False)

    def save(self) -> None:
        doc = asdict(self)
        doc.pop("directory")
        _atomic_write(Path(self.directory) / MANIFEST, json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST
        with open(path) as fh:
            doc = json.load(fh)
        return cls(**doc, directory=str(path.parent))

    def experiment_config(self) -> ExperimentConfig:
        return ExperimentConfig.from_dict(self.config, base_dir=self.base_dir)

    @property
    def jsonl(self) -> Path:
        return Path(self.directory) / self.jsonl_path

    @property
    def summary(self) -> Path:
        return Path(self.directory) / self.summary_path


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w") as fh:
        fh.write(text)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# ------------------------------------------------------------ construction


def build_base(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    d = cfg.data
    seed = cfg.experiment.seed
    if d.source == "synthetic":
        full = synthetic_prototypes(d.classes, d.dim, d.per_class, d.noise, seed)
        train, test = train_test_split(full, d.test_fraction, seed)
    elif d.source == "idx":
        train = load_idx(cfg.resolve(d.train_images), cfg.resolve(d.train_labels))
        test = load_idx(cfg.resolve(d.test_images), cfg.resolve(d.test_labels))
    elif d.source == "cifar100":
        train = load_cifar100_binary(cfg.resolve(d.train_images), d.grayscale)
        test = load_cifar100_binary(cfg.resolve(d.test_images), d.grayscale)
    else:
        raise ConfigError(f"data.source {d.source!r} has no base dataset")
    if d.l2_normalize:
        train, test = l2_normalize_inputs(train), l2_normalize_inputs(test)
    return train, test


def xxz_config(cfg: ExperimentConfig) -> XXZConfig:
    d = cfg.data
    return XXZConfig(d.chain_length, d.delta_start, d.delta_stop, d.delta_step)


def build_stream(cfg: ExperimentConfig):
    d, exp = cfg.data, cfg.experiment
    if exp.kind == "xxz":
        return XXZStream(xxz_config(cfg), exp.n_tasks, d.samples_per_task, exp.seed)
    base = build_base(cfg)
    kw = {"train_per_task": d.train_per_task or None, "test_per_task": d.test_per_task or None}
    if exp.kind == "permuted":
        return PermutedStream(base[0], base[1], exp.n_tasks, exp.seed, **kw)
    if exp.kind == "split_pairs":
        return SplitPairStream(base[0], base[1], exp.n_tasks, exp.seed, **kw)
    raise ConfigError(f"experiment.kind {exp.kind!r} is not a task stream")


def build_model(cfg: ExperimentConfig, sample: Dataset, n_classes: int):
    m, seed = cfg.model, cfg.experiment.seed
    if m.is_quantum:
        spec = build_circuit(LAYOUTS[m.kind], m.n_qubits, m.depth)
        readout_kind = m.readout
        if readout_kind == "auto":
            readout_kind = "z_sigmoid" if cfg.binary else "logprob_top10"
        if readout_kind == "z_sigmoid":
            readout = ZQubitSigmoid(m.readout_qubit, m.readout_scale)
        else:
            readout = LogProbTop10()
        encoding = "complex" if np.iscomplexobj(sample.inputs) else "amplitude"
        return QNNModel(spec, init_params(spec, m.init, seed), readout, encoding)
    act = "sin" if m.kind == "mlp_sin" else "relu"
    out = 1 if cfg.binary else n_classes
    spec = MLPSpec(sample.inputs.shape[1], tuple(m.hidden), out, (act,), m.bias)
    return MLPModel(mlp_init(spec, seed))


def adapt(kind: str, ds: Dataset) -> Dataset:
    """Dense nets (``kind == "mlp"``) see complex states as real/imaginary features."""
    if kind == "mlp" and np.iscomplexobj(ds.inputs):
        return Dataset(complex_to_real_features(ds.inputs), ds.labels, ds.class_count)
    return ds


# ------------------------------------------------------------- persistence


def record_line(rec: MetricsRecord) -> str:
    return json.dumps({k: (float(v) if isinstance(v, float) else v) for k, v in rec.to_dict().items()}) + "\n"


def read_records(path) -> list[dict]:
    rows = []
    with open(path) as fh:
        for line in fh:
            if not line.endswith("\n"):
                break  # torn final write
            rows.append(json.loads(line))
    return rows


def _truncate_lines(path: Path, keep: int) -> None:
    if not path.exists():
        return
    with open(path) as fh:
        lines = [ln for ln in fh if ln.endswith("\n")][:keep]
    _atomic_write(path, "".join(lines))


def _save_checkpoint(path: Path, model, opt: AdamState, next_task: int) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, params=model.params, m=opt.m, v=opt.v, t=opt.t, next_task=next_task)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def _load_checkpoint(path: Path, model, opt: AdamState) -> tuple[AdamState, int]:
    with np.load(path) as ck:
        model.load_state_dict({"params": ck["params"]})
        opt = AdamState(ck["m"].copy(), ck["v"].copy(), int(ck["t"]), opt.beta1, opt.beta2, opt.eps)
        return opt, int(ck["next_task"])


# ----------------------------------------------------------------- summary


def _fmt(x) -> str:
    return repr(float(x))


def summarize(records: list[dict], baseline_window: int = 10) -> list[dict]:
    """One row per metric: head/tail means, relative change, OLS trend, drop."""
    n = len(records)
    if n == 0:
        raise ValueError("no records to summarize")
    w = min(baseline_window, n)
    rows = []
    for name in SUMMARY_METRICS:
        x = np.array([r[name] for r in records], dtype=float)
        head, tail = float(x[:w].mean()), float(x[-w:].mean())
        slope = p = drop = rate = math.nan
        if n >= 3:
            slope, p = slope_pvalue(x)
            ds = accuracy_drop(x, n, window=min(w, n)) if n >= max(w, 3) else None
            if ds is not None:
                drop, rate = ds.drop, ds.rate_per_100
        rows.append({
            "metric": name,
            "n_tasks": n,
            "head_mean": head,
            "tail_mean": tail,
            "relative_tail": tail / head if head != 0 else math.nan,
            "slope": slope,
            "p_value": p,
            "drop": drop,
            "drop_rate_per_100": rate,
        })
    return rows


SUMMARY_COLUMNS = ("metric", "n_tasks", "head_mean", "tail_mean", "relative_tail", "slope", "p_value",
                   "drop", "drop_rate_per_100")


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for r in rows:
        writer.writerow([r["metric"], r["n_tasks"], *(_fmt(r[c]) for c in SUMMARY_COLUMNS[2:])])
    return buf.getvalue()


# -------------------------------------------------------------------- loop


def run_experiment(cfg: ExperimentConfig, fresh: bool = False, stop_after: int | None = None) -> RunManifest:
    """Run (or resume) a continual stream described by ``cfg``.

    ``stop_after`` halts after that many tasks in this invocation, leaving the
    run resumable; it exists to exercise resumption.
    """
    if cfg.experiment.kind == "theory":
        raise ConfigError("theory configs run through verify-theory")
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    snapshot = cfg.to_dict()
    manifest = None
    if (out / MANIFEST).exists() and not fresh:
        manifest = RunManifest.load(out)
        if manifest.config != snapshot:
            raise ConfigError(f"{out} holds a run with a different config; pass --fresh to overwrite")
        if manifest.status == "complete":
            return manifest
    if manifest is None:
        for name in (METRICS, TIMINGS, CHECKPOINT, SUMMARY):
            (out / name).unlink(missing_ok=True)
        manifest = RunManifest(snapshot, f"qplasticity {__version__} ({kernels.backend_name()})", _now(),
                               base_dir=cfg.base_dir, directory=str(out))
    manifest.status, manifest.error, manifest.finished_at = "running", None, None
    manifest.save()

    try:
        _loop(cfg, manifest, stop_after)
    except BaseException as exc:
        manifest.status = "failed"
        manifest.error = f"{type(exc).__name__}: {exc}"
        manifest.save()
        raise
    return manifest


def _loop(cfg: ExperimentConfig, manifest: RunManifest, stop_after: int | None) -> None:
    out = Path(manifest.directory)
    exp, seed = cfg.experiment, cfg.experiment.seed
    tasks = build_stream(cfg)
    first = tasks.task(0)
    n_classes = first.train.class_count
    kind = "qnn" if cfg.model.is_quantum else "mlp"
    first_train = adapt(kind, first.train)
    model = build_model(cfg, first_train, n_classes)
    probe = ProbeSet.from_dataset(first_train, cfg.metrics.probe_size, stream(seed, "probe"))
    probe_x, probe_y = model.prepare(probe.inputs), np.asarray(probe.labels)

    tcfg = TrainConfig(cfg.train.learning_rate, cfg.train.batch_size, cfg.train.epochs,
                       cfg.train.optimizer_reset, seed)
    opt = AdamState.zeros(model.n_params)
    start = 0
    ck = out / CHECKPOINT
    if ck.exists():
        opt, start = _load_checkpoint(ck, model, opt)
    _truncate_lines(out / METRICS, start)
    _truncate_lines(out / TIMINGS, start)

    done_here = 0
    with open(out / METRICS, "a") as log, open(out / TIMINGS, "a") as tlog:
        for t in range(start, exp.n_tasks):
            if stop_after is not None and done_here >= stop_after:
                manifest.completed_tasks = t
                manifest.save()
                return
            t0 = time.perf_counter()
            task = first if t == 0 else tasks.task(t)
            train, test = adapt(kind, task.train), adapt(kind, task.test)
            model, opt, tm = train_task(model, train, test, tcfg, opt, task_index=t)
            wall = time.perf_counter() - t0
            rec = MetricsRecord(
                t, tm.train_accuracy, tm.test_accuracy, model.weight_norm(),
                grad_l2(model, probe_x, probe_y), fim_trace_empirical(model, probe_x, probe_y),
                wall if cfg.metrics.record_wall_time else 0.0,
            )
            log.write(record_line(rec))
            log.flush()
            tlog.write(json.dumps({"task_index": t, "wall_time_seconds": wall}) + "\n")
            tlog.flush()
            _save_checkpoint(ck, model, opt, t + 1)
            manifest.completed_tasks = t + 1
            done_here += 1

    rows = summarize(read_records(out / METRICS), cfg.metrics.baseline_window)
    _atomic_write(out / SUMMARY, summary_csv(rows))
    manifest.status = "complete"
    manifest.finished_at = _now()
    manifest.save()


def report(manifests: list) -> list[tuple[str, list[dict]]]:
    """Summaries recomputed from each run's JSONL."""
    out = []
    for m in manifests:
        man = m if isinstance(m, RunManifest) else RunManifest.load(m)
        cfg = man.experiment_config()
        rows = summarize(read_records(man.jsonl), cfg.metrics.baseline_window)
        out.append((man.directory, rows))
    return out
