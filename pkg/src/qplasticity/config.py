"""Experiment configuration: TOML files checked field by field before any compute.

A config has up to five tables::

    [experiment]  kind, n_tasks, seed, output_dir
    [data]        where inputs come from and how many samples each task gets
    [model]       architecture and readout
    [train]       optimizer settings
    [metrics]     probe size, plot windows, wall-time recording
    [theory]      only for kind = "theory"

Every key is typed; unknown tables or keys raise :class:`ConfigError`.
"""
from __future__ import annotations

import json
import sys
import typing
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXPERIMENT_KINDS = ("permuted", "split_pairs", "xxz", "theory")
MODEL_KINDS = ("mlp", "mlp_sin", "qnn_su4_brickwall", "qnn_su4_ladder", "qnn_hea")
DATA_SOURCES = ("synthetic", "idx", "cifar100", "xxz")
READOUTS = ("auto", "logprob_top10", "z_sigmoid")


@dataclass(frozen=True)
class ExperimentSection:
    kind: str
    n_tasks: int = 1
    seed: int = 0
    output_dir: str = "runs/default"

    def validate(self):
        _choice("experiment.kind", self.kind, EXPERIMENT_KINDS)
        _positive("experiment.n_tasks", self.n_tasks)
        if self.seed < 0:
            raise ConfigError("experiment.seed must be non-negative")


@dataclass(frozen=True)
class DataSection:
    source: str = "synthetic"
    # synthetic prototypes
    classes: int = 10
    dim: int = 64
    per_class: int = 100
    noise: float = 0.3
    test_fraction: float = 0.2
    # file-backed sources; relative paths resolve against the config file
    train_images: str = ""
    train_labels: str = ""
    test_images: str = ""
    test_labels: str = ""
    grayscale: bool = True
    l2_normalize: bool = False
    # per-task subsampling; 0 means the full split
    train_per_task: int = 0
    test_per_task: int = 0
    # XXZ eigenstates
    chain_length: int = 10
    delta_start: float = -2.0
    delta_stop: float = 2.0
    delta_step: float = 0.02
    samples_per_task: int = 200
    cache_indices: list = field(default_factory=lambda: [0, 1])

    def validate(self):
        _choice("data.source", self.source, DATA_SOURCES)
        for name in ("classes", "dim", "per_class", "samples_per_task"):
            _positive(f"data.{name}", getattr(self, name))
        if self.noise < 0:
            raise ConfigError("data.noise must be non-negative")
        if not 0.0 < self.test_fraction < 1.0:
            raise ConfigError("data.test_fraction must lie in (0, 1)")
        if self.train_per_task < 0 or self.test_per_task < 0:
            raise ConfigError("per-task sample counts must be >= 0")
        if not 2 <= self.chain_length <= 12:
            raise ConfigError("data.chain_length must lie in [2, 12]")
        if self.delta_step <= 0 or self.delta_stop < self.delta_start:
            raise ConfigError("XXZ grid needs delta_step > 0 and delta_stop >= delta_start")
        if self.source in ("idx", "cifar100") and not (self.train_images and self.test_images):
            raise ConfigError(f"data.source = {self.source!r} needs train_images and test_images")
        if self.source == "idx" and not (self.train_labels and self.test_labels):
            raise ConfigError("data.source = 'idx' needs train_labels and test_labels")
        if any(not isinstance(i, int) or i < 0 for i in self.cache_indices):
            raise ConfigError("data.cache_indices must be non-negative integers")


@dataclass(frozen=True)
class ModelSection:
    kind: str = "mlp"
    hidden: list = field(default_factory=lambda: [16])
    bias: bool = True
    n_qubits: int = 6
    depth: int = 4
    init: str = "uniform_0_2pi"
    readout: str = "auto"
    readout_scale: float = 1.0
    readout_qubit: int = -1

    @property
    def is_quantum(self) -> bool:
        return self.kind.startswith("qnn")

    def validate(self):
        _choice("model.kind", self.kind, MODEL_KINDS)
        _choice("model.readout", self.readout, READOUTS)
        _choice("model.init", self.init, ("uniform_0_2pi", "uniform_pm0.1", "normal", "zeros"))
        if not self.hidden or any(not isinstance(w, int) or w < 1 for w in self.hidden):
            raise ConfigError("model.hidden must be a non-empty list of positive widths")
        if not 2 <= self.n_qubits <= 16:
            raise ConfigError("model.n_qubits must lie in [2, 16]")
        _positive("model.depth", self.depth)
        if self.readout_scale == 0:
            raise ConfigError("model.readout_scale must be nonzero")


@dataclass(frozen=True)
class TrainSection:
    learning_rate: float = 0.001
    batch_size: int = 128
    epochs: int = 1
    optimizer_reset: str = "never"

    def validate(self):
        if not self.learning_rate > 0:
            raise ConfigError("train.learning_rate must be positive")
        _positive("train.batch_size", self.batch_size)
        _positive("train.epochs", self.epochs)
        _choice("train.optimizer_reset", self.optimizer_reset, ("never", "per_task"))


@dataclass(frozen=True)
class MetricsSection:
    probe_size: int = 64
    windows: list = field(default_factory=lambda: [40])
    baseline_window: int = 10
    record_wall_time: bool = False

    def validate(self):
        _positive("metrics.probe_size", self.probe_size)
        _positive("metrics.baseline_window", self.baseline_window)
        if not self.windows or any(not isinstance(w, int) or w < 1 for w in self.windows):
            raise ConfigError("metrics.windows must be a non-empty list of positive integers")


@dataclass(frozen=True)
class TheorySection:
    # bounded-FIM sweep
    bounds_n_qubits: int = 4
    bounds_depth: int = 4
    bounds_scales: list = field(default_factory=lambda: [1.0, 3.0])
    bounds_samples: int = 1000
    bounds_probe: int = 8
    inflation_factors: list = field(default_factory=lambda: [1.0, 10.0, 100.0])
    # classical collapse sweep
    collapse_activations: list = field(default_factory=lambda: ["relu", "sin"])
    collapse_width: int = 16
    collapse_dim: int = 16
    collapse_samples: int = 200
    collapse_noise: float = 0.3
    collapse_epochs: int = 50
    collapse_lr: float = 0.01
    lambdas: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])
    # torus gradient statistics
    haar_n_qubits: int = 6
    haar_depths: list = field(default_factory=lambda: [2, 8])
    haar_samples: int = 500
    haar_offset: float = 1.234
    haar_param: int = -1  # -1: first-layer RY on the measured qubit

    def validate(self):
        for name in ("bounds_samples", "bounds_probe", "collapse_width", "collapse_dim",
                     "collapse_samples", "collapse_epochs", "haar_samples"):
            _positive(f"theory.{name}", getattr(self, name))
        if any(a not in ("relu", "sin") for a in self.collapse_activations):
            raise ConfigError("theory.collapse_activations entries must be 'relu' or 'sin'")
        lams = [float(v) for v in self.lambdas]
        if not lams or any(b <= a for a, b in zip(lams, lams[1:])) or lams[0] <= 0:
            raise ConfigError("theory.lambdas must be positive and strictly increasing")
        if any(float(s) <= 0 for s in self.bounds_scales):
            raise ConfigError("theory.bounds_scales must be positive")
        if any(not isinstance(d, int) or d < 1 for d in self.haar_depths):
            raise ConfigError("theory.haar_depths must be positive integers")


SECTIONS = {
    "experiment": ExperimentSection,
    "data": DataSection,
    "model": ModelSection,
    "train": TrainSection,
    "metrics": MetricsSection,
    "theory": TheorySection,
}


def _choice(name, value, allowed):
    if value not in allowed:
        raise ConfigError(f"{name} = {value!r}; expected one of {', '.join(allowed)}")


def _positive(name, value):
    if value < 1:
        raise ConfigError(f"{name} must be >= 1")


def _coerce(section: str, key: str, value, hint):
    name = f"{section}.{key}"
    origin = typing.get_origin(hint) or hint
    if origin is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be a boolean")
        return value
    if origin is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name} must be an integer")
        return value
    if origin is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number")
        return float(value)
    if origin is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list")
        return list(value)
    raise ConfigError(f"{name}: unsupported type")


def _build_section(name: str, cls, table) -> object:
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}] must be a table")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(unknown)}")
    missing = [f.name for f in fields(cls)
               if f.default is MISSING and f.default_factory is MISSING and f.name not in table]
    if missing:
        raise ConfigError(f"missing key(s) in [{name}]: {', '.join(missing)}")
    kwargs = {k: _coerce(name, k, v, hints[k]) for k, v in table.items()}
    obj = cls(**kwargs)
    obj.validate()
    return obj


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentSection
    data: DataSection = field(default_factory=DataSection)
    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    theory: TheorySection = field(default_factory=TheorySection)
    base_dir: str = field(default=".", compare=False)

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config root must be a table")
        unknown = sorted(set(doc) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown table(s): {', '.join(unknown)}")
        if "experiment" not in doc:
            raise ConfigError("missing [experiment] table")
        parts = {name: _build_section(name, sec, doc.get(name, {})) for name, sec in SECTIONS.items()}
        cfg = cls(**parts, base_dir=str(base_dir))
        cfg._cross_validate()
        return cfg

    def _cross_validate(self):
        kind, src, model = self.experiment.kind, self.data.source, self.model
        if kind == "theory":
            return
        if (kind == "xxz") != (src == "xxz"):
            raise ConfigError("data.source = 'xxz' goes with experiment.kind = 'xxz' only")
        if kind == "split_pairs" and src == "synthetic" and self.data.classes < 2:
            raise ConfigError("split_pairs needs at least 2 classes")
        if model.is_quantum:
            if model.readout == "logprob_top10" and (1 << model.n_qubits) < 10:
                raise ConfigError("logprob_top10 readout needs at least 4 qubits")
            if self.binary and model.readout == "logprob_top10":
                raise ConfigError("binary experiments need the z_sigmoid readout")
            if not self.binary and model.readout == "z_sigmoid":
                raise ConfigError("multi-class experiments need the logprob_top10 readout")
            if not self.binary and src == "synthetic" and self.data.classes > 10:
                raise ConfigError("the top-10 readout supports at most 10 classes")
            if not -model.n_qubits <= model.readout_qubit < model.n_qubits:
                raise ConfigError("model.readout_qubit out of range")
            if src == "xxz" and self.data.chain_length != model.n_qubits:
                raise ConfigError("XXZ states need model.n_qubits == data.chain_length")
            if src == "synthetic" and self.data.dim > (1 << model.n_qubits):
                raise ConfigError("data.dim exceeds the 2**n_qubits amplitude budget")

    @property
    def binary(self) -> bool:
        return self.experiment.kind in ("split_pairs", "xxz")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                doc = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(doc, base_dir=str(path.parent))

    def to_dict(self) -> dict:
        return {name: asdict(getattr(self, name)) for name in SECTIONS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.experiment.output_dir)

    def with_output_dir(self, out) -> "ExperimentConfig":
        exp = ExperimentSection(self.experiment.kind, self.experiment.n_tasks, self.experiment.seed,
                                str(Path(out).resolve()))
        return ExperimentConfig(exp, self.data, self.model, self.train, self.metrics, self.theory,
                                self.base_dir)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.load(path)
