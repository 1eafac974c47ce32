"""Continual-learning task streams, dataset loaders and feature transforms.

Every stream is a pure function of ``(seed, task_index)``: ``stream.task(t)``
can be called in any order and always returns bit-identical data.
"""
from __future__ import annotations

import json
import os
import struct
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .errors import DatasetError
from .rng import stream

GRAY_WEIGHTS = (0.299, 0.587, 0.114)
DEGENERACY_GAP = 1e-10


@dataclass
class Dataset:
    inputs: np.ndarray  # (n, d) real or complex
    labels: np.ndarray  # (n,) int
    class_count: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if len(self.inputs) != len(self.labels):
            raise DatasetError("inputs and labels differ in length")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise DatasetError(f"labels must lie in [0, {self.class_count})")

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        if idx.dtype != bool:
            idx = idx.astype(np.intp)
        return Dataset(self.inputs[idx], self.labels[idx], self.class_count)


@dataclass
class Task:
    index: int
    descriptor: dict
    train: Dataset
    test: Dataset


# ---------------------------------------------------------------- transforms


def rgb_to_gray(image) -> np.ndarray:
    """3072 values as R, G, B planes -> 1024 luminance values."""
    image = np.asarray(image, dtype=float)
    if image.shape[-1] != 3072:
        raise DatasetError("expected 3072 values (32x32 RGB planes)")
    planes = image.reshape(*image.shape[:-1], 3, 1024)
    r, _, b = GRAY_WEIGHTS
    red, green, blue = planes[..., 0, :], planes[..., 1, :], planes[..., 2, :]
    # same weighted sum, arranged so equal channels map to themselves exactly
    return green + r * (red - green) + b * (blue - green)


def l2_normalize_inputs(dataset: Dataset) -> Dataset:
    x = np.asarray(dataset.inputs, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    if np.any(norms == 0.0):
        raise DatasetError("cannot L2-normalize an all-zero input")
    return Dataset(x / norms[:, None], dataset.labels.copy(), dataset.class_count)


def complex_to_real_features(state) -> np.ndarray:
    """Concatenate real then imaginary parts along the last axis."""
    state = np.asarray(state, dtype=np.complex128)
    return np.concatenate([state.real, state.imag], axis=-1)


# ------------------------------------------------------------------- loaders


def load_idx(images_path, labels_path=None, class_count: int = 10) -> Dataset:
    """MNIST-style IDX files (big-endian); pixels scaled to [0, 1]."""
    images = _read_idx(images_path, 0x00000803)
    n = images.shape[0]
    flat = images.reshape(n, -1).astype(float) / 255.0
    if labels_path is None:
        labels = np.zeros(n, dtype=np.int64)
    else:
        labels = _read_idx(labels_path, 0x00000801).astype(np.int64)
        if len(labels) != n:
            raise DatasetError("image and label files disagree on item count")
    if labels.size and labels.max() >= class_count:
        raise DatasetError(f"label {labels.max()} out of range for {class_count} classes")
    return Dataset(flat, labels, class_count)


def _read_idx(path, magic: int) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 4:
        raise DatasetError(f"{path}: truncated header")
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise DatasetError(f"{path}: bad magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(data) < header:
        raise DatasetError(f"{path}: truncated header")
    dims = struct.unpack(">" + "I" * ndim, data[4:header])
    count = int(np.prod(dims))
    if len(data) - header != count:
        raise DatasetError(f"{path}: expected {count} data bytes, found {len(data) - header}")
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


CIFAR_RECORD = 3074


def load_cifar100_binary(path, grayscale: bool = True) -> Dataset:
    """CIFAR-100 binary: per record one coarse byte, one fine byte, 3072 pixel bytes."""
    size = os.path.getsize(path)
    if size == 0 or size % CIFAR_RECORD:
        raise DatasetError(f"{path}: size {size} is not a multiple of {CIFAR_RECORD}")
    raw = np.fromfile(path, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    labels = raw[:, 1].astype(np.int64)
    if labels.max() >= 100:
        raise DatasetError(f"{path}: fine label {labels.max()} out of range")
    pixels = raw[:, 2:].astype(float) / 255.0
    if grayscale:
        pixels = rgb_to_gray(pixels)
    return Dataset(pixels, labels, 100)


def synthetic_prototypes(classes: int, dim: int, per_class: int, noise: float, seed: int) -> Dataset:
    """Gaussian-perturbed class prototypes; prototypes are uniform on [0, 1]^dim.

    Prototypes depend only on ``(seed, classes, dim)``; samples are ordered
    class-major.
    """
    protos = stream(seed, "prototypes", classes, dim).uniform(0.0, 1.0, size=(classes, dim))
    rng = stream(seed, "prototype-noise", per_class)
    x = np.repeat(protos, per_class, axis=0)
    if noise > 0:
        x = x + noise * rng.standard_normal(x.shape)
    labels = np.repeat(np.arange(classes), per_class)
    return Dataset(x, labels, classes)


def train_test_split(dataset: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic shuffled split."""
    n = len(dataset)
    order = stream(seed, "split").permutation(n)
    n_test = int(round(test_fraction * n))
    return dataset.subset(np.sort(order[n_test:])), dataset.subset(np.sort(order[:n_test]))


# ------------------------------------------------------------------- streams


def _subsample(ds: Dataset, k: int | None, rng) -> Dataset:
    if k is None or k >= len(ds):
        return ds
    return ds.subset(np.sort(rng.choice(len(ds), size=k, replace=False)))


@dataclass
class PermutedStream:
    """Each task applies one fixed pixel permutation to every train/test input."""

    train: Dataset
    test: Dataset
    n_tasks: int
    seed: int
    train_per_task: int | None = None
    test_per_task: int | None = None
    force_identity: bool = False

    def __post_init__(self):
        if len(self.train) == 0 or len(self.test) == 0:
            raise DatasetError("permuted stream needs non-empty train and test sets")

    def permutation(self, t: int) -> np.ndarray:
        d = self.train.inputs.shape[1]
        if self.force_identity:
            return np.arange(d)
        return stream(self.seed, "permutation", t).permutation(d)

    def task(self, t: int) -> Task:
        perm = self.permutation(t)
        rng = stream(self.seed, "subsample", t)
        tr = _subsample(self.train, self.train_per_task, rng)
        te = _subsample(self.test, self.test_per_task, rng)
        return Task(
            t,
            {"kind": "permuted", "permutation": perm},
            Dataset(tr.inputs[:, perm], tr.labels, tr.class_count),
            Dataset(te.inputs[:, perm], te.labels, te.class_count),
        )

    def __iter__(self) -> Iterator[Task]:
        return (self.task(t) for t in range(self.n_tasks))


def permuted_stream(base: tuple[Dataset, Dataset], n_tasks: int, seed: int, **kw) -> PermutedStream:
    return PermutedStream(base[0], base[1], n_tasks, seed, **kw)


@dataclass
class SplitPairStream:
    """Binary tasks on a random class pair ``(a, b)``, relabelled ``a -> 0, b -> 1``."""

    train: Dataset
    test: Dataset
    n_tasks: int
    seed: int
    train_per_task: int | None = None
    test_per_task: int | None = None

    def __post_init__(self):
        if self.train.class_count < 2:
            raise DatasetError("split-pair streams need at least 2 classes")

    def pair(self, t: int) -> tuple[int, int]:
        a, b = stream(self.seed, "pair", t).choice(self.train.class_count, size=2, replace=False)
        return int(a), int(b)

    def _filter(self, ds, a, b):
        idx = np.flatnonzero((ds.labels == a) | (ds.labels == b))
        if not np.any(ds.labels == a) or not np.any(ds.labels == b):
            raise DatasetError(f"class pair ({a}, {b}) has a class with no samples")
        return Dataset(ds.inputs[idx], (ds.labels[idx] == b).astype(np.int64), 2)

    def task(self, t: int) -> Task:
        a, b = self.pair(t)
        rng = stream(self.seed, "subsample", t)
        tr = _subsample(self._filter(self.train, a, b), self.train_per_task, rng)
        te = _subsample(self._filter(self.test, a, b), self.test_per_task, rng)
        return Task(t, {"kind": "split_pair", "pair": [a, b]}, tr, te)

    def __iter__(self) -> Iterator[Task]:
        return (self.task(t) for t in range(self.n_tasks))


def split_pair_stream(base: tuple[Dataset, Dataset], n_tasks: int, seed: int, **kw) -> SplitPairStream:
    return SplitPairStream(base[0], base[1], n_tasks, seed, **kw)


# ----------------------------------------------------------------------- XXZ


def xxz_hamiltonian(L: int, delta: float) -> np.ndarray:
    """Dense ``sum_i X_i X_{i+1} + Y_i Y_{i+1} + delta Z_i Z_{i+1}`` on a ring.

    Real symmetric in the computational basis. For ``L = 2`` both ring bonds
    join the same pair, so the single bond is counted twice.
    """
    if not 2 <= L <= 12:
        raise ValueError("dense XXZ Hamiltonians need 2 <= L <= 12")
    dim = 1 << L
    idx = np.arange(dim)
    h = np.zeros((dim, dim))
    for i in range(L):
        j = (i + 1) % L
        bi = 1 << (L - 1 - i)
        bj = 1 << (L - 1 - j)
        aligned = ((idx & bi) > 0) == ((idx & bj) > 0)
        h[idx, idx] += np.where(aligned, delta, -delta)
        # XX + YY = 2 (S+S- + S-S+): hops anti-aligned pairs with amplitude 2
        flip = idx[~aligned]
        h[flip ^ bi ^ bj, flip] += 2.0
    return h


def xxz_eigenpairs(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian matrix.

    Each eigenvector's first component with ``|v| > 1e-12`` is made positive.
    """
    try:
        lam, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    first = np.argmax(np.abs(vecs) > 1e-12, axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])].real)
    signs[signs == 0] = 1.0
    return lam, vecs * signs


@dataclass(frozen=True)
class XXZConfig:
    L: int = 10
    delta_start: float = -2.0
    delta_stop: float = 2.0
    delta_step: float = 0.02

    def grid(self) -> np.ndarray:
        n = int(round((self.delta_stop - self.delta_start) / self.delta_step)) + 1
        return np.round(self.delta_start + self.delta_step * np.arange(n), 12)


@dataclass
class XXZStream:
    """Binary tasks between eigenstates ``i`` (label 0) and ``j`` (label 1).

    Each data point draws its own anisotropy from the grid. Points alternate
    train/test by generation order.
    """

    cfg: XXZConfig
    n_tasks: int
    samples_per_task: int
    seed: int
    cache_size: int = 64
    _cache: OrderedDict = field(default_factory=OrderedDict, repr=False)

    def eigensystem(self, delta: float):
        key = float(delta)
        if key in self._cache:
            self._cache.move_to_end(key)
            return self._cache[key]
        out = xxz_eigenpairs(xxz_hamiltonian(self.cfg.L, key))
        self._cache[key] = out
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return out

    def task(self, t: int) -> Task:
        grid = self.cfg.grid()
        dim = 1 << self.cfg.L
        rng = stream(self.seed, "xxz", t)
        i, j = (int(v) for v in rng.choice(dim, size=2, replace=False))
        deltas = grid[rng.integers(0, len(grid), size=self.samples_per_task)]
        labels = rng.integers(0, 2, size=self.samples_per_task)
        states = np.empty((self.samples_per_task, dim), dtype=np.complex128)
        energies = np.empty(self.samples_per_task)
        degenerate = False
        for k, (d, y) in enumerate(zip(deltas, labels)):
            lam, vecs = self.eigensystem(d)
            col = j if y else i
            states[k] = vecs[:, col]
            energies[k] = lam[col]
            degenerate |= bool(abs(lam[i] - lam[j]) < DEGENERACY_GAP)
        desc = {
            "kind": "xxz",
            "pair": [i, j],
            "deltas": deltas,
            "energies": energies,
            "degenerate": degenerate,
        }
        tr, te = np.arange(0, self.samples_per_task, 2), np.arange(1, self.samples_per_task, 2)
        return Task(t, desc, Dataset(states[tr], labels[tr], 2), Dataset(states[te], labels[te], 2))

    def __iter__(self) -> Iterator[Task]:
        return (self.task(t) for t in range(self.n_tasks))


def xxz_stream(cfg: XXZConfig, n_tasks: int, samples_per_task: int, seed: int, **kw) -> XXZStream:
    return XXZStream(cfg, n_tasks, samples_per_task, seed, **kw)


def write_xxz_jsonl(cfg: XXZConfig, path, indices=None, deltas=None) -> int:
    """Cache eigenstates as JSONL rows ``{delta, index, eigenvalue, state: {real, imag}}``."""
    deltas = cfg.grid() if deltas is None else np.asarray(deltas, dtype=float)
    rows = 0
    with open(path, "w") as fh:
        for d in deltas:
            lam, vecs = xxz_eigenpairs(xxz_hamiltonian(cfg.L, float(d)))
            for k in range(len(lam)) if indices is None else indices:
                v = vecs[:, k].astype(np.complex128)
                row = {
                    "delta": float(d),
                    "index": int(k),
                    "eigenvalue": float(lam[k]),
                    "state": {"real": v.real.tolist(), "imag": v.imag.tolist()},
                }
                fh.write(json.dumps(row) + "\n")
                rows += 1
    return rows


def read_xxz_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for line in fh:
            row = json.loads(line)
            st = row["state"]
            row["state"] = np.asarray(st["real"]) + 1j * np.asarray(st["imag"])
            out.append(row)
    return out
