"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the lines
live; they are also written to the terminal when output is captured).
"""
import time
from pathlib import Path

import numpy as np
import pytest

from qplasticity.ansatz import build_circuit
from qplasticity.config import TheorySection, load_config
from qplasticity.gradients import finite_diff_gradient
from qplasticity.metrics import (
    accuracy_drop,
    fim_trace_empirical,
    moving_stats,
    relative_normalize,
    slope_pvalue,
)
from qplasticity.mlp import MLPSpec
from qplasticity.runner import read_records, run_experiment
from qplasticity.tasks import XXZConfig, xxz_eigenpairs, xxz_hamiltonian
from qplasticity.theory import _collapse_model, classical_collapse_sweep, qnn_bounds_check
from qplasticity.verification import gradcheck_suite, su4_suite

from test_metrics import moving_oracle, per_sample_loss, slope_oracle, toy_qnn
from test_tasks import dense_xxz

CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture
def verdict(capsys):
    """``verdict(name, ok, detail)`` prints the criterion line uncaptured, then asserts."""

    def emit(name, ok, detail, elapsed=None):
        timing = f" [{elapsed:.1f}s]" if elapsed is not None else ""
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}{timing}")
        assert ok, f"{name}: {detail}"

    return emit


def test_c1_gradient_correctness(verdict):
    t0 = time.perf_counter()
    rep = gradcheck_suite(60, seed=0, h=1e-5)
    dt = time.perf_counter() - t0
    ok = rep.n_circuits >= 50 and rep.max_rel_error_fd < 1e-5 and rep.max_abs_error_shift < 1e-8 and dt < 120
    per = ", ".join(f"{k} {v:.2e}" for k, v in rep.max_rel_error_by_readout.items())
    verdict("C1 gradient correctness", ok,
            f"{rep.n_circuits} circuits, max rel err vs FD {rep.max_rel_error_fd:.2e} ({per}); "
            f"shift vs adjoint {rep.max_abs_error_shift:.1e} on {rep.n_shift_circuits} RY/RZ circuits", dt)


def test_c2_su4_construction(verdict):
    t0 = time.perf_counter()
    rep = su4_suite(n_gates=1000, n_derivative=50, seed=0)
    dt = time.perf_counter() - t0
    fd = max(rep.max_fd_error_random, rep.max_fd_error_degenerate)
    ok = rep.n_gates == 1000 and rep.max_unitarity_error < 1e-10 and fd < 1e-6 and dt < 60
    verdict("C2 SU(4) construction", ok,
            f"max |V^dag V - I| {rep.max_unitarity_error:.1e} over {rep.n_gates} gates; derivative vs FD "
            f"{rep.max_fd_error_random:.1e} random, {rep.max_fd_error_degenerate:.1e} degenerate", dt)


def test_c3_bounded_fim(verdict):
    t0 = time.perf_counter()
    hea = build_circuit("hea_ring", 4, 4)
    lines, ok = [], True
    for s in (1.0, 3.0):
        rep = qnn_bounds_check(hea, s, 1000, seed=0)
        ok &= rep.passed
        lines.append(f"s={s:g}: max|f| {rep.max_abs_logit:.3f}<= {s:g}, max|df| {rep.max_abs_grad:.3f}, "
                     f"maxTrF {rep.max_fim_trace:.3f}<= 0.25*M*s^2={rep.fim_ceiling:g}, "
                     f"xi [{rep.min_xi:.4f}, {rep.max_xi:.4f}] vs floor {rep.xi_floor:.4f} "
                     f"({sum(rep.checks.values())}/4)")
    dt = time.perf_counter() - t0
    verdict("C3 bounded FIM", ok and dt < 300, "; ".join(lines), dt)


def collapse_check(act):
    sec = TheorySection()
    model, ds, acc = _collapse_model(act, sec, 0)
    res = classical_collapse_sweep(model, model.prepare(ds.inputs), [1, 2, 4, 8, 16])
    ratio = res.traces[-1] / res.traces[0]
    ok = acc >= 0.95 and res.collapse_monotone() and ratio < 1e-3
    detail = (f"train acc {acc:.3f}, traces " + ", ".join(f"{t:.3g}" for t in res.traces)
              + ", mean|f| " + ", ".join(f"{p.mean_abs_logit:.3g}" for p in res.points)
              + f", final/first {ratio:.2g}")
    return ok, detail


def test_c4_asymptotic_saturation_relu(verdict):
    t0 = time.perf_counter()
    ok, detail = collapse_check("relu")
    dt = time.perf_counter() - t0
    verdict("C4 asymptotic saturation (relu)", ok and dt < 120, detail, dt)


@pytest.mark.xfail(strict=True, reason=(
    "sin activations are not positively homogeneous: scaling the weights makes the hidden features "
    "oscillate, some probe logits stay near zero where p(1-p) ~ 0.25 while ||grad f||^2 grows like "
    "lambda^4, so the trace rises with lambda instead of collapsing"))
def test_c4_asymptotic_saturation_sin(verdict):
    t0 = time.perf_counter()
    ok, detail = collapse_check("sin")
    dt = time.perf_counter() - t0
    verdict("C4 asymptotic saturation (sin)", ok and dt < 120, detail, dt)


def test_c5_xxz_generator(verdict):
    t0 = time.perf_counter()
    two_site = 0.0
    for delta in (-1.0, 0.0, 0.5, 1.0):
        ref = np.sort([2 * delta, 2 * delta, 2 * (2 - delta), -2 * (2 + delta)])
        lam, _ = xxz_eigenpairs(xxz_hamiltonian(2, delta))
        oracle = np.linalg.eigvalsh(dense_xxz(2, delta))
        two_site = max(two_site, np.max(np.abs(lam - ref)), np.max(np.abs(oracle - ref)))
    resid = gram = 0.0
    for delta in (-2.0, -1.0, -0.5, 0.0, 0.3, 1.0, 2.0):
        h = xxz_hamiltonian(8, delta)
        lam, v = xxz_eigenpairs(h)
        resid = max(resid, np.max(np.linalg.norm(h @ v - v * lam, axis=0)))
        gram = max(gram, np.max(np.abs(v.conj().T @ v - np.eye(256))))
    n_grid = len(XXZConfig().grid())
    dt = time.perf_counter() - t0
    ok = two_site < 1e-10 and resid < 1e-8 and gram < 1e-10 and n_grid == 201 and dt < 180
    verdict("C5 XXZ generator", ok,
            f"L=2 spectrum error {two_site:.1e}; L=8 max residual {resid:.1e}, Gram deviation {gram:.1e}; "
            f"grid {n_grid} values", dt)


def run_twice(name, tmp_path):
    cfg = load_config(CONFIGS / f"{name}.toml")
    a = run_experiment(cfg.with_output_dir(tmp_path / f"{name}_a"))
    b = run_experiment(cfg.with_output_dir(tmp_path / f"{name}_b"))
    same = all((Path(a.directory) / f).read_bytes() == (Path(b.directory) / f).read_bytes()
               for f in ("metrics.jsonl", "summary.csv"))
    return read_records(a.jsonl), same


@pytest.mark.slow
def test_c6_desk_continual_contrast(verdict, tmp_path):
    t0 = time.perf_counter()
    mlp_rows, mlp_same = run_twice("desk_permuted_mlp", tmp_path)
    qnn_rows, qnn_same = run_twice("desk_permuted_qnn", tmp_path)
    dt = time.perf_counter() - t0

    mlp_rel = relative_normalize([r["weight_norm"] for r in mlp_rows], 10)
    mlp_ma = moving_stats(mlp_rel, 40).mean
    a_ok = len(mlp_rows) == 200 and mlp_rel[-1] > 1.5 and bool(np.all(np.diff(mlp_ma) > 0))
    qnn_rel = relative_normalize([r["weight_norm"] for r in qnn_rows], 10)
    b_ok = len(qnn_rows) == 200 and bool(np.all((qnn_rel >= 0.7) & (qnn_rel <= 1.3)))
    slope, p = slope_pvalue([r["test_accuracy"] for r in qnn_rows])
    c_ok = p > 0.05
    d_ok = mlp_same and qnn_same
    mlp_acc = [r["test_accuracy"] for r in mlp_rows]
    qnn_acc = [r["test_accuracy"] for r in qnn_rows]
    detail = (f"(a) MLP rel weight norm {mlp_rel[-1]:.3f} at T=200, 40-task MA monotone "
              f"{bool(np.all(np.diff(mlp_ma) > 0))} [{'ok' if a_ok else 'x'}]; "
              f"(b) QNN rel weight norm in [{qnn_rel.min():.3f}, {qnn_rel.max():.3f}] [{'ok' if b_ok else 'x'}]; "
              f"(c) QNN test-acc slope {slope:.2e}, p {p:.3f} [{'ok' if c_ok else 'x'}]; "
              f"(d) byte-identical reruns {d_ok}; "
              f"test acc first/last-10 MLP {np.mean(mlp_acc[:10]):.3f}/{np.mean(mlp_acc[-10:]):.3f}, "
              f"QNN {np.mean(qnn_acc[:10]):.3f}/{np.mean(qnn_acc[-10:]):.3f}")
    verdict("C6 desk continual contrast", a_ok and b_ok and c_ok and d_ok and dt < 3600, detail, dt)


def test_c7_parameter_counts(verdict):
    t0 = time.perf_counter()
    got = {
        "Brickwall(10,16)": (build_circuit("brickwall", 10, 16).n_params, 2160),
        "Brickwall(10,30)": (build_circuit("brickwall", 10, 30).n_params, 4050),
        "Ladder(10,12)": (build_circuit("ladder", 10, 12).n_params, 1620),
        "MLP(784,16,10)": (MLPSpec(784, (16,), 10).n_params, 12730),
    }
    dt = time.perf_counter() - t0
    ok = all(a == b for a, b in got.values()) and dt < 1
    verdict("C7 parameter counts", ok, ", ".join(f"{k} -> {a}" for k, (a, _) in got.items()), dt)


def test_c8_metrics_oracles(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst = {"moving_stats": 0.0, "slope_pvalue": 0.0, "accuracy_drop": 0.0, "fim_trace_empirical": 0.0}
    for _ in range(100):
        n = int(rng.integers(12, 200))
        x = rng.normal(size=n) * rng.uniform(0.1, 10) + rng.normal() * np.arange(n) / n
        w = int(rng.integers(1, n + 1))
        ms = moving_stats(x, w)
        m, s = moving_oracle(list(x), w)
        worst["moving_stats"] = max(worst["moving_stats"], np.max(np.abs(ms.mean - m)), np.max(np.abs(ms.std - s)))
        sl, p = slope_pvalue(x)
        sl_ref, p_ref = slope_oracle(x)
        worst["slope_pvalue"] = max(worst["slope_pvalue"], abs(sl - sl_ref), abs(p - p_ref))
        h = int(rng.integers(10, n + 1))
        d = accuracy_drop(x, h)
        head, tail = sum(x[:10]) / 10, sum(x[h - 10 : h]) / 10
        worst["accuracy_drop"] = max(worst["accuracy_drop"], abs(d.drop - (head - tail)),
                                     abs(d.rate_per_100 + 100 * slope_oracle(x[:h])[0]))
        model = toy_qnn(rng.uniform(0, 2 * np.pi, 2))
        feats = model.prepare(rng.normal(size=(4, 4)))
        labels = rng.integers(0, 2, 4)
        theta = model.params.copy()
        ref = np.mean([np.sum(finite_diff_gradient(per_sample_loss(model, feats, labels, i), theta, 1e-5) ** 2)
                       for i in range(4)])
        model.params = theta
        got = fim_trace_empirical(model, feats, labels)
        worst["fim_trace_empirical"] = max(worst["fim_trace_empirical"], abs(got - ref) / max(ref, 1e-12))
    dt = time.perf_counter() - t0
    # moving stats and accuracy drop: exact up to summation rounding; regression 1e-10; FD scores 1e-4 relative
    ok = (worst["moving_stats"] < 1e-9 and worst["slope_pvalue"] < 1e-10 and worst["accuracy_drop"] < 1e-9
          and worst["fim_trace_empirical"] < 1e-4 and dt < 60)
    verdict("C8 metrics oracles", ok, "100 instances each; worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()), dt)
