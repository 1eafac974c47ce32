"""Numerical checks of Fisher-trace behavior under weight growth.

* :func:`classical_collapse_sweep` scales a trained dense net by ``lam`` and
  tracks the analytic BCE Fisher trace ``mean p(1-p) ||grad f||^2``.
* :func:`qnn_bounds_check` samples random angles and inputs for a
  single-generator circuit and checks the logit, gradient, trace and
  curvature ceilings implied by ``|f| <= s``.
* :func:`haar_gradient_stats` estimates ``E[(d_k f)^2]`` over the uniform
  torus, with and without a constant angle offset.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import expit

from .ansatz import CircuitSpec, GateKind, Layout, build_circuit
from .errors import UnsupportedGateError
from .gradients import CotangentSpec, adjoint_batch
from .mlp import MLPSpec, mlp_init, scale_weights
from .readout import ZQubitSigmoid
from .rng import stream
from .tasks import synthetic_prototypes
from .training import MLPModel, TrainConfig, evaluate, train_task

BOUND_TOL = 1e-9


@dataclass
class SweepPoint:
    lam: float
    fim_trace: float
    max_abs_logit: float
    mean_abs_logit: float
    mean_xi: float


@dataclass
class ScaleSweepResult:
    activation: str
    points: list[SweepPoint]

    def to_dict(self) -> dict:
        return {"activation": self.activation, "points": [asdict(p) for p in self.points]}

    @property
    def traces(self) -> np.ndarray:
        return np.array([p.fim_trace for p in self.points])

    def collapse_monotone(self, threshold: float = 4.0) -> bool:
        """Trace strictly decreasing from the first point whose mean |f| exceeds ``threshold``."""
        start = next((i for i, p in enumerate(self.points) if p.mean_abs_logit > threshold), None)
        if start is None:
            return False
        tail = self.traces[start:]
        return bool(np.all(np.diff(tail) < 0)) and bool(np.all(self.traces[start] < self.traces[:start]))


def _fisher_terms(model, features):
    per = model.per_sample(features, None, loss="expval")
    xi = expit(per.logits) * (1 - expit(per.logits))
    return per.logits, xi, per.sq_grad_norms


def classical_collapse_sweep(model: MLPModel, features, lambdas) -> ScaleSweepResult:
    lambdas = [float(v) for v in lambdas]
    if any(b <= a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambda values must be strictly increasing")
    if model.loss != "bce":
        raise ValueError("collapse sweep needs a single-logit (binary) model")
    f0, _, _ = _fisher_terms(model, features)
    if np.max(np.abs(f0)) <= 0.1:
        raise ValueError("model logits are ~0 on the probe; train it first")
    points = []
    for lam in lambdas:
        scaled = MLPModel(scale_weights(model.mlp, lam))
        f, xi, g2 = _fisher_terms(scaled, features)
        points.append(SweepPoint(lam, float(np.mean(xi * g2)), float(np.max(np.abs(f))),
                                 float(np.mean(np.abs(f))), float(np.mean(xi))))
    return ScaleSweepResult(model.mlp.spec.activations[0], points)


def xi_floor(s: float) -> float:
    return float(expit(abs(s)) * (1 - expit(abs(s))))


@dataclass
class BoundsReport:
    scale: float
    n_params: int
    n_draws: int
    max_abs_logit: float
    max_abs_grad: float
    max_fim_trace: float
    min_xi: float
    max_xi: float
    logit_ceiling: float = field(init=False)
    grad_ceiling: float = field(init=False)
    fim_ceiling: float = field(init=False)
    xi_floor: float = field(init=False)

    def __post_init__(self):
        s = abs(self.scale)
        self.logit_ceiling = s
        self.grad_ceiling = s
        self.fim_ceiling = 0.25 * self.n_params * s * s
        self.xi_floor = xi_floor(s)

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "logit_bound": bool(self.max_abs_logit <= self.logit_ceiling + BOUND_TOL),
            "gradient_bound": bool(self.max_abs_grad <= self.grad_ceiling + BOUND_TOL),
            "fim_ceiling": bool(self.max_fim_trace <= self.fim_ceiling + BOUND_TOL),
            "curvature_band": bool(self.min_xi >= self.xi_floor - BOUND_TOL and self.max_xi <= 0.25 + BOUND_TOL),
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["checks"] = self.checks
        d["passed"] = self.passed
        return d


def _require_single_generator(spec: CircuitSpec) -> None:
    bad = {p.kind.name for p in spec.placements if p.kind is GateKind.SU4}
    if bad:
        raise UnsupportedGateError("bounds checks cover single-generator gates only (got SU4)")


def random_states(rng, batch: int, n_qubits: int) -> np.ndarray:
    dim = 1 << n_qubits
    psi = rng.standard_normal((batch, dim)) + 1j * rng.standard_normal((batch, dim))
    return np.ascontiguousarray(psi / np.linalg.norm(psi, axis=1, keepdims=True))


def qnn_bounds_check(spec: CircuitSpec, scale: float, n_samples: int, seed: int,
                     probe_size: int = 8, qubit: int = -1, inputs: np.ndarray | None = None,
                     param_scale: float = 1.0) -> BoundsReport:
    """Sample ``n_samples`` angle draws, each on a probe of random input states.

    ``param_scale`` multiplies every sampled angle (weight-inflation probe).
    Fixed ``inputs`` replace the random probe.
    """
    _require_single_generator(spec)
    cot = CotangentSpec(ZQubitSigmoid(qubit, scale), "expval")
    max_f = max_g = max_tr = 0.0
    min_xi, max_xi = np.inf, -np.inf
    for d in range(n_samples):
        rng = stream(seed, "bounds", d)
        theta = param_scale * rng.uniform(0.0, 2 * np.pi, size=spec.n_params)
        psi = random_states(rng, probe_size, spec.n_qubits) if inputs is None else inputs
        res = adjoint_batch(spec, theta, psi, cot)
        xi = expit(res.logits) * (1 - expit(res.logits))
        max_f = max(max_f, float(np.max(np.abs(res.logits))))
        if res.grads.size:
            max_g = max(max_g, float(np.max(np.abs(res.grads))))
        max_tr = max(max_tr, float(np.mean(xi * np.sum(res.grads**2, axis=1))))
        min_xi = min(min_xi, float(xi.min()))
        max_xi = max(max_xi, float(xi.max()))
    return BoundsReport(scale, spec.n_params, n_samples, max_f, max_g, max_tr, min_xi, max_xi)


@dataclass
class HaarStats:
    mean_sq: float
    se: float
    mean_sq_shifted: float
    se_shifted: float
    n_samples: int

    def to_dict(self) -> dict:
        return asdict(self)


def haar_gradient_stats(spec: CircuitSpec, k: int, n_samples: int, offset: float, seed: int,
                        qubit: int = -1) -> HaarStats:
    """``E[(d_k f)^2]`` for ``theta ~ U[0, 2pi]^M`` and for ``theta + offset``, input ``|0...0>``."""
    _require_single_generator(spec)
    if not 0 <= k < spec.n_params:
        raise IndexError("parameter index out of range")
    cot = CotangentSpec(ZQubitSigmoid(qubit, 1.0), "expval")
    psi = np.zeros((1, 1 << spec.n_qubits), dtype=np.complex128)
    psi[0, 0] = 1.0
    base, shifted = np.empty(n_samples), np.empty(n_samples)
    for d in range(n_samples):
        theta = stream(seed, "haar", d).uniform(0.0, 2 * np.pi, size=spec.n_params)
        base[d] = adjoint_batch(spec, theta, psi, cot).grads[0, k] ** 2
        shifted[d] = adjoint_batch(spec, theta + offset, psi, cot).grads[0, k] ** 2
    sqrt_n = np.sqrt(n_samples)
    return HaarStats(float(base.mean()), float(base.std(ddof=1) / sqrt_n),
                     float(shifted.mean()), float(shifted.std(ddof=1) / sqrt_n), n_samples)


# ------------------------------------------------------------- full suite


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __post_init__(self):
        self.passed = bool(self.passed)


def _collapse_model(act: str, sec, seed: int):
    ds = synthetic_prototypes(2, sec.collapse_dim, sec.collapse_samples // 2, sec.collapse_noise, seed)
    model = MLPModel(mlp_init(MLPSpec(sec.collapse_dim, (sec.collapse_width,), 1, (act,), bias=False), seed))
    train_task(model, ds, ds, TrainConfig(sec.collapse_lr, 32, sec.collapse_epochs, seed=seed))
    return model, ds, evaluate(model, ds)


def _haar_param(sec) -> int:
    """Default: the first-layer RY on the measured (last) qubit, after the n CRX slots."""
    n = sec.haar_n_qubits
    return n + 3 * (n - 1) if sec.haar_param < 0 else sec.haar_param


def run_theory_suite(sec, seed: int = 0) -> tuple[list[CheckResult], dict]:
    """Run the bounds, inflation, collapse and torus-gradient checks from a ``[theory]`` table."""
    checks, doc = [], {"bounds": [], "inflation": [], "collapse": [], "haar": {}}
    hea = build_circuit(Layout.HEA_RING, sec.bounds_n_qubits, sec.bounds_depth)
    for s in sec.bounds_scales:
        rep = qnn_bounds_check(hea, float(s), sec.bounds_samples, seed, sec.bounds_probe)
        doc["bounds"].append(rep.to_dict())
        for name, ok in rep.checks.items():
            checks.append(CheckResult(f"bounds s={s:g} {name}", ok,
                                      f"max|f|={rep.max_abs_logit:.4g} max|df|={rep.max_abs_grad:.4g} "
                                      f"maxTrF={rep.max_fim_trace:.4g}/{rep.fim_ceiling:.4g} "
                                      f"xi=[{rep.min_xi:.4g},{rep.max_xi:.4g}]"))
    s = float(sec.bounds_scales[-1])
    for factor in sec.inflation_factors:
        rep = qnn_bounds_check(hea, s, max(1, sec.bounds_samples // 10), seed, sec.bounds_probe,
                               param_scale=float(factor))
        doc["inflation"].append({"factor": factor, **rep.to_dict()})
        checks.append(CheckResult(f"inflation x{factor:g} logit_bound", rep.checks["logit_bound"],
                                  f"max|f|={rep.max_abs_logit:.4g} <= {s:g}"))

    for act in sec.collapse_activations:
        model, ds, acc = _collapse_model(act, sec, seed)
        res = classical_collapse_sweep(model, model.prepare(ds.inputs), sec.lambdas)
        ratio = res.traces[-1] / res.traces[0]
        doc["collapse"].append({"train_accuracy": acc, **res.to_dict()})
        checks.append(CheckResult(f"collapse {act} train_accuracy>=0.95", acc >= 0.95, f"acc={acc:.3f}"))
        checks.append(CheckResult(f"collapse {act} monotone", res.collapse_monotone(),
                                  "traces=" + ",".join(f"{t:.3g}" for t in res.traces)))
        checks.append(CheckResult(f"collapse {act} final<1e-3*first", ratio < 1e-3, f"ratio={ratio:.3g}"))

    stats = {}
    for depth in sec.haar_depths:
        spec = build_circuit(Layout.HEA_RING, sec.haar_n_qubits, depth)
        k = _haar_param(sec)
        stats[depth] = haar_gradient_stats(spec, k, sec.haar_samples, sec.haar_offset, seed)
        doc["haar"][str(depth)] = stats[depth].to_dict()
        st = stats[depth]
        gap = abs(st.mean_sq - st.mean_sq_shifted)
        band = 3 * np.hypot(st.se, st.se_shifted)
        checks.append(CheckResult(f"haar depth={depth} shift_invariance", gap < band,
                                  f"|diff|={gap:.3g} < 3se={band:.3g}"))
    spec = build_circuit(Layout.HEA_RING, sec.haar_n_qubits, min(sec.haar_depths))
    k = _haar_param(sec)
    per = haar_gradient_stats(spec, k, 20, 4 * np.pi, seed)
    rel = abs(per.mean_sq - per.mean_sq_shifted) / per.mean_sq
    checks.append(CheckResult("haar 4pi periodicity", rel < 1e-10, f"relative gap {rel:.2g}"))
    if len(stats) >= 2:
        lo, hi = min(stats), max(stats)
        sep = stats[lo].mean_sq - stats[hi].mean_sq
        band = 3 * np.hypot(stats[lo].se, stats[hi].se)
        checks.append(CheckResult(f"haar depth {hi} < depth {lo}", sep > band,
                                  f"{stats[hi].mean_sq:.4g} vs {stats[lo].mean_sq:.4g} (gap {sep:.3g}, 3se {band:.3g})"))
    doc["checks"] = [asdict(c) for c in checks]
    return checks, doc
