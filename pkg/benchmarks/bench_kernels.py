"""Compare the compiled and numpy gate kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json out.json]

Times raw two-qubit gate application, the outer-product reduction used by
the adjoint sweep, and one full batched gradient of a 6-qubit depth-4
brickwall. Each backend's outputs are checked against the other before
timing.
"""
import argparse
import json
import timeit

import numpy as np

from qplasticity import kernels
from qplasticity.ansatz import build_circuit, init_params
from qplasticity.gradients import CotangentSpec, adjoint_batch
from qplasticity.readout import LogProbTop10
from qplasticity.statevector import amplitude_encode_batch


def workloads(rng):
    cases = {}
    for n, batch in ((6, 128), (10, 32)):
        psi = rng.standard_normal((batch, 1 << n)) + 1j * rng.standard_normal((batch, 1 << n))
        u = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))[0]

        def apply(psi=psi, u=u, n=n):
            work = psi.copy()
            for q in range(n - 1):
                kernels.apply_2q(work, u, q, q + 1, n)
            return work

        def outer(psi=psi, n=n):
            return [kernels.outer_2q(psi, psi, q, q + 1, n) for q in range(n - 1)]

        cases[f"apply_2q chain n={n} batch={batch}"] = apply
        cases[f"outer_2q chain n={n} batch={batch}"] = outer

    spec = build_circuit("brickwall", 6, 4)
    params = init_params(spec, "uniform_0_2pi", 0)
    x = amplitude_encode_batch(rng.uniform(size=(128, 64)), 6)
    cot = CotangentSpec(LogProbTop10(), "cce", rng.integers(0, 10, 128))
    cases["adjoint gradient brickwall(6,4) batch=128"] = lambda: adjoint_batch(spec, params, x, cot).grads
    return cases


def _as_array(out):
    return np.concatenate([np.ravel(o) for o in out]) if isinstance(out, list) else np.ravel(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--json", help="write timings here")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy backend only")
    cases = workloads(np.random.default_rng(0))
    results = {}
    start = kernels.backend_name()
    try:
        for name, fn in cases.items():
            outs, row = {}, {}
            for b in backends:
                kernels.use_backend(b)
                outs[b] = _as_array(fn())
                number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
                row[b] = min(timeit.repeat(fn, number=number, repeat=args.repeat)) / number
            if len(outs) == 2:
                err = float(np.max(np.abs(outs["cython"] - outs["python"])))
                if err > 1e-10:
                    raise SystemExit(f"{name}: backends disagree by {err:.2e}")
            results[name] = row
    finally:
        kernels.use_backend(start)

    width = max(map(len, results))
    print(f"{'workload'.ljust(width)}  " + "  ".join(f"{b:>12s}" for b in backends) + "     speedup")
    for name, row in results.items():
        times = "  ".join(f"{row[b] * 1e3:10.3f}ms" for b in backends)
        speed = f"{row['python'] / row['cython']:8.2f}x" if "cython" in row else ""
        print(f"{name.ljust(width)}  {times}  {speed}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)


if __name__ == "__main__":
    main()
