"""Continual-learning lab for statevector quantum neural networks.

Trains exact-statevector QNNs and dense baselines on long task streams and
records plasticity diagnostics (weight/gradient norms, Fisher trace,
accuracy-drop statistics).
"""
import os as _os

_threads = _os.environ.get("QPLASTICITY_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
