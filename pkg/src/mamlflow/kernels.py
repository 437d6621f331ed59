"""Backend selection for the quadratic-pool kernels.

The compiled extension is used when it has been built; otherwise the numpy
fallback is used. Setting ``MAMLFLOW_PURE_PYTHON=1`` forces the fallback.
Above ``BLAS_DIM`` the compiled loops lose to numpy's BLAS-backed matvecs
(see benchmarks/bench_kernels.py), so those calls go to the fallback too.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("MAMLFLOW_PURE_PYTHON") == "1":
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"


def available_backends():
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


BLAS_DIM = 64


def _pick(d):
    return _kernels_py if d >= BLAS_DIM else _impl


def _vec(w):
    return np.ascontiguousarray(w, dtype=np.float64)


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def expected_grad(H, b, p, w):
    return _pick(np.size(w)).expected_grad(_c(H), _c(b), _c(p), _vec(w))


def maml_grad(H, b, p, alpha, w):
    return _pick(np.size(w)).maml_grad(_c(H), _c(b), _c(p), float(alpha), _vec(w))


def fo_maml_grad(H, b, p, alpha, w):
    return _pick(np.size(w)).fo_maml_grad(_c(H), _c(b), _c(p), float(alpha), _vec(w))


def maml_loss(H, b, c, p, alpha, w):
    return float(_pick(np.size(w)).maml_loss(_c(H), _c(b), _c(c), _c(p), float(alpha), _vec(w)))


def monitor(H, b, c, p, alpha, w):
    F, gF, gf = _pick(np.size(w)).monitor(_c(H), _c(b), _c(c), _c(p), float(alpha), _vec(w))
    return float(F), np.asarray(gF), np.asarray(gf)
