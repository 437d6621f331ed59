"""Pure numpy versions of the quadratic-pool kernels in ``_kernels.pyx``."""

import numpy as np


def expected_grad(H, b, p, w):
    G = np.einsum("ijk,k->ij", H, w) + b
    return p @ G


def _inner(H, b, alpha, w):
    g = np.einsum("ijk,k->ij", H, w) + b
    u = w - alpha * g
    g2 = np.einsum("ijk,ik->ij", H, u) + b
    return g, u, g2


def maml_grad(H, b, p, alpha, w):
    _, _, g2 = _inner(H, b, alpha, w)
    return p @ (g2 - alpha * np.einsum("ijk,ik->ij", H, g2))


def fo_maml_grad(H, b, p, alpha, w):
    _, _, g2 = _inner(H, b, alpha, w)
    return p @ g2


def maml_loss(H, b, c, p, alpha, w):
    g = np.einsum("ijk,k->ij", H, w) + b
    u = w - alpha * g
    vals = 0.5 * np.einsum("ij,ijk,ik->i", u, H, u) + np.einsum("ij,ij->i", b, u) + c
    return float(p @ vals)


def monitor(H, b, c, p, alpha, w):
    g, u, g2 = _inner(H, b, alpha, w)
    vals = 0.5 * (np.einsum("ij,ij->i", u, g2) + np.einsum("ij,ij->i", u, b)) + c
    gF = p @ (g2 - alpha * np.einsum("ijk,ik->ij", H, g2))
    return float(p @ vals), gF, p @ g
