"""Bipartite entanglement entropy (natural log) and the Page reference."""

from __future__ import annotations

import numpy as np

from .qstate import StateVector


def entanglement_entropy(state: StateVector, cut: int) -> float:
    """Von Neumann entropy (nats) of sites 0..cut-1.

    Sites 0..cut-1 are the low bits of the basis index, so the
    amplitude matrix has the complementary block as the row index.
    """
    L = state.n_qubits
    if not 1 <= cut <= L - 1:
        raise ValueError("cut out of range")
    mat = state.amplitudes.reshape(1 << (L - cut), 1 << cut)
    lam = np.linalg.svd(mat, compute_uv=False)
    p = lam**2
    p = p[p > 1e-300]
    return float(-np.sum(p * np.log(p)))


def page_value(L: int) -> float:
    """Leading-order Page entropy of equal halves: (L/2) ln 2 - 1/2."""
    if L % 2 != 0:
        raise ValueError("page_value requires even L")
    return 0.5 * L * np.log(2.0) - 0.5
