"""Disordered model builders: TFIM and the phenomenological l-bit model.

TFIM (open chain):  H = sum_i J_i Z_i Z_{i+1} + sum_i h_i Z_i + g sum_i X_i
with h_i ~ U[-W, W] and J_i ~ U[0.8, 1.2].

l-bit model: diagonal in the computational basis (dressing unitary
approximated by the identity); on-site fields plus multi-spin couplings
J_S ~ N(0, e^{-2 d(S)/xi}) with d(S) the maximum site separation in S,
i.e. coupling amplitudes decay as e^{-d/xi}.  This scale is what makes
the saturation exponent of the stabilizer entropy come out as xi*ln2.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as sla
from numba import njit

from .qstate import StateVector

ENERGY_TABLE_MAX_QUBITS = 26


@dataclass(frozen=True)
class TfimParams:
    L: int
    W: float
    g: float = 1.0
    J_range: tuple[float, float] = (0.8, 1.2)

    def __post_init__(self):
        if self.W < 0:
            raise ValueError("W must be >= 0")
        if not self.J_range[0] < self.J_range[1]:
            raise ValueError("J_range low must be < high")


@dataclass(frozen=True)
class LBitParams:
    L: int
    xi: float
    max_order: int = 3
    field_dist: str = "uniform"  # on-site field distribution
    W: float = 1.0  # field scale: uniform [-W, W] or N(0, W^2)

    def __post_init__(self):
        if self.xi <= 0:
            raise ValueError("xi must be > 0")
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if self.field_dist not in ("uniform", "normal"):
            raise ValueError(f"unknown field_dist {self.field_dist!r}")


@dataclass
class DisorderRealization:
    """One disorder instance: fields plus TFIM bond couplings or an
    l-bit coupling table keyed by site subsets."""

    params: TfimParams | LBitParams
    seed: int
    h: np.ndarray
    J: np.ndarray | None = None  # TFIM nearest-neighbor couplings
    couplings: dict[tuple[int, ...], float] | None = None  # l-bit
    _diag: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def is_tfim(self) -> bool:
        return isinstance(self.params, TfimParams)

    def to_json(self) -> str:
        payload = {
            "model": "tfim" if self.is_tfim else "lbit",
            "seed": int(self.seed),
            "params": {
                k: (list(v) if isinstance(v, tuple) else v)
                for k, v in vars(self.params).items()
            },
            "h": self.h.tolist(),
        }
        if self.is_tfim:
            payload["J"] = self.J.tolist()
        else:
            payload["couplings"] = [
                [list(s), v] for s, v in sorted(self.couplings.items())
            ]
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "DisorderRealization":
        d = json.loads(text)
        if d["model"] == "tfim":
            p = d["params"]
            params = TfimParams(p["L"], p["W"], p["g"], tuple(p["J_range"]))
            return cls(params, d["seed"], np.array(d["h"]), J=np.array(d["J"]))
        p = d["params"]
        params = LBitParams(p["L"], p["xi"], p["max_order"], p["field_dist"], p["W"])
        couplings = {tuple(s): v for s, v in d["couplings"]}
        return cls(params, d["seed"], np.array(d["h"]), couplings=couplings)


def sample_tfim(params: TfimParams, seed: int) -> DisorderRealization:
    """h_i ~ U[-W, W]; J_i ~ U[J_range]; deterministic per seed."""
    rng = np.random.default_rng(seed)
    h = rng.uniform(-params.W, params.W, size=params.L)
    J = rng.uniform(params.J_range[0], params.J_range[1], size=params.L - 1)
    return DisorderRealization(params, seed, h, J=J)


def sample_lbit(params: LBitParams, seed: int) -> DisorderRealization:
    """On-site fields plus Gaussian multi-spin couplings with standard
    deviation exp(-d(S)/xi), d(S) = max separation within subset S."""
    rng = np.random.default_rng(seed)
    if params.field_dist == "uniform":
        h = rng.uniform(-params.W, params.W, size=params.L)
    else:
        h = rng.normal(0.0, params.W, size=params.L)
    couplings: dict[tuple[int, ...], float] = {}
    for order in range(2, params.max_order + 1):
        for subset in itertools.combinations(range(params.L), order):
            d = subset[-1] - subset[0]
            std = np.exp(-d / params.xi)
            couplings[subset] = float(rng.normal(0.0, std))
    return DisorderRealization(params, seed, h, couplings=couplings)


# ---------------------------------------------------------------------------
# energy tables and matrix-free application


def _spin_signs(L: int) -> np.ndarray:
    """s_i = +1 for bit 0, -1 for bit 1; shape (2^L, L)."""
    n = np.arange(1 << L, dtype=np.uint64)
    bits = (n[:, None] >> np.arange(L, dtype=np.uint64)) & np.uint64(1)
    return 1.0 - 2.0 * bits.astype(np.float64)


def tfim_diagonal(realization: DisorderRealization) -> np.ndarray:
    """2^L table of the ZZ + Z part of the TFIM."""
    p = realization.params
    s = _spin_signs(p.L)
    diag = s @ realization.h
    diag += (s[:, :-1] * s[:, 1:]) @ realization.J
    return diag


def lbit_energy_table(realization: DisorderRealization) -> np.ndarray:
    """E[n] = sum_i h_i s_i + sum_S J_S prod_{i in S} s_i."""
    p = realization.params
    if p.L > ENERGY_TABLE_MAX_QUBITS:
        raise ValueError(f"energy table limited to L <= {ENERGY_TABLE_MAX_QUBITS}")
    n = np.arange(1 << p.L, dtype=np.uint64)
    table = _spin_signs(p.L) @ realization.h
    for subset, J in realization.couplings.items():
        mask = np.uint64(sum(1 << i for i in subset))
        parity = (np.bitwise_count(n & mask) & np.uint64(1)).astype(np.float64)
        table += J * (1.0 - 2.0 * parity)
    return table


@njit(cache=True)
def _tfim_matvec(diag, psi, g, L, out):
    n = psi.size
    for m in range(n):
        out[m] = diag[m] * psi[m]
    for i in range(L):
        b = 1 << i
        for m in range(n):
            out[m] += g * psi[m ^ b]


def _cached_diag(realization: DisorderRealization) -> np.ndarray:
    if realization._diag is None:
        if realization.is_tfim:
            realization._diag = tfim_diagonal(realization)
        else:
            realization._diag = lbit_energy_table(realization)
    return realization._diag


def tfim_apply(realization: DisorderRealization, state: StateVector) -> StateVector:
    """H|psi> for the TFIM: diagonal table plus L bit-flip accumulations."""
    p = realization.params
    if state.n_qubits != p.L:
        raise ValueError("state dimension mismatch")
    out = np.empty_like(state.amplitudes)
    _tfim_matvec(_cached_diag(realization), state.amplitudes, p.g, p.L, out)
    return StateVector(p.L, out)


def apply_hamiltonian(
    realization: DisorderRealization, state: StateVector
) -> StateVector:
    """H|psi> for either model."""
    if realization.is_tfim:
        return tfim_apply(realization, state)
    if state.n_qubits != realization.params.L:
        raise ValueError("state dimension mismatch")
    return StateVector(state.n_qubits, _cached_diag(realization) * state.amplitudes)


def tfim_dense(realization: DisorderRealization) -> np.ndarray:
    """Dense TFIM matrix (test oracle; small L only)."""
    p = realization.params
    if p.L > 12:
        raise ValueError("dense TFIM limited to L <= 12")
    dim = 1 << p.L
    H = np.diag(tfim_diagonal(realization)).astype(np.complex128)
    idx = np.arange(dim)
    for i in range(p.L):
        H[idx, idx ^ (1 << i)] += p.g
    return H


def energy_bounds(
    realization: DisorderRealization, margin: float = 0.02
) -> tuple[float, float]:
    """Spectrum-enclosing interval.

    l-bit: exact min/max of the diagonal table.  TFIM: extremal
    eigenvalues via Lanczos (scipy eigsh), widened by the safety margin;
    on non-convergence the margin grows to 10%.
    """
    if not realization.is_tfim:
        table = _cached_diag(realization)
        return float(np.min(table)), float(np.max(table))
    p = realization.params
    dim = 1 << p.L
    if p.L <= 4:
        evals = np.linalg.eigvalsh(tfim_dense(realization))
        lo, hi = float(evals[0]), float(evals[-1])
    else:
        diag = _cached_diag(realization)

        def matvec(v):
            out = np.empty_like(v, dtype=np.complex128)
            _tfim_matvec(diag, v.astype(np.complex128), p.g, p.L, out)
            return out

        op = sla.LinearOperator((dim, dim), matvec=matvec, dtype=np.complex128)
        # fixed Lanczos start vector: ARPACK's default random v0 makes the
        # extremal eigenvalues (and thus everything downstream) drift by an
        # ulp between calls, breaking byte-identical reruns
        v0 = np.random.default_rng(0x1A4C).normal(size=dim)
        try:
            hi = float(
                sla.eigsh(op, k=1, which="LA", v0=v0, return_eigenvectors=False)[0]
            )
            lo = float(
                sla.eigsh(op, k=1, which="SA", v0=v0, return_eigenvectors=False)[0]
            )
        except sla.ArpackNoConvergence:
            # crude but guaranteed: 1-norm bound of the Hamiltonian terms
            margin = 0.10
            bound = float(np.sum(np.abs(realization.J)) + np.sum(np.abs(realization.h))
                          + abs(p.g) * p.L)
            lo, hi = -bound, bound
    width = hi - lo
    return lo - margin * width, hi + margin * width
