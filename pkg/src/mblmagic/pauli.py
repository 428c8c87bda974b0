"""Bitmask Pauli strings and expectation-value kernels.

A Hermitian Pauli string is encoded by two L-bit masks (x, z).  Per
site: (0,0)=I, (1,0)=X, (0,1)=Z, (1,1)=Y.  The operator is

    P = i^{popcount(x & z)} X^x Z^z

so every Y site carries the i*X*Z phase and P is Hermitian.  Acting on
a basis state: P|n> = i^{popcount(x&z)} (-1)^{popcount(z & n)} |n ^ x>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .qstate import StateVector

_LETTERS = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


@dataclass(frozen=True)
class PauliString:
    x_mask: int
    z_mask: int

    def weight(self) -> int:
        return int(bin(self.x_mask | self.z_mask).count("1"))

    def label(self, L: int) -> str:
        """Letter string, site 0 leftmost: e.g. 'XIZY'."""
        return "".join(
            _LETTERS[((self.x_mask >> k) & 1, (self.z_mask >> k) & 1)]
            for k in range(L)
        )

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for k, ch in enumerate(label):
            if ch in ("X", "Y"):
                x |= 1 << k
            if ch in ("Z", "Y"):
                z |= 1 << k
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(x, z)


def _check_masks(P: PauliString, L: int) -> None:
    if P.x_mask >> L or P.z_mask >> L:
        raise ValueError(f"Pauli mask wider than {L} bits")


def _parity(values: np.ndarray) -> np.ndarray:
    """Parity (0/1) of the popcount of each entry."""
    return (np.bitwise_count(values.astype(np.uint64)) & np.uint64(1)).astype(np.int8)


def apply_pauli(state: StateVector, P: PauliString) -> StateVector:
    """Return P|psi>.  Index XOR by x_mask plus a per-index sign from
    z_mask, times the global i^{#Y} Hermitian phase."""
    L = state.n_qubits
    _check_masks(P, L)
    idx = np.arange(state.dim, dtype=np.uint64)
    src = idx ^ np.uint64(P.x_mask)
    sign = 1.0 - 2.0 * _parity(src & np.uint64(P.z_mask))
    y_count = bin(P.x_mask & P.z_mask).count("1")
    phase = 1j ** (y_count % 4)
    out = phase * sign * state.amplitudes[src]
    return StateVector(L, out)


def pauli_expectation(state: StateVector, P: PauliString) -> float:
    """<psi|P|psi>, asserted real to 1e-10 and returned as a float."""
    val = np.vdot(state.amplitudes, apply_pauli(state, P).amplitudes)
    if abs(val.imag) > 1e-10:
        raise AssertionError(f"non-real Pauli expectation: {val}")
    if abs(val.real) > 1 + 1e-10:
        raise AssertionError(f"Pauli expectation out of range: {val.real}")
    return float(val.real)


def iz_subgroup(L: int) -> Iterator[PauliString]:
    """All 2^L strings built from I and Z letters only (x_mask = 0)."""
    if L > 30:
        raise ValueError("L too large for IZ-subgroup enumeration")
    for z in range(1 << L):
        yield PauliString(0, z)


def all_paulis(L: int) -> Iterator[PauliString]:
    """All 4^L Hermitian Pauli strings (enumeration bound: small L)."""
    if L > 8:
        raise ValueError("full Pauli enumeration limited to L <= 8")
    for x in range(1 << L):
        for z in range(1 << L):
            yield PauliString(x, z)


def pauli_index(P: PauliString, L: int) -> int:
    """Flat index with per-site digit x_k + 2*z_k at position 4^k
    (matches magic.pauli_spectrum_exact ordering)."""
    _check_masks(P, L)
    idx = 0
    for k in range(L):
        digit = ((P.x_mask >> k) & 1) + 2 * ((P.z_mask >> k) & 1)
        idx += digit << (2 * k)
    return idx
