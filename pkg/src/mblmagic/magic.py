"""Stabilizer Renyi entropies, Z-gate weight and Pauli-spectrum tools.

All SRE values are in bits (log base 2).  Two independent routes to the
Pauli spectrum exist on purpose:

* ``pauli_spectrum_exact``: L sequential per-site linear transforms of
  the density matrix, O(L 4^L) time, 4^L memory (L <= 13);
* streaming kernels (``sre``, ``w_z``, sampling): for each x-mask the
  row of expectations over all z-masks is the +-1 Walsh transform of
  g_x[n] = conj(psi[n ^ x]) psi[n]; moments accumulate in O(2^L) memory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .pauli import PauliString, pauli_index
from .qstate import BlochAngles, StateVector

SPECTRUM_MAX_QUBITS = 13
SAMPLING_MAX_QUBITS = 24


@dataclass
class PauliSpectrum:
    """All 4^L Pauli expectations, indexed by per-site digits
    x_k + 2*z_k at position 4^k (site 0 = least significant digit)."""

    n_qubits: int
    values: np.ndarray

    def value_of(self, P: PauliString) -> float:
        return float(self.values[pauli_index(P, self.n_qubits)])


@dataclass
class SampledEstimate:
    estimate: float  # bits
    stderr: float  # bits
    n_samples: int
    degenerate: bool = False


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _fwht_inplace(a):
    """Unnormalized +-1 Walsh-Hadamard transform, in place."""
    n = a.size
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                x = a[j]
                y = a[j + h]
                a[j] = x + y
                a[j + h] = x - y
        h *= 2


@njit(cache=True)
def _moment_sums(psi, k):
    """(sum <P>^2, sum <P>^{2k}) over all 4^L Pauli strings."""
    n = psi.size
    g = np.empty(n, dtype=np.complex128)
    purity = 0.0
    moment = 0.0
    for x in range(n):
        for m in range(n):
            g[m] = np.conj(psi[m ^ x]) * psi[m]
        _fwht_inplace(g)
        for z in range(n):
            e2 = g[z].real * g[z].real + g[z].imag * g[z].imag
            purity += e2
            moment += e2**k
    return purity, moment


@njit(cache=True)
def _shannon_sums(psi):
    """(sum <P>^2, sum <P>^2 log2 <P>^2) over all Pauli strings."""
    n = psi.size
    g = np.empty(n, dtype=np.complex128)
    purity = 0.0
    ent = 0.0
    for x in range(n):
        for m in range(n):
            g[m] = np.conj(psi[m ^ x]) * psi[m]
        _fwht_inplace(g)
        for z in range(n):
            e2 = g[z].real * g[z].real + g[z].imag * g[z].imag
            purity += e2
            if e2 > 0.0:
                ent += e2 * np.log2(e2)
    return purity, ent


@njit(cache=True)
def _expectation_row(psi, x):
    """<P(x, z)>^2-bearing Walsh row: phi[z] with |phi[z]|^2 = <P>^2."""
    n = psi.size
    g = np.empty(n, dtype=np.complex128)
    for m in range(n):
        g[m] = np.conj(psi[m ^ x]) * psi[m]
    _fwht_inplace(g)
    return g


# ---------------------------------------------------------------------------
# exact spectrum (per-site transform route)

# maps site block (rho00, rho01, rho10, rho11) -> (trI, trX, trZ, trY)
_SITE_MAP = np.array(
    [
        [1, 0, 0, 1],
        [0, 1, 1, 0],
        [1, 0, 0, -1],
        [0, 1j, -1j, 0],
    ],
    dtype=np.complex128,
)


def pauli_spectrum_exact(state: StateVector) -> PauliSpectrum:
    """Exhaustive Pauli expectations via L per-site linear transforms."""
    L = state.n_qubits
    if L > SPECTRUM_MAX_QUBITS:
        raise ValueError(f"exact spectrum limited to L <= {SPECTRUM_MAX_QUBITS}")
    psi = state.amplitudes.reshape((2,) * L)
    rho = np.tensordot(psi, psi.conj(), axes=0)
    # interleave to (bra_{L-1}, ket_{L-1}, ..., bra_0, ket_0)
    perm = []
    for s in range(L):
        perm += [s, L + s]
    arr = np.ascontiguousarray(rho.transpose(perm)).reshape((4,) * L)
    for axis in range(L):
        arr = np.moveaxis(np.tensordot(_SITE_MAP, arr, axes=([1], [axis])), 0, axis)
    vals = arr.reshape(-1)
    if np.max(np.abs(vals.imag)) > 1e-9:
        raise AssertionError("non-real Pauli spectrum")
    return PauliSpectrum(L, np.real(vals))


# ---------------------------------------------------------------------------
# SRE


def haar_sre2(L: int) -> float:
    """Average SRE-2 of Haar-random pure states: log2(2^L + 3) - 2."""
    if L < 1:
        raise ValueError("L must be >= 1")
    return float(np.log2(2.0**L + 3.0) - 2.0)


def sre(state: StateVector, k: int = 2) -> float:
    """Stabilizer Renyi entropy M_k in bits (k = 1 via the entropy limit)."""
    L = state.n_qubits
    if L > SPECTRUM_MAX_QUBITS:
        raise ValueError(f"exact SRE limited to L <= {SPECTRUM_MAX_QUBITS}")
    D = float(state.dim)
    if k == 1:
        purity, ent = _shannon_sums(state.amplitudes)
        return float(-ent / D + L * (purity / D - 1.0))
    if int(k) != k or k < 2:
        raise ValueError("Renyi index must be 1 or an integer >= 2")
    _, moment = _moment_sums(state.amplitudes, int(k))
    return float(np.log2(moment / D) / (1 - k))


def sre_from_spectrum(spectrum: PauliSpectrum, k: int = 2) -> float:
    """SRE computed from a precomputed exact spectrum (oracle route)."""
    D = 2.0**spectrum.n_qubits
    e2 = spectrum.values**2
    if k == 1:
        p = e2 / D
        nz = p > 0
        return float(-np.sum(p[nz] * np.log2(p[nz])) - spectrum.n_qubits)
    return float(np.log2(np.sum(e2**k) / D) / (1 - k))


def _bloch_vectors(sites) -> np.ndarray:
    """Per-site (bx, by, bz) from BlochAngles or a list of 2x2 rho_k."""
    if isinstance(sites, BlochAngles):
        th, ph = sites.theta, sites.phi
        return np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1
        )
    vecs = []
    for rho in sites:
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (2, 2):
            raise ValueError("site density matrix must be 2x2")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ValueError("site density matrix not Hermitian")
        if abs(np.trace(rho) - 1) > 1e-10:
            raise ValueError("site density matrix trace != 1")
        if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
            raise ValueError("site density matrix not PSD")
        bx = 2 * rho[0, 1].real
        by = -2 * rho[0, 1].imag
        bz = (rho[0, 0] - rho[1, 1]).real
        vecs.append((bx, by, bz))
    return np.array(vecs)


def sre2_product(sites) -> float:
    """SRE-2 of a product state from per-site Bloch data, O(L).

    M2 = -sum_k log2[ (1 + bx^4 + by^4 + bz^4) / 2 ].
    """
    b = _bloch_vectors(sites)
    site_sums = 1.0 + np.sum(b**4, axis=1)
    return float(-np.sum(np.log2(site_sums / 2.0)))


def delta_m2(m2_or_state, L: int | None = None) -> float:
    """Deviation from the Haar value: haar_sre2(L) - M2."""
    if isinstance(m2_or_state, StateVector):
        state = m2_or_state
        return haar_sre2(state.n_qubits) - sre(state, 2)
    if L is None:
        raise ValueError("L required when passing a plain M2 value")
    return haar_sre2(L) - float(m2_or_state)


# ---------------------------------------------------------------------------
# Z-gate weight


def w_z(state: StateVector) -> float:
    """Pauli-distribution mass on I/Z-only strings:
    W_Z = sum_{x=0 strings} <P>^2 / D, via a Walsh transform of |psi|^2."""
    L = state.n_qubits
    if L > 26:
        raise ValueError("w_z limited to L <= 26")
    q = np.abs(state.amplitudes) ** 2
    r = q.copy()
    _fwht_inplace(r)
    return float(np.sum(r * r) / state.dim)


# ---------------------------------------------------------------------------
# perfect Pauli sampling


class PauliSampler:
    """Draws Pauli strings P with probability Xi_P = <P>^2 / D.

    Two-stage exact scheme: the x-mask marginal p(x) = sum_n q[n^x] q[n]
    (q = |psi|^2) is tabulated once via Walsh transforms; per sample the
    conditional over z-masks is the squared Walsh row of g_x, O(L 2^L).
    """

    def __init__(self, state: StateVector):
        L = state.n_qubits
        if L > SAMPLING_MAX_QUBITS:
            raise ValueError(f"sampling limited to L <= {SAMPLING_MAX_QUBITS}")
        self.state = state
        self.L = L
        q = np.abs(state.amplitudes) ** 2
        r = q.copy()
        _fwht_inplace(r)
        r *= r
        _fwht_inplace(r)
        px = r / state.dim
        px = np.maximum(px, 0.0)
        self._x_cdf = np.cumsum(px / np.sum(px))

    def draw(self, rng: np.random.Generator) -> tuple[PauliString, float]:
        """One sample; returns (P, exact <P>^2 of the sampled string)."""
        x = int(np.searchsorted(self._x_cdf, rng.random(), side="right"))
        row = _expectation_row(self.state.amplitudes, x)
        w = row.real**2 + row.imag**2
        cdf = np.cumsum(w)
        z = int(np.searchsorted(cdf / cdf[-1], rng.random(), side="right"))
        return PauliString(x, z), float(w[z])


def sample_pauli(state: StateVector, rng: np.random.Generator) -> PauliString:
    """One Pauli string distributed as Xi_P = <P>^2 / D."""
    P, _ = PauliSampler(state).draw(rng)
    return P


def sre2_sampled(
    state: StateVector, n_samples: int, rng: np.random.Generator
) -> SampledEstimate:
    """Monte-Carlo SRE-2: -log2 of the sample mean of <P>^2 over Xi_P,
    with delete-1 jackknife standard error.  The log-of-mean estimator
    carries an O(1/N) bias."""
    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    sampler = PauliSampler(state)
    esq = np.empty(n_samples)
    for i in range(n_samples):
        _, esq[i] = sampler.draw(rng)
    total = float(np.sum(esq))
    mean = total / n_samples
    estimate = -float(np.log2(mean))
    if np.max(esq) - np.min(esq) < 1e-15:
        return SampledEstimate(estimate, 0.0, n_samples, degenerate=True)
    loo = (total - esq) / (n_samples - 1)
    theta = -np.log2(loo)
    stderr = float(np.sqrt((n_samples - 1) / n_samples * np.sum((theta - theta.mean()) ** 2)))
    return SampledEstimate(estimate, stderr, n_samples)
