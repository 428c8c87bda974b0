"""Pure-state constructors for chains of L qubits.

Basis convention (fixed package-wide): site index 0 is the least
significant bit of the computational basis integer, |up> = |0>,
|down> = |1>.  A single site with Bloch angles (theta, phi) is
cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

STATE_FAMILIES = (
    "z-random",
    "x-random",
    "y-random",
    "x-plus",
    "t-product",
    "bloch-random",
)


@dataclass
class StateVector:
    """State of ``n_qubits`` qubits: 2^L complex amplitudes, unit norm."""

    n_qubits: int
    amplitudes: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amplitudes.copy())


@dataclass
class BlochAngles:
    """Per-site Bloch angles: theta in [0, pi], phi in [0, 2*pi)."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.phi = np.atleast_1d(np.asarray(self.phi, dtype=float))
        if self.theta.shape != self.phi.shape:
            raise ValueError("theta and phi must have equal length")
        if np.any(self.theta < 0) or np.any(self.theta > np.pi):
            raise ValueError("theta out of [0, pi]")
        if np.any(self.phi < 0) or np.any(self.phi >= 2 * np.pi):
            raise ValueError("phi out of [0, 2*pi)")

    def __len__(self) -> int:
        return len(self.theta)


def make_product_state(angles: BlochAngles) -> StateVector:
    """Tensor product of per-site Bloch states, site 0 = LSB."""
    L = len(angles)
    amps = np.ones(1, dtype=np.complex128)
    for k in range(L):
        site = np.array(
            [
                np.cos(angles.theta[k] / 2),
                np.exp(1j * angles.phi[k]) * np.sin(angles.theta[k] / 2),
            ],
            dtype=np.complex128,
        )
        # np.kron(site, amps) puts site k in the more significant position
        amps = np.kron(site, amps)
    return StateVector(L, amps)


def named_state_angles(family: str, L: int, rng: np.random.Generator) -> BlochAngles:
    """Bloch angles of a named-family draw.

    z-random: random computational basis state; x/y-random: per-site
    random +-1 eigenstate of X/Y; x-plus: |+>^L; t-product: |T>^L;
    bloch-random: per-site Haar-uniform direction on the Bloch sphere.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    if family == "z-random":
        theta = rng.integers(0, 2, size=L) * np.pi
        phi = np.zeros(L)
    elif family == "x-random":
        theta = np.full(L, np.pi / 2)
        phi = rng.integers(0, 2, size=L) * np.pi
    elif family == "y-random":
        theta = np.full(L, np.pi / 2)
        # +-1 eigenstates of Y have phi = pi/2, 3*pi/2
        phi = np.pi / 2 + rng.integers(0, 2, size=L) * np.pi
    elif family == "x-plus":
        theta = np.full(L, np.pi / 2)
        phi = np.zeros(L)
    elif family == "t-product":
        theta = np.full(L, np.pi / 2)
        phi = np.full(L, np.pi / 4)
    elif family == "bloch-random":
        theta = np.arccos(rng.uniform(-1.0, 1.0, size=L))
        phi = rng.uniform(0.0, 2 * np.pi, size=L)
    else:
        raise ValueError(f"unknown state family {family!r}")
    return BlochAngles(theta, phi)


def make_named_state(family: str, L: int, rng: np.random.Generator) -> StateVector:
    """Random or fixed product state from one of the named families."""
    return make_product_state(named_state_angles(family, L, rng))


def hamming_distance_table(L: int, center: int) -> np.ndarray:
    """d(i, center) for all basis integers i."""
    idx = np.arange(1 << L, dtype=np.uint64)
    return np.bitwise_count(idx ^ np.uint64(center)).astype(np.int64)


def make_hamming_state(
    L: int, alpha: float, center: int, normalize: bool = True
) -> StateVector:
    """Superposition with amplitudes exp(-alpha * HammingDistance(i, center))."""
    if not 0 <= center < (1 << L):
        raise ValueError("center out of range")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    d = hamming_distance_table(L, center)
    amps = np.exp(-alpha * d).astype(np.complex128)
    if normalize:
        amps /= np.linalg.norm(amps)
    return StateVector(L, amps)


def select_mid_spectrum_state(
    realization,
    basis: str,
    n_candidates: int = 100,
    rng: np.random.Generator | None = None,
):
    """Pick, among random product-state candidates of a family, the one
    whose energy is closest to the middle of the spectrum.

    ``basis`` accepts 'Z'/'X'/'Y' (mapped to the *-random families) or
    any named family.  Ties break on the lowest candidate index.
    Returns (state, energy, angles).
    """
    from . import models

    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    family = {"Z": "z-random", "X": "x-random", "Y": "y-random"}.get(basis, basis)
    if family not in STATE_FAMILIES:
        raise ValueError(f"unknown basis/family {basis!r}")

    L = realization.params.L
    e_min, e_max = models.energy_bounds(realization)
    target = 0.5 * (e_min + e_max)
    # ties (within float noise of the energy scale) keep the earlier draw
    tol = 1e-10 * max(1.0, abs(e_max - e_min))

    best = None
    for _ in range(n_candidates):
        ang = named_state_angles(family, L, rng)
        state = make_product_state(ang)
        h_psi = models.apply_hamiltonian(realization, state)
        energy = float(np.real(np.vdot(state.amplitudes, h_psi.amplitudes)))
        score = abs(energy - target)
        if best is None or score < best[0] - tol:
            best = (score, state, energy, ang)
    _, state, energy, ang = best
    return state, energy, ang
