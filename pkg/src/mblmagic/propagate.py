"""Time evolution engines and the evolve-and-measure driver.

Chebyshev propagation (TFIM): H rescaled to H~ = (H - b)/a with
b = (E_max + E_min)/2, a = (E_max - E_min)/2; then

    e^{-iHt}|psi> = e^{-ibt} sum_k (2 - delta_k0) (-i)^k J_k(a t) T_k(H~)|psi>

truncated once |c_k| < tol for 3 consecutive k beyond k > a*t.
l-bit evolution is exact diagonal phase multiplication.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.special import jv

from . import entangle, magic, models
from .qstate import BlochAngles, StateVector

logger = logging.getLogger(__name__)

OBSERVABLES = ("m2", "s", "wz")

# one Chebyshev expansion per grid gap; gaps longer than this (in units
# of 1/a) are subdivided to keep Bessel orders manageable
MAX_SCALED_STEP = 1e3


@dataclass
class TimeGrid:
    times: np.ndarray
    t_min: float
    t_max: float
    per_decade: int

    def __len__(self) -> int:
        return len(self.times)


@dataclass
class TimeSeries:
    """Observable trajectories on a grid for one realization.
    m2 in bits, s in nats, wz dimensionless; absent observables None."""

    grid: TimeGrid
    seed: int
    m2: np.ndarray | None = None
    s: np.ndarray | None = None
    wz: np.ndarray | None = None
    meta: dict = field(default_factory=dict)


def make_time_grid(
    t_min: float = 0.1, t_max: float = 2e4, per_decade: int = 10
) -> TimeGrid:
    """Geometric grid, per_decade points per decade, t_max appended.
    Interior points within half a log-step of t_max are dropped."""
    if not 0 < t_min < t_max:
        raise ValueError("need 0 < t_min < t_max")
    if per_decade < 1:
        raise ValueError("per_decade must be >= 1")
    n = int(np.floor(per_decade * np.log10(t_max / t_min) + 1e-9))
    times = t_min * 10.0 ** (np.arange(n + 1) / per_decade)
    cutoff = t_max / 10.0 ** (0.5 / per_decade)
    times = times[times <= cutoff]
    times = np.append(times, t_max)
    return TimeGrid(times, t_min, t_max, per_decade)


def _bessel_terms(tau: float, tol: float) -> tuple[np.ndarray, int]:
    """Bessel coefficient table and truncation order: the series stops
    once |c_k| = 2|J_k(tau)| < tol for 3 consecutive k beyond k > tau."""
    k_guess = int(tau + 40 + 12 * tau ** (1.0 / 3.0))
    while True:
        ks = np.arange(k_guess + 1)
        bessel = jv(ks, tau)
        small = np.abs(bessel) < 0.5 * tol
        run = 0
        for k in range(len(ks)):
            if k > tau and small[k]:
                run += 1
                if run == 3:
                    return bessel, k - 2
            else:
                run = 0
        k_guess *= 2
        if k_guess > 10_000_000:
            raise RuntimeError("Chebyshev series failed to truncate")


def _cheb_coefficients(bessel: np.ndarray, n_terms: int) -> np.ndarray:
    """c_k = (2 - delta_k0) (-i)^k J_k(tau) for k < n_terms."""
    ks = np.arange(n_terms)
    c = bessel[:n_terms] * (-1j) ** (ks % 4)
    c[1:] *= 2.0
    return c.astype(np.complex128)


def chebyshev_step(
    apply_h,
    bounds: tuple[float, float],
    state: StateVector,
    dt: float,
    tol: float = 1e-10,
) -> StateVector:
    """One Chebyshev expansion of e^{-iH dt}|psi>.

    apply_h: callable mapping a complex array to H times that array.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    e_min, e_max = bounds
    b = 0.5 * (e_max + e_min)
    a = 0.5 * (e_max - e_min)
    if a <= 0:
        # H proportional to identity within the bounds: pure phase
        return StateVector(state.n_qubits, state.amplitudes * np.exp(-1j * b * dt))
    tau = a * dt
    bessel, n_terms = _bessel_terms(tau, tol)
    phase = np.exp(-1j * b * dt)
    c = _cheb_coefficients(bessel, max(n_terms, 2))
    inv_a = 1.0 / a
    psi = state.amplitudes
    phi_prev = psi
    phi_cur = (apply_h(psi) - b * psi) * inv_a
    acc = c[0] * phi_prev + c[1] * phi_cur
    for k in range(2, n_terms):
        phi_next = 2.0 * inv_a * (apply_h(phi_cur) - b * phi_cur) - phi_prev
        phi_prev, phi_cur = phi_cur, phi_next
        acc = acc + c[k] * phi_cur
    out = phase * acc

    nrm = np.linalg.norm(out)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-3:
        raise RuntimeError(
            f"Chebyshev norm blow-up (norm={nrm}); spectral bounds violated?"
        )
    if abs(nrm - 1.0) > 1e-12:
        logger.debug("renormalizing Chebyshev output, drift %.3e", nrm - 1.0)
        out = out / nrm
    return StateVector(state.n_qubits, out)


@njit(cache=True)
def _cheb_tfim_kernel(diag, g, L, psi, coeffs, b, inv_a):
    """Fused Chebyshev recurrence for the TFIM (diagonal + g X-flips)."""
    n = psi.size
    phi_prev = psi.copy()
    phi_cur = np.empty(n, dtype=np.complex128)
    acc = np.empty(n, dtype=np.complex128)
    for m in range(n):
        v = (diag[m] - b) * psi[m]
        for i in range(L):
            v += g * psi[m ^ (1 << i)]
        phi_cur[m] = v * inv_a
        acc[m] = coeffs[0] * phi_prev[m] + coeffs[1] * phi_cur[m]
    for k in range(2, len(coeffs)):
        ck = coeffs[k]
        for m in range(n):
            v = (diag[m] - b) * phi_cur[m]
            for i in range(L):
                v += g * phi_cur[m ^ (1 << i)]
            v = 2.0 * inv_a * v - phi_prev[m]
            phi_prev[m] = v  # reuse as phi_next slot, swapped below
            acc[m] += ck * v
        phi_prev, phi_cur = phi_cur, phi_prev
    return acc


def _chebyshev_step_tfim(
    realization, bounds, state: StateVector, dt: float, tol: float
) -> StateVector:
    """chebyshev_step specialised to the TFIM via a fused numba kernel."""
    e_min, e_max = bounds
    b = 0.5 * (e_max + e_min)
    a = 0.5 * (e_max - e_min)
    if a <= 0:
        return StateVector(state.n_qubits, state.amplitudes * np.exp(-1j * b * dt))
    bessel, n_terms = _bessel_terms(a * dt, tol)
    coeffs = _cheb_coefficients(bessel, max(n_terms, 2))
    out = _cheb_tfim_kernel(
        models._cached_diag(realization),
        realization.params.g,
        realization.params.L,
        state.amplitudes.astype(np.complex128),
        coeffs,
        b,
        1.0 / a,
    )
    out *= np.exp(-1j * b * dt)
    nrm = np.linalg.norm(out)
    if not np.isfinite(nrm) or abs(nrm - 1.0) > 1e-3:
        raise RuntimeError(
            f"Chebyshev norm blow-up (norm={nrm}); spectral bounds violated?"
        )
    if abs(nrm - 1.0) > 1e-12:
        logger.debug("renormalizing Chebyshev output, drift %.3e", nrm - 1.0)
        out /= nrm
    return StateVector(state.n_qubits, out)


def chebyshev_evolve_tfim(
    realization, bounds, state: StateVector, dt: float, tol: float = 1e-10
) -> StateVector:
    """TFIM evolution by dt with gap subdivision (fused kernel path)."""
    a = 0.5 * (bounds[1] - bounds[0])
    n_sub = max(1, int(np.ceil(dt * max(a, 1e-30) / MAX_SCALED_STEP)))
    for _ in range(n_sub):
        state = _chebyshev_step_tfim(realization, bounds, state, dt / n_sub, tol)
    return state


def chebyshev_evolve(
    apply_h,
    bounds: tuple[float, float],
    state: StateVector,
    dt: float,
    tol: float = 1e-10,
) -> StateVector:
    """Evolve by dt, subdividing overly long gaps."""
    a = 0.5 * (bounds[1] - bounds[0])
    n_sub = max(1, int(np.ceil(dt * max(a, 1e-30) / MAX_SCALED_STEP)))
    for _ in range(n_sub):
        state = chebyshev_step(apply_h, bounds, state, dt / n_sub, tol)
    return state


def diagonal_evolve(
    energy_table: np.ndarray, state: StateVector, t: float
) -> StateVector:
    """Exact diagonal evolution: amplitudes times e^{-i E[n] t}."""
    if len(energy_table) != state.dim:
        raise ValueError("energy table length mismatch")
    return StateVector(state.n_qubits, state.amplitudes * np.exp(-1j * energy_table * t))


# ---------------------------------------------------------------------------
# evolve-and-measure


def _measure(
    state: StateVector,
    observables,
    sre_method: str,
    sre_samples: int,
    cut: int,
    rng,
) -> dict:
    out = {}
    if "m2" in observables:
        if sre_method == "exact":
            out["m2"] = magic.sre(state, 2)
        elif sre_method == "sampled":
            est = magic.sre2_sampled(state, sre_samples, rng)
            out["m2"] = est.estimate
        else:
            raise ValueError(f"bad sre_method {sre_method!r} for full states")
    if "s" in observables:
        out["s"] = entangle.entanglement_entropy(state, cut)
    if "wz" in observables:
        out["wz"] = magic.w_z(state)
    return out


def _product_lbit_series(
    realization: models.DisorderRealization,
    angles: BlochAngles,
    grid: TimeGrid,
    observables,
    seed: int,
) -> TimeSeries:
    """O(L) fast path for non-interacting l-bit dynamics of a product
    state: each site precesses as rho_k(t) with phase 2 h_k t."""
    h = realization.h
    th = angles.theta
    bz = np.cos(th)
    series = {name: np.empty(len(grid)) for name in observables}
    for j, t in enumerate(grid.times):
        delta = 2.0 * h * t + angles.phi
        bx = np.sin(th) * np.cos(delta)
        by = np.sin(th) * np.sin(delta)
        if "m2" in observables:
            site_sums = 1.0 + bx**4 + by**4 + bz**4
            series["m2"][j] = -np.sum(np.log2(site_sums / 2.0))
        if "s" in observables:
            series["s"][j] = 0.0
        if "wz" in observables:
            series["wz"][j] = np.prod((1.0 + bz**2) / 2.0)
    return TimeSeries(
        grid,
        seed,
        m2=series.get("m2"),
        s=series.get("s"),
        wz=series.get("wz"),
        meta={"fast_path": "product"},
    )


def evolve_and_measure(
    realization: models.DisorderRealization,
    initial_state: StateVector | BlochAngles,
    grid: TimeGrid,
    observables=("m2", "s"),
    sre_method: str = "exact",
    sre_samples: int = 15000,
    cheb_tol: float = 1e-10,
    sampling_rng: np.random.Generator | None = None,
    seed: int = 0,
) -> TimeSeries:
    """Step through the grid, evaluating observables at each time.

    sre_method 'product' is valid only for non-interacting l-bit
    dynamics from a product state (pass BlochAngles as initial_state).
    """
    for name in observables:
        if name not in OBSERVABLES:
            raise ValueError(f"unknown observable {name!r}")

    if sre_method == "product":
        if realization.is_tfim or realization.couplings:
            raise ValueError("product fast path requires non-interacting l-bit model")
        if not isinstance(initial_state, BlochAngles):
            raise ValueError("product fast path requires BlochAngles input")
        return _product_lbit_series(realization, initial_state, grid, observables, seed)

    if isinstance(initial_state, BlochAngles):
        from .qstate import make_product_state

        initial_state = make_product_state(initial_state)

    L = realization.params.L
    cut = L // 2
    series = {name: np.empty(len(grid)) for name in observables}

    if realization.is_tfim:
        bounds = models.energy_bounds(realization)
        state = initial_state
        t_prev = 0.0
        for j, t in enumerate(grid.times):
            state = chebyshev_evolve_tfim(realization, bounds, state, t - t_prev, cheb_tol)
            t_prev = t
            vals = _measure(state, observables, sre_method, sre_samples, cut, sampling_rng)
            for name, v in vals.items():
                series[name][j] = v
    else:
        table = models._cached_diag(realization)
        for j, t in enumerate(grid.times):
            state = diagonal_evolve(table, initial_state, t)
            vals = _measure(state, observables, sre_method, sre_samples, cut, sampling_rng)
            for name, v in vals.items():
                series[name][j] = v

    return TimeSeries(
        grid,
        seed,
        m2=series.get("m2"),
        s=series.get("s"),
        wz=series.get("wz"),
    )
