"""Analytical oracles and statistical analyses.

Contains the Anderson-insulator SRE quadrature, the nonstabilizerness
gain, power-law saturation/decay fits, the entanglement-clock collapse
factor and the ETH-MBL crossover scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.stats import linregress

from . import magic
from .qstate import BlochAngles

PLATEAU_WINDOW = (1e5, 1e6)
PLATEAU_POINTS = 5


@dataclass
class SaturationFit:
    """Fit of M(t) = M_sat - c * t^{-beta} over a time window."""

    m_sat: float  # bits
    c: float  # bits
    beta: float
    beta_stderr: float
    window: tuple[float, float]
    residual_rms: float
    degenerate: bool = False


@dataclass
class DecayFit:
    """Power-law decay W_Z = amplitude * t^{-lam}."""

    amplitude: float
    lam: float
    lam_stderr: float


@dataclass
class CollapseResult:
    """Rescale factor aligning a target M2(S) curve with a reference."""

    f: float
    s_grid: np.ndarray
    rms_deviation: float


@dataclass
class CrossoverTable:
    rows: list  # (L, W, delta_m2)
    slopes: dict  # W -> d(delta_m2)/dL
    missing: list  # (L, W) cells absent from the input


# ---------------------------------------------------------------------------
# Anderson oracle


def anderson_site_factor(theta: float, phi: float, h: float, t: float) -> float:
    """Single-site sum of 4th-power Pauli expectations under precession:
    (4 - sin^2(2 theta) - sin^4(theta) sin^2(delta)) / 2, delta = 4ht + 2phi."""
    delta = 4.0 * h * t + 2.0 * phi
    return 0.5 * (
        4.0 - np.sin(2.0 * theta) ** 2 - np.sin(theta) ** 4 * np.sin(delta) ** 2
    )


def _site_sre(theta: float, phi: float, W: float, t: float, epsabs: float) -> float:
    """-(1/W) integral_0^W log2(factor/2) dh for one site.

    The integrand is pi-periodic in delta = 4ht + 2phi, so the integral
    splits into whole periods plus a remainder; accurate for any t."""
    A = 1.0 - 0.25 * np.sin(2.0 * theta) ** 2
    B = 0.25 * np.sin(theta) ** 4

    def g(delta):
        return np.log2(A - B * np.sin(delta) ** 2)

    if t == 0.0:
        return -g(2.0 * phi)
    lam = 4.0 * W * t  # total delta span
    d0 = 2.0 * phi
    n_periods = int(lam // np.pi)
    total = 0.0
    if n_periods > 0:
        per, _ = quad(g, 0.0, np.pi, epsabs=epsabs, limit=200)
        total += n_periods * per
    rem, _ = quad(g, d0 + n_periods * np.pi, d0 + lam, epsabs=epsabs, limit=200)
    total += rem
    return -total / lam


def anderson_sre(
    angles: BlochAngles, W: float, t: float, epsabs: float = 1e-10
) -> float:
    """Disorder-averaged SRE-2 (bits) of a non-interacting l-bit chain:
    per-site quadrature over the uniform field h in [0, W], summed."""
    if W <= 0:
        raise ValueError("W must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    return float(
        sum(
            _site_sre(float(th), float(ph), W, t, epsabs)
            for th, ph in zip(angles.theta, angles.phi)
        )
    )


def magic_gain(angles: BlochAngles, W: float) -> float:
    """Long-time plateau of the Anderson SRE minus its t=0 value.
    The plateau is averaged over a late-time window."""
    t_lo, t_hi = PLATEAU_WINDOW
    ts = np.geomspace(t_lo, t_hi, PLATEAU_POINTS)
    plateau = float(np.mean([anderson_sre(angles, W, t) for t in ts]))
    return plateau - anderson_sre(angles, W, 0.0)


# ---------------------------------------------------------------------------
# fits


def _saturation_rss(beta: float, t: np.ndarray, v: np.ndarray):
    design = np.column_stack([np.ones_like(t), -(t**-beta)])
    coef, _, _, _ = np.linalg.lstsq(design, v, rcond=None)
    resid = v - design @ coef
    return float(np.dot(resid, resid)), coef


def fit_power_law_saturation(
    times, values, window: tuple[float, float] = (10.0, np.inf)
) -> SaturationFit:
    """Least-squares fit of M(t) = M_sat - c / t^beta.

    Outer grid plus golden-section search over beta in [0.01, 2] with a
    closed-form inner solve for (M_sat, c)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    order = np.argsort(times)
    times, values = times[order], values[order]
    sel = (times >= window[0]) & (times <= window[1])
    t, v = times[sel], values[sel]
    if len(t) < 8:
        raise ValueError("need >= 8 points in the fit window")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite values in fit window")
    if np.ptp(v) < 1e-12:
        return SaturationFit(
            float(np.mean(v)), 0.0, np.nan, np.nan, (t[0], t[-1]), 0.0, degenerate=True
        )

    betas = np.linspace(0.01, 2.0, 64)
    rss = np.array([_saturation_rss(b, t, v)[0] for b in betas])
    i = int(np.argmin(rss))
    lo = betas[max(i - 1, 0)]
    hi = betas[min(i + 1, len(betas) - 1)]
    res = minimize_scalar(
        lambda b: _saturation_rss(b, t, v)[0],
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10},
    )
    beta = float(res.x)
    best_rss, coef = _saturation_rss(beta, t, v)
    m_sat, c = float(coef[0]), float(coef[1])

    # stderr from the curvature of RSS(beta) at the minimum
    db = max(1e-4, 1e-3 * beta)
    rp = _saturation_rss(min(beta + db, 2.0), t, v)[0]
    rm = _saturation_rss(max(beta - db, 0.01), t, v)[0]
    curv = (rp - 2 * best_rss + rm) / db**2
    dof = max(len(t) - 3, 1)
    sigma2 = best_rss / dof
    beta_stderr = float(np.sqrt(2 * sigma2 / curv)) if curv > 0 else np.inf

    return SaturationFit(
        m_sat,
        c,
        beta,
        beta_stderr,
        (float(t[0]), float(t[-1])),
        float(np.sqrt(best_rss / len(t))),
    )


def fit_power_law_decay(times, values) -> DecayFit:
    """W_Z = a * t^{-lam} via linear regression in log-log space."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 8:
        raise ValueError("need >= 8 points")
    if np.any(values <= 0) or np.any(times <= 0):
        raise ValueError("power-law decay fit requires positive data")
    res = linregress(np.log(times), np.log(values))
    return DecayFit(float(np.exp(res.intercept)), -float(res.slope), float(res.stderr))


def delta_m2_asymptote_fit(L_values, deltas) -> tuple[float, float, float]:
    """Exponential size decay of the residual Haar deviation:
    delta = prefactor * exp(-lam_exp * L).  Returns
    (prefactor, lam_exp, lam_stderr)."""
    L_values = np.asarray(L_values, dtype=float)
    deltas = np.asarray(deltas, dtype=float)
    if len(L_values) < 3:
        raise ValueError("need >= 3 system sizes")
    if np.any(deltas <= 0):
        raise ValueError("residual deviations must be positive")
    res = linregress(L_values, np.log(deltas))
    return float(np.exp(res.intercept)), -float(res.slope), float(res.stderr)


# ---------------------------------------------------------------------------
# collapse and crossover


def _clean_curve(s: np.ndarray, m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sort by S and keep strictly increasing S points."""
    order = np.argsort(s)
    s, m = s[order], m[order]
    keep = np.concatenate([[True], np.diff(s) > 0])
    return s[keep], m[keep]


def collapse_factor(reference, target, n_grid: int = 64) -> CollapseResult:
    """Rescale factor f minimizing sum (M_target/f - M_reference)^2 on a
    common S grid over the overlap of the two curves."""
    s_ref, m_ref = _clean_curve(
        np.asarray(reference[0], float), np.asarray(reference[1], float)
    )
    s_tgt, m_tgt = _clean_curve(
        np.asarray(target[0], float), np.asarray(target[1], float)
    )
    lo = max(s_ref[0], s_tgt[0])
    hi = min(s_ref[-1], s_tgt[-1])
    if not lo < hi:
        raise ValueError("no S-range overlap between curves")
    grid = np.linspace(lo, hi, n_grid)
    r = np.interp(grid, s_ref, m_ref)
    g = np.interp(grid, s_tgt, m_tgt)
    denom = float(np.dot(g, r))
    if denom == 0:
        raise ValueError("degenerate curves: zero cross-correlation")
    f = float(np.dot(g, g)) / denom
    rms = float(np.sqrt(np.mean((g / f - r) ** 2)))
    return CollapseResult(f, grid, rms)


def crossover_scan(records: dict, t_eval: float) -> CrossoverTable:
    """Haar deviation table over (L, W) records at time t_eval.

    ``records`` maps (L, W) to any object with ``times`` and an
    ``m2_mean`` array (EnsembleRecord satisfies this).  Emits per-W
    linear-in-L slopes; missing grid cells are reported, not filled."""
    rows = []
    for (L, W), rec in sorted(records.items()):
        times = np.asarray(rec.times, dtype=float)
        j = int(np.argmin(np.abs(times - t_eval)))
        if not np.isclose(times[j], t_eval, rtol=1e-6):
            raise ValueError(f"record ({L},{W}) does not contain t_eval={t_eval}")
        m2 = float(np.asarray(rec.m2_mean)[j])
        rows.append((L, W, magic.haar_sre2(L) - m2))

    Ls = sorted({L for L, _ in records})
    Ws = sorted({W for _, W in records})
    missing = [(L, W) for L in Ls for W in Ws if (L, W) not in records]
    slopes = {}
    for W in Ws:
        pts = [(L, d) for (L, w, d) in rows if w == W]
        if len(pts) >= 2:
            xs, ys = zip(*pts)
            slopes[W] = float(np.polyfit(xs, ys, 1)[0])
    return CrossoverTable(rows, slopes, missing)
