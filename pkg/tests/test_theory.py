import numpy as np
import pytest

from mblmagic import harness, magic, theory
from mblmagic.qstate import BlochAngles, make_product_state
from mblmagic.theory import (
    anderson_site_factor,
    anderson_sre,
    collapse_factor,
    crossover_scan,
    delta_m2_asymptote_fit,
    fit_power_law_decay,
    fit_power_law_saturation,
    magic_gain,
)


# ---------------------------------------------------------------------------
# Anderson oracle


def test_site_factor_pole():
    assert anderson_site_factor(0.0, 0.0, 1.0, 5.0) == pytest.approx(2.0)


def test_site_factor_equator():
    # theta = pi/2, delta = pi/2: (4 - 0 - 1)/2 = 3/2
    assert anderson_site_factor(np.pi / 2, np.pi / 4, 0.0, 1.0) == pytest.approx(1.5)
    # same via h t: delta = 4ht + 2phi
    assert anderson_site_factor(np.pi / 2, 0.0, np.pi / 8, 1.0) == pytest.approx(1.5)


def test_site_factor_matches_density_matrix_oracle():
    rng = np.random.default_rng(3)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0, -1.0]).astype(complex)
    for _ in range(20):
        theta = rng.uniform(0, np.pi)
        phi = rng.uniform(0, 2 * np.pi)
        h = rng.uniform(-2, 2)
        t = rng.uniform(0, 50)
        # precessing pure state rho_k(t)
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        psi = np.array([c, s * np.exp(-1j * (2 * h * t + phi))]).conj()
        psi = np.array([c, np.exp(1j * (2 * h * t + phi)) * s])
        rho = np.outer(psi, psi.conj())
        ref = sum(np.trace(rho @ m).real ** 4 for m in (np.eye(2), sx, sy, sz))
        assert anderson_site_factor(theta, phi, h, t) == pytest.approx(ref, abs=1e-12)


def test_anderson_sre_t0_matches_product_state():
    rng = np.random.default_rng(5)
    for L in (1, 4, 8):
        theta = rng.uniform(0, np.pi, L)
        phi = rng.uniform(0, 2 * np.pi, L)
        ang = BlochAngles(theta, phi)
        st = make_product_state(ang)
        assert anderson_sre(ang, 1.0, 0.0) == pytest.approx(
            magic.sre(st, 2), abs=1e-8
        )


def test_anderson_sre_plus_state_zero_at_t0():
    ang = BlochAngles(np.full(4, np.pi / 2), np.zeros(4))
    assert anderson_sre(ang, 1.0, 0.0) == pytest.approx(0.0, abs=1e-10)


def test_anderson_sre_late_time_plateau():
    # X-polarized, W=1, t=1e6: per-site value 0.200048 bits
    ang = BlochAngles([np.pi / 2], [0.0])
    assert anderson_sre(ang, 1.0, 1e6) == pytest.approx(0.200048, abs=2e-5)


def test_anderson_sre_matches_simulation():
    # ensemble of non-interacting l-bit trajectories vs the quadrature
    L, n_real = 8, 800
    cfg = harness.RunConfig(
        model="lbit",
        L=L,
        xi=0.5,
        max_order=1,
        state_family="x-plus",
        t_min=0.1,
        t_max=100.0,
        per_decade=3,
        observables=("m2",),
        sre_method="product",
        n_realizations=n_real,
        base_seed=4,
    )
    rec = harness.run_ensemble(cfg)
    ang = BlochAngles(np.full(L, np.pi / 2), np.zeros(L))
    for t, m in zip(rec.times, rec.m2_mean):
        ref = anderson_sre(ang, 1.0, t)
        assert m == pytest.approx(ref, rel=0.03, abs=0.02)


def test_anderson_sre_validation():
    ang = BlochAngles([1.0], [0.0])
    with pytest.raises(ValueError):
        anderson_sre(ang, 0.0, 1.0)
    with pytest.raises(ValueError):
        anderson_sre(ang, 1.0, -1.0)


def test_magic_gain_pole_zero():
    assert magic_gain(BlochAngles([0.0], [0.0]), 1.0) == pytest.approx(0.0, abs=1e-9)


def test_magic_gain_extremes_on_equator():
    gains = {
        phi: magic_gain(BlochAngles([np.pi / 2], [phi]), 1.0)
        for phi in np.linspace(0, np.pi / 2, 9)
    }
    best = max(gains, key=gains.get)
    worst = min(gains, key=gains.get)
    assert best == pytest.approx(0.0)
    assert worst == pytest.approx(np.pi / 4)


# ---------------------------------------------------------------------------
# fits


def synthetic_saturation(m_sat=14.0, c=8.3178, beta=0.3466, n=40):
    t = np.geomspace(10, 2e4, n)
    return t, m_sat - c * t**-beta


def test_saturation_fit_noiseless():
    t, v = synthetic_saturation()
    fit = fit_power_law_saturation(t, v)
    assert fit.m_sat == pytest.approx(14.0, abs=1e-6)
    assert fit.c == pytest.approx(8.3178, abs=1e-5)
    assert fit.beta == pytest.approx(0.3466, abs=1e-6)
    assert fit.residual_rms < 1e-8


def test_saturation_fit_order_invariance():
    t, v = synthetic_saturation()
    perm = np.random.default_rng(0).permutation(len(t))
    fit = fit_power_law_saturation(t[perm], v[perm])
    assert fit.beta == pytest.approx(0.3466, abs=1e-6)


def test_saturation_fit_with_noise():
    t, v = synthetic_saturation(n=200)
    rng = np.random.default_rng(19)
    fit = fit_power_law_saturation(t, v + rng.normal(0, 0.05, len(t)))
    assert abs(fit.beta - 0.3466) < 3 * fit.beta_stderr


def test_saturation_fit_degenerate_constant():
    t = np.geomspace(10, 1e4, 20)
    fit = fit_power_law_saturation(t, np.full(20, 3.0))
    assert fit.degenerate
    assert fit.m_sat == pytest.approx(3.0)


def test_saturation_fit_needs_points():
    with pytest.raises(ValueError):
        fit_power_law_saturation([1, 2, 3], [1, 2, 3])


def test_decay_fit_exact():
    t = np.geomspace(1, 1e4, 30)
    fit = fit_power_law_decay(t, 2.0 * t**-0.3)
    assert fit.amplitude == pytest.approx(2.0, abs=1e-10)
    assert fit.lam == pytest.approx(0.3, abs=1e-10)


def test_decay_fit_constant():
    t = np.geomspace(1, 100, 20)
    fit = fit_power_law_decay(t, np.full(20, 0.7))
    assert abs(fit.lam) <= max(fit.lam_stderr, 1e-12)


def test_decay_fit_validation():
    with pytest.raises(ValueError):
        fit_power_law_decay([1, 2, 3], [1, 2, 3])
    t = np.geomspace(1, 10, 10)
    with pytest.raises(ValueError):
        fit_power_law_decay(t, np.linspace(-1, 1, 10))


def test_asymptote_fit_exact():
    L = np.array([6, 8, 10, 12])
    pref, lam, err = delta_m2_asymptote_fit(L, 3.0 * np.exp(-L * np.log(2)))
    assert lam == pytest.approx(np.log(2), abs=1e-10)
    assert pref == pytest.approx(3.0, abs=1e-9)


def test_asymptote_fit_scale_invariance():
    L = np.array([6, 8, 10, 12])
    d = 3.0 * np.exp(-L * 0.5)
    _, lam1, _ = delta_m2_asymptote_fit(L, d)
    _, lam2, _ = delta_m2_asymptote_fit(L, 2 * d)
    assert lam1 == pytest.approx(lam2, abs=1e-10)


# ---------------------------------------------------------------------------
# collapse and crossover


def test_collapse_identity():
    s = np.linspace(0, 3, 30)
    m = 1.0 + s**1.3
    res = collapse_factor((s, m), (s, m))
    assert res.f == pytest.approx(1.0)
    assert res.rms_deviation == pytest.approx(0.0, abs=1e-12)


def test_collapse_factor_two():
    s = np.linspace(0, 3, 30)
    m = 1.0 + s**1.3
    res = collapse_factor((s, m), (s, 2 * m))
    assert res.f == pytest.approx(2.0, abs=1e-12)


def test_collapse_scale_equivariance():
    rng = np.random.default_rng(1)
    s = np.sort(rng.uniform(0, 3, 25))
    m = np.cumsum(rng.uniform(0, 0.3, 25))
    s2 = np.sort(rng.uniform(0.2, 2.8, 25))
    m2 = np.interp(s2, s, m) * 1.4
    f1 = collapse_factor((s, m), (s2, m2)).f
    f2 = collapse_factor((s, m), (s2, 3.0 * m2)).f
    assert f2 == pytest.approx(3.0 * f1, rel=1e-12)


def test_collapse_no_overlap():
    with pytest.raises(ValueError):
        collapse_factor(([0, 1], [1, 2]), ([2, 3], [1, 2]))


class _Rec:
    def __init__(self, times, m2_mean):
        self.times = np.asarray(times, float)
        self.m2_mean = np.asarray(m2_mean, float)


def test_crossover_ergodic_input():
    times = [10.0, 100.0, 1000.0]
    records = {
        (L, W): _Rec(times, [magic.haar_sre2(L)] * 3)
        for L in (8, 10, 12)
        for W in (1.0, 5.0)
    }
    table = crossover_scan(records, 1000.0)
    assert all(abs(d) < 1e-12 for (_, _, d) in table.rows)
    assert all(abs(sl) < 1e-12 for sl in table.slopes.values())
    assert table.missing == []


def test_crossover_slope_signs():
    times = [1000.0]
    records = {}
    for L in (8, 10, 12):
        records[(L, 1.0)] = _Rec(times, [magic.haar_sre2(L) - 10.0 / L])  # shrinking
        records[(L, 8.0)] = _Rec(times, [magic.haar_sre2(L) - 0.3 * L])  # growing
    table = crossover_scan(records, 1000.0)
    assert table.slopes[1.0] < 0
    assert table.slopes[8.0] > 0


def test_crossover_missing_cells_reported():
    records = {(8, 1.0): _Rec([1000.0], [5.0]), (10, 2.0): _Rec([1000.0], [7.0])}
    table = crossover_scan(records, 1000.0)
    assert (8, 2.0) in table.missing and (10, 1.0) in table.missing


def test_crossover_requires_t_eval():
    records = {(8, 1.0): _Rec([10.0, 100.0], [5.0, 5.5])}
    with pytest.raises(ValueError):
        crossover_scan(records, 1000.0)
