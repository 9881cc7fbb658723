import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy.linalg import expm

from momentstab import langmuir as lg
from momentstab.errors import BracketNotFound, NoBoundState, SpecError
from momentstab.moment_ops import build_moment_operator
from momentstab.spectral import spectral_abscissa

pos = st.floats(0.1, 3.0)
nonneg = st.floats(0.0, 2.0)


# dispersion with constant correlation

@given(pos, nonneg, nonneg, st.floats(1e-4, 2.0))
def test_quartic_roots_have_small_residual(m, k1, k2, s2):
    r = lg.dispersion_complete_correlation(m, k1, k2, s2)
    e1, e2 = lg.epsilon_k(m, k1), lg.epsilon_k(m, k2)
    scale = max(1.0, (e1 + e2) ** 4)
    assert np.all(lg.quartic_residual(r.roots, e1, e2, s2) <= 1e-11 * scale)


@given(pos, nonneg, nonneg)
def test_zero_noise_is_pure_oscillation(m, k1, k2):
    r = lg.dispersion_complete_correlation(m, k1, k2, 0.0)
    freqs = lg.dispersion_zero_noise(m, k1, k2)
    assert np.allclose(np.sort(r.roots.imag), np.sort(freqs), atol=1e-7)
    assert np.all(np.abs(r.roots.real) < 1e-7)


@given(pos, nonneg, st.floats(1e-4, 1.0))
def test_equal_modes_always_grow(m, k, s2):
    r = lg.dispersion_complete_correlation(m, k, k, s2)
    real_pos = [z for z in r.roots if abs(z.imag) < 1e-9 and z.real > 0]
    assert len(real_pos) == 1
    assert r.classification == "unstable"
    # l = 0 is always a root when e1 = e2; the rest solve the cubic
    cubic = lg.dominant_mode_cubic_roots(m, k, s2)
    assert max(cubic.real) == pytest.approx(r.max_real, rel=1e-9)


def test_small_noise_growth():
    r = lg.dispersion_complete_correlation(1.0, 0.0, 0.0, 1e-2)
    assert r.max_real == pytest.approx(5e-3, rel=1e-4)


@pytest.mark.parametrize("k", [2.0, 5.0, 10.0])
def test_large_k_asymptotic(k):
    s2 = 0.1
    exact = lg.dispersion_complete_correlation(1.0, k, k, s2).max_real
    assert lg.asymptotic_growth_large_k(1.0, k, s2) == pytest.approx(exact, rel=0.02)


def test_asymptotic_warns_outside_validity():
    with pytest.warns(RuntimeWarning):
        lg.asymptotic_growth_large_k(1.0, 0.0, 1.0)


@pytest.mark.parametrize("k2", [0.5, 2.0])
def test_unequal_modes_grow_at_first_order(k2):
    # perturbing the root i(e1 - e2) of the quartic gives d l = s2 / (4 e1 e2)
    s2 = 1e-4
    e1, e2 = lg.epsilon_k(1.0, 0.0), lg.epsilon_k(1.0, k2)
    r = lg.dispersion_complete_correlation(1.0, 0.0, k2, s2)
    assert r.max_real == pytest.approx(s2 / (4 * e1 * e2), rel=1e-3)


def test_input_validation():
    with pytest.raises(SpecError):
        lg.epsilon_k(0.0, 1.0)
    with pytest.raises(SpecError):
        lg.dispersion_complete_correlation(1.0, 0.0, 0.0, -1.0)
    with pytest.raises(SpecError):
        lg.LangmuirProblem(1.0, -0.1)
    with pytest.raises(SpecError):
        lg.CorrelationProfile("lorentzian", 1.0)
    with pytest.raises(SpecError):
        lg.CorrelationProfile("gaussian", 1.0, 0.0)


def test_companion_roots_match_known_polynomial():
    roots = lg.companion_roots([1.0, -6.0, 11.0, -6.0])
    assert np.allclose(np.sort(roots.real), [1.0, 2.0, 3.0])
    assert lg.companion_roots([0.0, 0.0, 2.0]).size == 0


# periodic field as a generic linear SDE

@pytest.mark.parametrize("points", [2, 4])
@pytest.mark.parametrize("s2", [0.1, 1.0])
def test_periodic_field_operator_matches_quartic(points, s2):
    sys = lg.periodic_field_system(1.0, s2, points, 5.0)
    op = build_moment_operator(sys, 2)
    assert spectral_abscissa(op.matrix) == pytest.approx(
        lg.periodic_max_growth(1.0, s2, points, 5.0), abs=1e-10)


def test_periodic_field_second_moments_grow_at_quartic_rate():
    s2 = 1.0
    sys = lg.periodic_field_system(1.0, s2, 2, 5.0)
    op = build_moment_operator(sys, 2)
    y0 = np.zeros(op.basis.size)
    y0[op.basis.lookup((0, 0))] = 1.0
    t1, t2 = 20.0, 30.0
    n1 = np.linalg.norm(expm(op.matrix * t1) @ y0)
    n2 = np.linalg.norm(expm(op.matrix * t2) @ y0)
    rate = math.log(n2 / n1) / (t2 - t1)
    assert rate == pytest.approx(lg.periodic_max_growth(1.0, s2, 2, 5.0), rel=0.02)


# white noise

@pytest.mark.parametrize("k", [0.5, 1.0, 2.0])
def test_white_noise_threshold_flip(k):
    th = lg.white_noise_threshold(1.0, k)
    assert th == 4 * k * k * (4 + k * k)
    s = math.sqrt(th)
    assert lg.white_noise_growth(1.0, k, s * (1 - 1e-7)).classification == "stable"
    assert lg.white_noise_growth(1.0, k, s).classification == "marginal"
    above = lg.white_noise_growth(1.0, k, s * (1 + 1e-7))
    assert above.classification == "unstable" and above.max_real > 0


@given(pos, st.floats(0.0, 3.0), st.floats(0.0, 20.0))
def test_white_noise_roots_satisfy_jump_condition(m, k, s2):
    # psi = exp(-alpha |z|) bound by the delta well of -s psi'' - s2 delta psi / (2 lam),
    # s = 1 + k^2 / lam^2, has E = -s alpha^2; growth needs E = -(m^2 + k^2/4 + lam^2/4)
    r = lg.white_noise_growth(m, k, s2)
    for lam in r.roots:
        if not lam.real > 1e-6:
            continue
        alpha = lg.white_noise_decay(lam, m, k, s2)
        assert alpha.real > 0
        s = 1 + (k / lam) ** 2
        lhs = s * alpha ** 2
        rhs = m * m + k * k / 4 + lam * lam / 4
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_white_noise_k0_value():
    # k = 0: l^2 = -2 + sqrt(4 + s^4 / 4); at s2 = 2: l^2 = -2 + sqrt(5)
    r = lg.white_noise_growth(1.0, 0.0, 2.0)
    assert r.max_real == pytest.approx(math.sqrt(math.sqrt(5) - 2), rel=1e-12)


def test_white_noise_is_marginal_at_zero_noise_k0():
    assert lg.white_noise_growth(1.0, 0.0, 0.0).classification == "marginal"


# appendix algebra

@given(st.floats(0.5, 3.0))
def test_appendix_identities_hold(eps):
    assert max(lg.appendix_identities(eps).values()) < 1e-12


@given(st.floats(0.5, 3.0), st.floats(0.5, 3.0), st.floats(0.0, 2.0))
def test_appendix_matrix_matches_quartic(e1, e2, s2):
    assert lg.appendix_dispersion_check(e1, e2, s2) < 1e-9
    char = np.poly(lg.appendix_matrix(e1, e2, s2))
    assert np.allclose(char, lg.quartic_coefficients(e1, e2, s2), atol=1e-9)


# correlation profiles

@pytest.mark.parametrize("kind", lg.LOCALIZED_KINDS)
def test_profile_integrals_and_cell_averages(kind):
    prof = lg.CorrelationProfile(kind, 1.7, 0.8)
    quad, _ = integrate.quad(prof, -50, 50, points=[-0.8, 0, 0.8], limit=200)
    assert prof.integral() == pytest.approx(quad, rel=1e-8)
    centers = np.array([-1.0, -0.8, 0.0, 0.3, 0.8, 2.0])
    h = 0.1
    for x, avg in zip(centers, prof.cell_average(centers, h)):
        q, _ = integrate.quad(prof, x - h / 2, x + h / 2, points=[-0.8, 0.8])
        assert avg == pytest.approx(q / h, abs=1e-12)


@given(st.sampled_from(lg.LOCALIZED_KINDS), st.floats(-20, 20))
def test_profiles_are_even_nonnegative(kind, x):
    prof = lg.CorrelationProfile(kind, 1.0, 1.3)
    assert prof(x) == prof(-x) >= 0


# bound states

@pytest.mark.parametrize("depth, half", [(2.0, 1.0), (0.5, 2.0), (8.0, 0.5)])
def test_square_well_matches_analytic_root(depth, half):
    lam = 0.5
    prof = lg.CorrelationProfile("rectangular", 2 * lam * depth, half)
    got = lg.bound_state_energy(prof, lam)
    assert got == pytest.approx(lg.square_well_energy(depth, half), abs=1e-6)


def test_weak_well_limit():
    # shallow 1D wells bind with E ~ -(int V / 2)^2
    prof = lg.CorrelationProfile("gaussian", 1.0, 1.0)
    lam = 20.0
    strength = prof.integral() / (2 * lam)
    assert lg.bound_state_energy(prof, lam) == pytest.approx(-(strength / 2) ** 2, rel=0.1)


def test_energy_increases_with_lambda():
    prof = lg.CorrelationProfile("exponential", 1.0, 0.5)
    e = [lg.bound_state_energy(prof, lam, points=2048) for lam in np.linspace(0.1, 3.0, 15)]
    assert np.all(np.diff(e) > 0)


def test_bound_state_guards():
    prof = lg.CorrelationProfile("gaussian", 1.0, 1.0)
    with pytest.raises(SpecError):
        lg.bound_state_energy(prof, 1.0, half_width=5.0)
    with pytest.raises(SpecError):
        lg.bound_state_energy(prof, 1.0, points=100)
    with pytest.raises(SpecError):
        lg.bound_state_energy(prof, -1.0)
    with pytest.raises(SpecError):
        lg.bound_state_energy(lg.CorrelationProfile("constant", 1.0), 1.0)
    with pytest.raises(NoBoundState):
        lg.bound_state_energy(lg.CorrelationProfile("gaussian", 0.0, 1.0), 1.0)


def test_growth_rate_k0_root():
    prob = lg.LangmuirProblem(1.0, 0.0, lg.CorrelationProfile("gaussian", 1.0, 1.0))
    gr = lg.find_growth_rate_k0(prob)
    assert gr.lam > 0
    assert gr.residual <= 1e-8
    assert gr.energy == pytest.approx(-(1.0 + gr.lam ** 2 / 4), abs=1e-8)
    # frozen from an N = 16384 run
    assert gr.lam == pytest.approx(0.281787, abs=2e-6)


def test_growth_rate_increases_with_amplitude():
    lams = [lg.find_growth_rate_k0(lg.LangmuirProblem(
        1.0, 0.0, lg.CorrelationProfile("gaussian", c, 1.0)), points=2048).lam
        for c in (0.5, 1.0, 2.0)]
    assert lams[0] < lams[1] < lams[2]


def test_growth_rate_needs_amplitude():
    prob = lg.LangmuirProblem(1.0, 0.0, lg.CorrelationProfile("gaussian", 0.0, 1.0))
    with pytest.raises(BracketNotFound):
        lg.find_growth_rate_k0(prob)


def test_matching_scan_changes_sign_once():
    prob = lg.LangmuirProblem(1.0, 0.0, lg.CorrelationProfile("gaussian", 1.0, 1.0))
    rows = lg.growth_matching_scan(prob, np.geomspace(0.01, 5, 30), points=2048)
    res = np.array([r[2] for r in rows])
    assert np.sum(np.diff(np.sign(res)) != 0) == 1


# k > 0

@pytest.mark.slow
def test_threshold_nondecreasing_in_k():
    prob = lg.LangmuirProblem(1.0, 0.0, lg.CorrelationProfile("gaussian", 0.5, 1.0))
    cs = [lg.stability_threshold_k(prob, k, points=512).critical_amplitude
          for k in (0.1, 0.5, 1.0, 2.0)]
    assert all(b >= a for a, b in zip(cs, cs[1:]))


def test_threshold_verdicts():
    prob = lg.LangmuirProblem(1.0, 0.0, lg.CorrelationProfile("gaussian", 0.5, 1.0))
    low = lg.stability_threshold_k(prob, 0.25, points=512)
    assert low.verdict == "unstable" and low.critical_amplitude < 0.5 and low.lam > 0
    high = lg.stability_threshold_k(prob, 2.0, points=512)
    assert high.verdict == "stable" and high.lam is None
    assert high.critical_amplitude > 0.5
    assert lg.stability_verdict_k(prob, 2.0, points=1024)[0] == "stable"


# grids

def test_parse_grid():
    assert np.allclose(lg.parse_grid("0:1:5"), [0, 0.25, 0.5, 0.75, 1.0])
    for bad in ("0:1", "a:b:c", "0:1:0"):
        with pytest.raises(SpecError):
            lg.parse_grid(bad)


def test_stability_map_rows():
    rows = lg.stability_map(1.0, [1.0, 0.0], [0.5, 0.0], "constant")
    assert [(r[0], r[1]) for r in rows] == [(0.0, 0.0), (0.0, 0.5), (1.0, 0.0), (1.0, 0.5)]
    assert rows[0][3] == "marginal" and rows[1][3] == "unstable"
    white = lg.stability_map(1.0, [1.0], [1.0, 10.0], "white")
    assert [r[3] for r in white] == ["stable", "unstable"]
    with pytest.raises(SpecError):
        lg.stability_map(1.0, [1.0], [1.0], "pink")
