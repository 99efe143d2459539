import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from macrobell.errors import DomainError
from macrobell.josephson import NbsParams, fitted_omega, fitted_omega_scaled
from macrobell.noon import (IDEAL_CH_MAXIMUM, TimeSettings, TwoSiteState, apply_local_nbs,
                            ch_statistic, ch_sweep, find_ch_maximum, ideal_ch_closed_form,
                            ideal_chsh, joint_number_distribution, prepare_two_noon,
                            ripple_amplitude)
from macrobell.regression import (SUPPORT_PARAMS, SUPPORT_REFERENCE, SUPPORT_THRESHOLD, N20_PARAMS,
                                  N20_S_REFERENCE)

angles = st.floats(-math.pi, math.pi)


@pytest.mark.parametrize("N", [1, 3, 7])
def test_prepared_state_block_weights(N):
    w = prepare_two_noon(N).block_weights()
    assert w[(N, N)] == pytest.approx(0.5)
    assert w[(2 * N, 0)] == pytest.approx(0.25)
    assert w[(0, 2 * N)] == pytest.approx(0.25)


def test_prepared_state_is_psi_minus_like_for_default_phase():
    c = prepare_two_noon(4).block(4, 4)
    # |N,0>|0,N> and |0,N>|N,0> with equal weight and opposite sign
    assert c[4, 0] == pytest.approx(0.5)
    assert c[0, 4] == pytest.approx(-0.5)


def test_invalid_boson_number():
    with pytest.raises(DomainError):
        prepare_two_noon(0)


@given(angles, angles)
def test_ideal_joint_probability(ta, tb):
    s = apply_local_nbs(prepare_two_noon(3), ta, tb)
    assert s.p_plus_plus() == pytest.approx(math.sin(ta - tb) ** 2 / 4, abs=1e-12)
    assert s.p_plus_a() == pytest.approx(0.25, abs=1e-12)
    assert s.p_plus_b() == pytest.approx(0.25, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), angles, angles, angles, st.sampled_from(["ideal", "hamiltonian"]))
def test_no_signalling(N, ta, tb, tb2, mode):
    params = NbsParams(N, 1.0, 30.0) if mode == "hamiltonian" else None
    start = prepare_two_noon(N)
    p1 = apply_local_nbs(start, ta, tb, mode, params).p_plus_a()
    p2 = apply_local_nbs(start, ta, tb2, mode, params).p_plus_a()
    assert abs(p1 - p2) < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 5), angles, angles, st.sampled_from(["ideal", "hamiltonian"]))
def test_norm_and_block_totals_conserved(N, ta, tb, mode):
    params = NbsParams(N, 1.0, 20.0) if mode == "hamiltonian" else None
    start = prepare_two_noon(N)
    out = apply_local_nbs(start, ta, tb, mode, params)
    assert out.norm == pytest.approx(1.0, abs=1e-12)
    for k, w in start.block_weights().items():
        assert out.block_weights()[k] == pytest.approx(w, abs=1e-12)


@given(angles, angles, st.floats(0.1, 50.0))
def test_single_boson_modes_coincide(ta, tb, g):
    start = prepare_two_noon(1)
    a = apply_local_nbs(start, ta, tb)
    b = apply_local_nbs(start, ta, tb, "hamiltonian", NbsParams(1, 2.0, g))
    # a single boson sees the two-state beam splitter exactly; the doubled
    # blocks differ but never contribute to a "+" at both sites
    assert np.abs(a.block(1, 1) - b.block(1, 1)).max() < 1e-10
    assert a.p_plus_plus() == pytest.approx(b.p_plus_plus(), abs=1e-10)
    assert a.p_plus_a() == pytest.approx(b.p_plus_a(), abs=1e-10)


def test_doubled_blocks_never_both_plus():
    s = apply_local_nbs(prepare_two_noon(4), 0.3, 1.1, "hamiltonian", NbsParams(4, 1.0, 20.0))
    # only the (N, N) block contributes to P++
    c = s.block(4, 4)
    assert s.p_plus_plus() == pytest.approx(abs(c[4, 4]) ** 2)


def test_ideal_mode_rejects_interior_support():
    c = np.zeros((3, 3), dtype=complex)
    c[1, 0] = 1.0
    with pytest.raises(DomainError):
        apply_local_nbs(TwoSiteState({(2, 2): c}, 2), 0.1, 0.2)


def test_mode_validation():
    with pytest.raises(DomainError):
        apply_local_nbs(prepare_two_noon(2), 0.1, 0.2, "magic")
    with pytest.raises(DomainError):
        apply_local_nbs(prepare_two_noon(2), 0.1, 0.2, "hamiltonian")
    with pytest.raises(DomainError):
        apply_local_nbs(prepare_two_noon(2), 0.1, 0.2, "hamiltonian", NbsParams(3, 1.0, 1.0))
    with pytest.raises(DomainError):
        TimeSettings(0.0, math.nan, 0.0, 0.0)


def test_ideal_chsh_values():
    s = TimeSettings(0.0, math.pi / 4, math.pi / 8, 3 * math.pi / 8)
    assert ideal_chsh(s) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    mirrored = TimeSettings(0.0, math.pi / 4, -math.pi / 8, -3 * math.pi / 8)
    assert ideal_chsh(mirrored, branch=1) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert ideal_chsh(TimeSettings(0.3, 0.3, 0.3, 0.3)) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        ideal_chsh(s, branch=0)


@given(angles, angles, angles, angles, st.sampled_from([-1, 1]))
def test_chsh_never_exceeds_tsirelson(a, ap, b, bp, branch):
    assert abs(ideal_chsh(TimeSettings(a, ap, b, bp), branch)) <= 2 * math.sqrt(2) + 1e-12


@given(st.floats(0.0, math.pi / 2))
def test_ideal_ch_matches_closed_form(phi):
    r = ch_statistic(TimeSettings.from_phi(phi), N=3)
    assert r.S == pytest.approx(float(ideal_ch_closed_form(phi)), abs=1e-12)


def test_ideal_ch_maximum():
    m = find_ch_maximum()
    assert m.phi_max == pytest.approx(3 * math.pi / 8, abs=1e-6)
    assert m.S_max == pytest.approx(IDEAL_CH_MAXIMUM, abs=1e-12)
    assert m.S_at_pi_over_16 < 0


def test_distributions_normalized():
    r = ch_statistic(TimeSettings.from_phi(1.0), "hamiltonian", NbsParams(5, 20.0, 333.333))
    for d in r.distributions().values():
        assert d.total() == pytest.approx(1.0, abs=1e-12)
        assert sum(d.full().values()) == pytest.approx(1.0, abs=1e-12)
        assert d.lower_site_marginal.sum() <= 0.5 + 1e-12


def test_ideal_distribution_on_support():
    r = ch_statistic(TimeSettings.from_phi(0.7), N=4)
    for d in r.distributions().values():
        assert d.off_support_mass() < 1e-14


def test_off_support_mass_matches_oracle():
    params = NbsParams(*SUPPORT_PARAMS)
    phi = 3 * math.pi / 8
    r = ch_statistic(TimeSettings.from_phi(phi), "hamiltonian", params)
    mass = {k: d.off_support_mass() for k, d in r.distributions().items()}
    for k, v in SUPPORT_REFERENCE.items():
        assert mass[k] == pytest.approx(v, abs=1e-10)
    assert max(mass.values()) <= SUPPORT_THRESHOLD
    w = fitted_omega_scaled(params)
    blocks = oracles.two_noon_ch(1.0, params.g / params.kappa, 7, (0.0, 2 * phi, phi, 3 * phi), w)
    assert np.abs(blocks["tt"] - r.states["tt"].block(7, 7)).max() < 1e-10


@pytest.mark.parametrize("phi", sorted(N20_S_REFERENCE))
def test_large_n_ch_points(phi):
    r = ch_statistic(TimeSettings.from_phi(phi), "hamiltonian", NbsParams(*N20_PARAMS))
    assert r.S == pytest.approx(N20_S_REFERENCE[phi], abs=1e-9)


def test_explicit_omega_matches_default():
    params = NbsParams(2, 1.0, 30.0)
    a = ch_statistic(TimeSettings.from_phi(1.1), "hamiltonian", params)
    b = ch_statistic(TimeSettings.from_phi(1.1), "hamiltonian", params, omega=fitted_omega(params))
    assert a.omega == b.omega
    assert a.S == pytest.approx(b.S, abs=1e-9)


def test_sweep_violation_interval_ideal():
    sweep = ch_sweep(np.linspace(0, math.pi / 2, 181))
    intervals = sweep.violation_intervals()
    assert len(intervals) == 1
    lo, hi = intervals[0]
    phi, S = sweep.peak()
    assert lo < phi < hi
    assert S == pytest.approx(IDEAL_CH_MAXIMUM, abs=1e-4)


def test_sweep_parallel_identical():
    phis = np.linspace(0.2, 1.4, 9)
    params = NbsParams(3, 1.0, 25.0)
    a = ch_sweep(phis, "hamiltonian", params, workers=1).S
    b = ch_sweep(phis, "hamiltonian", params, workers=2).S
    assert np.array_equal(a, b)


def test_ripple_of_smooth_curve_is_small():
    phis = np.linspace(0, math.pi / 2, 200)
    assert ripple_amplitude(ideal_ch_closed_form(phis)) < 1e-3
    noisy = ideal_ch_closed_form(phis) + 0.05 * (-1) ** np.arange(200)
    assert ripple_amplitude(noisy) > 0.02


def test_lower_site_marginal_shape():
    r = ch_statistic(TimeSettings.from_phi(0.5), N=3)
    d = joint_number_distribution(r.states["tt"])
    assert d.lower_site_marginal.shape == (4, 7)
