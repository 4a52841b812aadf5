"""Infinite-lattice relative motion: K=π analytics, dispersion, masses."""
import math

import numpy as np
import pytest

from boundpair.core import ArrayParams, PHI_MAGIC
from boundpair.bloch import (
    analytic_pi_states,
    bound_state_at,
    build_relative_h,
    dispersion,
    inv_mass_closed_form,
    inv_mass_fd,
    inv_mass_kp,
    kp_term1_closed,
    mass_report,
    relative_h_dk,
)


def _sublattice_masks(m_max):
    r = np.arange(1, m_max + 1)
    return r % 2 == 0, r % 2 == 1


def test_sublattices_decouple_exactly_at_pi():
    # integer trigonometry at K=π makes the even/odd blocks decouple to 0.0
    p = ArrayParams.from_scaled_period(10, 1.07)
    h = build_relative_h(math.pi, 40, p, folded=True)
    even, odd = _sublattice_masks(40)
    assert np.max(np.abs(h[np.ix_(even, odd)])) == 0.0
    assert np.max(np.abs(h[np.ix_(odd, even)])) == 0.0
    # away from π the blocks couple
    h2 = build_relative_h(0.97 * math.pi, 40, p, folded=True)
    assert np.max(np.abs(h2[np.ix_(even, odd)])) > 1e-3


def test_dk_operators_parity_selection():
    p = ArrayParams.from_scaled_period(10, 0.9)
    even, odd = _sublattice_masks(30)
    h1 = relative_h_dk(30, p, order=1)
    assert np.max(np.abs(h1[np.ix_(even, even)])) == 0.0   # 𝓗' only couples across
    assert np.max(np.abs(h1[np.ix_(odd, odd)])) == 0.0
    assert np.max(np.abs(h1[np.ix_(even, odd)])) > 1e-3
    h2 = relative_h_dk(30, p, order=2)
    assert np.max(np.abs(h2[np.ix_(even, odd)])) == 0.0    # 𝓗'' is block diagonal
    with pytest.raises(ValueError):
        relative_h_dk(30, p, order=3)


def test_folded_matrix_matches_unfolded_spectrum():
    # bosonic folding must preserve the even-sector eigenvalues
    p = ArrayParams.from_scaled_period(10, 1.02)
    m = 24
    folded = build_relative_h(math.pi, m, p, folded=True)
    full = build_relative_h(math.pi, m, p, folded=False)
    wf = np.linalg.eigvals(folded)
    wu = np.linalg.eigvals(full)
    # every folded eigenvalue appears in the unfolded problem
    for w in wf:
        assert np.min(np.abs(wu - w)) < 1e-9


def test_pi_bound_profile_is_the_closed_form():
    for period in (0.8, 0.95, 1.1):
        p = ArrayParams.from_scaled_period(10, period)
        states = analytic_pi_states(p)
        prof = states.bound_profile(60)
        # unit norm up to the truncated tail e^{-κM/2}
        assert np.linalg.norm(prof) == pytest.approx(1.0, abs=1e-9)
        assert np.max(np.abs(prof[::2])) == 0.0            # odd r empty
        # geometric envelope with ratio -e^{-κ/2} on even r
        ratio = prof[3] / prof[1]
        assert ratio == pytest.approx(-math.exp(-0.5 * states.kappa), abs=1e-12)
        # it is the eigenvector: residual bounded by the truncation tail
        h = build_relative_h(math.pi, 60, p, folded=True)
        resid = np.max(np.abs(h @ prof - states.eps_pi * prof))
        assert resid < 1e-4                                # boundary defect only


def test_pi_energy_identities():
    for period in (0.8, 1.0, 1.2):
        p = ArrayParams.from_scaled_period(10, period)
        states = analytic_pi_states(p)
        phi = p.phi
        # 2cot2φ = cotφ - tanφ places ε_π strictly inside the scattering gap
        assert states.eps_pi == pytest.approx(
            1.0 / math.tan(phi) - math.tan(phi), abs=1e-12)
        lo, hi = states.band_edges()
        assert lo < states.eps_pi < hi
        assert states.scattering_energy(math.pi) == pytest.approx(hi, rel=1e-12)


def test_bound_state_at_pi_matches_analytics():
    p = ArrayParams.from_scaled_period(10, 0.9)
    pt = bound_state_at(math.pi, p, m_max=60)
    states = analytic_pi_states(p)
    assert pt.found
    assert pt.eps.real == pytest.approx(states.eps_pi, abs=1e-8)
    assert abs(pt.eps.imag) < 1e-10                        # infinite lattice: no decay
    assert pt.tail < 1e-6


def test_dispersion_anchors_and_shape():
    k = np.linspace(0.6 * math.pi, math.pi, 41)
    below = dispersion(ArrayParams.from_scaled_period(10, 0.95), k, m_max=60)
    above = dispersion(ArrayParams.from_scaled_period(10, 1.02), k, m_max=60)
    assert below.k_com[-1] == math.pi and above.k_com[-1] == math.pi
    assert bool(below.found[-1]) and bool(above.found[-1])
    # below the magic period the branch rises monotonically into K=π ...
    kk, ee = below.real_branch()
    sel = kk > 0.75 * math.pi
    assert np.all(np.diff(ee[sel]) > 0)
    # ... above it the maximum moves inside the zone (nonmonotonic edge)
    kk, ee = above.real_branch()
    assert kk[np.argmax(ee)] < math.pi - 0.05
    with pytest.raises(ValueError):
        dispersion(ArrayParams.from_scaled_period(10, 1.0),
                   np.linspace(0.5, 0.9, 40) * math.pi, m_max=60)


def test_inv_mass_closed_form_values():
    # sign change through zero exactly at the magic period
    assert inv_mass_closed_form(0.9 * PHI_MAGIC) == pytest.approx(-0.0177421, abs=5e-7)
    assert abs(inv_mass_closed_form(PHI_MAGIC)) < 1e-15
    assert inv_mass_closed_form(1.1 * PHI_MAGIC) == pytest.approx(0.0306057, abs=5e-7)
    assert inv_mass_closed_form(0.9 * PHI_MAGIC, gamma0=2.0) == pytest.approx(
        2.0 * inv_mass_closed_form(0.9 * PHI_MAGIC), rel=1e-13)
    with pytest.raises(ValueError):
        inv_mass_closed_form(math.pi / 2.0)


def test_kp_route_matches_closed_form():
    p = ArrayParams.from_scaled_period(10, 0.9)
    term1, term2 = inv_mass_kp(p, m_max=600)
    assert term1 == pytest.approx(kp_term1_closed(p.phi), abs=1e-9)
    assert term1 + term2 == pytest.approx(
        inv_mass_closed_form(p.phi), abs=1e-6)


def test_kp_selection_rule_is_exact():
    # ⟨0|𝓗'|0⟩ vanishes identically: 𝓗' moves between sublattices and the
    # bound state lives on one of them
    p = ArrayParams.from_scaled_period(10, 1.05)
    h1 = relative_h_dk(60, p, order=1)
    prof = analytic_pi_states(p).bound_profile(60)
    assert abs(prof @ (h1 @ prof)) == 0.0                  # exact zeros on odd r
    pt = bound_state_at(math.pi, p, m_max=60)
    assert abs(pt.vec @ (h1 @ pt.vec)) < 1e-13             # numerical eigenvector


def test_fd_route_and_report():
    p = ArrayParams.from_scaled_period(10, 1.1)
    fd, err = inv_mass_fd(p, m_max=120)
    closed = inv_mass_closed_form(p.phi)
    assert fd == pytest.approx(closed, abs=1e-3)
    rep = mass_report(p, m_kp=300, m_fd=120)
    assert rep.inv_mass_kp == rep.kp_term1 + rep.kp_term2
    assert rep.inv_mass_closed == pytest.approx(closed, rel=1e-14)
    assert rep.fd_error >= 0.0
