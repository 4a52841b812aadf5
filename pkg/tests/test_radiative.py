"""Emission amplitudes, decay identity, dead layer, tunneling fit."""
import math

import numpy as np
import pytest

from boundpair.core import ArrayParams
from boundpair.hamiltonians import to_chi
from boundpair.radiative import (
    FitWindowError,
    dead_layer,
    diagonal_profile,
    edge_amplitudes_from_chi,
    edge_profile,
    emission_amplitudes,
    tunneling_fit,
)
from boundpair.spectra import most_subradiant_bound, spectrum


def test_decay_identity_every_state():
    # Γ₀Σ|d_r|² reproduces -Im ε for every eigenstate of a small array
    params = ArrayParams.from_scaled_period(10, 1.02)
    rep = spectrum(params)
    for k in range(rep.basis.dim):
        st = rep.state(k)
        _, decay = emission_amplitudes(st, params)
        assert decay == pytest.approx(st.energy.decay, rel=1e-8, abs=1e-13)


def test_stencil_matches_direct_interior_amplitudes():
    # dual route: the χ-column stencil equals |d_j|² computed from Ψ directly
    params = ArrayParams.from_scaled_period(12, 0.9)
    st = most_subradiant_bound(params)
    d, _ = emission_amplitudes(st, params)
    chi = to_chi(st.psi, params)
    stencil = edge_amplitudes_from_chi(chi, params)
    direct = np.abs(d[1:-1]) ** 2
    assert stencil.shape == (10,)
    assert np.max(np.abs(stencil - direct)) < 1e-12 * np.max(direct)
    with pytest.raises(ValueError):
        edge_amplitudes_from_chi(chi[:3, :3], params)


def test_dead_layer_scaling():
    assert dead_layer(2.0 * math.log(2.0)) == pytest.approx(3.5 / (2 * math.log(2)))
    assert dead_layer(0.5) == pytest.approx(7.0)
    with pytest.raises(ValueError):
        dead_layer(0.0)


def test_tunneling_fit_recovers_synthetic_slope():
    params = ArrayParams.from_scaled_period(60, 1.1)
    j = np.arange(1, 61)
    d = np.exp(0.31 * j)                     # pure exponential rising edge
    fit = tunneling_fit(d, 0.0306, params)
    assert fit.kappa_tilde == pytest.approx(0.31, abs=1e-12)
    assert fit.barrier_u == pytest.approx(0.31**2 * 0.0306 / 2.0, rel=1e-12)
    lo, hi = fit.window
    assert lo == 2 and hi >= 4
    # score decreases when the measured slope steepens
    steeper = tunneling_fit(np.exp(0.62 * j), 0.0306, params)
    assert steeper.an_score < fit.an_score


def test_tunneling_fit_sentinel_and_window_errors():
    params = ArrayParams.from_scaled_period(40, 1.0)
    d = np.exp(0.2 * np.arange(1, 41))
    fit = tunneling_fit(d, 0.0, params)      # flat band: infinite stiffness
    assert math.isinf(fit.kappa_tilde)
    assert fit.barrier_u == 0.0 and fit.an_score == 0.0
    assert fit.window == (0, 0)
    bad = np.zeros(40)
    bad[0] = 1.0                             # nothing usable inside [2, end]
    with pytest.raises(FitWindowError):
        tunneling_fit(bad, 0.01, params)


def test_barrier_u_uses_magnitude_of_mass():
    params = ArrayParams.from_scaled_period(60, 0.9)
    d = np.exp(0.25 * np.arange(1, 61))
    neg = tunneling_fit(d, -0.0177, params)
    pos = tunneling_fit(d, +0.0177, params)
    assert neg.barrier_u == pos.barrier_u > 0.0


def test_edge_profile_assembly():
    params = ArrayParams.from_scaled_period(20, 1.05)
    st = most_subradiant_bound(params)
    prof = edge_profile(st, params, inv_mass=0.01)
    n = params.n_atoms
    assert prof.d.shape == (n,) and prof.chi_diag.shape == (n,)
    assert prof.decay == pytest.approx(st.energy.decay, rel=1e-8)
    assert prof.max_d2 == pytest.approx(np.max(prof.d2), rel=1e-14)
    assert prof.l_dead == pytest.approx(dead_layer(
        -2.0 * math.log(math.cos(2.0 * params.phi))))
    chi = to_chi(st.psi, params)
    assert np.allclose(prof.chi_diag, np.diagonal(chi))
    assert diagonal_profile(chi).flags["C_CONTIGUOUS"]
