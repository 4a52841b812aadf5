"""Release acceptance: one end-to-end check per numbered criterion.

Heavy grid points are shared through the on-disk cache (tests/conftest.py
points BOUNDPAIR_CACHE at ./cache), so a re-run after the first full pass
is minutes, not hours.  Criteria that the physics genuinely cannot meet
fail here with a measurement report rather than being weakened; see the
repository README for the known-failing list.
"""
import math
import time
from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import brentq
from scipy.stats import spearmanr

from boundpair import bloch, cli, scans
from boundpair.core import ArrayParams, PHI_MAGIC, PairBasis, index_pair, pair_index
from boundpair.hamiltonians import build_h0_inverse, to_chi, transformed_residual
from boundpair.radiative import emission_amplitudes, tunneling_fit
from boundpair.spectra import most_subradiant_bound, spectrum

# Each criterion that needs a finite array pins 12d/λ₀ = 0.9 unless the
# criterion itself fixes the period; 0.9 matches the large-array reference
# point of criterion 4.
REFERENCE_PERIOD = 0.9


def test_criterion_01_inverse_mass_three_routes_agree():
    t0 = time.perf_counter()
    for scaled in np.round(np.arange(0.60, 1.4001, 0.05), 10):
        p = ArrayParams.from_scaled_period(10, float(scaled))
        closed = bloch.inv_mass_closed_form(p.phi)
        term1, term2 = bloch.inv_mass_kp(p)
        assert abs((term1 + term2) - closed) <= 1e-4, f"k·p route at {scaled}"
        fd, _ = bloch.inv_mass_fd(p)
        assert abs(fd - closed) <= 1e-3, f"finite-difference route at {scaled}"
    assert time.perf_counter() - t0 < 600.0


def test_criterion_02_flat_band_at_magic_period():
    root = brentq(lambda s: bloch.inv_mass_closed_form(s * PHI_MAGIC),
                  0.9, 1.1, xtol=1e-9)
    assert abs(root - 1.0) <= 1e-6

    def fd_route(s):
        return bloch.inv_mass_fd(ArrayParams.from_scaled_period(10, s))[0]

    fd_root = brentq(fd_route, 0.95, 1.05, xtol=1e-4)
    assert abs(fd_root - 1.0) <= 5e-3


def test_criterion_03_zone_edge_energy_and_profile():
    for scaled in (0.8, 0.9, 1.0, 1.1):
        p = ArrayParams.from_scaled_period(10, scaled)
        states = bloch.analytic_pi_states(p)
        pt = bloch.bound_state_at(math.pi, p, m_max=60)
        assert pt.found, f"no bound state at K=π for period {scaled}"
        assert abs(pt.eps.real - states.eps_pi) <= 1e-8
        overlap = abs(np.vdot(states.bound_profile(60), pt.vec))
        assert overlap >= 1.0 - 1e-8


def test_criterion_04_large_array_subradiant_pair(cache_dir):
    t0 = time.perf_counter()
    s = scans.point_summary(ArrayParams.from_scaled_period(100, REFERENCE_PERIOD),
                            cache_dir=cache_dir)
    assert s.found and s.classification == "bound"
    assert abs(s.eps.real - 1.45) <= 0.015
    assert 1.9e-6 <= s.decay <= 7.5e-6
    assert time.perf_counter() - t0 < 1200.0


def test_criterion_05_lifetime_maximum_at_magic_period(cache_dir):
    grid = np.round(np.arange(0.80, 1.2001, 0.01), 10)
    t0 = time.perf_counter()
    full = scans.period_scan(80, grid, cache_dir=cache_dir)
    full_elapsed = time.perf_counter() - t0
    assert np.all(full.found)
    arg_full = float(full.axis[np.argmin(full.decay)])
    assert abs(arg_full - 1.0) <= 0.01 + 1e-12, f"N=80 argmin at {arg_full}"
    assert full_elapsed < 3 * 3600.0

    t0 = time.perf_counter()
    quick = scans.period_scan(20, grid, cache_dir=cache_dir)
    quick_elapsed = time.perf_counter() - t0
    arg_quick = float(quick.axis[np.argmin(quick.decay)])
    problems = []
    if quick_elapsed >= 300.0:
        problems.append(f"quick N=20 scan took {quick_elapsed:.0f}s (budget 300s)")
    if abs(arg_quick - 1.0) > 0.02 + 1e-12:
        problems.append(
            f"quick N=20 argmin at period {arg_quick:.2f}, required 1.00 ± 0.02: "
            f"at N=20 the most subradiant pair decay decreases monotonically "
            f"across [0.8, 1.2] (no lifetime maximum has developed yet at this "
            f"array size), so the quick-mode tolerance is unattainable")
    if problems:
        pytest.fail(f"N=80 leg passed (argmin {arg_full:.2f}, "
                    f"{full_elapsed:.0f}s); " + "; ".join(problems))


def test_criterion_06_decay_formula_identity():
    t0 = time.perf_counter()
    for n in (10, 20, 40):
        params = ArrayParams.from_scaled_period(n, REFERENCE_PERIOD)
        rep = spectrum(params)
        for k in range(rep.basis.dim):
            st = rep.state(k)
            _, decay = emission_amplitudes(st, params)
            target = st.energy.decay
            assert abs(decay - target) <= 1e-8 * abs(target), \
                f"N={n} state {k}: Γ₀Σ|d|²={decay:.3e} vs -Im ε={target:.3e}"
    assert time.perf_counter() - t0 < 120.0


def test_criterion_07_transformed_problem_equivalence():
    params = ArrayParams.from_scaled_period(40, REFERENCE_PERIOD)
    rep = spectrum(params)
    for k in range(rep.basis.dim):
        st = rep.state(k)
        chi = to_chi(st.psi, params)
        resid = transformed_residual(chi, st.eps, params)
        assert resid <= 1e-9 * max(1.0, abs(st.eps)), f"state {k}"
    h0inv = build_h0_inverse(params)
    im = np.abs(h0inv.imag)
    im[0, 0] = 0.0
    im[-1, -1] = 0.0
    assert np.max(im) <= 1e-15            # Im(H0⁻¹) lives on the two corners


def test_criterion_08_exact_zone_edge_structure():
    m = 60
    p = ArrayParams.from_scaled_period(10, 1.05)
    r = np.arange(1, m + 1)
    even, odd = r % 2 == 0, r % 2 == 1
    h = bloch.build_relative_h(math.pi, m, p, folded=True)
    assert np.max(np.abs(h[np.ix_(even, odd)])) <= 1e-15
    assert np.max(np.abs(h[np.ix_(odd, even)])) <= 1e-15
    h1 = bloch.relative_h_dk(m, p, order=1)
    assert np.max(np.abs(h1[np.ix_(even, even)])) <= 1e-15
    assert np.max(np.abs(h1[np.ix_(odd, odd)])) <= 1e-15
    prof = bloch.analytic_pi_states(p).bound_profile(m)
    assert abs(prof @ (h1 @ prof)) <= 1e-15


def test_criterion_09_decay_oscillations(cache_dir):
    n_grid = np.arange(20, 101)
    base = scans.size_scan(1.02, n_grid, cache_dir=cache_dir)
    assert np.all(base.found)
    # (a) nonmonotonic decay
    extrema = int(np.sum(np.diff(np.sign(np.diff(base.decay))) != 0))
    assert extrema >= 3, f"only {extrema} local extrema at period 1.02"
    # (b) secondary wavevector component of the N=100 pair wavefunction
    st = most_subradiant_bound(ArrayParams.from_scaled_period(100, 1.02))
    assert st is not None
    _, _, peaks = scans.wavefunction_fourier(st, offset=2)
    assert len(peaks) >= 2
    assert abs(peaks[1][0] - 0.78 * math.pi) <= 0.02 * math.pi, \
        f"secondary peak at {peaks[1][0] / math.pi:.4f}π"
    # (c) oscillation / dispersion-root / quartic ΔK triangle
    for per in (1.01, 1.02, 1.03):
        osc = scans.oscillation_wavevector(
            scans.size_scan(per, n_grid, cache_dir=cache_dir))
        assert osc.oscillating, f"no oscillation detected at period {per}"
        curve = bloch.dispersion(ArrayParams.from_scaled_period(10, per))
        deg = scans.degeneracy_wavevector(curve)
        assert deg is not None, f"no in-zone degeneracy at period {per}"
        trio = {"osc": osc.k_osc, "root": deg.dk_root, "quartic": deg.dk_quartic}
        for (la, a), (lb, b) in combinations(trio.items(), 2):
            assert abs(a - b) / max(a, b) <= 0.10, \
                f"period {per}: ΔK {la}={a / math.pi:.4f}π vs {lb}={b / math.pi:.4f}π"
    # (d) oscillation amplitude dies off beyond the magic period
    amps = [scans.oscillation_wavevector(
                scans.size_scan(per, n_grid, cache_dir=cache_dir)).amplitude
            for per in (1.01, 1.03, 1.05)]
    assert amps[0] > amps[1] > amps[2], f"amplitudes {amps} not decreasing"


def test_criterion_10_dead_layer_barrier_model(cache_dir):
    periods = (0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 1.02, 1.05, 1.1, 1.2, 1.3, 1.4)
    sc = scans.period_scan(100, np.array(periods), cache_dir=cache_dir)
    assert np.all(sc.found)
    u_vals, scores, maxd2 = [], [], []
    for s in sc.summaries:
        fit = tunneling_fit(s.d, bloch.inv_mass_closed_form(s.params.phi),
                            s.params)
        u_vals.append(fit.barrier_u)
        scores.append(fit.an_score)
        maxd2.append(s.max_d2)
    rho = float(spearmanr(scores, maxd2).statistic)
    problems = []
    breaches = [f"{p:.2f}: U={u:.5f}" for p, u in zip(periods, u_vals)
                if not 0.001 <= u <= 0.004]
    if breaches:
        problems.append("barrier height outside [0.001, 0.004]Γ₀ at periods "
                        + ", ".join(breaches))
    if not rho > 0.9:
        problems.append(
            f"Spearman(an_score, max|d_r|²) = {rho:.3f}, required > 0.9: "
            f"max|d_r|² is V-shaped across the magic period while the score "
            f"falls monotonically, so rank correlation over the full band "
            f"cannot reach 0.9")
    if problems:
        pytest.fail("; ".join(problems))


def test_criterion_11_property_suite(tmp_path, capsys):
    t0 = time.perf_counter()
    # pair-basis bijection
    for n in (4, 9, 17):
        for k in range(n * (n - 1) // 2):
            r, s = index_pair(k, n)
            assert pair_index(r, s, n) == k
        basis = PairBasis.build(n)
        assert basis.dim == n * (n - 1) // 2
    # Γ₀ linearity of the full spectrum
    base = spectrum(ArrayParams.from_scaled_period(12, 0.95))
    scaled = spectrum(ArrayParams.from_scaled_period(12, 0.95, gamma0=3.0))
    assert np.allclose(scaled.energies, 3.0 * base.energies,
                       rtol=1e-10, atol=1e-12)
    # passivity: every eigenstate decays
    for per in (0.7, 1.0, 1.3):
        rep = spectrum(ArrayParams.from_scaled_period(14, per))
        assert np.all(rep.energies.imag <= 1e-10)
    # CSV determinism, including through the cache path
    outs = [tmp_path / f"det{i}.csv" for i in range(2)]
    for out in outs:
        assert cli.main(["spectrum", "--n-atoms", "12", "--period", "1.02",
                         "--out", str(out)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()
    souts = [tmp_path / f"scan{i}.csv" for i in range(2)]
    for out in souts:
        assert cli.main(["size-scan", "--period", "1.02", "--grid", "10:16:2",
                         "--cache", str(tmp_path / "c"), "--out", str(out)]) == 0
    assert souts[0].read_bytes() == souts[1].read_bytes()
    # quick-mode smoke tour of every subcommand
    smoke = [
        ["spectrum", "--n-atoms", "40", "--period", "0.9", "--quick"],
        ["dispersion", "--period", "1.02", "--quick"],
        ["mass", "--period", "0.9", "--quick"],
        ["period-scan", "--grid", "0.9:1.1:0.05", "--quick",
         "--cache", str(tmp_path / "c")],
        ["size-scan", "--period", "1.02", "--grid", "20:40:4", "--quick",
         "--cache", str(tmp_path / "c")],
        ["edge-profile", "--period", "1.05", "--quick"],
        ["dump-h", "--n-atoms", "6", "--period", "1.0"],
    ]
    for argv in smoke:
        out = tmp_path / f"smoke_{argv[0]}.txt"
        assert cli.main(argv + ["--out", str(out)]) == 0, f"{argv} failed"
        assert out.stat().st_size > 0
    capsys.readouterr()
    assert time.perf_counter() - t0 < 300.0
