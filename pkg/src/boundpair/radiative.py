"""Edge emission amplitudes and the dead-layer / tunneling model.

The radiative decay rate of any normalized two-photon eigenstate decomposes
into per-site emission amplitudes

    -Im ε = Γ₀ Σ_r |d_r|²,        d_r = Σ_s Ψ_rs e^{iφs}   (s = 1..N).

The identity holds exactly for states of definite mirror parity (forward
and backward emission then carry equal weight, so the single forward kernel
suffices).

In the χ = H₀ΨH₀ representation the same amplitudes collapse onto the first
column of χ.  The plane wave e^{iφs} is annihilated by the interior rows of
the tridiagonal H₀⁻¹ and by its last row, leaving H₀⁻¹ e = i e^{iφ}/Γ₀ · e₁,
hence d = Ψe = i e^{iφ}/Γ₀ · H₀⁻¹ χ e₁ and, for interior rows j = 2..N-1,

    |d_j|² = |χ_{j+1,1} + χ_{j-1,1} - 2cosφ χ_{j,1}|² / (4 Γ₀⁴ sin²φ).

The rows j = 1, N need the modified edge stencil and are dropped here, which
is a good approximation for subradiant bound states (their emission peaks in
the interior, near 2·l_dead from the edge).

Dead-layer model: within l_dead ≈ 3.5/κ of the array ends the pair's
center-of-mass motion is suppressed and |d_j| rises exponentially with
tunneling exponent κ̃ = √(2mU), so log|d_j| is regressed on the rising
segment j ∈ [2, 2·l_dead] and U = κ̃²/(2|m|).  The resulting lifetime-trend
score l_dead²·e^{-2κ̃/κ} collapses at the magic period, where 1/m = 0 makes
the model exponent infinite (reported as an inf sentinel, score exactly 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ArrayParams, kappa_from_phi
from .spectra import TwoPhotonState

#: empirical dead-layer constant, in units of 1/κ
DEAD_LAYER_COEF = 3.5

#: minimum index reached by the rising-edge fit window (keeps >= 3 points
#: when the pair is so tight that round(2*l_dead) < 4)
_FIT_WINDOW_MIN_END = 4


class FitWindowError(ValueError):
    """Rising-edge regression window contains fewer than 3 usable points."""


def emission_amplitudes(state: TwoPhotonState, params: ArrayParams):
    """Per-site emission amplitudes d_r and the decay rate Γ₀Σ|d_r|².

    Returns (d, decay) with d of length N.  For a normalized definite-parity
    eigenstate the decay equals -Im ε of the eigenvalue.
    """
    n = params.n_atoms
    kernel = np.exp(1j * params.phi * np.arange(1, n + 1))
    d = state.psi @ kernel
    decay = params.gamma0 * float(np.vdot(d, d).real)
    return d, decay


def edge_amplitudes_from_chi(chi: np.ndarray, params: ArrayParams) -> np.ndarray:
    """Interior |d_j|² from the first column of χ, j = 2..N-1 (length N-2).

    Three-point stencil |χ_{j+1,1} + χ_{j-1,1} - 2cosφ χ_{j,1}|²/(4Γ₀⁴sin²φ);
    identical to |d_j|² of emission_amplitudes for the interior rows, so the
    only approximation in Γ₀·Σ_j of it is the dropped j = 1, N contribution.
    """
    n = chi.shape[0]
    if n < 4:
        raise ValueError(f"stencil needs N >= 4, got N={n}")
    phi, g0 = params.phi, params.gamma0
    col = chi[:, 0]
    stencil = col[2:] + col[:-2] - 2.0 * math.cos(phi) * col[1:-1]
    return np.abs(stencil) ** 2 / (4.0 * g0**4 * math.sin(phi) ** 2)


def dead_layer(kappa: float) -> float:
    """Dead-layer thickness l_dead = 3.5/κ (sites)."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    return DEAD_LAYER_COEF / kappa


@dataclass(frozen=True)
class TunnelingFit:
    kappa_tilde: float      # rising-edge slope of log|d_j| (inf at 1/m = 0)
    barrier_u: float        # κ̃²·|1/m|/2, units of Γ₀
    an_score: float         # l_dead²·e^{-2κ̃/κ}, unnormalized trend score
    window: tuple[int, int]  # 1-based inclusive fit window (0,0 at sentinel)


def tunneling_fit(d: np.ndarray, inv_mass: float,
                  params: ArrayParams) -> TunnelingFit:
    """Fit the rising-edge tunneling exponent of |d_j| near the left edge.

    Regresses log|d_j| against j over j ∈ [2, round(2·l_dead)] (1-based,
    extended to at least [2,4] for very tight pairs so the slope is always
    a 3-point fit or better).  U converts the slope through the barrier
    picture κ̃ = √(2mU) using |m|; the sign of 1/m only decides on which
    side of the magic period the array sits.

    At 1/m = 0 the barrier model gives κ̃ = ∞: returns the inf sentinel with
    U = 0 and score exactly 0 rather than fitting anything.
    """
    kappa = kappa_from_phi(params.phi)
    l_dead = dead_layer(kappa)
    if inv_mass == 0.0:
        return TunnelingFit(math.inf, 0.0, 0.0, (0, 0))
    end = max(round(2.0 * l_dead), _FIT_WINDOW_MIN_END)
    end = min(end, len(d))
    j = np.arange(2, end + 1)
    amp = np.abs(np.asarray(d)[j - 1])
    ok = amp > 0
    if ok.sum() < 3:
        raise FitWindowError(
            f"only {int(ok.sum())} usable points in fit window [2, {end}]")
    slope = np.polyfit(j[ok], np.log(amp[ok]), 1)[0]
    kappa_tilde = float(slope)
    barrier_u = kappa_tilde**2 * abs(inv_mass) / 2.0
    score = l_dead**2 * math.exp(-2.0 * kappa_tilde / kappa)
    return TunnelingFit(kappa_tilde, barrier_u, score, (2, end))


def diagonal_profile(chi: np.ndarray) -> np.ndarray:
    """Diagonal cross-section χ_rr (length N)."""
    return np.ascontiguousarray(np.diagonal(chi))


@dataclass(frozen=True)
class EdgeProfile:
    """Emission decomposition of one eigenstate plus the tunneling fit."""

    d: np.ndarray           # emission amplitudes, length N
    chi_diag: np.ndarray    # χ_rr, length N
    l_dead: float
    kappa_tilde: float
    barrier_u: float
    an_score: float
    max_d2: float           # max_r |d_r|²
    decay: float            # Γ₀ Σ|d_r|²

    @property
    def d2(self) -> np.ndarray:
        return np.abs(self.d) ** 2


def edge_profile(state: TwoPhotonState, params: ArrayParams,
                 inv_mass: float) -> EdgeProfile:
    """Assemble the full emission/dead-layer profile of one eigenstate."""
    from .hamiltonians import to_chi

    d, decay = emission_amplitudes(state, params)
    chi = to_chi(state.psi, params)
    fit = tunneling_fit(d, inv_mass, params)
    kappa = kappa_from_phi(params.phi)
    return EdgeProfile(
        d=d,
        chi_diag=diagonal_profile(chi),
        l_dead=dead_layer(kappa),
        kappa_tilde=fit.kappa_tilde,
        barrier_u=fit.barrier_u,
        an_score=fit.an_score,
        max_d2=float(np.max(np.abs(d) ** 2)),
        decay=decay,
    )
