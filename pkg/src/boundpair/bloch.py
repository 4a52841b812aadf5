"""Infinite-lattice relative motion of the photon pair: dispersion and mass.

For center-of-mass Bloch wavevector K the relative coordinate m = r - s of
the two excitations obeys a 1D hopping problem with hard core (Φ₀ = 0):

    𝓗_{r,s}(K) = -i Γ₀ cos(K(r-s)/2) exp(i φ |r-s|),  r,s ∈ {-M..M}, r,s ≠ 0.

Bosonic pairs have Φ_r = Φ_{-r}, so the problem folds onto r >= 1 with
𝓗^f_{r,s} = 𝓗_{r,s} + 𝓗_{r,-s}; the folded basis (e_r + e_{-r})/√2 is
orthonormal, which keeps matrix elements and c-products identical to the
unfolded even sector.

At K=π the lattice decouples exactly into even and odd relative-coordinate
sublattices.  The bound pair lives on the even one:

    Φ⁰_{±2r} = (-1)^r (cos 2φ)^{r-1} √(1-cos²2φ)
             = (-1)^r e^{-(r-1)κ/2} √(1-e^{-κ}),   κ = -2 ln cos 2φ,
    ε_π = 2Γ₀ cot 2φ,

normalized to unit weight on r >= 1; the odd sublattice carries the
scattering states ε(q) = Γ₀ sinφ cosφ / (sin²φ - cos²(q/2)) with band
edges -Γ₀ tanφ (q=0) and Γ₀ cot φ (q=π), bracketing ε_π.

The effective mass at K=π is computed three ways: the closed form
1/m = -Γ₀ sinφ cos3φ / (8 cos⁶φ), k·p perturbation theory
1/m = ⟨0|𝓗''|0⟩ + 2 Σ_n ⟨0|𝓗'|n⟩² / (ε_π - ε_n) with unconjugated
c-products, and a finite-difference second derivative of the dispersion.
All three vanish at the magic period φ = π/6.

Trigonometric factors at K=π are evaluated by integer arithmetic
(cos(πk/2), sin(πk/2) ∈ {0, ±1}), so the sublattice decoupling and the
even↔odd selection rule of 𝓗' hold exactly, not just to rounding.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import ArrayParams, eps_pi_from_phi, kappa_from_phi
from .spectra import eigensolve

#: default relative-coordinate truncation radius
M_DISPERSION = 200
#: truncation for slowly converging sums (k·p second-order term)
M_KP = 1200

# localization gate on the outer-half weight Σ_{r>M/2}|v_r|²: exponentially
# bound states stay below ~1e-4 even at the loosest binding/truncation in use
# (κ=0.8, M=60), delocalized states carry ~0.5
_TAIL_TOL = 1e-3


def _cos_half_pi(k: np.ndarray) -> np.ndarray:
    """cos(π k / 2) for integer k, exact: k mod 4 -> {1, 0, -1, 0}."""
    return np.choose(np.mod(k, 4), [1.0, 0.0, -1.0, 0.0])


def _sin_half_pi(k: np.ndarray) -> np.ndarray:
    """sin(π k / 2) for integer k, exact: k mod 4 -> {0, 1, 0, -1}."""
    return np.choose(np.mod(k, 4), [0.0, 1.0, 0.0, -1.0])


def _coords(m_max: int, folded: bool) -> np.ndarray:
    if m_max < 10:
        raise ValueError(f"truncation radius must be >= 10, got {m_max}")
    if folded:
        return np.arange(1, m_max + 1)
    return np.concatenate([np.arange(-m_max, 0), np.arange(1, m_max + 1)])


def build_relative_h(k_com: float, m_max: int, params: ArrayParams,
                     folded: bool = True) -> np.ndarray:
    """Relative-motion Hamiltonian at center-of-mass wavevector K.

    folded=True returns the bosonic sector on r = 1..M (the default used
    everywhere); folded=False returns the full matrix on {-M..M}\\{0} for
    cross-validation.  At K=π the trigonometric factors are evaluated
    exactly so that the even/odd sublattice blocks decouple to 0.
    """
    r = _coords(m_max, folded)
    g = params.gamma0
    phi = params.phi
    diff = r[:, None] - r[None, :]
    at_pi = k_com == math.pi
    if at_pi:
        cos_diff = _cos_half_pi(diff)
    else:
        cos_diff = np.cos(0.5 * k_com * diff)
    h = -1j * g * cos_diff * np.exp(1j * phi * np.abs(diff))
    if folded:
        tot = r[:, None] + r[None, :]
        cos_tot = _cos_half_pi(tot) if at_pi else np.cos(0.5 * k_com * tot)
        h += -1j * g * cos_tot * np.exp(1j * phi * tot)
    return h


def relative_h_dk(m_max: int, params: ArrayParams, order: int = 1) -> np.ndarray:
    """Analytic K-derivative of the folded relative Hamiltonian at K=π.

    order=1 gives 𝓗' (couples even and odd sublattices only), order=2
    gives 𝓗'' (sublattice diagonal); exact zeros by construction.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    r = _coords(m_max, folded=True)
    g = params.gamma0
    phi = params.phi
    diff = r[:, None] - r[None, :]
    tot = r[:, None] + r[None, :]
    if order == 1:
        fac_diff = -0.5 * diff * _sin_half_pi(diff)
        fac_tot = -0.5 * tot * _sin_half_pi(tot)
    else:
        fac_diff = -0.25 * diff ** 2 * _cos_half_pi(diff)
        fac_tot = -0.25 * tot ** 2 * _cos_half_pi(tot)
    return -1j * g * (fac_diff * np.exp(1j * phi * np.abs(diff))
                      + fac_tot * np.exp(1j * phi * tot))


@dataclass(frozen=True)
class PiStates:
    """Closed-form K=π states of the infinite lattice."""

    params: ArrayParams
    kappa: float
    eps_pi: float

    def bound_profile(self, m_max: int) -> np.ndarray:
        """Folded bound-state amplitudes Φ⁰ on r = 1..M (unit norm).

        Weight sits on even r = 2m with alternating sign and geometric
        envelope (cos 2φ)^{m-1} = e^{-(m-1)κ/2}; odd entries vanish.
        """
        prof = np.zeros(m_max)
        m = np.arange(1, m_max // 2 + 1)
        amp = math.sqrt(1.0 - math.exp(-self.kappa))
        prof[2 * m - 1] = (-1.0) ** m * np.exp(-0.5 * (m - 1) * self.kappa) * amp
        return prof

    def scattering_energy(self, q: float | np.ndarray) -> float | np.ndarray:
        """ε(q) of odd-sublattice scattering states; q = π gives Γ₀cotφ."""
        phi = self.params.phi
        g = self.params.gamma0
        return (g * math.sin(phi) * math.cos(phi)
                / (math.sin(phi) ** 2 - np.cos(0.5 * np.asarray(q)) ** 2))

    def band_edges(self) -> tuple[float, float]:
        """(lower, upper) edges of the q-band bracketing ε_π: (-Γ₀tanφ, Γ₀cotφ)."""
        phi = self.params.phi
        g = self.params.gamma0
        return -g * math.tan(phi), g / math.tan(phi)

    def scattering_profile(self, q: float, m_max: int) -> np.ndarray:
        """Folded scattering amplitudes √2 cos q(m+1/2) on odd r = 2m-1."""
        prof = np.zeros(m_max)
        m = np.arange(1, (m_max + 1) // 2 + 1)
        vals = math.sqrt(2.0) * np.cos(q * (m + 0.5))
        prof[2 * m - 2] = vals[: len(prof[2 * m - 2])]
        return prof


def analytic_pi_states(params: ArrayParams) -> PiStates:
    """Closed-form bound and scattering states at K=π (needs cos 2φ > 0)."""
    kappa = kappa_from_phi(params.phi)  # raises when cos2φ <= 0
    return PiStates(params=params, kappa=kappa,
                    eps_pi=eps_pi_from_phi(params.phi, params.gamma0))


@dataclass(frozen=True)
class BranchPoint:
    """Bound-branch sample at one K: energy, folded eigenvector, diagnostics."""

    k_com: float
    eps: complex
    vec: np.ndarray
    tail: float
    in_gap: bool
    found: bool


def _locate_bound(k_com: float, h: np.ndarray, prev_vec: np.ndarray | None,
                  tail_tol: float) -> BranchPoint:
    """Pick the bound state out of one folded eigensolve."""
    m_max = h.shape[0]
    w, v, _ = eigensolve(h)
    half = m_max // 2
    tails = np.sum(np.abs(v[half:, :]) ** 2, axis=0)
    if prev_vec is not None:
        overlap = np.abs(prev_vec.conj() @ v)
        idx = int(np.argmax(overlap))
    else:
        idx = int(np.argmin(tails))
    eps = w[idx]
    # in-gap test: the candidate must not sit inside a quasi-continuum of
    # delocalized levels (spacing estimated from the nearest few of them)
    deloc = np.sort(w[tails > 0.01].real)
    in_gap = True
    if deloc.size >= 4:
        pos = int(np.searchsorted(deloc, eps.real))
        local = deloc[max(pos - 3, 0):min(pos + 3, deloc.size)]
        spacing = float(np.median(np.diff(local))) if local.size >= 2 else 0.0
        nearest = float(np.min(np.abs(deloc - eps.real)))
        in_gap = nearest > 0.5 * spacing
    tail = float(tails[idx])
    return BranchPoint(k_com=k_com, eps=eps, vec=v[:, idx], tail=tail,
                       in_gap=in_gap, found=tail < tail_tol and in_gap)


def bound_state_at(k_com: float, params: ArrayParams, m_max: int = M_DISPERSION,
                   tol: float = _TAIL_TOL) -> BranchPoint:
    """Bound-pair state at one K, selected by localization and gap position.

    The returned BranchPoint has found=False when no localized in-gap
    state exists (the branch has merged with the continuum).  Re(eps) is
    the dispersion sample; |Im(eps)| is a truncation diagnostic.
    """
    h = build_relative_h(k_com, m_max, params, folded=True)
    return _locate_bound(k_com, h, None, tol)


@dataclass(frozen=True)
class DispersionCurve:
    """Bound-branch dispersion samples (K ascending, tracked by overlap)."""

    params: ArrayParams
    k_com: np.ndarray
    eps: np.ndarray          # complex; Re is the dispersion, |Im| diagnostic
    tail: np.ndarray
    found: np.ndarray        # bool per sample
    m_max: int
    eps_pi: float

    def real_branch(self) -> tuple[np.ndarray, np.ndarray]:
        """(K, Re ε) restricted to samples where the branch exists."""
        sel = self.found
        return self.k_com[sel], self.eps[sel].real


def dispersion(params: ArrayParams, k_values: np.ndarray | None = None,
               m_max: int = M_DISPERSION) -> DispersionCurve:
    """Bound-branch dispersion ε_K near the zone edge.

    Starts from the exactly constructed K=π problem and continues toward
    smaller K by maximal eigenvector overlap, which keeps the branch
    through avoided crossings with truncation-induced levels.  Default
    grid: 101 points on K/π ∈ [0.5, 1].
    """
    if k_values is None:
        k_values = np.linspace(0.5 * math.pi, math.pi, 101)
    k_values = np.sort(np.asarray(k_values, dtype=float))
    # snap a grid point that is numerically at the zone edge onto exact π
    k_values[np.abs(k_values - math.pi) < 1e-9] = math.pi
    if k_values[-1] != math.pi:
        raise ValueError("dispersion grid must reach K = pi (branch anchor)")

    pi_point = bound_state_at(math.pi, params, m_max)
    points: list[BranchPoint] = [pi_point]
    prev = pi_point.vec
    for k in k_values[::-1][1:]:
        h = build_relative_h(k, m_max, params, folded=True)
        pt = _locate_bound(k, h, prev, _TAIL_TOL)
        points.append(pt)
        if pt.found:
            prev = pt.vec
    points.reverse()
    return DispersionCurve(
        params=params,
        k_com=np.array([p.k_com for p in points]),
        eps=np.array([p.eps for p in points]),
        tail=np.array([p.tail for p in points]),
        found=np.array([p.found for p in points]),
        m_max=m_max,
        eps_pi=float(pi_point.eps.real),
    )


# ---------------------------------------------------------------- masses


def inv_mass_closed_form(phi: float, gamma0: float = 1.0) -> float:
    """Closed-form inverse mass 1/m = -Γ₀ sinφ cos3φ / (8 cos⁶φ).

    Vanishes at φ = π/6 where cos 3φ = 0: the bound pair becomes
    infinitely heavy and its band quasi-flat.
    """
    if abs(math.cos(phi)) < 1e-12:
        raise ValueError(f"closed form undefined at cos(phi)=0, phi={phi}")
    return -gamma0 * math.sin(phi) * math.cos(3.0 * phi) / (8.0 * math.cos(phi) ** 6)


def kp_term1_closed(phi: float, gamma0: float = 1.0) -> float:
    """Diagonal k·p term ⟨0|𝓗''|0⟩ = 4Γ₀ cos2φ (2 - cos²2φ) / sin³2φ."""
    c2 = math.cos(2.0 * phi)
    s2 = math.sin(2.0 * phi)
    return 4.0 * gamma0 * c2 * (2.0 - c2 * c2) / s2 ** 3


@dataclass(frozen=True)
class MassReport:
    """Inverse mass at K=π via closed form, k·p theory and finite differences."""

    params: ArrayParams
    inv_mass_closed: float
    kp_term1: float          # ⟨0|𝓗''|0⟩, direct matrix element
    kp_term1_closed: float   # same, closed expression
    kp_term2: float          # 2 Σ_n ⟨0|𝓗'|n⟩²/(ε_π - ε_n), c-products
    inv_mass_fd: float
    fd_error: float

    @property
    def inv_mass_kp(self) -> float:
        return self.kp_term1 + self.kp_term2


def _c_normalize(vec: np.ndarray) -> np.ndarray:
    """Normalize to unit c-norm vᵀv = 1 (complex-symmetric convention)."""
    c = vec @ vec
    if abs(c) < 1e-10:
        raise ArithmeticError("quasi-null c-norm; cannot c-normalize")
    return vec / cmath.sqrt(c)


def inv_mass_kp(params: ArrayParams, m_max: int = M_KP) -> tuple[float, float]:
    """k·p inverse mass at K=π: (term1, term2).

    term1 = ⟨0|𝓗''|0⟩ from the numerical bound state; term2 is the
    second-order sum over odd-sublattice scattering states (the only ones
    𝓗' couples to), computed with the unconjugated bilinear form and
    eigenvectors normalized Σ v² = 1.  The sum is discrete over the
    truncated lattice, which converges to the continuum principal-value
    integral; ε_π lies strictly inside the scattering gap on the studied
    range, so no denominator comes close to zero (guarded at 1e-6 Γ₀).
    """
    h = build_relative_h(math.pi, m_max, params, folded=True)
    coords = _coords(m_max, folded=True)
    even = coords % 2 == 0
    odd = ~even

    # sublattices decouple exactly at K=π: solve them separately
    h_even = h[np.ix_(even, even)]
    h_odd = h[np.ix_(odd, odd)]
    w_e, v_e, _ = eigensolve(h_even)
    half = h_even.shape[0] // 2
    tails = np.sum(np.abs(v_e[half:, :]) ** 2, axis=0)
    i0 = int(np.argmin(tails))
    if tails[i0] > _TAIL_TOL:
        raise ArithmeticError(f"no localized bound state at K=pi for phi={params.phi}")
    psi0 = _c_normalize(v_e[:, i0])
    eps0 = w_e[i0]

    h2 = relative_h_dk(m_max, params, order=2)
    term1 = float((psi0 @ h2[np.ix_(even, even)] @ psi0).real)

    w_o, v_o, _ = eigensolve(h_odd)
    cnorm = np.einsum("ij,ij->j", v_o, v_o)
    if np.abs(cnorm).min() < 1e-10:
        raise ArithmeticError("quasi-null c-norm in scattering sector")
    h1 = relative_h_dk(m_max, params, order=1)
    coup = (psi0 @ h1[np.ix_(even, odd)]) @ v_o  # ⟨0|𝓗'|n⟩ before c-normalization
    denom = eps0 - w_o
    if np.abs(denom).min() < 1e-6 * params.gamma0:
        raise ArithmeticError("k·p denominator below principal-value guard")
    term2 = 2.0 * np.sum(coup ** 2 / cnorm / denom)
    return term1, float(term2.real)


def inv_mass_fd(params: ArrayParams, m_max: int = M_DISPERSION,
                h_list: tuple[float, ...] = (0.2, 0.1, 0.05)) -> tuple[float, float]:
    """Finite-difference inverse mass at K=π with Richardson extrapolation.

    Uses the K <-> 2π-K symmetry: D(h) = 2(ε_{π-h} - ε_π)/h² = 1/m + O(h²),
    extrapolated over h_list.  Returns (1/m, error estimate).
    """
    if len(h_list) < 2:
        raise ValueError("need at least two step sizes for extrapolation")
    eps_pi = bound_state_at(math.pi, params, m_max)
    if not eps_pi.found:
        raise ArithmeticError("no bound state at K=pi")
    prev = eps_pi.vec
    d_vals = []
    for h in sorted(h_list, reverse=True):
        hmat = build_relative_h(math.pi - h, m_max, params, folded=True)
        pt = _locate_bound(math.pi - h, hmat, prev, _TAIL_TOL)
        if not pt.found:
            raise ArithmeticError(f"bound branch lost at K=pi-{h}")
        d_vals.append(2.0 * (pt.eps.real - eps_pi.eps.real) / h ** 2)
    # Richardson on the h² error series
    table = [list(d_vals)]
    n = len(d_vals)
    for j in range(1, n):
        row = []
        for i in range(n - j):
            f = 4.0 ** j
            row.append((f * table[j - 1][i + 1] - table[j - 1][i]) / (f - 1.0))
        table.append(row)
    best = table[-1][0]
    prev_best = table[-2][0] if n >= 2 else d_vals[-1]
    return float(best), float(abs(best - prev_best))


def mass_report(params: ArrayParams, m_kp: int = M_KP,
                m_fd: int = M_DISPERSION) -> MassReport:
    """Assemble the three-route inverse-mass comparison at K=π."""
    phi = params.phi
    t1, t2 = inv_mass_kp(params, m_kp)
    fd, fd_err = inv_mass_fd(params, m_fd)
    return MassReport(
        params=params,
        inv_mass_closed=inv_mass_closed_form(phi, params.gamma0),
        kp_term1=t1,
        kp_term1_closed=kp_term1_closed(phi, params.gamma0),
        kp_term2=t2,
        inv_mass_fd=fd,
        fd_error=fd_err,
    )
