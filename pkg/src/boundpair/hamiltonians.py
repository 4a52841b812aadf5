"""Finite-array Hamiltonians of the waveguide-coupled atomic chain.

Single-excitation effective Hamiltonian (Markovian, guided modes only):

    H0[r,s] = -i Γ₀ exp(i φ |r-s|),   φ = 2π d/λ₀.

Two-excitation states Ψ (symmetric, zero diagonal) obey

    H0 Ψ + Ψ H0 - 2 diag[diag(H0 Ψ)] = 2 ε Ψ,

which is materialized as an M×M complex-symmetric matrix in the pair basis,
M = N(N-1)/2.  Although H0 is dense, its inverse is exactly tridiagonal,
which makes the substitution χ = H0 Ψ H0 useful: Ψ = H0⁻¹ χ H0⁻¹ turns the
eigenproblem into one involving only tridiagonal matrices,

    H0⁻¹ χ + χ H0⁻¹ - 2 diag[diag(χ H0⁻¹)] = 2 ε H0⁻¹ χ H0⁻¹,

and χ is obtained from Ψ in O(N²) by two banded solves.

The array is mirror symmetric (r -> N+1-r), so the two-photon matrix block
diagonalizes into mirror-even and mirror-odd sectors of roughly half size;
besides the ~4x eigensolver speedup this guarantees every computed
eigenvector has definite mirror parity even when eigenvalues are
quasi-degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .core import ArrayParams, PairBasis


def build_h0(params: ArrayParams) -> np.ndarray:
    """Dense N×N single-excitation Hamiltonian, H0[r,s] = -iΓ₀ e^{iφ|r-s|}."""
    n = params.n_atoms
    idx = np.arange(n)
    dist = np.abs(idx[:, None] - idx[None, :])
    return -1j * params.gamma0 * np.exp(1j * params.phi * dist)


def _h0_inverse_bands(params: ArrayParams) -> tuple[np.ndarray, complex]:
    """Main diagonal and off-diagonal value of the tridiagonal H0⁻¹."""
    phi = params.phi
    sin_phi = np.sin(phi)
    if abs(sin_phi) < 1e-14:
        raise ValueError(f"H0 inverse is singular: sin(phi)=0 at phi={phi}")
    g = params.gamma0
    cot_phi = np.cos(phi) / sin_phi
    diag = np.full(params.n_atoms, -cot_phi / g, dtype=complex)
    # open ends: each boundary site gets +cot(φ)/2 + i/2 on the diagonal
    edge = (0.5 * cot_phi + 0.5j) / g
    diag[0] += edge
    diag[-1] += edge
    off = 1.0 / (2.0 * g * sin_phi)
    return diag, off


def build_h0_inverse(params: ArrayParams) -> np.ndarray:
    """Dense N×N matrix of the exact tridiagonal inverse of build_h0.

    Interior diagonal -cotφ/Γ₀, boundary diagonal (-cotφ/2 + i/2)/Γ₀,
    off-diagonal 1/(2Γ₀ sinφ).  Its imaginary part is nonzero only at the
    two corner entries, which is what confines radiative losses of the
    transformed problem to the array edges.
    """
    diag, off = _h0_inverse_bands(params)
    n = params.n_atoms
    t = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(t, diag)
    if n > 1:
        idx = np.arange(n - 1)
        t[idx, idx + 1] = off
        t[idx + 1, idx] = off
    return t


def _tridiag_mul(diag: np.ndarray, off: complex, x: np.ndarray) -> np.ndarray:
    """Product T @ x for symmetric tridiagonal T, O(N²) for matrix x."""
    y = diag[:, None] * x if x.ndim == 2 else diag * x
    if len(diag) > 1:
        y[:-1] += off * x[1:]
        y[1:] += off * x[:-1]
    return y


def _tridiag_solve(diag: np.ndarray, off: complex, b: np.ndarray) -> np.ndarray:
    """Solve T x = b for symmetric tridiagonal T via banded LU."""
    n = len(diag)
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = off
    ab[1, :] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, b)


def build_two_photon_h(params: ArrayParams, basis: PairBasis) -> np.ndarray:
    """Two-photon Hamiltonian in the pair basis, eigenvalues 2ε.

    Element between row pair (a,b) and column pair (r,s), all ordered:

        H0[a,r] δ_{bs} + H0[a,s] δ_{br} + H0[b,s] δ_{ar} + H0[b,r] δ_{as}

    i.e. one excitation hops while the other spectates; the hard-core
    constraint is built in because r = s pairs are simply absent.
    """
    if basis.n_atoms != params.n_atoms:
        raise ValueError(f"basis is for N={basis.n_atoms}, params have N={params.n_atoms}")
    h0 = build_h0(params)
    r, s = basis.rows, basis.cols
    # accumulate term by term to keep peak memory ~2 matrices at large N
    a = h0[r[:, None], r[None, :]] * (s[:, None] == s[None, :])
    tmp = h0[r[:, None], s[None, :]]
    tmp *= s[:, None] == r[None, :]
    a += tmp
    tmp = h0[s[:, None], s[None, :]]
    tmp *= r[:, None] == r[None, :]
    a += tmp
    tmp = h0[s[:, None], r[None, :]]
    tmp *= r[:, None] == s[None, :]
    a += tmp
    return a


def apply_two_photon(h0: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Matrix-free action H0 Ψ + Ψ H0 - 2 diag[diag(H0 Ψ)] on an N×N state.

    Validation path for build_two_photon_h; psi must be symmetric with zero
    diagonal, and the result is again symmetric with zero diagonal.
    """
    h0psi = h0 @ psi
    out = h0psi + psi @ h0
    np.fill_diagonal(out, 0.0)
    return out


def to_chi(psi: np.ndarray, params: ArrayParams) -> np.ndarray:
    """Transformed two-photon wavefunction χ = H0 Ψ H0.

    Computed in O(N²) by solving the tridiagonal system H0⁻¹ X = Ψ twice
    (never by dense multiplication with H0).  The inverse map is
    chi_to_psi.  For an eigenstate Ψ the pair (χ, ε) satisfies the
    tridiagonal eigenproblem checked by transformed_residual; the emission
    pattern of the state is encoded in the first/last columns of χ.
    """
    diag, off = _h0_inverse_bands(params)
    x = _tridiag_solve(diag, off, psi)       # X = H0 Ψ
    return _tridiag_solve(diag, off, x.T).T  # χ = X H0


def chi_to_psi(chi: np.ndarray, params: ArrayParams) -> np.ndarray:
    """Inverse of to_chi: Ψ = H0⁻¹ χ H0⁻¹, banded products only."""
    diag, off = _h0_inverse_bands(params)
    x = _tridiag_mul(diag, off, chi)
    return _tridiag_mul(diag, off, x.T).T


def transformed_residual(chi: np.ndarray, eps: complex, params: ArrayParams) -> float:
    """Max-norm defect of the tridiagonal form of the two-photon equation.

    Evaluates H0⁻¹χ + χH0⁻¹ - 2 diag[diag(χH0⁻¹)] - 2ε H0⁻¹χH0⁻¹ and
    returns the largest entry modulus; ~0 iff (ε, Ψ=H0⁻¹χH0⁻¹) is an
    eigenpair of the original dense problem.
    """
    diag, off = _h0_inverse_bands(params)
    left = _tridiag_mul(diag, off, chi)           # H0⁻¹ χ
    # χ H0⁻¹ = (H0⁻¹ χ)ᵀ for symmetric χ; keep the general form
    right = _tridiag_mul(diag, off, chi.T).T      # χ H0⁻¹
    lhs = left + right
    lhs -= 2.0 * np.diag(np.diag(right))
    rhs = 2.0 * eps * _tridiag_mul(diag, off, right)
    return float(np.max(np.abs(lhs - rhs)))


@dataclass(frozen=True)
class ParityBlocks:
    """Mirror-parity block diagonalization of the two-photon matrix.

    A pair (r,s) maps to (N+1-s, N+1-r) under the mirror; orbits of size 2
    are represented by `rep` (with partner `partner`), self-mirrored pairs
    (r+s = N+1) by `fixed`.  The even block acts on
    [(e_rep + e_partner)/√2, e_fixed], the odd block on
    (e_rep - e_partner)/√2.
    """

    even: np.ndarray
    odd: np.ndarray
    rep: np.ndarray
    partner: np.ndarray
    fixed: np.ndarray
    dim: int

    def expand_even(self, y: np.ndarray) -> np.ndarray:
        """Pair-basis vector(s) of even-block eigenvector(s), 2-norm kept."""
        y = np.asarray(y)
        n_rep = len(self.rep)
        shape = (self.dim,) + y.shape[1:]
        v = np.zeros(shape, dtype=complex)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        v[self.rep] = y[:n_rep] * inv_sqrt2
        v[self.partner] = y[:n_rep] * inv_sqrt2
        v[self.fixed] = y[n_rep:]
        return v

    def expand_odd(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        shape = (self.dim,) + y.shape[1:]
        v = np.zeros(shape, dtype=complex)
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        v[self.rep] = y * inv_sqrt2
        v[self.partner] = -y * inv_sqrt2
        return v


def parity_blocks(a: np.ndarray, basis: PairBasis) -> ParityBlocks:
    """Split the pair-basis matrix into mirror-even and mirror-odd blocks.

    Uses index gathers only (O(M²) work and memory), no dense projectors.
    """
    perm = basis.mirror_permutation()
    idx = np.arange(basis.dim)
    fixed = idx[perm == idx]
    rep = idx[idx < perm]
    partner = perm[rep]
    sqrt2 = np.sqrt(2.0)

    a_pp = a[np.ix_(rep, rep)]
    a_pq = a[np.ix_(rep, partner)]
    b_rf = sqrt2 * a[np.ix_(rep, fixed)]
    n_rep, n_fix = len(rep), len(fixed)
    even = np.empty((n_rep + n_fix, n_rep + n_fix), dtype=complex)
    even[:n_rep, :n_rep] = a_pp + a_pq
    even[:n_rep, n_rep:] = b_rf
    even[n_rep:, :n_rep] = b_rf.T
    even[n_rep:, n_rep:] = a[np.ix_(fixed, fixed)]

    odd = a_pp - a_pq
    return ParityBlocks(even=even, odd=odd, rep=rep, partner=partner,
                        fixed=fixed, dim=basis.dim)
