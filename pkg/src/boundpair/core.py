"""Parameters, unit conventions and pair-basis indexing.

Conventions used throughout the package:

* All energies and rates are measured in units of the single-atom radiative
  decay rate Γ₀ (``gamma0``).  The atomic resonance ω₀ enters only through
  the phase gained by guided light between neighbouring atoms,
  φ = ω₀ d / c = 2π d/λ₀.
* Atom positions are labelled 1..N in documentation and public output;
  arrays are 0-based internally.
* Two-excitation states live in the pair basis of ordered pairs (r, s)
  with r < s, enumerated lexicographically, dimension M = N(N-1)/2.
  The diagonal r = s is excluded: a two-level atom cannot be doubly
  excited (hard-core constraint).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

#: phase of the quasi-flat-band ("magic") period d = lambda0/12
PHI_MAGIC = math.pi / 6.0


def phi_from_period(period_ratio: float) -> float:
    """Phase per lattice period, φ = 2π d/λ₀, for period_ratio = d/λ₀ > 0."""
    if not period_ratio > 0.0:
        raise ValueError(f"period_ratio must be positive, got {period_ratio}")
    return TWO_PI * period_ratio


def kappa_from_phi(phi: float) -> float:
    """Inverse size κ = -2 ln cos 2φ of the bound pair's relative motion.

    Defined for cos 2φ > 0; at φ = π/6 (magic period) κ = 2 ln 2.
    """
    c = math.cos(2.0 * phi)
    if c <= 0.0:
        raise ValueError(f"no exponentially bound pair: cos(2*phi) <= 0 at phi={phi}")
    return -2.0 * math.log(c)


def eps_pi_from_phi(phi: float, gamma0: float = 1.0) -> float:
    """Bound-pair energy at zone edge K=π: ε_π = 2Γ₀ cot 2φ."""
    return 2.0 * gamma0 / math.tan(2.0 * phi)


@dataclass(frozen=True)
class ArrayParams:
    """Geometry and coupling of the atomic array.

    n_atoms      : number of two-level atoms N >= 1
    period_ratio : lattice period in units of the resonant wavelength, d/λ₀
    gamma0       : single-atom radiative rate Γ₀ (energy unit, default 1)
    """

    n_atoms: int
    period_ratio: float
    gamma0: float = 1.0

    def __post_init__(self) -> None:
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")
        if not self.period_ratio > 0.0:
            raise ValueError(f"period_ratio must be positive, got {self.period_ratio}")
        if not self.gamma0 > 0.0:
            raise ValueError(f"gamma0 must be positive, got {self.gamma0}")

    @property
    def phi(self) -> float:
        """Phase per period, φ = 2π d/λ₀."""
        return phi_from_period(self.period_ratio)

    @property
    def scaled_period(self) -> float:
        """Period in units of λ₀/12; equals 1 at the magic period φ = π/6."""
        return 12.0 * self.period_ratio

    @classmethod
    def from_scaled_period(cls, n_atoms: int, scaled_period: float,
                           gamma0: float = 1.0) -> "ArrayParams":
        """Build parameters from the period expressed in units of λ₀/12."""
        return cls(n_atoms=n_atoms, period_ratio=scaled_period / 12.0, gamma0=gamma0)


@dataclass(frozen=True)
class ComplexEnergy:
    """Complex eigenenergy ε (the 2ω₀ offset of the pair is never stored).

    Physical decaying states have im <= 0; the radiative decay rate is -im.
    """

    re: float
    im: float

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexEnergy":
        return cls(re=float(np.real(z)), im=float(np.imag(z)))

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    @property
    def decay(self) -> float:
        """Radiative decay rate -Im ε (same units as ε)."""
        return -self.im


def pair_index(r: int, s: int, n_atoms: int) -> int:
    """Linear index of the ordered pair (r, s), 1 <= r < s <= N, lexicographic.

    (1,2) -> 0, (1,3) -> 1, ..., (N-1,N) -> N(N-1)/2 - 1.
    """
    if not (1 <= r < s <= n_atoms):
        raise IndexError(f"need 1 <= r < s <= N, got r={r}, s={s}, N={n_atoms}")
    # pairs with first element < r, then offset within the r-block
    return (r - 1) * n_atoms - r * (r - 1) // 2 + (s - r - 1)


def index_pair(idx: int, n_atoms: int) -> tuple[int, int]:
    """Inverse of pair_index: linear index -> (r, s) with 1 <= r < s <= N."""
    dim = n_atoms * (n_atoms - 1) // 2
    if not (0 <= idx < dim):
        raise IndexError(f"index {idx} out of range for N={n_atoms} (dim {dim})")
    # solve for the block: first index r has block length N - r
    r = 1
    remaining = idx
    while remaining >= n_atoms - r:
        remaining -= n_atoms - r
        r += 1
    return r, r + 1 + remaining


@dataclass(frozen=True)
class PairBasis:
    """Lexicographic basis of ordered pairs (r, s), r < s, for N atoms.

    rows/cols hold the 0-based atom indices of every pair, so that
    pair k is (rows[k]+1, cols[k]+1) in 1-based labelling.
    """

    n_atoms: int
    rows: np.ndarray
    cols: np.ndarray

    @classmethod
    def build(cls, n_atoms: int) -> "PairBasis":
        if n_atoms < 2:
            raise ValueError(f"pair basis needs N >= 2, got {n_atoms}")
        rows, cols = np.triu_indices(n_atoms, k=1)
        return cls(n_atoms=n_atoms, rows=rows, cols=cols)

    @property
    def dim(self) -> int:
        return self.n_atoms * (self.n_atoms - 1) // 2

    def pair_index(self, r: int, s: int) -> int:
        return pair_index(r, s, self.n_atoms)

    def index_pair(self, idx: int) -> tuple[int, int]:
        return index_pair(idx, self.n_atoms)

    def mirror_permutation(self) -> np.ndarray:
        """Permutation of pair indices under the mirror r -> N+1-r.

        The mirror maps (r, s) to (N+1-s, N+1-r), which is again ordered;
        the induced permutation P satisfies P[P] = identity.
        """
        n = self.n_atoms
        mirrored_r = n - 1 - self.cols  # 0-based: N-1-s
        mirrored_s = n - 1 - self.rows
        # vectorized lexicographic index of (mirrored_r, mirrored_s), 0-based
        return (mirrored_r * n - mirrored_r * (mirrored_r + 1) // 2
                + (mirrored_s - mirrored_r - 1))
