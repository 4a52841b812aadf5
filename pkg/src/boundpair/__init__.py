"""Two-photon bound states of an atomic array coupled to a waveguide.

Simulates the two-excitation sector of N two-level atoms in a periodic
1D array with waveguide-mediated (non-Hermitian, infinite-range) coupling
under the hard-core constraint, and the associated infinite-lattice
relative-motion problem: bound-pair dispersion, diverging effective mass
at array period d = λ₀/12, edge emission and dead-layer tunneling.
"""

from .core import ArrayParams, ComplexEnergy, PairBasis, kappa_from_phi, phi_from_period
from .spectra import SpectrumReport, TwoPhotonState, most_subradiant_bound, spectrum

__version__ = "0.1.0"

__all__ = [
    "ArrayParams",
    "ComplexEnergy",
    "PairBasis",
    "SpectrumReport",
    "TwoPhotonState",
    "__version__",
    "kappa_from_phi",
    "most_subradiant_bound",
    "phi_from_period",
    "spectrum",
]
