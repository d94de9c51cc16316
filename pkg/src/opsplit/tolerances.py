"""Numerical tolerance constants, collected in one place.

Values sit roughly 1e3..1e6 above double-precision epsilon, scaled by the
conditioning expected at desk scale (m <= 256, low-degree rational schemes).
"""

# coefficient-level algebraic checks (value and derivative at 0)
COEFF_CHECK = 1e-12

# algebraic identities: residue sum rules, conjugate pairing, diagonal-oracle
ALGEBRAIC = 1e-10

# partial-fraction reconstruction against direct evaluation
RECONSTRUCTION = 1e-9

# imaginary part allowed in a real-input resolvent evaluation
IMAG_RESIDUE = 1e-9

# relative radius for clustering denominator roots into multiplicity groups
POLE_CLUSTER_REL = 1e-8

# common-root detection between numerator and denominator
ROOT_MATCH = 1e-10

# minimum distance from an evaluation point to a pole
POLE_PROXIMITY = 1e-12

# poles must satisfy Re(pole) > RHP_MARGIN
RHP_MARGIN = 1e-10

# condition-number ceiling for the residue cross-check linear system
ILL_CONDITIONED = 1e12

# operator spectra must satisfy max Re(eig) <= SPECTRUM_LHP
SPECTRUM_LHP = 1e-10

# circulant detection: commutation with the cyclic shift
CIRCULANT_COMMUTE = 1e-12

# agreement between the Pade and Fourier matrix-exponential paths
EXPM_AGREE = 1e-9

# slack added to stability targets when fitting (M, omega)
STABILITY_FIT = 1e-8

# reference grid used to measure sup norms of lifted functions
REFERENCE_GRID_SIZE = 4096
