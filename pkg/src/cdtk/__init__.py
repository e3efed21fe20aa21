"""cdtk: numerical certifiers for curvature-dimension bounds.

Modules
-------
coeffs          comparison coefficients s, c, sigma, e and their identities
convexity       (K,N)-convexity certifiers and the 1D model function library
metric_measure  finite metric measure spaces, volume-comparison certifiers
transport       exact optimal transport and displacement interpolation
entropy_flow    entropy convexity along geodesics, functional inequalities
gradient_flow   EVI gradient flows, contraction and expansion bounds
markov_gamma    reversible generators, Gamma-calculus, spectral gap bounds
cli             the `cdtk` batch runner
"""

__version__ = "0.1.0"
