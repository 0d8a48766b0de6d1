"""Spin-distribution tooling for diluted and Sherrington-Kirkpatrick models.

The package is organized around the generic functional order parameter
sigma(w, u, v, x) and its SK counterpart sigma_bar(w, u, v):

- ``models``     model families, disorder sampling, exact Gibbs tables at small N
- ``cascade``    Ruelle probability cascades, hierarchical Gaussian fields
- ``orderparam`` order-parameter constructions (RS, cascade, tabulated, mixtures)
- ``functional`` the free-energy functionals P(mu) and their n-coordinate versions
- ``invariance`` cavity invariance / self-consistency residuals, stochastic stability
- ``bounds``     Franz-Leone and Guerra-type bounds, cavity decompositions
- ``estimate``   finite-N estimators (exact enumeration and MCMC)
- ``cli``        batch driver emitting TSV result rows
"""

from .rng import seed_derive

__all__ = ["seed_derive"]
__version__ = "0.1.0"
