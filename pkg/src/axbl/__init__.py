"""Numerical laboratory for axisymmetric Boussinesq flows without swirl.

Modules
-------
spectral
    Periodic grids, FFT-backed fields, multipliers, Leray projection, snapshots.
dyadic
    Littlewood-Paley blocks, Besov and Sobolev norms, Bony decomposition.
lorentz
    Decreasing rearrangements and Lorentz norms.
axisym
    Axisymmetric fields, Riesz-transform identities and their residual checks.
commutators
    Transport commutators and seeded probe ensembles.
solver
    Pseudo-spectral Boussinesq / Euler / heat solver with diagnostics.
degiorgi
    Level-set certification of sup bounds for transport-diffusion traces.
battery
    The identity battery behind ``axbl verify``.
cli
    The ``axbl`` command.
"""

__version__ = "0.1.0"

from .spectral import GridSpec, ScalarField, SpectralField, VectorField  # noqa: E402

__all__ = ["GridSpec", "ScalarField", "VectorField", "SpectralField", "__version__"]
