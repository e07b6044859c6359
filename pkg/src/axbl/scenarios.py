"""Initial data used by the solver checks, the command line and the demos."""

from __future__ import annotations

import numpy as np
from scipy.special import hyp1f1

from . import axisym as ax
from .dyadic import smooth_step
from .spectral import GridSpec, ScalarField, VectorField

__all__ = [
    "ring_data",
    "vortex_ring",
    "critical_heat_profile",
    "gamma_free_data",
    "buoyancy_mode",
    "buoyancy_exact",
]


def ring_data(grid: GridSpec, rho_r0=1.5, rho_z0=0.3, rho_width2=0.4, rho_amp=1.0,
              vort_r0=1.2, vort_width2=0.4, vort_amp=2.0):
    """Mirror-symmetric density ring (smooth across the axis) and a vortex ring."""
    rho = ax.make_axisym_scalar(ax.gaussian_ring(rho_r0, rho_z0, rho_width2, rho_amp, True), grid)
    return vortex_ring(grid, vort_r0, vort_width2, vort_amp), rho


def vortex_ring(grid: GridSpec, r0=1.5, width2=0.3, amp=2.0) -> VectorField:
    """No-swirl velocity whose ``zeta = omega_theta / r`` is a symmetric Gaussian ring."""
    return ax.velocity_from_ring_vorticity(ax.gaussian_ring(r0, 0.0, width2, amp, True), grid)


def critical_heat_profile(grid: GridSpec, tau: float | None = None, r_in: float | None = None,
                          r_out: float | None = None) -> ScalarField:
    """``exp(tau Delta) |x|^{-3/2}`` cut off smoothly between ``r_in`` and ``r_out``.

    Under the heat flow the peak decays like ``(t + tau)^{-3/4}`` until the
    cutoff is felt, which is the slowest rate allowed for ``L^2`` data.
    The profile is ``1F1(3/4; 3/2; -|x|^2 / 4 tau)`` up to a constant.
    Defaults: ``tau = 2 h^2``, cutoff between ``3L/8`` and ``3L/4``.
    """
    tau = 2.0 * grid.spacing**2 if tau is None else tau
    r_in = 3.0 * grid.L / 8.0 if r_in is None else r_in
    r_out = 3.0 * grid.L / 4.0 if r_out is None else r_out
    if not (tau > 0 and 0 < r_in < r_out):
        raise ValueError("need tau > 0 and 0 < r_in < r_out")
    x1, x2, x3 = grid.coords()
    r = np.sqrt(x1**2 + x2**2 + x3**2)
    return ScalarField(grid, hyp1f1(0.75, 1.5, -(r**2) / (4.0 * tau)) * smooth_step((r_out - r) / (r_out - r_in)))


def gamma_free_data(grid: GridSpec, r0=2.0, width2=0.8, amp=1.0):
    """``(v, rho)`` with ``rho = Delta h`` and ``zeta = -(d_r/r) Delta^{-1} rho``, so ``Gamma = 0``.

    ``h`` is a symmetric Gaussian ring.  Both ``rho`` and ``zeta = -(d_r h)/r``
    are compactly supported, and along the flow ``Gamma`` is generated by the
    commutator source alone.
    """
    h = ax.make_axisym_scalar(ax.gaussian_ring(r0, 0.0, width2, amp, True), grid)
    rho = ax.moment_free(h, 1)
    z = ax.dr_over_r_inv_laplacian(rho)
    return ax.velocity_from_zeta(ScalarField(grid, -z.data)), rho


def buoyancy_mode(grid: GridSpec, m: int = 5) -> ScalarField:
    """``cos(m pi x1 / L)``: buoyancy is divergence free and all nonlinear terms vanish."""
    x1, _, _ = grid.coords()
    return ScalarField(grid, np.broadcast_to(np.cos(m * np.pi * x1 / grid.L), grid.shape).copy())


def buoyancy_exact(grid: GridSpec, t: float, m: int = 5):
    """Exact ``(v, rho)`` at time ``t`` from ``v = 0``, ``rho = cos(m pi x1 / L)``."""
    k2 = (m * np.pi / grid.L) ** 2
    rho0 = buoyancy_mode(grid, m).data
    v = np.zeros((3,) + grid.shape)
    v[2] = rho0 * (1.0 - np.exp(-k2 * t)) / k2
    return VectorField(grid, v), ScalarField(grid, rho0 * np.exp(-k2 * t))
