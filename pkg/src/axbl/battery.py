"""Identity verification battery shared by the command line and the demos.

Every check returns a record ``{identity, value, tolerance, pass, n, L}``.
Residual tolerances are multiplied by ``tolerance_scale``; interval checks
(square-function ratio, partition squares) keep their stated bounds.
"""

from __future__ import annotations

import numpy as np

from . import axisym as ax
from .commutators import check_delta_q_moment, delta_q_moment_norms, power_law_field
from .dyadic import all_blocks, build_partition, square_function
from .lorentz import lorentz_norm
from .spectral import GridSpec, ScalarField, coefficient_energy, lebesgue_norm, to_spectral

__all__ = ["identity_battery", "battery_passed", "BATTERY"]


def _record(name, value, tol, ok, g: GridSpec, **extra):
    rec = {"identity": name, "value": float(value), "tolerance": tol, "pass": bool(ok), "n": g.n, "L": g.L}
    rec.update(extra)
    return rec


def _le(name, value, tol, scale, g, **extra):
    t = tol * scale
    return _record(name, value, t, value <= t, g, **extra)


def _random_fields(g: GridSpec, count: int, seed: int):
    rng = np.random.default_rng(seed)
    return [ScalarField(g, rng.standard_normal(g.shape)) for _ in range(count)]


def check_partition(g: GridSpec, scale: float = 1.0) -> list[dict]:
    part = build_partition(g)
    total = part.blocks.sum(axis=0)
    sq = (part.blocks**2).sum(axis=0)
    slack = 1e-12 * scale
    lo, hi = float(sq.min()), float(sq.max())
    return [
        _le("partition_of_unity", float(np.abs(total - 1.0).max()), 1e-12, scale, g),
        _record("partition_squares_bounds", max(1.0 / 3.0 - lo, hi - 1.0, 0.0), slack,
                lo >= 1.0 / 3.0 - slack and hi <= 1.0 + slack, g, min=lo, max=hi),
    ]


def check_reconstruction(g: GridSpec, scale: float = 1.0, count: int = 10, seed: int = 0) -> list[dict]:
    worst = 0.0
    ratios = []
    for u in _random_fields(g, count, seed):
        rec = all_blocks(u).sum(axis=0)
        worst = max(worst, float(np.linalg.norm(rec - u.data) / np.linalg.norm(u.data)))
        ratios.append(lebesgue_norm(square_function(u), 2) / lebesgue_norm(u, 2))
    lo, hi = float(min(ratios)), float(max(ratios))
    return [
        _le("littlewood_paley_reconstruction", worst, 1e-12, scale, g),
        _record("square_function_ratio", max(0.5 - lo, hi - 1.01, 0.0), [0.5, 1.01], lo >= 0.5 and hi <= 1.01, g,
                min=lo, max=hi),
    ]


def check_parseval(g: GridSpec, scale: float = 1.0, seed: int = 1) -> dict:
    u = _random_fields(g, 1, seed)[0]
    direct = float(np.sum(u.data**2) * g.cell_volume)
    err = abs(coefficient_energy(to_spectral(u)) - direct) / direct
    return _le("parseval", err, 1e-12, scale, g)


def riesz_form_data(g: GridSpec) -> ScalarField:
    """Moment-free axisymmetric test field: Laplacian of a mirror-symmetric Gaussian ring.

    The mirror term keeps the profile even in ``r``, so it is smooth across the axis.
    """
    ring = ax.make_axisym_scalar(ax.gaussian_ring(2.0, 0.0, 0.25, symmetric=True), g)
    return ax.moment_free(ring, 1)


def check_riesz_form(g: GridSpec, scale: float = 1.0, tol: float = 1e-3, u: ScalarField | None = None) -> dict:
    u = riesz_form_data(g) if u is None else u
    a = ax.dr_over_r_inv_laplacian(u, check=False).data
    b = ax.dr_over_r_inv_laplacian_direct(u).data
    m = np.broadcast_to(ax.axis_distance_mask(g, 4.0), g.shape)
    err = float(np.linalg.norm((a - b)[m]) / np.linalg.norm(b[m]))
    return _le("riesz_form_vs_cylindrical", err, tol, scale, g, region="r >= 4 dx")


def moment_free_gaussian(g: GridSpec) -> ScalarField:
    """``Delta^2 exp(-|x|^2)``: every moment below degree four vanishes, so ``Delta^{-2}`` of it is compact."""
    x1, x2, x3 = g.coords()
    return ax.moment_free(ScalarField(g, np.exp(-(x1**2 + x2**2 + x3**2)) * np.ones(g.shape)), 2)


def _guarded(name, check, tol, scale, g):
    """Run ``check() -> ResidualReport``; a violated data precondition counts as a failure."""
    try:
        rep = check()
    except ValueError as exc:
        return _record(name, float("inf"), tol * scale, False, g, error=str(exc))
    return _le(name, rep.interior, tol, scale, g, full_box=rep.full)


def check_moment_identities(g: GridSpec, scale: float = 1.0, tol: float = 1e-3) -> list[dict]:
    f = moment_free_gaussian(g)
    out = []
    for i, j in ((1, 3), (2, 3), (1, 1)):
        out.append(_guarded(f"moment_inverse_laplacian_{i}{j}", lambda: ax.check_moment_inv_laplacian(f, i, j),
                            tol, scale, g))
    for i, j, k in ((1, 2, 3), (1, 1, 1), (1, 3, 3)):
        out.append(_guarded(f"riesz_moment_{i}{j}{k}", lambda: ax.check_riesz_moment(f, i, j, k), tol, scale, g))
    return out


def biot_savart_data(g: GridSpec) -> ScalarField:
    """``zeta = Delta^2`` of a symmetric Gaussian ring; potentials stay compactly supported."""
    ring = ax.make_axisym_scalar(ax.gaussian_ring(1.0, 0.0, 0.3, symmetric=True), g)
    return ax.moment_free(ring, 2)


def check_biot_savart(g: GridSpec, scale: float = 1.0, tol: float = 1e-3) -> list[dict]:
    z = biot_savart_data(g)
    v = ax.velocity_from_zeta(z)
    reps = ax.check_biot_savart_identities(v, z)
    return [_le(r.identity, r.interior, tol, scale, g, full_box=r.full) for r in reps]


def block_moment_data(g: GridSpec) -> ScalarField:
    x1, x2, x3 = g.coords()
    return ScalarField(g, np.exp(-2.0 * (x1**2 + x2**2 + x3**2)) * np.ones(g.shape))


def check_block_moment(g: GridSpec, scale: float = 1.0) -> list[dict]:
    part = build_partition(g)
    rho = block_moment_data(g)
    worst = max(check_delta_q_moment(rho, q, 1)["residual"] for q in range(part.q_max + 1))
    sl = delta_q_moment_norms(power_law_field(g), 1)
    slope = sl["slope"]
    return [
        _le("block_coordinate_commutator", worst, 1e-10, scale, g, region="|x|_inf <= L/4"),
        _record("block_commutator_slope", abs(slope + 1.0), 0.1 * scale, abs(slope + 1.0) <= 0.1 * scale, g,
                slope=slope),
    ]


def check_lorentz_diagonal(g: GridSpec, scale: float = 1.0) -> dict:
    u = _random_fields(g, 1, 2)[0]
    worst = 0.0
    for p in (2.0, 3.0, 6.0):
        a, b = lorentz_norm(u, p, p), lebesgue_norm(u, p)
        worst = max(worst, abs(a - b) / b)
    return _le("lorentz_diagonal_equals_lebesgue", worst, 1e-10, scale, g)


BATTERY = (
    "partition",
    "reconstruction",
    "parseval",
    "riesz_form",
    "moments",
    "biot_savart",
    "block_moment",
    "lorentz",
)


def identity_battery(g: GridSpec, tolerance_scale: float = 1.0) -> list[dict]:
    """Run every identity check on grid ``g``; raises ``ValueError`` for grids that are too small."""
    if not tolerance_scale > 0:
        raise ValueError(f"tolerance scale must be positive, got {tolerance_scale}")
    build_partition(g)
    s = tolerance_scale
    out = []
    out += check_partition(g, s)
    out += check_reconstruction(g, s)
    out.append(check_parseval(g, s))
    out.append(check_riesz_form(g, s))
    out += check_moment_identities(g, s)
    out += check_biot_savart(g, s)
    out += check_block_moment(g, s)
    out.append(check_lorentz_diagonal(g, s))
    return out


def battery_passed(records: list[dict]) -> bool:
    return all(r["pass"] for r in records)
