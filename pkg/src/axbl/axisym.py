"""Axisymmetric fields without swirl and the operators acting on them.

Quantities carrying ``1/r`` or ``1/r^2`` are evaluated for ``r >= dx``; the
axis column (``x1 = x2 = 0``) is filled by even extrapolation in ``r`` from the
two nearest rings of grid points.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    GridSpec,
    ScalarField,
    VectorField,
    _inv_ksq,
    fft,
    ifft,
    riesz_symbol,
    wavenumbers,
)

__all__ = [
    "AxisymProfile",
    "gaussian_ring",
    "ring_sum",
    "make_axisym_scalar",
    "make_noswirl_velocity",
    "velocity_from_ring_vorticity",
    "velocity_from_zeta",
    "moment_free",
    "theta_vorticity",
    "zeta",
    "swirl_defect",
    "rotation_defect",
    "vector_rotation_defect",
    "radial_velocity_over_r",
    "riesz_coefficients",
    "dr_over_r_inv_laplacian",
    "dr_over_r_inv_laplacian_direct",
    "check_moment_inv_laplacian",
    "check_riesz_moment",
    "check_biot_savart_identities",
    "interior_mask",
    "axis_distance_mask",
]

MARGIN_TOL = 1e-6
SWIRL_TOL = 1e-2
AXISYM_TOL = 1e-8


@dataclass(frozen=True)
class AxisymProfile:
    """Scalar profile ``p(r, z)`` with ``r >= 0``.

    ``evaluator`` must accept broadcastable arrays.  ``even`` records whether
    ``p`` extends smoothly as an even function of ``r``.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    label: str = "profile"
    even: bool = True

    def __call__(self, r, z):
        return self.evaluator(r, z)


def gaussian_ring(r0: float = 1.0, z0: float = 0.0, width2: float = 0.1, amp: float = 1.0,
                  symmetric: bool = False) -> AxisymProfile:
    """``amp * exp(-((r - r0)^2 + (z - z0)^2) / width2)``.

    With ``symmetric`` the mirror ring at ``-r0`` is added, which makes the
    profile an even (hence axis-smooth) function of ``r``.
    """

    def ev(r, z):
        out = np.exp(-((r - r0) ** 2 + (z - z0) ** 2) / width2)
        if symmetric:
            out = out + np.exp(-((r + r0) ** 2 + (z - z0) ** 2) / width2)
        return amp * out

    return AxisymProfile(ev, f"ring(r0={r0}, z0={z0}, w2={width2})", even=symmetric or r0 == 0)


def ring_sum(rings: Sequence[AxisymProfile]) -> AxisymProfile:
    rings = tuple(rings)

    def ev(r, z):
        return sum(p(r, z) for p in rings)

    return AxisymProfile(ev, "+".join(p.label for p in rings), even=all(p.even for p in rings))


def _rz(grid: GridSpec):
    _, _, x3 = grid.coords()
    return grid.radius(), x3


def _check_margin(values: np.ndarray, grid: GridSpec, what: str):
    r, z = _rz(grid)
    outside = (r**2 + z**2) >= (0.75 * grid.L) ** 2
    peak = np.abs(values).max()
    if peak == 0:
        return
    tail = np.abs(np.broadcast_to(values, grid.shape)[np.broadcast_to(outside, grid.shape)]).max()
    if tail > MARGIN_TOL * peak:
        raise ValueError(
            f"{what} is not negligible outside r^2 + z^2 < (3L/4)^2 "
            f"(tail/peak = {tail / peak:.2e} > {MARGIN_TOL:g})"
        )


def make_axisym_scalar(p: AxisymProfile, grid: GridSpec) -> ScalarField:
    """Sample ``p(sqrt(x1^2 + x2^2), x3)`` on the grid."""
    r, z = _rz(grid)
    data = np.broadcast_to(p(r, z), grid.shape).astype(float)
    _check_margin(data, grid, p.label)
    return ScalarField(grid, data)


def _velocity_from_vorticity(w: np.ndarray, grid: GridSpec) -> VectorField:
    # v = -Delta^{-1} curl w; curl output is already divergence free, and we
    # keep only the solenoidal part of w implicitly through the curl.
    wh = fft(w)
    k1, k2, k3 = wavenumbers(grid, odd=True)
    a, b, c = wh
    curl = 1j * np.stack([k2 * c - k3 * b, k3 * a - k1 * c, k1 * b - k2 * a])
    vh = curl * _inv_ksq(grid)
    return VectorField(grid, ifft(vh, grid.n))


def make_noswirl_velocity(omega_theta: AxisymProfile, grid: GridSpec) -> VectorField:
    """Velocity whose vorticity is ``omega_theta(r, z) e_theta``.

    ``omega_theta`` must vanish on the axis.  Returns the divergence-free,
    mean-free field ``-Delta^{-1} curl(omega_theta e_theta)``.
    """
    r, z = _rz(grid)
    x1, x2, _ = grid.coords()
    wt = np.broadcast_to(omega_theta(r, z), grid.shape).astype(float)
    peak = np.abs(wt).max()
    if peak == 0:
        return VectorField(grid, np.zeros((3,) + grid.shape))
    on_axis = np.abs(omega_theta(np.zeros(grid.n), grid.axis())).max()
    if on_axis > MARGIN_TOL * peak:
        raise ValueError(f"omega_theta does not vanish on the axis (|value|/peak = {on_axis / peak:.2e})")
    _check_margin(wt, grid, omega_theta.label)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(r > 0, wt / np.where(r > 0, r, 1.0), 0.0)
    w = np.stack([-x2 * s, x1 * s, np.zeros(grid.shape)])
    return _velocity_from_vorticity(w, grid)


def velocity_from_ring_vorticity(g: AxisymProfile, grid: GridSpec) -> VectorField:
    """Velocity with ``omega_theta = r * g(r, z)`` for an axis-smooth ``g``.

    The vorticity is assembled as ``g * (-x2, x1, 0)``, so no division by ``r``
    is needed.
    """
    r, z = _rz(grid)
    x1, x2, _ = grid.coords()
    gv = np.broadcast_to(g(r, z), grid.shape).astype(float)
    _check_margin(gv * r, grid, g.label)
    w = np.stack([-x2 * gv, x1 * gv, np.zeros(grid.shape)])
    return _velocity_from_vorticity(w, grid)


def _rot(a, neg):
    """Sample ``a`` at ``(-x2, x1, x3)``; index ``j`` of ``-x`` is ``(n - j) mod n``."""
    t = np.swapaxes(a, -3, -2)  # t[i, j] = a[j, i]
    return t[..., :, neg, :]


def rotation_defect(u: np.ndarray) -> float:
    """``max |u(x1, x2, x3) - u(-x2, x1, x3)| / max |u|`` for scalar samples."""
    u = np.asarray(u)
    peak = np.abs(u).max()
    if peak == 0:
        return 0.0
    return float(np.abs(u - _rot(u, (-np.arange(u.shape[-1])) % u.shape[-1])).max() / peak)


def vector_rotation_defect(v: VectorField) -> float:
    """Defect of ``v(Rx) = R v(x)`` for the quarter turn ``R`` about the axis, relative to ``max |v|``."""
    d = v.data
    peak = np.abs(d).max()
    if peak == 0:
        return 0.0
    neg = (-np.arange(v.grid.n)) % v.grid.n
    e = max(
        np.abs(_rot(d[0], neg) + d[1]).max(),
        np.abs(_rot(d[1], neg) - d[0]).max(),
        np.abs(_rot(d[2], neg) - d[2]).max(),
    )
    return float(e / peak)


def swirl_defect(v: VectorField) -> float:
    """``max |v . e_theta| / max |v|``."""
    x1, x2, _ = v.grid.coords()
    r = v.grid.radius()
    peak = np.abs(v.data).max()
    if peak == 0:
        return 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        vt = np.where(r > 0, (x1 * v.data[1] - x2 * v.data[0]) / np.where(r > 0, r, 1.0), 0.0)
    return float(np.abs(vt).max() / peak)


def _require_noswirl(v: VectorField, tol: float):
    d = swirl_defect(v)
    if d > tol:
        raise ValueError(f"velocity carries swirl: max|v.e_theta|/max|v| = {d:.2e} > {tol:g}")


def _fill_axis_even(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Replace axis values by ``(4 a(h) - a(2h)) / 3`` (even quadratic in ``r``)."""
    n = grid.n
    c = n // 2
    ring1 = (a[c + 1, c] + a[c - 1, c] + a[c, c + 1] + a[c, c - 1]) / 4.0
    ring2 = (a[c + 2, c] + a[c - 2, c] + a[c, c + 2] + a[c, c - 2]) / 4.0
    out = a.copy()
    out[c, c] = (4.0 * ring1 - ring2) / 3.0
    return out


def _cross_r(v: VectorField) -> np.ndarray:
    """``x1 w2 - x2 w1`` with ``w = curl v`` (equals ``r * omega_theta``)."""
    g = v.grid
    vh = fft(v.data)
    k1, k2, k3 = wavenumbers(g, odd=True)
    w1 = ifft(1j * (k2 * vh[2] - k3 * vh[1]), g.n)
    w2 = ifft(1j * (k3 * vh[0] - k1 * vh[2]), g.n)
    x1, x2, _ = g.coords()
    return x1 * w2 - x2 * w1


def theta_vorticity(v: VectorField, swirl_tol: float = SWIRL_TOL) -> ScalarField:
    """``omega_theta = (x1 w2 - x2 w1)/r``; zero on the axis (odd in ``r``)."""
    _require_noswirl(v, swirl_tol)
    r = v.grid.radius()
    c = _cross_r(v)
    with np.errstate(invalid="ignore", divide="ignore"):
        wt = np.where(r > 0, c / np.where(r > 0, r, 1.0), 0.0)
    return ScalarField(v.grid, wt)


def zeta(v: VectorField, swirl_tol: float = SWIRL_TOL) -> ScalarField:
    """``zeta = omega_theta / r = (x1 w2 - x2 w1)/r^2``; axis filled by even extrapolation."""
    _require_noswirl(v, swirl_tol)
    g = v.grid
    r = g.radius()
    c = _cross_r(v)
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(r > 0, c / np.where(r > 0, r, 1.0) ** 2, 0.0)
    return ScalarField(g, _fill_axis_even(z, g))


def radial_velocity_over_r(v: VectorField) -> ScalarField:
    """``v^r / r = (x1 v1 + x2 v2)/r^2``; axis filled by even extrapolation."""
    g = v.grid
    x1, x2, _ = g.coords()
    r2 = g.radius() ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(r2 > 0, (x1 * v.data[0] + x2 * v.data[1]) / np.where(r2 > 0, r2, 1.0), 0.0)
    return ScalarField(g, _fill_axis_even(a, g))


def riesz_coefficients(grid: GridSpec):
    """``(a11, a22, a12)`` with ``a11 = x2^2/r^2``, ``a22 = x1^2/r^2``, ``a12 = -2 x1 x2/r^2``.

    On the axis the coefficients take the values ``(1/2, 1/2, 0)``, i.e. the
    angular average, which gives the limit ``(R11 + R22)/2`` there.
    """
    x1, x2, _ = grid.coords()
    r2 = np.broadcast_to(x1**2 + x2**2, grid.shape[:2] + (1,))
    safe = np.where(r2 > 0, r2, 1.0)
    a11 = np.where(r2 > 0, x2**2 / safe, 0.5)
    a22 = np.where(r2 > 0, x1**2 / safe, 0.5)
    a12 = np.where(r2 > 0, -2.0 * x1 * x2 / safe, 0.0)
    return a11, a22, a12


def _require_axisym(u: np.ndarray, tol: float):
    d = rotation_defect(u)
    if d > tol:
        raise ValueError(f"field is not axisymmetric: rotation defect {d:.2e} > {tol:g}")


def dr_over_r_inv_laplacian(u: ScalarField, axisym_tol: float = AXISYM_TOL, check: bool = True) -> ScalarField:
    """``(d_r / r) Delta^{-1} u`` through its Riesz form ``a11 R11 u + a22 R22 u + a12 R12 u``."""
    if check:
        _require_axisym(u.data, axisym_tol)
    return ScalarField(u.grid, _riesz_form(fft(u.data), u.grid))


def _riesz_form(uh: np.ndarray, g: GridSpec) -> np.ndarray:
    a11, a22, a12 = riesz_coefficients(g)
    return (
        a11 * ifft(riesz_symbol(g, 1, 1) * uh, g.n)
        + a22 * ifft(riesz_symbol(g, 2, 2) * uh, g.n)
        + a12 * ifft(riesz_symbol(g, 1, 2) * uh, g.n)
    )


def dr_over_r_inv_laplacian_direct(u: ScalarField) -> ScalarField:
    """``(x1 d1 + x2 d2) Delta^{-1} u / r^2`` for ``r >= dx``; axis by even extrapolation."""
    g = u.grid
    fh = -fft(u.data) * _inv_ksq(g)
    k1, k2, _ = wavenumbers(g, odd=True)
    x1, x2, _ = g.coords()
    num = x1 * ifft(1j * k1 * fh, g.n) + x2 * ifft(1j * k2 * fh, g.n)
    r2 = g.radius() ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(r2 > 0, num / np.where(r2 > 0, r2, 1.0), 0.0)
    return ScalarField(g, _fill_axis_even(a, g))


# -- region masks and residual reports --------------------------------------

def interior_mask(grid: GridSpec, shell: float | None = None) -> np.ndarray:
    """Cells at distance at least ``shell`` (default ``L/8``) from the box faces."""
    shell = grid.L / 8.0 if shell is None else shell
    a = np.abs(grid.axis()) <= grid.L - shell
    return a[:, None, None] & a[None, :, None] & a[None, None, :]


def axis_distance_mask(grid: GridSpec, cells: float = 4.0) -> np.ndarray:
    """Cells with ``r >= cells * dx``, broadcast to the full grid."""
    return np.broadcast_to(grid.radius() >= cells * grid.spacing - 1e-12, grid.shape)


def _rel(a: np.ndarray, b: np.ndarray, mask: np.ndarray | None = None) -> float:
    d, ref = a - b, b
    if mask is not None:
        d, ref = d[mask], ref[mask]
    den = np.sqrt(np.sum(ref**2))
    num = np.sqrt(np.sum(d**2))
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return float(num / den)


@dataclass
class ResidualReport:
    """Relative L2 residuals of an identity on the interior and on the full box."""

    identity: str
    n: int
    L: float
    interior: float
    full: float
    region: str
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        d = {
            "identity": self.identity,
            "n": self.n,
            "L": self.L,
            "residual": self.interior,
            "residual_full_box": self.full,
            "region": self.region,
        }
        d.update(self.extra)
        return d


def _check_support(f: ScalarField):
    g = f.grid
    x1, x2, x3 = g.coords()
    outside = np.maximum(np.maximum(np.abs(x1), np.abs(x2)), np.abs(x3)) > 0.75 * g.L
    peak = np.abs(f.data).max()
    if peak == 0:
        return
    tail = np.abs(f.data[np.broadcast_to(outside, g.shape)]).max()
    if tail > MARGIN_TOL * peak:
        raise ValueError(
            f"data is not negligible within L/4 of the box faces (tail/peak = {tail / peak:.2e})"
        )


def _coord(g: GridSpec, i: int) -> np.ndarray:
    return g.coords()[i - 1]


def _region(g: GridSpec, mask, label):
    if mask is None:
        return interior_mask(g), "interior shell L/8"
    return np.broadcast_to(mask, g.shape), label or "custom region"


def check_moment_inv_laplacian(f: ScalarField, i: int, j: int, mask: np.ndarray | None = None,
                               region: str | None = None) -> ResidualReport:
    """``Delta^{-1}(x_i d_j f)`` against ``x_i d_j Delta^{-1} f - 2 R_ij Delta^{-1} f``.

    The residual is measured on ``mask`` (default: away from a boundary shell of width ``L/8``).
    """
    _check_support(f)
    g = f.grid
    k = wavenumbers(g, odd=True)
    fh = fft(f.data)
    xi = _coord(g, i)
    inv = _inv_ksq(g)
    lhs = ifft(-fft(xi * ifft(1j * k[j - 1] * fh, g.n)) * inv, g.n)
    dinvf = ifft(-1j * k[j - 1] * fh * inv, g.n)
    lij = ifft(2.0 * riesz_symbol(g, i, j) * fh * inv, g.n)
    rhs = xi * dinvf + lij
    m, label = _region(g, mask, region)
    return ResidualReport(f"inv_laplacian_moment[{i}{j}]", g.n, g.L, _rel(lhs, rhs, m), _rel(lhs, rhs), label)


def moment_correction(f: ScalarField, i: int, j: int, k: int) -> np.ndarray:
    """``L^k_ij f = -2 d_k Delta^{-1} R_ij f + delta_ik d_j Delta^{-1} f + delta_jk d_i Delta^{-1} f``."""
    g = f.grid
    kv = wavenumbers(g, odd=True)
    fh = fft(f.data)
    inv = -_inv_ksq(g)
    out = -2.0 * 1j * kv[k - 1] * inv * riesz_symbol(g, i, j) * fh
    if i == k:
        out = out + 1j * kv[j - 1] * inv * fh
    if j == k:
        out = out + 1j * kv[i - 1] * inv * fh
    return ifft(out, g.n)


def check_riesz_moment(f: ScalarField, i: int, j: int, k: int, mask: np.ndarray | None = None,
                       region: str | None = None) -> ResidualReport:
    """``R_ij(x_k f)`` against ``x_k R_ij f + L^k_ij f``; also checks the reduced form when no delta fires."""
    _check_support(f)
    g = f.grid
    xk = _coord(g, k)
    sym = riesz_symbol(g, i, j)
    lhs = ifft(sym * fft(xk * f.data), g.n)
    corr = moment_correction(f, i, j, k)
    rhs = xk * ifft(sym * fft(f.data), g.n) + corr
    m, label = _region(g, mask, region)
    extra = {}
    if i != k and j != k:
        kv = wavenumbers(g, odd=True)
        reduced = ifft(-2.0 * 1j * kv[k - 1] * (-_inv_ksq(g)) * sym * fft(f.data), g.n)
        extra["reduced_form_residual"] = _rel(corr, reduced) if np.any(reduced) else float(np.abs(corr).max())
    return ResidualReport(
        f"riesz_moment[{i}{j},{k}]", g.n, g.L, _rel(lhs, rhs, m), _rel(lhs, rhs), label, extra,
    )


def check_biot_savart_identities(v: VectorField, z: ScalarField | None = None) -> list[ResidualReport]:
    """Residuals of the moment forms of the horizontal and vertical velocity.

    ``v^i = x_i Delta^{-1} d_3 zeta - 2 d_i d_3 Delta^{-2} zeta`` for ``i = 1, 2``
    and ``-v^3 = x_h . grad_h Delta^{-1} zeta + 2 Delta^{-1} R_33 zeta``, with
    ``zeta = omega_theta / r``.
    """
    _require_noswirl(v, SWIRL_TOL)
    g = v.grid
    z = z if z is not None else zeta(v)
    zh = fft(z.data)
    kv = wavenumbers(g, odd=True)
    inv = -_inv_ksq(g)  # symbol of Delta^{-1}
    x1, x2, _ = g.coords()
    m = interior_mask(g)
    reports = []
    dz3 = ifft(1j * kv[2] * inv * zh, g.n)
    for i, xi in ((1, x1), (2, x2)):
        corr = ifft(-2.0 * (1j * kv[i - 1]) * (1j * kv[2]) * inv * inv * zh, g.n)
        rhs = xi * dz3 + corr
        reports.append(ResidualReport(f"biot_savart_v{i}", g.n, g.L, _rel(v.data[i - 1], rhs, m),
                                      _rel(v.data[i - 1], rhs), "interior shell L/8"))
    rhs3 = (
        x1 * ifft(1j * kv[0] * inv * zh, g.n)
        + x2 * ifft(1j * kv[1] * inv * zh, g.n)
        + 2.0 * ifft(inv * riesz_symbol(g, 3, 3) * zh, g.n)
    )
    reports.append(ResidualReport("biot_savart_v3", g.n, g.L, _rel(-v.data[2], rhs3, m),
                                  _rel(-v.data[2], rhs3), "interior shell L/8"))
    return reports


def velocity_from_zeta(z: ScalarField) -> VectorField:
    """Velocity with ``omega_theta = r * zeta`` for sampled axisymmetric ``zeta``."""
    g = z.grid
    x1, x2, _ = g.coords()
    w = np.stack([-x2 * z.data, x1 * z.data, np.zeros(g.shape)])
    return _velocity_from_vorticity(w, g)


def moment_free(u: ScalarField, order: int = 1) -> ScalarField:
    """``Delta^order u``, computed spectrally.

    The result has vanishing moments up to degree ``2*order - 1`` and its
    ``order``-fold inverse Laplacian is ``u`` itself, so potentials built
    from it stay compactly supported and periodization is invisible.
    """
    g = u.grid
    from .spectral import _ksq

    return ScalarField(g, ifft((-_ksq(g)) ** order * fft(u.data), g.n))
