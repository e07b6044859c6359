"""Commutators of multipliers with transport and with multiplication, and ratio probes.

Products are formed with the 2/3 rule (both factors and the result
truncated).  For a velocity without swirl the coefficients ``a_ij`` of the
Riesz form of ``(d_r/r) Delta^{-1}`` depend on the angle only, so
``v . grad a_ij = 0``; transport of ``(d_r/r) Delta^{-1} rho`` is therefore
evaluated as ``sum a_ij v . grad(R_ij rho)``, which never differentiates the
coefficients across the axis.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import axisym as ax
from .dyadic import besov_norm, bony_decompose, build_partition, smooth_step
from .lorentz import lorentz_norm
from .spectral import (
    GridSpec,
    ScalarField,
    VectorField,
    _dealias_mask,
    _inv_ksq,
    _ksq,
    dumps_json,
    fft,
    ifft,
    lebesgue_norm,
    riesz_symbol,
    wavenumbers,
)

__all__ = [
    "advect",
    "advection_commutator",
    "thm31_bound",
    "dyadic_advection_commutator",
    "prop32_bound",
    "smoothed_commutator",
    "kernel_moment_norm",
    "check_delta_q_moment",
    "delta_q_moment_norms",
    "power_law_field",
    "random_ring_profile",
    "random_pair",
    "ProbeReport",
    "run_probe_suite",
    "reports_json",
    "PROBES",
]

DIV_TOL = 1e-10


def _grad_hat(uh: np.ndarray, g: GridSpec):
    k = wavenumbers(g, odd=True)
    return [1j * ki * uh for ki in k]


def advect(v: VectorField, uh: np.ndarray, dealias: bool = True) -> np.ndarray:
    """``v . grad u`` for ``u`` given by half-spectrum coefficients ``uh``."""
    g = v.grid
    if dealias:
        mask = _dealias_mask(g)
        vt = ifft(fft(v.data) * mask, g.n)
        grads = [ifft(d * mask, g.n) for d in _grad_hat(uh, g)]
        out = vt[0] * grads[0] + vt[1] * grads[1] + vt[2] * grads[2]
        return ifft(fft(out) * mask, g.n)
    grads = [ifft(d, g.n) for d in _grad_hat(uh, g)]
    return v.data[0] * grads[0] + v.data[1] * grads[1] + v.data[2] * grads[2]


def _check_div(v: VectorField):
    vh = fft(v.data)
    k = wavenumbers(v.grid, odd=True)
    div = 1j * (k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2])
    nv = np.sqrt(np.sum(np.abs(vh) ** 2))
    if nv > 0 and np.sqrt(np.sum(np.abs(div) ** 2)) / nv > DIV_TOL * max(1.0, v.grid.k_nyquist):
        raise ValueError("velocity is not divergence free")


def _pairs():
    return ((1, 1), (2, 2), (1, 2))


def transport_of_riesz_form(v: VectorField, rh: np.ndarray) -> np.ndarray:
    """``v . grad((d_r/r) Delta^{-1} rho)`` as ``sum a_ij v . grad(R_ij rho)``."""
    g = v.grid
    coef = ax.riesz_coefficients(g)
    out = np.zeros(g.shape)
    for a, (i, j) in zip(coef, _pairs()):
        out += a * advect(v, riesz_symbol(g, i, j) * rh)
    return out


def advection_commutator(v: VectorField, rho: ScalarField, check: bool = True) -> ScalarField:
    """``(d_r/r) Delta^{-1}(v . grad rho) - v . grad((d_r/r) Delta^{-1} rho)``."""
    g = v.grid
    if check:
        _check_div(v)
        ax._require_axisym(rho.data, ax.AXISYM_TOL)
    rh = fft(rho.data)
    first = ax._riesz_form(fft(advect(v, rh)), g)
    second = transport_of_riesz_form(v, rh)
    return ScalarField(g, first - second)


def _xh_norm_sum(rho: ScalarField, fn) -> float:
    x1, x2, _ = rho.grid.coords()
    return fn(ScalarField(rho.grid, x1 * rho.data)) + fn(ScalarField(rho.grid, x2 * rho.data))


def thm31_bound(v: VectorField, rho: ScalarField, z: ScalarField | None = None) -> float:
    """``||zeta||_{L^{3,1}} (max(||x_h rho||_{B^0_{inf,1}}, ||x_h rho||_{L^2}) + ||rho||_{B^{1/2}_{2,1}})``.

    Norms of the pair ``x_h rho`` are the sums of the norms of ``x1 rho`` and ``x2 rho``.
    """
    z = z if z is not None else ax.zeta(v)
    zn = lorentz_norm(z, 3.0, 1.0)
    if zn == 0 or not np.any(rho.data):
        return 0.0
    b0 = _xh_norm_sum(rho, lambda f: besov_norm(f, 0.0, np.inf, 1.0))
    l2 = _xh_norm_sum(rho, lambda f: lebesgue_norm(f, 2))
    bh = besov_norm(rho, 0.5, 2.0, 1.0)
    return zn * (max(b0, l2) + bh)


def dyadic_advection_commutator(v: VectorField, rho: ScalarField, q: int) -> ScalarField:
    """``Delta_q(v . grad rho) - v . grad(Delta_q rho)``."""
    g = v.grid
    part = build_partition(g)
    sym = part.symbol(q)
    rh = fft(rho.data)
    a = ifft(sym * fft(advect(v, rh)), g.n)
    b = advect(v, sym * rh)
    return ScalarField(g, a - b)


def prop32_bound(v: VectorField, rho: ScalarField, z: ScalarField | None = None) -> float:
    """``||zeta||_{L^{3,1}} (||rho x_h||_{L^6} + ||rho||_{L^2})``."""
    z = z if z is not None else ax.zeta(v)
    return lorentz_norm(z, 3.0, 1.0) * (
        _xh_norm_sum(rho, lambda f: lebesgue_norm(f, 6)) + lebesgue_norm(rho, 2)
    )


def _symbol_array(h, g: GridSpec) -> np.ndarray:
    if callable(h):
        k1, k2, k3 = wavenumbers(g)
        return np.broadcast_to(h(k1, k2, k3), g.spectral_shape)
    return np.broadcast_to(np.asarray(h), g.spectral_shape)


def smoothed_commutator(h, f: ScalarField, gfield: ScalarField, dealias: bool = True) -> ScalarField:
    """``h(D)(f g) - f h(D) g`` with dealiased products."""
    grid = f.grid
    sym = _symbol_array(h, grid)
    gh = fft(gfield.data)
    if dealias:
        mask = _dealias_mask(grid)
        ft = ifft(fft(f.data) * mask, grid.n)
        gt = ifft(gh * mask, grid.n)
        fg = fft(ft * gt) * mask
        hg = ifft(sym * gh * mask, grid.n)
        second = ifft(fft(ft * hg) * mask, grid.n)
    else:
        fg = fft(f.data * gfield.data)
        second = f.data * ifft(sym * gh, grid.n)
    return ScalarField(grid, ifft(sym * fg, grid.n) - second)


def multiplier_kernel(h, g: GridSpec) -> np.ndarray:
    """Convolution kernel of the multiplier ``h`` on the grid, origin at the array centre.

    Normalized so that ``convolve(u, K)`` equals ``h(D) u``.
    """
    sym = _symbol_array(h, g)
    return np.fft.fftshift(ifft(np.asarray(sym, dtype=complex), g.n)) / g.volume


def kernel_moment_norm(h, g: GridSpec, r: float = 1.0) -> float:
    """``|| |x| F^{-1} h ||_{L^r}`` by grid quadrature."""
    x1, x2, x3 = g.coords()
    k = multiplier_kernel(h, g)
    return lebesgue_norm(np.sqrt(x1**2 + x2**2 + x3**2) * k, r, g)


# -- commutator of a dyadic block with a coordinate ------------------------

def _dchi(s):
    """Derivative of the radial low-pass profile."""
    w = 4.0 / 3.0 - 3.0 / 4.0
    t = (4.0 / 3.0 - np.asarray(s, dtype=float)) / w

    def f(x):
        out = np.zeros_like(x)
        p = x > 0
        out[p] = np.exp(-1.0 / x[p])
        return out

    def fp(x):
        out = np.zeros_like(x)
        p = x > 0
        out[p] = np.exp(-1.0 / x[p]) / x[p] ** 2
        return out

    a, b = f(t), f(1.0 - t)
    den = (a + b) ** 2
    out = np.zeros_like(t)
    m = den > 0
    out[m] = (fp(t)[m] * b[m] + a[m] * fp(1.0 - t)[m]) / den[m]
    return -out / w


def block_symbol_gradient(g: GridSpec, q: int, i: int) -> np.ndarray:
    """``d/dxi_i`` of the block symbol ``phi(2^-q xi)`` (top block: ``1 - chi(2^-q xi)``)."""
    part = build_partition(g)
    if q < 0 or q > part.q_max:
        raise ValueError(f"block index must lie in [0, {part.q_max}], got {q}")
    s = np.sqrt(_ksq(g))
    if q < part.q_max:
        d = _dchi(s / 2.0 ** (q + 1)) / 2.0 ** (q + 1) - _dchi(s / 2.0**q) / 2.0**q
    else:
        d = -_dchi(s / 2.0**q) / 2.0**q
    ki = wavenumbers(g, odd=True)[i - 1]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, d * ki / np.where(s > 0, s, 1.0), 0.0)


def _central_cube(g: GridSpec, frac: float = 0.25) -> np.ndarray:
    a = np.abs(g.axis()) <= frac * g.L
    return a[:, None, None] & a[None, :, None] & a[None, None, :]


def check_delta_q_moment(rho: ScalarField, q: int, i: int = 1) -> dict:
    """Compare ``[Delta_q, x_i] rho`` with the kernel form ``-(x_i phi_q^vee) * rho``.

    The kernel form is realized as a multiplier whose symbol is the transform
    of the sampled kernel ``x_i phi_q^vee(x)`` (chart centred at 0).  Both
    evaluations agree exactly wherever no pair ``(x, y)`` in the support
    wraps around the box, so the residual is measured on the central cube
    ``|x|_inf <= L/4``.  ``symbol_residual`` compares against the analytic
    symbol ``-i d_xi_i phi(2^-q xi)`` instead and exposes kernel-tail
    periodization.
    """
    g = rho.grid
    if i not in (1, 2, 3):
        raise ValueError(f"axis must be 1, 2 or 3, got {i}")
    ax._check_support(rho)
    part = build_partition(g)
    if q < 0 or q > part.q_max:
        raise ValueError(f"block index must lie in [0, {part.q_max}], got {q}")
    sym = part.symbol(q)
    xi = g.coords()[i - 1]
    rh = fft(rho.data)
    direct = ifft(sym * fft(xi * rho.data), g.n) - xi * ifft(sym * rh, g.n)
    kernel = ifft(sym.astype(complex), g.n)  # origin at index 0
    chart = np.fft.ifftshift(g.axis())
    shape = [1, 1, 1]
    shape[i - 1] = g.n
    kx = chart.reshape(shape) * kernel
    conv = ifft(-fft(kx) * rh, g.n)
    analytic = ifft(-1j * block_symbol_gradient(g, q, i) * rh, g.n)
    m = np.broadcast_to(_central_cube(g), g.shape)
    return {
        "identity": f"dyadic_coordinate_commutator[q={q},i={i}]",
        "n": g.n,
        "L": g.L,
        "residual": ax._rel(direct, conv, m),
        "residual_full_box": ax._rel(direct, conv),
        "symbol_residual": ax._rel(direct, analytic, m),
        "region": "central cube |x|_inf <= L/4",
        "norm": float(np.sqrt(np.sum(direct**2) * g.cell_volume)),
    }


def delta_q_moment_norms(rho: ScalarField, i: int = 1, qs: Sequence[int] | None = None) -> dict:
    """``||[Delta_q, x_i] rho||_{L^2}`` through the symbol ``-i d_xi_i phi(2^-q xi)``.

    Returns the norms and the least-squares slope of ``log2`` norm against
    ``q``.  The default range ``0 .. q_max - 1`` skips the top block, whose
    symbol has an inner edge only.
    """
    g = rho.grid
    part = build_partition(g)
    qs = list(range(0, part.q_max)) if qs is None else list(qs)
    rh = fft(rho.data)
    w = np.full(g.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    norms = []
    for q in qs:
        c = block_symbol_gradient(g, q, i) * rh
        norms.append(float(np.sqrt(g.volume * np.sum(w * np.abs(c) ** 2))))
    slope = float(np.polyfit(qs, np.log2(norms), 1)[0]) if len(qs) > 1 else float("nan")
    return {"q": qs, "norms": norms, "slope": slope, "n": g.n, "L": g.L}


def power_law_field(g: GridSpec, lo: float = 0.5, hi_frac: float = 0.7) -> ScalarField:
    """Radial band-limited field with ``|rho_hat|^2 ~ |xi|^-3`` (equal energy per octave).

    The band runs from ``lo`` to ``hi_frac * k_nyquist`` with smooth edges;
    the field is centred at the origin.
    """
    s = np.sqrt(_ksq(g))
    kmax = g.k_nyquist
    band = smooth_step((s - lo) / lo) * smooth_step((hi_frac * kmax - s) / (0.1 * kmax))
    with np.errstate(divide="ignore"):
        spec = np.where(s > 0, s ** -1.5, 0.0) * band
    # shift the origin from the box corner to x = 0
    m = [np.fft.fftfreq(g.n, 1.0 / g.n), np.fft.fftfreq(g.n, 1.0 / g.n), np.arange(g.n // 2 + 1)]
    phase = ((-1.0) ** m[0])[:, None, None] * ((-1.0) ** m[1])[None, :, None] * ((-1.0) ** m[2])[None, None, :]
    return ScalarField(g, ifft(spec * phase + 0j, g.n))


# -- random axisymmetric ensembles -----------------------------------------

def random_ring_profile(rng: np.random.Generator, L: float, symmetric: bool = True) -> ax.AxisymProfile:
    """Sum of 1-4 Gaussian rings: ``z0 in [-L/4, L/4]``, ``r0 in [0.5, 2]``,
    width ``in [0.2, 0.8]``, amplitude ``in [-1, 1]``.

    ``symmetric`` adds the mirror ring at ``-r0`` so the profile is even in ``r``.
    """
    k = int(rng.integers(1, 5))
    rings = []
    for _ in range(k):
        z0 = float(rng.uniform(-L / 4, L / 4))
        r0 = float(rng.uniform(0.5, 2.0))
        w = float(rng.uniform(0.2, 0.8))
        a = float(rng.uniform(-1.0, 1.0))
        rings.append(ax.gaussian_ring(r0, z0, w * w, a, symmetric=symmetric))
    return ax.ring_sum(rings)


def random_pair(rng: np.random.Generator, g: GridSpec):
    """Draw ``(v, rho, zeta)``: velocity with ``omega_theta = r * ring sum``, density a ring sum."""
    gp = random_ring_profile(rng, g.L)
    rp = random_ring_profile(rng, g.L)
    v = ax.velocity_from_ring_vorticity(gp, g)
    rho = ax.make_axisym_scalar(rp, g)
    return v, rho


@dataclass
class ProbeReport:
    inequality: str
    n: int
    L: float
    ensemble_size: int
    lhs: list = field(default_factory=list)
    rhs: list = field(default_factory=list)
    ratio: list = field(default_factory=list)
    skipped: int = 0

    @property
    def max_ratio(self) -> float:
        return float(max(self.ratio)) if self.ratio else float("nan")

    def add(self, lhs: float, rhs: float, floor: float = 1e-14):
        if not rhs > floor:
            self.skipped += 1
            return
        self.lhs.append(float(lhs))
        self.rhs.append(float(rhs))
        self.ratio.append(float(lhs / rhs))

    def as_dict(self) -> dict:
        d = asdict(self)
        d["max_ratio"] = self.max_ratio
        return d


PROBES = (
    "transport_commutator_L31",
    "dyadic_transport_commutator",
    "smoothed_commutator",
    "smoothed_commutator_gradient",
    "product_L31",
    "paraproduct_L31",
    "riesz_L31",
    "grad_inv_laplacian_Linf",
    "radial_velocity_over_r_Linf",
    "dr_over_r_inv_laplacian_L31",
)


def _sample_ratios(v: VectorField, rho: ScalarField) -> dict:
    g = v.grid
    part = build_partition(g)
    z = ax.zeta(v)
    out = {}
    comm = advection_commutator(v, rho, check=False)
    out["transport_commutator_L31"] = (lorentz_norm(comm, 3.0, 1.0), thm31_bound(v, rho, z))

    rhs32 = prop32_bound(v, rho, z)
    lhs32 = max(lebesgue_norm(dyadic_advection_commutator(v, rho, q), 2) for q in range(-1, part.q_max + 1))
    out["dyadic_transport_commutator"] = (lhs32, rhs32)

    # smoothed commutator and its gradient with f = zeta-type smooth field, g = rho
    f = z
    fh = fft(f.data)
    grad_f_inf = max(lebesgue_norm(ifft(d, g.n), np.inf, g) for d in _grad_hat(fh, g))
    g2 = lebesgue_norm(rho, 2)
    best27 = (0.0, 1.0)
    best28 = (0.0, 1.0)
    for q in range(0, part.q_max):
        sym = part.symbol(q)
        c = smoothed_commutator(sym, f, rho)
        lhs = lebesgue_norm(c, 2)
        rhs = kernel_moment_norm(sym, g, 1.0) * grad_f_inf * g2
        if rhs > 0 and lhs / rhs > best27[0] / best27[1]:
            best27 = (lhs, rhs)
        ch = fft(c.data)
        lhs = np.sqrt(sum(lebesgue_norm(ifft(d, g.n), 2, g) ** 2 for d in _grad_hat(ch, g)))
        rhs = grad_f_inf * g2
        if rhs > 0 and lhs / rhs > best28[0] / best28[1]:
            best28 = (lhs, rhs)
    out["smoothed_commutator"] = best27
    out["smoothed_commutator_gradient"] = best28

    u = ScalarField(g, np.tanh(f.data / max(np.abs(f.data).max(), 1e-300)))
    w31 = lorentz_norm(rho, 3.0, 1.0)
    out["product_L31"] = (lorentz_norm(ScalarField(g, u.data * rho.data), 3.0, 1.0),
                             lebesgue_norm(u, np.inf) * w31)
    tuw, _, _ = bony_decompose(u, rho, dealias=False)
    out["paraproduct_L31"] = (lorentz_norm(tuw, 3.0, 1.0), lebesgue_norm(u, np.inf) * w31)
    rh = fft(rho.data)
    rz = max(lorentz_norm(ifft(riesz_symbol(g, i, j) * rh, g.n), 3.0, 1.0, g)
             for i in (1, 2, 3) for j in range(i, 4))
    out["riesz_L31"] = (rz, w31)

    k = wavenumbers(g, odd=True)
    inv = _inv_ksq(g)
    gi = max(lebesgue_norm(ifft(-1j * ki * inv * rh, g.n), np.inf, g) for ki in k)
    out["grad_inv_laplacian_Linf"] = (gi, w31)
    out["radial_velocity_over_r_Linf"] = (lebesgue_norm(ax.radial_velocity_over_r(v), np.inf),
                                   lorentz_norm(z, 3.0, 1.0))
    out["dr_over_r_inv_laplacian_L31"] = (lorentz_norm(ax.dr_over_r_inv_laplacian(rho, check=False), 3.0, 1.0), w31)
    return out


def run_probe_suite(seed: int, ensemble: int, grid: GridSpec) -> list[ProbeReport]:
    """Evaluate every probe ratio over a seeded ensemble of random ``(v, rho)`` pairs."""
    rng = np.random.default_rng(seed)
    reports = {name: ProbeReport(name, grid.n, grid.L, ensemble) for name in PROBES}
    for _ in range(ensemble):
        v, rho = random_pair(rng, grid)
        for name, (lhs, rhs) in _sample_ratios(v, rho).items():
            reports[name].add(lhs, rhs)
    return [reports[name] for name in PROBES]


def reports_json(reports: Sequence[ProbeReport], seed: int) -> str:
    head = {"n": reports[0].n, "L": reports[0].L, "ensemble": reports[0].ensemble_size} if reports else {}
    return dumps_json({"seed": seed, **head, "probes": [r.as_dict() for r in reports]})
