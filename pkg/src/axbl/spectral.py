"""Periodic-grid fields, Fourier transforms and multiplier operators.

Whole space is replaced by the periodic box ``[-L, L)^3`` sampled at ``n``
points per axis, ``x_j = -L + j * (2L/n)``.  Wavenumbers are ``k = (pi/L) m``
with ``m`` in ``[-n/2, n/2)``.

Spectral coefficients use the half-spectrum layout of ``rfftn`` (last axis
holds ``m3 >= 0`` only) and the *forward* normalization, i.e. ``u_hat`` are
Fourier-series coefficients::

    u(x) = sum_k u_hat[k] exp(i k . (x + L))

so Parseval reads ``||u||_2^2 = (2L)^3 * sum_k |u_hat[k]|^2`` where the sum
runs over the full (Hermitian) spectrum.  :func:`coefficient_energy` handles
the doubling of the half-spectrum.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Union

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "ScalarField",
    "VectorField",
    "SpectralField",
    "to_spectral",
    "to_physical",
    "wavenumbers",
    "apply_multiplier",
    "inverse_laplacian",
    "laplacian",
    "gradient",
    "divergence",
    "curl",
    "riesz",
    "leray_project",
    "dealias",
    "dealiased_product",
    "lebesgue_norm",
    "coefficient_energy",
    "convolve",
    "write_snapshot",
    "read_snapshot",
    "json_safe",
    "dumps_json",
]


def _workers() -> int:
    env = os.environ.get("AXBL_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridSpec:
    """Cubic periodic grid on ``[-L, L)^3`` with ``n`` points per axis."""

    n: int
    L: float = 8.0

    def __post_init__(self):
        n = int(self.n)
        if n < 8 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box half width must be positive, got {self.L}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "L", float(self.L))

    @property
    def spacing(self) -> float:
        return 2.0 * self.L / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    @property
    def volume(self) -> float:
        return (2.0 * self.L) ** 3

    @property
    def k_nyquist(self) -> float:
        """Largest per-axis wavenumber modulus, ``pi n / (2L)``."""
        return np.pi * self.n / (2.0 * self.L)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def spectral_shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n // 2 + 1)

    def axis(self) -> np.ndarray:
        return -self.L + self.spacing * np.arange(self.n)

    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable coordinate arrays ``(x1, x2, x3)``."""
        return _coords(self)

    def radius(self) -> np.ndarray:
        """Cylindrical radius ``sqrt(x1^2 + x2^2)`` as an ``(n, n, 1)`` array."""
        x1, x2, _ = self.coords()
        return np.sqrt(x1**2 + x2**2)


@lru_cache(maxsize=16)
def _coords(grid: GridSpec):
    a = grid.axis()
    return a[:, None, None], a[None, :, None], a[None, None, :]


@lru_cache(maxsize=16)
def _wavenumbers(grid: GridSpec, odd: bool):
    n = grid.n
    scale = np.pi / grid.L
    m = np.fft.fftfreq(n, d=1.0 / n)
    mr = np.arange(n // 2 + 1, dtype=float)
    if odd:
        # odd symbols vanish on the unpaired Nyquist plane so output stays real
        m = m.copy()
        m[n // 2] = 0.0
        mr = mr.copy()
        mr[-1] = 0.0
    return (
        (scale * m)[:, None, None],
        (scale * m)[None, :, None],
        (scale * mr)[None, None, :],
    )


@lru_cache(maxsize=16)
def _ksq(grid: GridSpec) -> np.ndarray:
    k1, k2, k3 = _wavenumbers(grid, False)
    return k1**2 + k2**2 + k3**2


@lru_cache(maxsize=16)
def _inv_ksq_odd(grid: GridSpec) -> np.ndarray:
    """``1/|k|^2`` built from the odd-symbol wavenumbers (0 where they all vanish).

    Pairing it with odd-symbol ``k`` makes ``k k^T / |k|^2`` an exact
    orthogonal projector, also on the Nyquist planes.
    """
    k1, k2, k3 = _wavenumbers(grid, True)
    k2s = k1**2 + k2**2 + k3**2
    out = np.zeros_like(k2s)
    np.divide(1.0, k2s, out=out, where=k2s > 0)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _dealias_mask(grid: GridSpec) -> np.ndarray:
    k1, k2, k3 = _wavenumbers(grid, False)
    kc = (2.0 / 3.0) * grid.k_nyquist
    return (np.abs(k1) < kc) & (np.abs(k2) < kc) & (np.abs(k3) < kc)


def wavenumbers(grid: GridSpec, odd: bool = False):
    """Broadcastable wavenumber arrays ``(k1, k2, k3)`` on the half spectrum.

    With ``odd=True`` the unpaired Nyquist entries are set to zero, which is
    the right convention for symbols odd in a component (derivatives).
    """
    return _wavenumbers(grid, bool(odd))


def _check_finite(data: np.ndarray, what: str):
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != self.grid.shape:
            data = np.broadcast_to(data, self.grid.shape).copy()
        _check_finite(data, "scalar field")
        object.__setattr__(self, "data", data)

    def __add__(self, other):
        return ScalarField(self.grid, self.data + _raw(other))

    def __sub__(self, other):
        return ScalarField(self.grid, self.data - _raw(other))

    def __mul__(self, other):
        return ScalarField(self.grid, self.data * _raw(other))

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.data)


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: GridSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.shape != (3,) + self.grid.shape:
            raise ValueError(f"vector field data must have shape (3, n, n, n), got {data.shape}")
        _check_finite(data, "vector field")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_components(cls, components):
        comps = list(components)
        grid = comps[0].grid
        if any(c.grid != grid for c in comps):
            raise ValueError("components live on different grids")
        return cls(grid, np.stack([c.data for c in comps]))

    def component(self, i: int) -> ScalarField:
        """Component ``i`` in 1-based axis numbering (1, 2, 3)."""
        return ScalarField(self.grid, self.data[i - 1])

    def __add__(self, other):
        return VectorField(self.grid, self.data + _raw(other))

    def __sub__(self, other):
        return VectorField(self.grid, self.data - _raw(other))

    def __mul__(self, other):
        return VectorField(self.grid, self.data * _raw(other))

    __rmul__ = __mul__


def _raw(x):
    if isinstance(x, (ScalarField, VectorField)):
        return x.data
    return x


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Half-spectrum Fourier coefficients; leading axes (if any) index components."""

    grid: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape[-3:] != self.grid.spectral_shape:
            raise ValueError(
                f"coefficient array shape {c.shape} does not match grid {self.grid.spectral_shape}"
            )
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__


Field = Union[ScalarField, VectorField]


def fft(data: np.ndarray) -> np.ndarray:
    return sfft.rfftn(data, axes=(-3, -2, -1), norm="forward", workers=_workers())


def ifft(coeffs: np.ndarray, n: int) -> np.ndarray:
    return sfft.irfftn(coeffs, s=(n, n, n), axes=(-3, -2, -1), norm="forward", workers=_workers())


def to_spectral(u: Field) -> SpectralField:
    """Forward transform of a scalar or vector field."""
    _check_finite(u.data, "input samples")
    return SpectralField(u.grid, fft(u.data))


def to_physical(uh: SpectralField) -> Field:
    data = ifft(uh.coeffs, uh.grid.n)
    if data.ndim == 3:
        return ScalarField(uh.grid, data)
    return VectorField(uh.grid, data)


def coefficient_energy(uh: SpectralField) -> float:
    """``(2L)^3 * sum |u_hat|^2`` over the full spectrum (equals ``||u||_2^2``)."""
    n = uh.grid.n
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    e = np.sum(np.abs(uh.coeffs) ** 2 * w)
    return float(uh.grid.volume * e)


def apply_multiplier(uh: SpectralField, m: Union[Callable, np.ndarray, complex]) -> SpectralField:
    """Multiply coefficients by the symbol ``m``.

    ``m`` is either an array broadcastable to the half-spectrum shape, a
    scalar, or a callable ``m(k1, k2, k3)`` receiving broadcastable
    wavenumber arrays (Nyquist entries kept, numpy sign convention).
    """
    grid = uh.grid
    if callable(m):
        k1, k2, k3 = wavenumbers(grid)
        with np.errstate(all="ignore"):
            sym = np.asarray(m(k1, k2, k3))
    else:
        sym = np.asarray(m)
    sym = np.broadcast_to(sym, grid.spectral_shape) if sym.ndim else sym
    bad = ~np.isfinite(sym)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        k1, k2, k3 = wavenumbers(grid)
        kk = (float(k1.ravel()[idx[0]]), float(k2.ravel()[idx[1]]), float(k3.ravel()[idx[2]]))
        raise ValueError(f"multiplier is not finite at wavenumber {kk}")
    return SpectralField(grid, uh.coeffs * sym)


@lru_cache(maxsize=16)
def _inv_ksq(grid: GridSpec) -> np.ndarray:
    ksq = _ksq(grid)
    out = np.zeros_like(ksq)
    np.divide(1.0, ksq, out=out, where=ksq > 0)
    return out


def inverse_laplacian(uh: SpectralField) -> SpectralField:
    """Symbol ``-1/|k|^2``; the zero mode is sent to zero (mean-free gauge)."""
    return SpectralField(uh.grid, -uh.coeffs * _inv_ksq(uh.grid))


def laplacian(uh: SpectralField) -> SpectralField:
    return SpectralField(uh.grid, -uh.coeffs * _ksq(uh.grid))


def derivative(uh: SpectralField, axis: int) -> SpectralField:
    """Spectral ``d/dx_axis`` (axis in 1..3)."""
    k = wavenumbers(uh.grid, odd=True)[axis - 1]
    return SpectralField(uh.grid, 1j * k * uh.coeffs)


def gradient(uh: SpectralField) -> SpectralField:
    """Gradient of a scalar spectral field, returned with a leading axis of 3."""
    k = wavenumbers(uh.grid, odd=True)
    return SpectralField(uh.grid, np.stack([1j * ki * uh.coeffs for ki in k]))


def divergence(vh: SpectralField) -> SpectralField:
    k = wavenumbers(vh.grid, odd=True)
    c = vh.coeffs
    return SpectralField(vh.grid, 1j * (k[0] * c[0] + k[1] * c[1] + k[2] * c[2]))


def curl(vh: SpectralField) -> SpectralField:
    k1, k2, k3 = wavenumbers(vh.grid, odd=True)
    a, b, c = vh.coeffs
    return SpectralField(
        vh.grid,
        1j * np.stack([k2 * c - k3 * b, k3 * a - k1 * c, k1 * b - k2 * a]),
    )


def riesz_symbol(grid: GridSpec, i: int, j: int) -> np.ndarray:
    """``k_i k_j / |k|^2`` with zero at ``k = 0`` (and on unpaired Nyquist planes if i != j)."""
    if not (1 <= i <= 3 and 1 <= j <= 3):
        raise ValueError(f"Riesz indices must lie in 1..3, got ({i}, {j})")
    return _riesz_symbol(grid, min(i, j), max(i, j))


@lru_cache(maxsize=64)
def _riesz_symbol(grid: GridSpec, i: int, j: int) -> np.ndarray:
    if i == j:
        k = wavenumbers(grid)[i - 1]
        num = k * k
    else:
        k = wavenumbers(grid, odd=True)
        num = k[i - 1] * k[j - 1]
    return num * _inv_ksq(grid)


def riesz(uh: SpectralField, i: int, j: int) -> SpectralField:
    """Riesz transform ``R_ij = d_i d_j Delta^{-1}`` (symbol ``k_i k_j/|k|^2``)."""
    return SpectralField(uh.grid, uh.coeffs * riesz_symbol(uh.grid, i, j))


def leray_project(V: Union[VectorField, SpectralField]) -> Union[VectorField, SpectralField]:
    """Projection onto divergence-free fields; the mean (k = 0) is kept.

    Accepts a physical :class:`VectorField` (returns one) or a spectral vector
    field (returns spectral).
    """
    spectral_in = isinstance(V, SpectralField)
    vh = V if spectral_in else to_spectral(V)
    k = wavenumbers(vh.grid, odd=True)
    inv = _inv_ksq_odd(vh.grid)
    c = vh.coeffs
    kdotv = k[0] * c[0] + k[1] * c[1] + k[2] * c[2]
    out = np.stack([c[i] - k[i] * kdotv * inv for i in range(3)])
    ph = SpectralField(vh.grid, out)
    return ph if spectral_in else to_physical(ph)


def dealias(uh: SpectralField) -> SpectralField:
    """2/3-rule truncation (per axis)."""
    return SpectralField(uh.grid, uh.coeffs * _dealias_mask(uh.grid))


def dealiased_product(u: np.ndarray, w: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Pointwise product of two sampled fields with the 2/3 rule applied.

    Both factors and the product are truncated to the 2/3 band.
    """
    mask = _dealias_mask(grid)
    ut = ifft(fft(u) * mask, grid.n)
    wt = ifft(fft(w) * mask, grid.n)
    return ifft(fft(ut * wt) * mask, grid.n)


def lebesgue_norm(u: Union[ScalarField, np.ndarray], p: float, grid: GridSpec | None = None) -> float:
    """Riemann-sum ``L^p`` norm with cell-volume weights; ``p = inf`` is the max."""
    if isinstance(u, ScalarField):
        grid, data = u.grid, u.data
    else:
        data = np.asarray(u)
    a = np.abs(data)
    if p == np.inf:
        return float(a.max())
    if p < 1:
        raise ValueError(f"exponent must be >= 1, got {p}")
    if a.max() == 0:
        return 0.0
    # scale by the max to avoid overflow for large p
    s = a.max()
    return float(s * (np.sum((a / s) ** p) * grid.cell_volume) ** (1.0 / p))


def convolve(u: ScalarField, w: ScalarField) -> ScalarField:
    """Periodic convolution ``(u * w)(x) = sum_y u(y) w(x - y) h^3``.

    ``w`` is sampled on the same grid with its origin at ``x = 0`` (index
    ``n/2``); a unit-mass kernel preserves the mean of ``u``.
    """
    if u.grid != w.grid:
        raise ValueError("convolution operands live on different grids")
    g = u.grid
    w0 = np.fft.ifftshift(w.data)
    c = sfft.irfftn(
        sfft.rfftn(u.data, workers=_workers()) * sfft.rfftn(w0, workers=_workers()),
        s=g.shape,
        workers=_workers(),
    )
    return ScalarField(g, c * g.cell_volume)


# -- snapshot files ---------------------------------------------------------

def json_safe(obj):
    """Recursively convert numpy scalars/arrays and paths; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps_json(obj) -> str:
    """Strict JSON text (no ``NaN``/``Infinity`` tokens) with sorted keys."""
    return json.dumps(json_safe(obj), indent=2, sort_keys=True, allow_nan=False)


MAGIC = b"AXBL"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIdI16s")
_KINDS = ("scalar", "vector")


def write_snapshot(path, u: Field, kind: str = "", metadata: dict | None = None) -> Path:
    """Write a field to ``path`` plus a ``path.json`` metadata sidecar.

    Binary layout (little endian): magic ``AXBL``, uint32 format version,
    uint32 n, float64 L, uint32 component count, 16-byte ASCII field kind,
    then ``components * n^3`` float64 samples in row-major order.
    Files are written to a temporary name and renamed.
    """
    path = Path(path)
    ncomp = 1 if isinstance(u, ScalarField) else 3
    kind = kind or _KINDS[ncomp != 1]
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, u.grid.n, u.grid.L, ncomp, kind.encode()[:16].ljust(16, b"\0"))
    payload = np.ascontiguousarray(u.data, dtype="<f8").tobytes()
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(header + payload)
    os.replace(tmp, path)
    meta = {"kind": kind, "n": u.grid.n, "L": u.grid.L, "components": ncomp}
    meta.update(metadata or {})
    side = path.with_name(path.name + ".json")
    tmp = side.with_name(side.name + ".tmp")
    tmp.write_text(dumps_json(meta))
    os.replace(tmp, side)
    return path


def read_snapshot(path) -> tuple[Field, dict]:
    """Read a snapshot written by :func:`write_snapshot`; returns ``(field, metadata)``."""
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, n, L, ncomp, kind = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    grid = GridSpec(n, L)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != ncomp * n**3:
        raise ValueError(f"{path}: payload has {data.size} samples, expected {ncomp * n**3}")
    side = path.with_name(path.name + ".json")
    meta = json.loads(side.read_text()) if side.exists() else {}
    meta.setdefault("kind", kind.rstrip(b"\0").decode())
    if ncomp == 1:
        return ScalarField(grid, data.reshape(grid.shape).astype(float)), meta
    return VectorField(grid, data.reshape((ncomp,) + grid.shape).astype(float)), meta
