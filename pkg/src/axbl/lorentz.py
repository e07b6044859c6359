"""Decreasing rearrangements and Lorentz (quasi-)norms on grid data.

The rearrangement of sampled data is a step function: the j-th largest
``|u|`` value occupies ``t in ((j-1) h^3, j h^3]``.  The Lorentz functional

    ||u||_{p,q}^q = int_0^inf (t^{1/p} u*(t))^q dt / t

is integrated exactly on that step function::

    ||u||_{p,q}^q = (p/q) sum_j a_j^q (t_j^{q/p} - t_{j-1}^{q/p})

and ``||u||_{p,inf} = max_j a_j t_j^{1/p}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import GridSpec, ScalarField

__all__ = ["Rearrangement", "decreasing_rearrangement", "lorentz_norm", "rearrangement_lp_norm"]


@dataclass(frozen=True, eq=False)
class Rearrangement:
    """Sorted ``|u|`` values, each carrying one cell volume of measure."""

    levels: np.ndarray
    cell_volume: float

    @property
    def measures(self) -> np.ndarray:
        return np.full(self.levels.shape, self.cell_volume)

    @property
    def total_measure(self) -> float:
        return self.levels.size * self.cell_volume

    def distribution(self, lam: float) -> float:
        """Measure of ``{|u| > lam}``."""
        return float(np.count_nonzero(self.levels > lam) * self.cell_volume)


def _as_data(u, grid):
    if isinstance(u, ScalarField):
        return u.data, u.grid
    if grid is None:
        raise ValueError("a grid is required for raw arrays")
    return np.asarray(u, dtype=float), grid


def decreasing_rearrangement(u, grid: GridSpec | None = None) -> Rearrangement:
    data, grid = _as_data(u, grid)
    levels = np.sort(np.abs(data).ravel())[::-1]
    return Rearrangement(levels, grid.cell_volume)


def rearrangement_lp_norm(rr: Rearrangement, p: float) -> float:
    if p == np.inf:
        return float(rr.levels[0]) if rr.levels.size else 0.0
    return float(np.sum(rr.levels**p * rr.cell_volume) ** (1.0 / p))


def lorentz_norm(u, p: float, q: float, grid: GridSpec | None = None) -> float:
    """Lorentz ``L^{p,q}`` functional of the step rearrangement, ``p > 1``, ``q in [1, inf]``."""
    if not p > 1 or p == np.inf:
        raise ValueError(f"Lorentz exponent p must lie in (1, inf), got {p}")
    if not q >= 1:
        raise ValueError(f"Lorentz exponent q must lie in [1, inf], got {q}")
    rr = decreasing_rearrangement(u, grid)
    a = rr.levels
    peak = a[0] if a.size else 0.0
    if peak == 0:
        return 0.0
    a = a / peak
    j = np.arange(a.size + 1, dtype=float)
    t = j * rr.cell_volume
    if q == np.inf:
        return float(peak * np.max(a * t[1:] ** (1.0 / p)))
    w = np.diff(t ** (q / p))
    return float(peak * ((p / q) * np.sum(a**q * w)) ** (1.0 / q))
