"""Littlewood-Paley blocks, Besov norms and the Bony paraproduct split.

The low-pass profile is ``chi(xi) = step(|xi|)`` with a C-infinity step that
equals 1 on ``|xi| <= 3/4`` and 0 on ``|xi| >= 4/3``.  Blocks are
``phi(2^-q xi) = chi(2^-(q+1) xi) - chi(2^-q xi)`` for ``0 <= q < q_max`` and the
top block takes everything above, ``1 - chi(2^-q_max xi)``, so the partition
telescopes to exactly one on the grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import (
    GridSpec,
    ScalarField,
    fft,
    ifft,
    lebesgue_norm,
    _dealias_mask,
    _ksq,
)

__all__ = [
    "DyadicPartition",
    "smooth_step",
    "chi",
    "phi",
    "build_partition",
    "delta_q",
    "s_q",
    "besov_norm",
    "sobolev_norm",
    "bony_decompose",
    "square_function",
]

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def _f(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for ``t <= 0``, 1 for ``t >= 1``, ``f(t)/(f(t)+f(1-t))`` between."""
    t = np.asarray(t, dtype=float)
    a, b = _f(t), _f(1.0 - t)
    return a / (a + b)


def chi(s):
    """Radial low-pass profile evaluated at ``s = |xi|``."""
    s = np.abs(np.asarray(s, dtype=float))
    return smooth_step((CHI_OUTER - s) / (CHI_OUTER - CHI_INNER))


def phi(s):
    """Annulus profile ``chi(s/2) - chi(s)``, supported in ``3/4 <= s <= 8/3``."""
    return chi(np.asarray(s, dtype=float) / 2.0) - chi(s)


@dataclass(frozen=True, eq=False)
class DyadicPartition:
    """Dyadic partition sampled on the half spectrum of ``grid``.

    ``blocks[q + 1]`` holds the symbol of ``Delta_q`` for ``q = -1 .. q_max``.
    """

    grid: GridSpec
    q_max: int
    blocks: np.ndarray

    def symbol(self, q: int) -> np.ndarray:
        _check_q(self, q)
        return self.blocks[q + 1]

    def low_pass(self, q: int) -> np.ndarray:
        """Symbol of ``S_q = sum_{j <= q-1} Delta_j`` (zero for ``q <= -1``)."""
        if q > self.q_max + 1:
            raise ValueError(f"S_q needs q <= q_max + 1 = {self.q_max + 1}, got {q}")
        if q <= -1:
            return np.zeros_like(self.blocks[0])
        return self.blocks[: q + 1].sum(axis=0)

    def profile_values(self, s):
        """Radial partition values ``[chi, phi_0, ..., top]`` evaluated at moduli ``s``."""
        s = np.asarray(s, dtype=float)
        vals = [chi(s)]
        for q in range(self.q_max):
            vals.append(chi(s / 2.0 ** (q + 1)) - chi(s / 2.0**q))
        vals.append(1.0 - chi(s / 2.0**self.q_max))
        return np.stack(vals)


def _check_q(part: DyadicPartition, q: int):
    if q < -1 or q > part.q_max:
        raise ValueError(f"block index must lie in [-1, {part.q_max}], got {q}")


def top_block_index(grid: GridSpec) -> int:
    return int(np.floor(np.log2(grid.k_nyquist))) - 1


@lru_cache(maxsize=8)
def build_partition(grid: GridSpec) -> DyadicPartition:
    """Sample the dyadic partition on ``grid``.

    ``q_max = floor(log2 k_max) - 1`` with ``k_max`` the per-axis Nyquist
    modulus.  Grids hosting fewer than three blocks are rejected.
    """
    q_max = top_block_index(grid)
    if q_max + 2 < 3:
        raise ValueError(
            f"grid n={grid.n}, L={grid.L} hosts only {max(q_max + 2, 0)} dyadic blocks (need 3)"
        )
    s = np.sqrt(_ksq(grid))
    part = DyadicPartition(grid, q_max, np.empty((0,)))
    blocks = part.profile_values(s)
    blocks.setflags(write=False)
    return DyadicPartition(grid, q_max, blocks)


def _spec(u):
    return fft(u.data if isinstance(u, ScalarField) else u)


def delta_q(u: ScalarField, q: int, part: DyadicPartition | None = None) -> ScalarField:
    part = part or build_partition(u.grid)
    return ScalarField(u.grid, ifft(_spec(u) * part.symbol(q), u.grid.n))


def s_q(u: ScalarField, q: int, part: DyadicPartition | None = None) -> ScalarField:
    part = part or build_partition(u.grid)
    return ScalarField(u.grid, ifft(_spec(u) * part.low_pass(q), u.grid.n))


def all_blocks(u: ScalarField, part: DyadicPartition | None = None) -> np.ndarray:
    """Array of shape ``(q_max + 2, n, n, n)`` with ``Delta_q u`` for ``q = -1 .. q_max``."""
    part = part or build_partition(u.grid)
    uh = _spec(u)
    return np.stack([ifft(uh * b, u.grid.n) for b in part.blocks])


def _seq_norm(a: np.ndarray, r: float) -> float:
    if r == np.inf:
        return float(a.max())
    return float(np.sum(a**r) ** (1.0 / r))


def besov_norm(u: ScalarField, s: float, p: float, r: float) -> float:
    """``|| (2^{qs} ||Delta_q u||_{L^p})_q ||_{l^r}`` over ``q = -1 .. q_max``."""
    if not (p >= 1 and r >= 1):
        raise ValueError(f"exponents must lie in [1, inf], got p={p}, r={r}")
    part = build_partition(u.grid)
    blocks = all_blocks(u, part)
    q = np.arange(-1, part.q_max + 1)
    a = np.array([lebesgue_norm(b, p, u.grid) for b in blocks]) * 2.0 ** (q * s)
    return _seq_norm(a, r)


def sobolev_norm(u: ScalarField, s: float) -> float:
    """Spectral ``H^s`` norm ``((2L)^3 sum (1 + |k|^2)^s |u_hat|^2)^{1/2}``."""
    g = u.grid
    uh = fft(u.data)
    w = np.full(g.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    e = np.sum((1.0 + _ksq(g)) ** s * np.abs(uh) ** 2 * w)
    return float(np.sqrt(g.volume * e))


def square_function(u: ScalarField) -> ScalarField:
    """Pointwise ``(sum_q |Delta_q u|^2)^{1/2}``."""
    return ScalarField(u.grid, np.sqrt(np.sum(all_blocks(u) ** 2, axis=0)))


def bony_decompose(u: ScalarField, w: ScalarField, dealias: bool = True):
    """Split ``u w`` into ``(T_u w, T_w u, R(u, w))``.

    ``T_u w = sum_q S_{q-1}u Delta_q w`` and ``R(u, w) = sum_{|p-q|<=1}
    Delta_p u Delta_q w``.  With ``dealias`` each part is truncated by the 2/3
    rule, so the parts sum to the dealiased product.
    """
    if u.grid != w.grid:
        raise ValueError("operands live on different grids")
    g = u.grid
    part = build_partition(g)
    bu, bw = all_blocks(u, part), all_blocks(w, part)
    nb = bu.shape[0]
    # cumulative sums give S_{q-1} for block index q (array index q+1)
    cu = np.cumsum(bu, axis=0)
    cw = np.cumsum(bw, axis=0)
    tuw = np.zeros(g.shape)
    twu = np.zeros(g.shape)
    rem = np.zeros(g.shape)
    for i in range(nb):
        if i >= 2:
            tuw += cu[i - 2] * bw[i]
            twu += cw[i - 2] * bu[i]
        for j in (i - 1, i, i + 1):
            if 0 <= j < nb:
                rem += bu[i] * bw[j]
    parts = [tuw, twu, rem]
    if dealias:
        mask = _dealias_mask(g)
        parts = [ifft(fft(a) * mask, g.n) for a in parts]
    return tuple(ScalarField(g, a) for a in parts)


def reference_product(u: ScalarField, w: ScalarField, dealias: bool = True) -> ScalarField:
    p = u.data * w.data
    if dealias:
        p = ifft(fft(p) * _dealias_mask(u.grid), u.grid.n)
    return ScalarField(u.grid, p)

