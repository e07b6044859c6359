"""Level-set (De Giorgi) certification of sup bounds for transport-diffusion traces.

A trace holds snapshots of a solution of ``df/dt + u . grad f - Delta f =
div F + G``.  For a candidate level ``M`` the ladder ``M_k = M (1 - 1/(k+1))``
is walked and the truncation energies

    U_k = sup_{t >= s_k} ||(f - M_k)_+(t)||_2^2 + int_{s_k}^T ||grad (f - M_k)_+||_2^2 dt

are measured from the data.  ``M`` is certified once ``U_k`` drops below
``max(1e-14 U_0, 1e-30)`` for some ``k <= 40``.  Window starts are ``s_k = 0``
for the source branch and ``s_k = T (1 - 1/(k+1))`` for the initial-data
branch.  The measured ladders are then audited against the superlinear
recursions that drive the iteration.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .spectral import (
    GridSpec,
    ScalarField,
    VectorField,
    _dealias_mask,
    _ksq,
    dumps_json,
    fft,
    ifft,
    lebesgue_norm,
    read_snapshot,
    wavenumbers,
    write_snapshot,
)

__all__ = [
    "SolutionTrace",
    "LevelIteration",
    "Certificate",
    "level_energy",
    "level_energies",
    "run_ladder",
    "certify_sup_bound",
    "recursion_audit",
    "check_estimate_65",
    "space_time_norm",
    "integrate_transport_diffusion",
    "trace_suite",
    "save_trace",
    "load_trace",
    "certificate_json",
    "suite_report",
]

K_MAX = 40
REL_FLOOR = 1e-14
ABS_FLOOR = 1e-30
BRANCHES = ("source", "initial", "full")


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    """Uniformly spaced snapshots of ``f`` with optional sources and velocity.

    ``f`` has shape ``(nt, n, n, n)``; ``F`` and ``u`` have shape
    ``(nt, 3, n, n, n)`` and ``G`` the shape of ``f``.  ``F`` is measured in
    ``L^p_t L^q_x`` and ``G`` in ``L^{p1}_t L^{q1}_x``; ``r`` is the
    exponent used for the initial data.
    """

    grid: GridSpec
    times: np.ndarray
    f: np.ndarray
    F: np.ndarray | None = None
    G: np.ndarray | None = None
    u: np.ndarray | None = None
    p: float = 4.0
    q: float = 8.0
    p1: float = 2.0
    q1: float = 4.0
    r: float = 2.0
    label: str = ""

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise ValueError("a trace needs at least two snapshot times")
        d = np.diff(t)
        if np.any(d <= 0) or np.max(np.abs(d - d.mean())) > 1e-9 * max(d.mean(), 1e-300) + 1e-12 * abs(t[-1]):
            raise ValueError("snapshot times must be uniformly spaced and increasing")
        if self.f.shape != (t.size,) + self.grid.shape:
            raise ValueError(f"f snapshots have shape {self.f.shape}, expected {(t.size,) + self.grid.shape}")
        if not np.all(np.isfinite(self.f)):
            raise ValueError("f snapshots contain non-finite values")
        if self.F is not None:
            if self.F.shape != (t.size, 3) + self.grid.shape:
                raise ValueError("F snapshots must have shape (nt, 3, n, n, n)")
            if not 2.0 / self.p + 3.0 / self.q < 1.0:
                raise ValueError(f"exponents for F need 2/p + 3/q < 1, got p={self.p}, q={self.q}")
        if self.G is not None:
            if self.G.shape != self.f.shape:
                raise ValueError("G snapshots must match the shape of f")
            if not 2.0 / self.p1 + 3.0 / self.q1 < 2.0:
                raise ValueError(f"exponents for G need 2/p1 + 3/q1 < 2, got p1={self.p1}, q1={self.q1}")
        if not self.r >= 2:
            raise ValueError(f"initial-data exponent r must be >= 2, got {self.r}")
        object.__setattr__(self, "times", t)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def nt(self) -> int:
        return self.times.size

    def negated(self) -> "SolutionTrace":
        """Trace of ``-f`` (sources negated accordingly)."""
        return SolutionTrace(self.grid, self.times, -self.f, None if self.F is None else -self.F,
                             None if self.G is None else -self.G, self.u, self.p, self.q, self.p1, self.q1,
                             self.r, self.label + " (negated)")

    def subsample(self, stride: int) -> "SolutionTrace":
        sl = slice(None, None, stride)
        pick = (lambda a: None if a is None else a[sl])
        return SolutionTrace(self.grid, self.times[sl], self.f[sl], pick(self.F), pick(self.G), pick(self.u),
                             self.p, self.q, self.p1, self.q1, self.r, self.label)


def _grad_energy_weights(g: GridSpec) -> np.ndarray:
    w = np.full(g.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    return g.volume * w * _ksq(g)


def _truncation_energies(trace: SolutionTrace, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-snapshot ``||(f - level)_+||_2^2`` and ``||grad (f - level)_+||_2^2``."""
    g = trace.grid
    wk = _grad_energy_weights(g)
    l2 = np.empty(trace.nt)
    gr = np.empty(trace.nt)
    for i in range(trace.nt):
        fp = np.maximum(trace.f[i] - level, 0.0)
        if not fp.any():
            l2[i] = gr[i] = 0.0
            continue
        l2[i] = float(np.sum(fp * fp) * g.cell_volume)
        gr[i] = float(np.sum(wk * np.abs(fft(fp)) ** 2))
    return l2, gr


def _window_energy(times, l2, gr, s: float) -> float:
    sel = times >= s - 1e-12 * max(1.0, abs(times[-1]))
    t = times[sel]
    sup = float(l2[sel].max())
    integral = float(np.trapezoid(gr[sel], t)) if t.size > 1 else 0.0
    return sup + integral


def level_energy(trace: SolutionTrace, level: float, s: float = 0.0) -> float:
    """``sup_{t >= s} ||(f - level)_+||^2 + int_s^T ||grad (f - level)_+||^2 dt``.

    The gradient of the truncation is taken spectrally from its grid samples;
    the time integral is the trapezoid rule over the snapshots.
    """
    if not np.isfinite(level):
        raise ValueError("level must be finite")
    if not trace.times[0] - 1e-12 <= s <= trace.times[-1] + 1e-12:
        raise ValueError(f"window start {s} outside the trace [{trace.times[0]}, {trace.times[-1]}]")
    l2, gr = _truncation_energies(trace, level)
    return _window_energy(trace.times, l2, gr, s)


def level_energies(trace: SolutionTrace, levels: Sequence[float], s: float = 0.0) -> np.ndarray:
    return np.array([level_energy(trace, lv, s) for lv in levels])


@dataclass
class LevelIteration:
    """One ladder ``M_k`` with measured energies ``U_k``."""

    M: float
    branch: str
    levels: list = field(default_factory=list)
    window_starts: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    floor: float = 0.0
    certified: bool = False
    k_star: int | None = None

    def as_dict(self) -> dict:
        return {
            "M": self.M,
            "branch": self.branch,
            "M_k": self.levels,
            "window_starts": self.window_starts,
            "U_k": self.energies,
            "floor": self.floor,
            "certified": self.certified,
            "k_star": self.k_star,
        }


def _window_start(trace: SolutionTrace, branch: str, k: int) -> float:
    if branch == "initial":
        return float(trace.times[0] + (trace.times[-1] - trace.times[0]) * (1.0 - 1.0 / (k + 1)))
    return float(trace.times[0])


def run_ladder(trace: SolutionTrace, M: float, branch: str = "full", k_max: int = K_MAX) -> LevelIteration:
    """Walk ``M_k = M (1 - 1/(k+1))`` and stop once ``U_k`` is below the floor."""
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    it = LevelIteration(M, branch)
    for k in range(k_max + 1):
        level = M * (1.0 - 1.0 / (k + 1))
        s = _window_start(trace, branch, k)
        l2, gr = _truncation_energies(trace, level)
        u = _window_energy(trace.times, l2, gr, s)
        if k == 0:
            it.floor = max(REL_FLOOR * u, ABS_FLOOR)
        it.levels.append(level)
        it.window_starts.append(s)
        it.energies.append(u)
        if u <= it.floor:
            it.certified = True
            it.k_star = k
            break
    return it


@dataclass
class Certificate:
    verdict: str
    M: float | None
    branch: str
    bracket: tuple
    measured_sup: float
    sound: bool | None
    certified_from: float | None
    transcript: list
    spacing_sensitivity: float | None = None
    n: int = 0
    L: float = 0.0
    label: str = ""

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "L": self.L,
            "label": self.label,
            "verdict": self.verdict,
            "M": self.M,
            "branch": self.branch,
            "bracket": list(self.bracket),
            "measured_sup": self.measured_sup,
            "sound": self.sound,
            "certified_from_time": self.certified_from,
            "spacing_sensitivity": self.spacing_sensitivity,
            "transcript": [it.as_dict() for it in self.transcript],
        }


def _two_sided(trace: SolutionTrace, neg: SolutionTrace, M: float, branch: str):
    up = run_ladder(trace, M, branch)
    down = run_ladder(neg, M, branch)
    return up.certified and down.certified, (up, down)


def _bisect(trace, branch, rel_resolution, ceiling, m_floor):
    neg = trace.negated()
    transcript = []
    ok, its = _two_sided(trace, neg, 1.0, branch)
    transcript.extend(its)
    if ok:
        hi, lo = 1.0, None
        m = 0.5
        while m >= m_floor:
            ok, its = _two_sided(trace, neg, m, branch)
            transcript.extend(its)
            if not ok:
                lo = m
                break
            hi = m
            m *= 0.5
        if lo is None:
            return m_floor, (0.0, m_floor), transcript
    else:
        lo, hi = 1.0, None
        m = 2.0
        while m <= ceiling:
            ok, its = _two_sided(trace, neg, m, branch)
            transcript.extend(its)
            if ok:
                hi = m
                break
            lo = m
            m *= 2.0
        if hi is None:
            return None, (lo, ceiling), transcript
    while hi / lo > 1.0 + rel_resolution:
        mid = math.sqrt(lo * hi)
        ok, its = _two_sided(trace, neg, mid, branch)
        transcript.extend(its)
        if ok:
            hi = mid
        else:
            lo = mid
    return hi, (lo, hi), transcript


def certify_sup_bound(trace: SolutionTrace, branch: str = "full", rel_resolution: float = 0.01,
                      ceiling: float = 1e12, m_floor: float = 1e-12, spacing_check: bool = True) -> Certificate:
    """Smallest ``M`` (to ``rel_resolution``) for which both ``f`` and ``-f`` ladders certify.

    Returns a failure verdict when no level up to ``ceiling`` certifies.
    Soundness compares ``M`` with the measured ``max |f|`` over the times
    the certificate covers (from the window of the deciding ladder onwards).
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}, got {branch!r}")
    M, bracket, transcript = _bisect(trace, branch, rel_resolution, ceiling, m_floor)
    g = trace.grid
    if M is None:
        return Certificate("failed", None, branch, bracket, float(np.abs(trace.f).max()), None, None, transcript,
                           n=g.n, L=g.L, label=trace.label)
    deciding = [it for it in transcript if it.M == M and it.certified]
    start = max(it.window_starts[it.k_star] for it in deciding) if deciding else float(trace.times[0])
    covered = trace.times >= start - 1e-12 * max(1.0, abs(trace.times[-1]))
    measured = float(np.abs(trace.f[covered]).max())
    sensitivity = None
    if spacing_check and trace.nt >= 5 and (trace.nt - 1) % 2 == 0:
        half, _, _ = _bisect(trace.subsample(2), branch, rel_resolution, ceiling, m_floor)
        if half is not None and M > 0:
            sensitivity = abs(half - M) / M
    return Certificate("certified", M, branch, bracket, measured, bool(M >= measured), start, transcript,
                       sensitivity, g.n, g.L, trace.label)


def recursion_audit(iterations: Sequence[LevelIteration]) -> dict:
    """Constants making the measured ladders satisfy the iteration recursions.

    For initial-data ladders the ratio ``U_k / ((k+1)^2 ((k+1)^2/M)^{4/3} U_{k-1}^{4/3})``
    is collected; ``A`` is its maximum.  For all ladders the exponent ``gamma`` of
    the best fit ``log U_k ~ gamma log U_{k-1}`` is reported and flagged when
    it does not exceed 1.
    """
    ratios = []
    gammas = []
    for it in iterations:
        u = np.asarray(it.energies)
        for k in range(1, u.size):
            if u[k - 1] > 0 and it.branch == "initial":
                rhs = (k + 1) ** 2 * ((k + 1) ** 2 / it.M) ** (4.0 / 3.0) * u[k - 1] ** (4.0 / 3.0)
                ratios.append(u[k] / rhs)
        pos = (u[:-1] > 0) & (u[1:] > 0)
        if pos.sum() >= 3:
            a, b = np.log(u[:-1][pos]), np.log(u[1:][pos])
            if np.ptp(a) > 0:
                gammas.append(float(np.polyfit(a, b, 1)[0]))
    A = float(max(ratios)) if ratios else None
    gamma = float(np.median(gammas)) if gammas else None
    return {
        "A": A,
        "samples": len(ratios),
        "pass": bool(A is not None and np.isfinite(A)),
        "gamma_fit": gamma,
        "gamma_flag": bool(gamma is not None and gamma <= 1.0),
    }


# -- the a priori estimate ---------------------------------------------------


def space_time_norm(times: np.ndarray, data: np.ndarray, p: float, q: float, grid: GridSpec) -> float:
    """``L^p_t L^q_x`` norm of snapshots (vector snapshots use the pointwise modulus)."""
    if data.ndim == 5:
        data = np.sqrt(np.sum(data**2, axis=1))
    a = np.array([lebesgue_norm(d, q, grid) for d in data])
    if p == np.inf:
        return float(a.max())
    return float(np.trapezoid(a**p, times) ** (1.0 / p))


def check_estimate_65(traces: Sequence[SolutionTrace], C: float | None = None) -> dict:
    """Ratios ``||f(t)||_inf / RHS(t)`` for the scale-invariant form of the a priori bound.

    ``RHS(t) = t^{-3/(2r)} ||f_0||_{L^r} + sqrt(T)^{1-(2/p+3/q)} ||F||_{L^p_T L^q}
    + sqrt(T)^{2-(2/p1+3/q1)} ||G||_{L^{p1}_T L^{q1}}`` with ``T`` the trace length.
    ``C`` defaults to the largest ratio over the traces; every ratio is then at most 1.
    """
    per = []
    for tr in traces:
        T = float(tr.times[-1] - tr.times[0])
        t = tr.times[1:] - tr.times[0]
        f0 = lebesgue_norm(tr.f[0], tr.r, tr.grid)
        src = 0.0
        K = None
        if tr.F is not None:
            nF = space_time_norm(tr.times, tr.F, tr.p, tr.q, tr.grid)
            K = math.sqrt(T) ** (1.0 - (2.0 / tr.p + 3.0 / tr.q)) * nF
            src += K
        if tr.G is not None:
            nG = space_time_norm(tr.times, tr.G, tr.p1, tr.q1, tr.grid)
            src += math.sqrt(T) ** (2.0 - (2.0 / tr.p1 + 3.0 / tr.q1)) * nG
        rhs = t ** (-1.5 / tr.r) * f0 + src
        sup = np.abs(tr.f[1:]).reshape(t.size, -1).max(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(rhs > 0, sup / rhs, 0.0)
        per.append({"label": tr.label, "n": tr.grid.n, "L": tr.grid.L, "times": t.tolist(),
                    "ratio": ratio.tolist(), "max_ratio": float(ratio.max()), "K": K})
    fitted = max(p["max_ratio"] for p in per) if per else 0.0
    C = fitted if C is None else C
    return {
        "C": C,
        "fitted_C": fitted,
        "bounded": bool(all(np.isfinite(p["max_ratio"]) for p in per)) and fitted <= C * (1 + 1e-12),
        "traces": per,
    }


# -- trace generation --------------------------------------------------------


def _advect(u: np.ndarray, fh: np.ndarray, g: GridSpec) -> np.ndarray:
    mask = _dealias_mask(g)
    k = wavenumbers(g, odd=True)
    um = ifft(fft(u) * mask, g.n)
    grad = ifft(np.stack([1j * ki * fh * mask for ki in k]), g.n)
    return fft(um[0] * grad[0] + um[1] * grad[1] + um[2] * grad[2]) * mask


def integrate_transport_diffusion(grid: GridSpec, f0: np.ndarray, T: float, snapshots: int, dt: float,
                                  u: np.ndarray | Callable[[float], np.ndarray] | None = None,
                                  F: Callable[[float], np.ndarray] | None = None,
                                  G: Callable[[float], np.ndarray] | None = None,
                                  label: str = "", **exponents) -> SolutionTrace:
    """Solve ``df/dt + u . grad f - Delta f = div F + G`` and record a trace.

    Integrating-factor RK4 with the exact heat factor; ``u`` is a fixed
    divergence-free field or a function of time, ``F`` and ``G`` are
    functions of time returning physical samples.  ``snapshots`` uniformly
    spaced records are taken on ``[0, T]``; ``dt`` is reduced so that each
    record interval holds a whole number of steps.
    """
    if snapshots < 2:
        raise ValueError("need at least two snapshots")
    g = grid
    ksq = _ksq(g)
    k = wavenumbers(g, odd=True)
    interval = T / (snapshots - 1)
    sub = max(1, int(math.ceil(interval / dt - 1e-12)))
    h = interval / sub
    ufun = (lambda t: u) if (u is not None and not callable(u)) else u

    def rhs(t, fh):
        out = np.zeros_like(fh)
        if ufun is not None:
            out -= _advect(ufun(t), fh, g)
        if F is not None:
            Fh = fft(F(t))
            out += 1j * (k[0] * Fh[0] + k[1] * Fh[1] + k[2] * Fh[2])
        if G is not None:
            out += fft(G(t))
        return out

    eh = np.exp(-ksq * h / 2)
    ef = eh * eh
    fh = fft(np.asarray(f0, dtype=float))
    t = 0.0
    times = [0.0]
    fs = [ifft(fh, g.n)]
    for i in range(1, snapshots):
        for _ in range(sub):
            k1 = rhs(t, fh)
            k2 = rhs(t + h / 2, eh * (fh + h / 2 * k1))
            k3 = rhs(t + h / 2, eh * fh + h / 2 * k2)
            k4 = rhs(t + h, ef * fh + h * eh * k3)
            fh = ef * fh + h / 6 * (ef * k1 + 2 * eh * (k2 + k3) + k4)
            t += h
        t = i * interval
        times.append(t)
        fs.append(ifft(fh, g.n))
    times = np.array(times)
    pick = (lambda fn: None if fn is None else np.stack([fn(s) for s in times]))
    us = None
    if ufun is not None:
        us = np.stack([ufun(s) for s in times])
    return SolutionTrace(g, times, np.stack(fs), pick(F), pick(G), us, label=label, **exponents)


def _gaussian(g: GridSpec, c=(0.0, 0.0, 0.0), w2=0.5, amp=1.0) -> np.ndarray:
    x1, x2, x3 = g.coords()
    return amp * np.exp(-((x1 - c[0]) ** 2 + (x2 - c[1]) ** 2 + (x3 - c[2]) ** 2) / w2)


def trace_suite(grid: GridSpec | None = None, T: float = 1.0, snapshots: int = 17, dt: float = 0.02) -> list[SolutionTrace]:
    """Ten reference traces: pure heat (5), source driven (3), convected (2)."""
    from .scenarios import critical_heat_profile, vortex_ring

    g = grid or GridSpec(32, 8.0)
    out = []
    heat_data = [
        ("heat: gaussian", _gaussian(g, w2=0.5)),
        ("heat: narrow gaussian", _gaussian(g, w2=0.15, amp=2.0)),
        ("heat: signed pair", _gaussian(g, (1.0, 0, 0), 0.4) - 1.5 * _gaussian(g, (-1.0, 0, 0), 0.3)),
        ("heat: critical profile", critical_heat_profile(g).data),
        ("heat: offset blobs", _gaussian(g, (0, 1.5, 0.5), 0.3, 0.7) + _gaussian(g, (0.5, -1.0, -1.0), 0.6, 1.2)),
    ]
    for label, f0 in heat_data:
        out.append(integrate_transport_diffusion(g, f0, T, snapshots, dt, label=label))
    bump = _gaussian(g, w2=0.6)
    x1, x2, x3 = g.coords()
    out.append(integrate_transport_diffusion(
        g, np.zeros(g.shape), T, snapshots, dt,
        F=lambda t: np.stack([bump * math.cos(2 * t), 0.5 * bump, np.zeros(g.shape)]) * np.ones(g.shape),
        label="source: divergence forcing"))
    out.append(integrate_transport_diffusion(
        g, np.zeros(g.shape), T, snapshots, dt, G=lambda t: (1.0 + t) * _gaussian(g, (0.5, 0, 0), 0.4),
        label="source: bulk forcing"))
    out.append(integrate_transport_diffusion(
        g, 0.5 * _gaussian(g, (0, 0, 1.0), 0.5), T, snapshots, dt,
        F=lambda t: np.stack([np.zeros(g.shape), np.zeros(g.shape), -x3 * bump]),
        G=lambda t: 0.5 * math.sin(3 * t) * _gaussian(g, (0, 1.0, 0), 0.5),
        label="source: mixed forcing with initial data"))
    u = vortex_ring(g, 1.5, 0.3, 2.0).data
    out.append(integrate_transport_diffusion(g, _gaussian(g, (1.5, 0, 0.5), 0.4), T, snapshots, dt, u=u,
                                             label="convected: vortex ring"))
    shear = np.stack([np.sin(np.pi * x3 / g.L) * np.ones(g.shape), np.zeros(g.shape), np.zeros(g.shape)])
    out.append(integrate_transport_diffusion(g, _gaussian(g, (0, 0, 0.5), 0.3, 1.5), T, snapshots, dt, u=shear,
                                             label="convected: shear"))
    return out


# -- trace files -------------------------------------------------------------

_SNAP = re.compile(r"^(f|rho)_(\d+)\.axbl$")


def save_trace(trace: SolutionTrace, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, t in enumerate(trace.times):
        meta = {"time": float(t), "label": trace.label, "r": trace.r}
        paths.append(write_snapshot(d / f"f_{i:05d}.axbl", ScalarField(trace.grid, trace.f[i]), "f", meta))
        if trace.u is not None:
            paths.append(write_snapshot(d / f"u_{i:05d}.axbl", VectorField(trace.grid, trace.u[i]), "u", meta))
    return paths


def load_trace(directory, r: float = 2.0) -> SolutionTrace:
    """Read ``f_*.axbl`` snapshots, or the density checkpoints ``rho_*.axbl`` of a solver run."""
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"trace directory {d} does not exist")
    names = sorted(p.name for p in d.iterdir() if _SNAP.match(p.name))
    stems = {m.group(1) for m in map(_SNAP.match, names)}
    if not names:
        raise ValueError(f"no f_*.axbl or rho_*.axbl snapshots in {d}")
    stem = "f" if "f" in stems else "rho"
    files = sorted((p for p in names if p.startswith(stem + "_")), key=lambda s: int(_SNAP.match(s).group(2)))
    fields, times = [], []
    grid = None
    for name in files:
        fld, meta = read_snapshot(d / name)
        if grid is None:
            grid = fld.grid
        elif fld.grid != grid:
            raise ValueError(f"snapshot {name} lives on a different grid")
        if "time" not in meta:
            raise ValueError(f"snapshot {name} carries no time stamp")
        fields.append(fld.data)
        times.append(float(meta["time"]))
    return SolutionTrace(grid, np.array(times), np.stack(fields), r=r, label=str(d))


def suite_report(traces: Sequence[SolutionTrace] | None = None, rel_resolution: float = 0.01,
                 mirror: bool = True) -> dict:
    """Certify every trace of a suite and audit the results.

    Each trace gets a full-branch certificate; pure-heat traces (label prefix
    ``heat``) also get an initial-branch certificate whose certified ladders
    feed the recursion audit.  With ``mirror`` the negated trace is certified
    too and the relative gap between the two levels is recorded.
    """
    traces = trace_suite() if traces is None else list(traces)
    rows = []
    ladders = []
    for tr in traces:
        cert = certify_sup_bound(tr, "full", rel_resolution)
        row = {"label": tr.label, "n": tr.grid.n, "L": tr.grid.L, "full": cert.as_dict()}
        row["full"].pop("transcript")
        if tr.label.startswith("heat"):
            ci = certify_sup_bound(tr, "initial", rel_resolution, spacing_check=False)
            ladders += [it for it in ci.transcript if it.certified]
            row["initial"] = ci.as_dict()
            row["initial"].pop("transcript")
            row["sup_ratio"] = cert.M / cert.measured_sup if cert.M is not None else None
        if mirror and cert.M is not None:
            neg = certify_sup_bound(tr.negated(), "full", rel_resolution, spacing_check=False)
            row["mirror_gap"] = abs(neg.M - cert.M) / cert.M if neg.M is not None else math.inf
        rows.append(row)
    sound = [r["full"]["sound"] for r in rows] + [r["initial"]["sound"] for r in rows if "initial" in r]
    heat = [r["sup_ratio"] for r in rows if r.get("sup_ratio") is not None]
    gaps = [r["mirror_gap"] for r in rows if "mirror_gap" in r]
    return {
        "traces": rows,
        "soundness_violations": sum(1 for x in sound if x is not True),
        "heat_max_sup_ratio": max(heat) if heat else None,
        "recursion_audit": recursion_audit(ladders),
        "mirror_max_gap": max(gaps) if gaps else None,
        "mirror_resolution": rel_resolution,
        "estimate": {k: v for k, v in check_estimate_65(traces).items() if k != "traces"},
    }


def certificate_json(cert: Certificate) -> str:
    return dumps_json(cert.as_dict())
