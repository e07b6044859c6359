"""Pseudo-spectral Euler-Boussinesq integrator with diagnostics.

Velocity obeys ``dv/dt = P(-(v . grad) v + (rho - <rho>) e_3)`` with ``P``
the Leray projection; density obeys ``drho/dt + v . grad rho = Delta rho``.
Time stepping is classical RK4 with the heat semigroup ``exp(-|k|^2 s)``
applied exactly to ``rho`` (integrating factor).  The running dissipation
``2 int ||grad rho||^2`` is integrated alongside: the pure-diffusion part
exactly per mode, the transport correction with the RK4 weights.
"""

from __future__ import annotations

import configparser
import csv
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import axisym as ax
from .commutators import advect, transport_of_riesz_form
from .dyadic import besov_norm, sobolev_norm
from .lorentz import lorentz_norm
from .spectral import (
    GridSpec,
    ScalarField,
    VectorField,
    _dealias_mask,
    _inv_ksq_odd,
    _ksq,
    fft,
    ifft,
    lebesgue_norm,
    wavenumbers,
    write_snapshot,
)

__all__ = [
    "SimConfig",
    "SimState",
    "DiagnosticsSeries",
    "RunResult",
    "BlowUpError",
    "initial_state",
    "tendency",
    "step",
    "run",
    "gamma",
    "diagnostics",
    "equation_residuals",
    "ConfigError",
    "sample_states",
    "ALL_DIAGNOSTICS",
    "fit_decay_exponent",
    "fitted_constants",
    "inequality_checklist",
    "run_summary",
    "parse_config_text",
    "config_from_dict",
    "load_config",
    "initial_data",
    "stable_dt",
    "MODES",
]

MODES = ("boussinesq", "euler", "heat")

ALL_DIAGNOSTICS = (
    "v_L2",
    "rho_L2",
    "rho_L4",
    "rho_L6",
    "rho_Lm",
    "rho_Linf",
    "dissipation",
    "omega_Linf",
    "grad_v_Linf",
    "zeta_L31",
    "zeta_L3",
    "gamma_L31",
    "xh_rho_L2",
    "xh_rho_Linf",
    "xh2_rho_L2",
    "xh2_rho_L6",
    "rho_B12_21",
    "xh_rho_B0_inf1",
    "v_Hs",
)


class BlowUpError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec
    T: float = 1.0
    dt: float | None = None
    cfl: float | None = 0.5
    mode: str = "boussinesq"
    cadence: int = 10
    sample_times: tuple | None = None
    diagnostics: tuple = ALL_DIAGNOSTICS
    dealias: bool = True
    ceiling: float = 1e3
    hs: float = 2.6
    m: float = 8.0
    out_dir: str | None = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.dt is None and self.cfl is None:
            raise ValueError("either dt or cfl must be given")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cfl is not None and not self.cfl > 0:
            raise ValueError(f"cfl must be positive, got {self.cfl}")
        if not self.T >= 0:
            raise ValueError(f"end time must be non-negative, got {self.T}")
        if not self.m >= 1:
            raise ValueError(f"Lebesgue exponent m must be >= 1, got {self.m}")
        if not (isinstance(self.cadence, int) and self.cadence >= 1):
            raise ValueError(f"cadence must be a positive integer, got {self.cadence}")
        unknown = set(self.diagnostics) - set(ALL_DIAGNOSTICS)
        if unknown:
            raise ValueError(f"unknown diagnostics: {sorted(unknown)}")


@dataclass(frozen=True, eq=False)
class SimState:
    """Spectral state; ``dissipation`` accumulates ``2 int_0^t ||grad rho||^2``."""

    grid: GridSpec
    time: float
    v_hat: np.ndarray
    rho_hat: np.ndarray
    dissipation: float = 0.0

    def velocity(self) -> VectorField:
        return VectorField(self.grid, ifft(self.v_hat, self.grid.n))

    def density(self) -> ScalarField:
        return ScalarField(self.grid, ifft(self.rho_hat, self.grid.n))


def _project(vh: np.ndarray, g: GridSpec) -> np.ndarray:
    k = wavenumbers(g, odd=True)
    inv = _inv_ksq_odd(g)
    kv = k[0] * vh[0] + k[1] * vh[1] + k[2] * vh[2]
    return np.stack([vh[i] - k[i] * kv * inv for i in range(3)])


def initial_state(v: VectorField | None, rho: ScalarField | None, grid: GridSpec) -> SimState:
    vh = fft(v.data) if v is not None else np.zeros((3,) + grid.spectral_shape, dtype=complex)
    rh = fft(rho.data) if rho is not None else np.zeros(grid.spectral_shape, dtype=complex)
    if not (np.all(np.isfinite(vh)) and np.all(np.isfinite(rh))):
        raise ValueError("initial data contains non-finite values")
    return SimState(grid, 0.0, _project(vh, grid), rh)


def _grad_sq(rh: np.ndarray, g: GridSpec) -> float:
    """``||grad rho||_2^2`` from half-spectrum coefficients."""
    w = np.full(g.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    return float(g.volume * np.sum(w * _ksq(g) * np.abs(rh) ** 2))


def _tendency(vh, rh, g: GridSpec, mode: str, dealias: bool):
    """Nonlinear and buoyancy tendencies.

    The momentum nonlinearity uses the rotational form ``v x omega``: it
    differs from ``-(v . grad) v`` by the gradient ``grad |v|^2 / 2``,
    which the projection removes, and it needs fewer transforms.
    """
    mask = _dealias_mask(g) if dealias else 1.0
    k = wavenumbers(g, odd=True)
    if mode == "heat" and not np.any(vh):
        return np.zeros_like(vh), np.zeros_like(rh)
    vm = vh * mask
    v = ifft(vm, g.n)
    if mode == "heat":
        dv = np.zeros_like(vh)
    else:
        w = ifft(np.stack([1j * (k[1] * vm[2] - k[2] * vm[1]), 1j * (k[2] * vm[0] - k[0] * vm[2]),
                           1j * (k[0] * vm[1] - k[1] * vm[0])]), g.n)
        nl = fft(np.stack([v[1] * w[2] - v[2] * w[1], v[2] * w[0] - v[0] * w[2], v[0] * w[1] - v[1] * w[0]])) * mask
        if mode == "boussinesq":
            b = rh.copy()
            b[0, 0, 0] = 0.0  # buoyancy of the mean density is a pure pressure term
            nl[2] += b
        dv = _project(nl, g)
    if mode == "euler":
        return dv, np.zeros_like(rh)
    grad = ifft(np.stack([1j * ki * rh * mask for ki in k]), g.n)
    dr = -fft(v[0] * grad[0] + v[1] * grad[1] + v[2] * grad[2]) * mask
    return dv, dr


def tendency(state: SimState, mode: str = "boussinesq", dealias: bool = True):
    """``(dv, drho)`` as half-spectrum coefficients; diffusion is excluded."""
    dv, dr = _tendency(state.v_hat, state.rho_hat, state.grid, mode, dealias)
    if not (np.all(np.isfinite(dv)) and np.all(np.isfinite(dr))):
        raise FloatingPointError(f"non-finite tendency at t = {state.time}")
    return dv, dr


def _rk4(v0, r0, dt, g: GridSpec, mode: str, dealias: bool):
    ksq = _ksq(g)
    eh = np.exp(-ksq * dt / 2)
    ef = eh * eh
    k1v, k1r = _tendency(v0, r0, g, mode, dealias)
    v2 = v0 + 0.5 * dt * k1v
    r2 = eh * (r0 + 0.5 * dt * k1r)
    k2v, k2r = _tendency(v2, r2, g, mode, dealias)
    v3 = v0 + 0.5 * dt * k2v
    r3 = eh * r0 + 0.5 * dt * k2r
    k3v, k3r = _tendency(v3, r3, g, mode, dealias)
    v4 = v0 + dt * k3v
    r4 = ef * r0 + dt * eh * k3r
    k4v, k4r = _tendency(v4, r4, g, mode, dealias)
    v_new = _project(v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v), g)
    r_new = ef * r0 + dt / 6.0 * (ef * k1r + 2 * eh * (k2r + k3r) + k4r)
    return v_new, r_new


GAUSS_POINTS = 3


def _gauss_rule(npts: int):
    """Gauss-Legendre nodes on ``[0, 1]`` and weights summing to 2 (the factor in ``2 int ||grad rho||^2``)."""
    x, w = np.polynomial.legendre.leggauss(npts)
    return (x + 1.0) / 2.0, w


def _step_dissipation(v0, r0, dt, g: GridSpec, mode: str, dealias: bool) -> float:
    """``2 int ||grad rho||^2`` over one step.

    The free heat flow ``exp(s Delta) rho_n`` is integrated exactly per mode.
    The transport correction ``||grad rho(s)||^2 - ||grad exp(s Delta) rho_n||^2``
    is integrated with ``GAUSS_POINTS``-point Gauss-Legendre, taking ``rho(s)``
    at the nodes from separate integrating-factor RK4 substeps.  It is skipped
    when there is no transport.
    """
    ksq = _ksq(g)
    w = np.full(g.n // 2 + 1, 2.0)
    w[0] = w[-1] = 1.0
    free = float(g.volume * np.sum(w * (1.0 - np.exp(-2.0 * ksq * dt)) * np.abs(r0) ** 2))
    if mode == "euler" or not np.any(v0) or not np.any(r0):
        return free
    corr = 0.0
    for x, wx in zip(*_gauss_rule(GAUSS_POINTS)):
        _, rs = _rk4(v0, r0, x * dt, g, mode, dealias)
        corr += wx * (_grad_sq(rs, g) - _grad_sq(np.exp(-ksq * x * dt) * r0, g))
    return free + dt * corr


def step(state: SimState, dt: float, mode: str = "boussinesq", dealias: bool = True,
         track_dissipation: bool = True, cfl: float | None = None) -> SimState:
    """One RK4 step with the exact heat factor on ``rho``.

    With ``cfl`` given, steps longer than ``cfl dx / max(1, max|v|)`` are rejected.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if cfl is not None:
        limit = cfl * state.grid.spacing / max(1.0, _vmax(state))
        if dt > limit * (1 + 1e-12):
            raise ValueError(f"dt = {dt:.3e} violates the CFL limit {limit:.3e} at t = {state.time:.6g}")
    g = state.grid
    if mode == "heat" and not np.any(state.v_hat):
        # pure diffusion: the integrating factor is the exact solution
        ef = np.exp(-_ksq(g) * dt)
        diss = _step_dissipation(state.v_hat, state.rho_hat, dt, g, mode, dealias) if track_dissipation else 0.0
        return SimState(g, state.time + dt, state.v_hat, ef * state.rho_hat, state.dissipation + diss)
    v_new, r_new = _rk4(state.v_hat, state.rho_hat, dt, g, mode, dealias)
    if not (np.all(np.isfinite(v_new)) and np.all(np.isfinite(r_new))):
        raise FloatingPointError(f"non-finite state after step from t = {state.time}")
    diss = _step_dissipation(state.v_hat, state.rho_hat, dt, g, mode, dealias) if track_dissipation else 0.0
    return SimState(g, state.time + dt, v_new, r_new, state.dissipation + diss)


def _vmax(state: SimState) -> float:
    if not np.any(state.v_hat):
        return 0.0
    return float(np.abs(ifft(state.v_hat, state.grid.n)).max())


def stable_dt(state: SimState, cfg: SimConfig) -> float:
    if cfg.cfl is None:
        return cfg.dt
    dt = cfg.cfl * state.grid.spacing / max(1.0, _vmax(state))
    return min(dt, cfg.dt) if cfg.dt is not None else dt


def sample_states(cfg: SimConfig, v0: VectorField | None, rho0: ScalarField | None,
                  times: Sequence[float], track_dissipation: bool = False) -> list[SimState]:
    """Integrate from ``t = 0`` and return the states at the increasing ``times``."""
    times = [float(t) for t in times]
    if any(b <= a for a, b in zip(times, times[1:])) or times[0] < 0:
        raise ValueError("sample times must be non-negative and strictly increasing")
    state = initial_state(v0, rho0 if cfg.mode != "euler" else None, cfg.grid)
    out = []
    for target in times:
        while state.time < target - 1e-12 * max(1.0, target):
            dt = min(stable_dt(state, cfg), target - state.time)
            state = step(state, dt, cfg.mode, cfg.dealias, track_dissipation)
        out.append(state)
    return out


# -- diagnostics -------------------------------------------------------------


def gamma(state_or_v, rho: ScalarField | None = None) -> ScalarField:
    """``Gamma = zeta + (d_r/r) Delta^{-1} rho``."""
    if isinstance(state_or_v, SimState):
        v, rho = state_or_v.velocity(), state_or_v.density()
    else:
        v = state_or_v
    z = ax.zeta(v)
    if rho is None or not np.any(rho.data):
        return z
    return ScalarField(v.grid, z.data + ax.dr_over_r_inv_laplacian(rho, check=False).data)


def diagnostics(state: SimState, names: Sequence[str] = ALL_DIAGNOSTICS, hs: float = 2.6, m: float = 8.0) -> dict:
    """Evaluate the named diagnostics; ``dissipation`` is ``2 int_0^t ||grad rho||^2``."""
    g = state.grid
    v = state.velocity()
    rho = state.density()
    x1, x2, _ = g.coords()
    xh2 = x1**2 + x2**2
    out = {"time": state.time}
    need_w = {"omega_Linf", "zeta_L31", "zeta_L3", "gamma_L31"} & set(names)
    z = None
    if need_w & {"zeta_L31", "zeta_L3", "gamma_L31"}:
        z = ax.zeta(v) if np.any(v.data) else ScalarField(g, np.zeros(g.shape))
    k = wavenumbers(g, odd=True)
    for name in names:
        if name == "v_L2":
            val = lebesgue_norm(np.sqrt(np.sum(v.data**2, axis=0)), 2, g)
        elif name.startswith("rho_L"):
            p = name[5:]
            val = lebesgue_norm(rho, {"inf": np.inf, "m": m}.get(p) or float(p))
        elif name == "dissipation":
            val = state.dissipation
        elif name == "omega_Linf":
            vh = state.v_hat
            w = [ifft(1j * (k[1] * vh[2] - k[2] * vh[1]), g.n), ifft(1j * (k[2] * vh[0] - k[0] * vh[2]), g.n),
                 ifft(1j * (k[0] * vh[1] - k[1] * vh[0]), g.n)]
            val = float(np.sqrt(w[0] ** 2 + w[1] ** 2 + w[2] ** 2).max())
        elif name == "grad_v_Linf":
            val = max(float(np.abs(ifft(1j * kj * state.v_hat[i], g.n)).max()) for i in range(3) for kj in k)
        elif name == "zeta_L31":
            val = lorentz_norm(z, 3.0, 1.0)
        elif name == "zeta_L3":
            val = lebesgue_norm(z, 3)
        elif name == "gamma_L31":
            gm = z.data + (ax.dr_over_r_inv_laplacian(rho, check=False).data if np.any(rho.data) else 0.0)
            val = lorentz_norm(gm, 3.0, 1.0, g)
        elif name == "xh_rho_L2":
            val = lebesgue_norm(x1 * rho.data, 2, g) + lebesgue_norm(x2 * rho.data, 2, g)
        elif name == "xh_rho_Linf":
            val = lebesgue_norm(x1 * rho.data, np.inf, g) + lebesgue_norm(x2 * rho.data, np.inf, g)
        elif name == "xh2_rho_L2":
            val = lebesgue_norm(xh2 * rho.data, 2, g)
        elif name == "xh2_rho_L6":
            val = lebesgue_norm(xh2 * rho.data, 6, g)
        elif name == "rho_B12_21":
            val = besov_norm(rho, 0.5, 2.0, 1.0)
        elif name == "xh_rho_B0_inf1":
            val = besov_norm(ScalarField(g, x1 * rho.data), 0.0, np.inf, 1.0) + besov_norm(
                ScalarField(g, x2 * rho.data), 0.0, np.inf, 1.0)
        elif name == "v_Hs":
            val = math.sqrt(sum(sobolev_norm(v.component(i), hs) ** 2 for i in (1, 2, 3)))
        else:  # pragma: no cover - guarded by SimConfig
            raise ValueError(name)
        out[name] = float(val)
    return out


@dataclass
class DiagnosticsSeries:
    columns: tuple
    rows: list = field(default_factory=list)

    def append(self, record: dict):
        if self.rows and record["time"] <= self.rows[-1]["time"]:
            raise ValueError("diagnostic times must increase strictly")
        bad = [k for k, v in record.items() if not np.isfinite(v)]
        if bad:
            raise FloatingPointError(f"non-finite diagnostics {bad} at t = {record['time']}")
        self.rows.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    @property
    def times(self) -> np.ndarray:
        return self.column("time")

    def write_csv(self, path) -> Path:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", newline="") as fh:
            w = csv.writer(fh)
            cols = ("time",) + tuple(self.columns)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([repr(r[c]) for c in cols])
        os.replace(tmp, path)
        return path


@dataclass
class RunResult:
    series: DiagnosticsSeries
    state: SimState
    status: str
    steps: int
    checkpoints: list = field(default_factory=list)
    checklist: dict = field(default_factory=dict)
    message: str = ""


def _write_checkpoint(state: SimState, out_dir: Path, index: int) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {"time": state.time, "dissipation": state.dissipation, "provenance": "axbl.solver"}
    pv = write_snapshot(out_dir / f"v_{index:05d}.axbl", state.velocity(), "velocity", meta)
    pr = write_snapshot(out_dir / f"rho_{index:05d}.axbl", state.density(), "density", meta)
    return [str(pv), str(pr)]


def run(cfg: SimConfig, v0: VectorField | None = None, rho0: ScalarField | None = None,
        callback: Callable[[SimState], None] | None = None) -> RunResult:
    """Integrate to ``cfg.T`` recording diagnostics every ``cfg.cadence`` steps.

    ``sample_times`` (if set) forces steps to land on those times and records
    diagnostics there instead of on the step cadence.
    """
    g = cfg.grid
    if cfg.mode == "euler":
        rho0 = None
    if cfg.mode == "heat" and v0 is None:
        v0 = None
    state = initial_state(v0, rho0, g)
    names = tuple(cfg.diagnostics)
    series = DiagnosticsSeries(names)
    series.append(diagnostics(state, names, cfg.hs, cfg.m))
    out_dir = Path(cfg.out_dir) if cfg.out_dir else None
    checkpoints = []
    if out_dir is not None and cfg.checkpoint_every:
        checkpoints += _write_checkpoint(state, out_dir, 0)
    targets = sorted(t for t in (cfg.sample_times or ()) if 0 < t <= cfg.T)
    if cfg.T not in targets:
        targets.append(cfg.T)
    nsteps = 0
    status = "completed"
    message = ""
    ti = 0
    while state.time < cfg.T - 1e-12 * max(1.0, cfg.T):
        target = targets[ti]
        dt = stable_dt(state, cfg)
        if state.time + dt > target - 1e-12 * max(1.0, target):
            dt = target - state.time
        try:
            state = step(state, dt, cfg.mode, cfg.dealias)
        except FloatingPointError as exc:
            status, message = "aborted", str(exc)
            break
        nsteps += 1
        if callback is not None:
            callback(state)
        vmax = _vmax(state)
        if vmax > cfg.ceiling:
            status = "aborted"
            message = f"max|v| = {vmax:.3e} exceeded ceiling {cfg.ceiling:g} at t = {state.time:.6g}"
            series.append(diagnostics(state, names, cfg.hs, cfg.m))
            break
        hit = abs(state.time - target) <= 1e-12 * max(1.0, target)
        if hit:
            ti += 1
        if (cfg.sample_times and hit) or (not cfg.sample_times and (nsteps % cfg.cadence == 0 or hit)):
            if series.rows[-1]["time"] < state.time:
                series.append(diagnostics(state, names, cfg.hs, cfg.m))
        if out_dir is not None and cfg.checkpoint_every and nsteps % cfg.checkpoint_every == 0:
            checkpoints += _write_checkpoint(state, out_dir, nsteps)
    result = RunResult(series, state, status, nsteps, checkpoints, message=message)
    result.checklist = inequality_checklist(series, cfg.mode)
    return result


def inequality_checklist(series: DiagnosticsSeries, mode: str) -> dict:
    """Pass/fail of the energy and maximum-principle inequalities along a series."""
    cols = set(series.columns)
    out = {}
    t = series.times
    if {"rho_L2", "dissipation"} <= cols and mode != "euler":
        e0 = series.column("rho_L2")[0] ** 2
        if e0 > 0:
            bal = series.column("rho_L2") ** 2 + series.column("dissipation")
            err = float(np.max(np.abs(bal - e0)) / e0)
            out["energy_balance"] = {"max_rel_error": err, "pass": err <= 1e-6}
    if {"v_L2", "rho_L2"} <= cols and mode == "boussinesq":
        v = series.column("v_L2")
        bound = v[0] + t * series.column("rho_L2")[0] + 1e-6
        out["velocity_growth"] = {"max_excess": float(np.max(v - bound)), "pass": bool(np.all(v <= bound))}
    for p in ("2", "6", "m", "inf"):
        name = f"rho_L{p}"
        if name in cols and mode != "euler":
            a = series.column(name)
            slack = 1e-8 * max(a[0], 1e-300)
            inc = float(np.max(np.diff(a))) if a.size > 1 else 0.0
            out[f"max_principle_L{p}"] = {"max_increase": inc, "pass": inc <= slack}
    if "zeta_L3" in cols and mode == "euler":
        z = series.column("zeta_L3")
        drift = float(np.max(np.abs(z - z[0])) / z[0]) if z[0] > 0 else 0.0
        out["zeta_L3_drift"] = {"drift": drift, "pass": drift <= 5e-3}
    return out


def fit_decay_exponent(t: np.ndarray, y: np.ndarray, window: tuple[float, float]) -> float:
    """Least-squares slope of ``log y`` against ``log t`` on ``window``."""
    m = (t >= window[0]) & (t <= window[1]) & (y > 0)
    if m.sum() < 2:
        raise ValueError("fewer than two samples inside the fit window")
    return float(np.polyfit(np.log(t[m]), np.log(y[m]), 1)[0])


def fitted_constants(series: DiagnosticsSeries) -> dict:
    """Envelope constants and exponents along a series (reported, not asserted)."""
    cols = set(series.columns)
    t = series.times
    out = {}
    pos = t > 0

    def slope(y):
        m = pos & (y > 0)
        return float(np.polyfit(np.log(t[m]), np.log(y[m]), 1)[0]) if m.sum() >= 2 else None

    for name, power in (("xh_rho_L2", 1.25), ("xh2_rho_L2", 2.5)):
        if name in cols:
            y = series.column(name)
            out[f"{name}_envelope_C0"] = float(np.max(y / (1.0 + t**power)))
            out[f"{name}_exponent"] = slope(y)
    if {"grad_v_Linf", "v_L2", "omega_Linf", "v_Hs"} <= cols:
        den = series.column("v_L2") + series.column("omega_Linf") * np.log(math.e + series.column("v_Hs"))
        num = series.column("grad_v_Linf")
        ok = den > 0
        out["log_lipschitz_C"] = float(np.max(num[ok] / den[ok])) if ok.any() else None
    return out


def run_summary(cfg: SimConfig, result: RunResult, init: dict | None = None,
                decay_window: tuple[float, float] | None = None) -> dict:
    """JSON-ready record: config echo, inequality checklist and fitted constants."""
    conf = {k: v for k, v in asdict(cfg).items() if k != "grid"}
    conf["diagnostics"] = list(cfg.diagnostics)
    conf["sample_times"] = list(cfg.sample_times) if cfg.sample_times else None
    fits = fitted_constants(result.series)
    if cfg.mode == "heat" and "rho_Linf" in result.series.columns:
        h2 = cfg.grid.spacing**2
        window = decay_window or (20.0 * h2, 200.0 * h2)
        try:
            fits["decay_exponent_Linf"] = fit_decay_exponent(result.series.times, result.series.column("rho_Linf"), window)
            fits["decay_window"] = list(window)
        except ValueError:
            fits["decay_exponent_Linf"] = None
    return {
        "n": cfg.grid.n,
        "L": cfg.grid.L,
        "config": conf,
        "init": init or {},
        "status": result.status,
        "message": result.message,
        "steps": result.steps,
        "final_time": result.state.time,
        "checklist": result.checklist,
        "fitted": fits,
        "checkpoints": result.checkpoints,
    }


# -- configuration files -----------------------------------------------------

CONFIG_KEYS = {
    "grid.n", "grid.L", "time.dt", "time.cfl", "time.T", "time.sample_times", "mode", "dealias",
    "output.dir", "output.cadence", "output.checkpoint_every", "diagnostics", "ceiling", "hs", "m",
}
INT_KEYS = ("grid.n", "output.cadence", "output.checkpoint_every")
FLOAT_KEYS = ("grid.L", "time.dt", "time.cfl", "time.T", "ceiling", "hs", "m")


def _parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", ""):
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


class ConfigError(ValueError):
    """Malformed configuration; ``problems`` holds ``(line, message)`` pairs (line 0: whole file)."""

    def __init__(self, problems: list):
        self.problems = list(problems)
        super().__init__("; ".join(f"line {ln}: {msg}" if ln else msg for ln, msg in self.problems))


def _key_lines(text: str) -> dict:
    out = {}
    for ln, line in enumerate(text.splitlines(), 1):
        key = line.split("=", 1)[0].split(":", 1)[0].strip()
        if key and not key.startswith(("#", ";")):
            out.setdefault(key, ln)
    return out


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments) into a flat dict.

    Raises :class:`ConfigError` naming the offending lines.
    """
    if not any(line.strip() and not line.strip().startswith(("#", ";")) for line in text.splitlines()):
        raise ConfigError([(0, "configuration is empty")])
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.ParsingError as exc:
        src = text.splitlines()
        raise ConfigError([(ln - 1, f"expected 'key = value', got {src[ln - 2].strip()!r}") for ln, _ in exc.errors])
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError([((exc.lineno or 1) - 1, exc.message.split(":")[-1].strip() or str(exc))])
    except configparser.Error as exc:
        raise ConfigError([(0, str(exc))])
    if parser.sections() != ["run"]:
        lines = _key_lines(text)
        raise ConfigError([(lines.get(f"[{s}]", 0), f"sections are not supported: [{s}]")
                           for s in parser.sections() if s != "run"])
    raw = {k: _parse_value(v) for k, v in parser["run"].items()}
    unknown = sorted(k for k in raw if k not in CONFIG_KEYS and not k.startswith("init."))
    if unknown:
        lines = _key_lines(text)
        raise ConfigError([(lines.get(k, 0), f"unknown key {k!r}") for k in unknown])
    bad = [(k, "an integer") for k in INT_KEYS if k in raw and not isinstance(raw[k], int | None)]
    bad += [(k, "a number") for k in FLOAT_KEYS if k in raw and not isinstance(raw[k], int | float | None)]
    if bad:
        lines = _key_lines(text)
        raise ConfigError([(lines.get(k, 0), f"{k} must be {what}, got {raw[k]!r}") for k, what in bad])
    return raw


def config_from_dict(raw: dict, overrides: dict | None = None) -> tuple[SimConfig, dict]:
    """Build a :class:`SimConfig` and the ``init.*`` parameters from parsed keys."""
    raw = dict(raw)
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if "grid.n" not in raw or "grid.L" not in raw:
        raise ValueError("configuration needs grid.n and grid.L")
    grid = GridSpec(int(raw["grid.n"]), float(raw["grid.L"]))
    kw = {}
    if raw.get("time.dt") is not None:
        kw["dt"] = float(raw["time.dt"])
        kw["cfl"] = float(raw["time.cfl"]) if raw.get("time.cfl") is not None else None
    elif raw.get("time.cfl") is not None:
        kw["cfl"] = float(raw["time.cfl"])
    if raw.get("time.sample_times"):
        kw["sample_times"] = tuple(float(x) for x in str(raw["time.sample_times"]).split(","))
    if raw.get("diagnostics"):
        kw["diagnostics"] = tuple(x.strip() for x in str(raw["diagnostics"]).split(",") if x.strip())
    for key, name, conv in (("time.T", "T", float), ("mode", "mode", str), ("dealias", "dealias", bool),
                            ("output.dir", "out_dir", str), ("output.cadence", "cadence", int),
                            ("output.checkpoint_every", "checkpoint_every", int), ("ceiling", "ceiling", float),
                            ("hs", "hs", float), ("m", "m", float)):
        if raw.get(key) is not None:
            kw[name] = conv(raw[key])
    init = {k[5:]: v for k, v in raw.items() if k.startswith("init.")}
    return SimConfig(grid, **kw), init


def load_config(path, overrides: dict | None = None) -> tuple[SimConfig, dict]:
    """Read and validate a configuration file; every failure is a :class:`ConfigError`."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([(0, f"cannot read {path}: {exc.strerror}")]) from None
    raw = parse_config_text(text)
    try:
        return config_from_dict(raw, overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError([(0, str(exc))]) from None


INIT_PROFILES = ("rings", "vortex_ring", "critical_heat", "gamma_free", "buoyancy", "zero")


def initial_data(grid: GridSpec, init: dict):
    """``(v0, rho0)`` for the ``init.profile`` named in a configuration."""
    from . import scenarios as sc

    params = {k: v for k, v in init.items() if k != "profile"}
    profile = init.get("profile", "rings")
    if profile == "rings":
        return sc.ring_data(grid, **params)
    if profile == "vortex_ring":
        return sc.vortex_ring(grid, **params), None
    if profile == "critical_heat":
        return None, sc.critical_heat_profile(grid, **params)
    if profile == "gamma_free":
        return sc.gamma_free_data(grid, **params)
    if profile == "buoyancy":
        return None, sc.buoyancy_mode(grid, int(params.get("m", 5)))
    if profile == "zero":
        return None, None
    raise ValueError(f"unknown init.profile {profile!r}; choose from {INIT_PROFILES}")


# -- equation residuals ------------------------------------------------------


def _fields(state: SimState) -> dict:
    """Quantities entering the transport equations, evaluated at one time."""
    g = state.grid
    n = g.n
    k = wavenumbers(g, odd=True)
    x1, x2, _ = g.coords()
    r = g.radius()
    rsafe = np.where(r > 0, r, 1.0)
    v = state.velocity()
    vh = state.v_hat
    rh = state.rho_hat
    rho = ifft(rh, n)
    w = np.stack([ifft(1j * (k[1] * vh[2] - k[2] * vh[1]), n), ifft(1j * (k[2] * vh[0] - k[0] * vh[2]), n),
                  ifft(1j * (k[0] * vh[1] - k[1] * vh[0]), n)])
    wth = (x1 * w[1] - x2 * w[0]) / rsafe
    vr = (x1 * v.data[0] + x2 * v.data[1]) / rsafe
    # e_theta . (v . grad w) = v . grad(omega_theta) since v . grad e_theta = 0 without swirl
    adv_w = [advect(v, fft(w[i])) for i in range(2)]
    adv_wth = (x1 * adv_w[1] - x2 * adv_w[0]) / rsafe
    drho = [ifft(1j * ki * rh, n) for ki in k]
    dr_rho = (x1 * drho[0] + x2 * drho[1]) / rsafe
    zeta = wth / rsafe
    adv_zeta = (adv_wth - vr / rsafe * wth) / rsafe
    a_rho = ax._riesz_form(rh, g)
    adv_a = transport_of_riesz_form(v, rh)
    comm = ax._riesz_form(fft(advect(v, rh)), g) - adv_a
    lap = -_ksq(g)
    f = [x1 * rho, x2 * rho]
    gmom = (x1**2 + x2**2) * rho
    out = {
        "omega_theta": wth,
        "omega_theta_rhs": -adv_wth + vr / rsafe * wth - dr_rho,
        "zeta": zeta,
        "zeta_rhs": -adv_zeta - dr_rho / rsafe,
        "gamma": zeta + a_rho,
        "gamma_rhs": -(adv_zeta + adv_a) - comm,
        "gamma_rhs_no_source": -(adv_zeta + adv_a),
        "f1": f[0],
        "f1_rhs": -advect(v, fft(f[0])) + ifft(lap * fft(f[0]), n) + v.data[0] * rho - 2 * drho[0],
        "f2": f[1],
        "f2_rhs": -advect(v, fft(f[1])) + ifft(lap * fft(f[1]), n) + v.data[1] * rho - 2 * drho[1],
        "g": gmom,
        "g_rhs": -advect(v, fft(gmom)) + ifft(lap * fft(gmom), n)
        + 2 * rho * (v.data[0] * x1 + v.data[1] * x2) - 4 * (x1 * drho[0] + x2 * drho[1]) - 4 * rho,
    }
    return out


EQUATIONS = {
    "omega_theta": ("omega_theta", "omega_theta_rhs"),
    "zeta": ("zeta", "zeta_rhs"),
    "gamma": ("gamma", "gamma_rhs"),
    "moment_x_h": (("f1", "f2"), ("f1_rhs", "f2_rhs")),
    "moment_x_h_squared": ("g", "g_rhs"),
}


def equation_residuals(history: Sequence[SimState]) -> dict:
    """Centred-difference residuals of the transport equations at the middle checkpoint.

    Each residual is ``||(X(t+d) - X(t-d))/(2d) - RHS(t)|| / ||RHS(t)||`` on the
    region ``r >= 4 dx`` away from a boundary shell of width ``L/8``.  The
    Gamma equation is also reported with its commutator source removed.
    """
    if len(history) != 3:
        raise ValueError("exactly three checkpoints are required")
    s0, s1, s2 = history
    d1, d2 = s1.time - s0.time, s2.time - s1.time
    if not (d1 > 0 and abs(d1 - d2) <= 1e-9 * max(d1, d2)):
        raise ValueError(f"checkpoints are not uniformly spaced ({d1} vs {d2})")
    g = s1.grid
    mask = np.broadcast_to(ax.axis_distance_mask(g, 4.0), g.shape) & ax.interior_mask(g)
    a, b, c = _fields(s0), _fields(s1), _fields(s2)

    def res(lhs_keys, rhs_key_list):
        num = den = 0.0
        for lk, rk in zip(lhs_keys, rhs_key_list):
            dt_ = (c[lk] - a[lk]) / (d1 + d2)
            num += np.sum((dt_ - b[rk])[mask] ** 2)
            den += np.sum(b[rk][mask] ** 2)
        if den == 0:
            return 0.0 if num == 0 else float("inf")
        return float(math.sqrt(num / den))

    out = {}
    for name, (lk, rk) in EQUATIONS.items():
        lk = lk if isinstance(lk, tuple) else (lk,)
        rk = rk if isinstance(rk, tuple) else (rk,)
        out[name] = res(lk, rk)
    # ablation: same normalization as the full Gamma residual
    num_with = np.sum((((c["gamma"] - a["gamma"]) / (d1 + d2)) - b["gamma_rhs"])[mask] ** 2)
    num_without = np.sum((((c["gamma"] - a["gamma"]) / (d1 + d2)) - b["gamma_rhs_no_source"])[mask] ** 2)
    out["gamma_without_source"] = float(math.sqrt(num_without / max(np.sum(b["gamma_rhs"][mask] ** 2), 1e-300)))
    out["gamma_source_ratio"] = float(math.sqrt(num_with / num_without)) if num_without > 0 else 0.0
    out["spacing"] = d1
    out["n"] = g.n
    out["L"] = g.L
    return out
