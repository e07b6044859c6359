import csv

import numpy as np
import pytest

from axbl import axisym as ax
from axbl import scenarios as sc
from axbl import solver as so
from axbl import spectral as sp
from axbl.commutators import advect, random_pair
from axbl.lorentz import lorentz_norm
from axbl.spectral import GridSpec, ScalarField, VectorField

from conftest import rel


@pytest.fixture(scope="module")
def ring32():
    g = GridSpec(32, 8.0)
    return sc.ring_data(g)


def zero_state(g):
    return so.initial_state(None, None, g)


# -- tendency -----------------------------------------------------------------

def test_tendency_zero_state(g16):
    dv, dr = so.tendency(zero_state(g16))
    assert not np.any(dv) and not np.any(dr)


def test_vertical_stratification_is_pure_pressure(g32):
    _, _, x3 = g32.coords()
    rho = ScalarField(g32, np.cos(np.pi * x3 / g32.L) * np.ones(g32.shape))
    dv, dr = so.tendency(so.initial_state(None, rho, g32))
    assert np.abs(dv).max() <= 1e-14 and not np.any(dr)


def test_rotational_form_matches_advective_and_divergence_forms(ring32):
    v, _ = ring32
    g = v.grid
    dv, _ = so.tendency(so.initial_state(v, None, g), mode="euler")
    vh = sp.fft(v.data)
    mask = sp._dealias_mask(g)
    k = sp.wavenumbers(g, odd=True)
    adv = np.stack([sp.fft(advect(v, vh[i])) for i in range(3)])
    vt = sp.ifft(vh * mask, g.n)
    div = np.stack([sum(1j * k[j] * sp.fft(vt[j] * vt[i]) * mask for j in range(3)) for i in range(3)])
    assert rel(adv, div) <= 1e-10
    assert rel(dv, so._project(-adv, g)) <= 1e-10


def test_initial_state_projects_and_rejects_nan(g16):
    x1, _, _ = g16.coords()
    grad = VectorField(g16, np.stack([np.sin(np.pi * x1 / g16.L) * np.ones(g16.shape),
                                      np.zeros(g16.shape), np.zeros(g16.shape)]))
    assert np.abs(so.initial_state(grad, None, g16).v_hat).max() <= 1e-15
    bad = ScalarField.__new__(ScalarField)
    object.__setattr__(bad, "grid", g16)
    object.__setattr__(bad, "data", np.full(g16.shape, np.nan))
    with pytest.raises(ValueError):
        so.initial_state(None, bad, g16)


# -- step ---------------------------------------------------------------------

def test_zero_is_fixed_point(g16):
    s = so.step(zero_state(g16), 0.1)
    assert not np.any(s.v_hat) and not np.any(s.rho_hat) and s.time == 0.1 and s.dissipation == 0.0


@pytest.mark.parametrize("m", [1, 5])
def test_linear_buoyancy_local_error_fifth_order(g32, m):
    errs = []
    for dt in (0.2, 0.1, 0.05):
        s = so.step(so.initial_state(None, sc.buoyancy_mode(g32, m), g32), dt)
        ve, re = sc.buoyancy_exact(g32, dt, m)
        errs.append(max(np.abs(s.velocity().data - ve.data).max(), np.abs(s.density().data - re.data).max()))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 4.5)


def test_richardson_global_order(ring32):
    v0, r0 = ring32
    g = v0.grid
    T = 0.4
    out = {}
    for dt in (0.05, 0.025, 0.0125):
        s = so.sample_states(so.SimConfig(g, T=T, dt=dt, cfl=None), v0, r0, [T])[-1]
        out[dt] = np.concatenate([s.v_hat.ravel(), s.rho_hat.ravel()])
    order = np.log2(np.linalg.norm(out[0.05] - out[0.025]) / np.linalg.norm(out[0.025] - out[0.0125]))
    assert order >= 3.8


def test_cfl_violation_rejected(ring32):
    v0, r0 = ring32
    s = so.initial_state(v0, r0, v0.grid)
    with pytest.raises(ValueError, match="CFL"):
        so.step(s, 10.0, cfl=0.5)
    with pytest.raises(ValueError):
        so.step(s, 0.0)


def test_non_finite_tendency_aborts(g16):
    s = zero_state(g16)
    vh = s.v_hat.copy()
    vh[0, 1, 1, 1] = np.nan
    with pytest.raises(FloatingPointError, match="t = "):
        so.tendency(so.SimState(g16, 0.5, vh, s.rho_hat))


def test_dissipation_quadrature_converges(ring32):
    v0, r0 = ring32
    g = v0.grid
    s0 = so.initial_state(v0, r0, g)
    errs = [abs(so.step(s0, dt).dissipation - so.sample_states(so.SimConfig(g, dt=dt / 32, cfl=None), v0, r0,
                                                                  [dt], True)[0].dissipation)
            for dt in (0.2, 0.1)]
    assert errs[1] < errs[0] / 8


def test_heat_step_is_exact_semigroup(g32):
    rho = sc.buoyancy_mode(g32, 3)
    s = so.step(so.initial_state(None, rho, g32), 0.3, mode="heat")
    _, exact = sc.buoyancy_exact(g32, 0.3, 3)
    assert np.abs(s.density().data - exact.data).max() <= 1e-14
    assert not np.any(s.v_hat)


def test_divergence_free_after_steps(ring32):
    v0, r0 = ring32
    g = v0.grid
    s = so.sample_states(so.SimConfig(g, T=0.3), v0, r0, [0.3])[-1]
    k = sp.wavenumbers(g, odd=True)
    div = sum(1j * k[i] * s.v_hat[i] for i in range(3))
    assert np.linalg.norm(div) <= 1e-10 * np.linalg.norm(s.v_hat)


# -- runs and diagnostics ---------------------------------------------------------

def test_boussinesq_run_checklist_and_axisymmetry():
    # the 1e-6 energy balance needs CFL 0.25 and runs in the acceptance suite
    g = GridSpec(64, 8.0)
    v0, r0 = sc.ring_data(g)
    cfg = so.SimConfig(g, T=1.0, cadence=1, diagnostics=("v_L2", "rho_L2", "rho_L6", "rho_Linf", "dissipation"))
    res = so.run(cfg, v0, r0)
    assert res.status == "completed" and res.state.time == pytest.approx(1.0)
    assert all(v["pass"] for k, v in res.checklist.items() if k != "energy_balance"), res.checklist
    assert res.checklist["energy_balance"]["max_rel_error"] <= 1e-5
    assert ax.vector_rotation_defect(res.state.velocity()) <= 1e-8
    assert ax.rotation_defect(res.state.density().data) <= 1e-8
    t = res.series.times
    assert np.all(np.diff(t) > 0)


def test_euler_mode_ignores_density(ring32):
    v0, r0 = ring32
    res = so.run(so.SimConfig(v0.grid, T=0.2, mode="euler", diagnostics=("v_L2", "zeta_L3")), v0, r0)
    assert not np.any(res.state.rho_hat)
    assert res.checklist["zeta_L3_drift"]["pass"]


def test_run_lands_on_sample_times(g32):
    rho = sc.critical_heat_profile(g32)
    cfg = so.SimConfig(g32, T=0.5, dt=0.07, cfl=None, mode="heat", sample_times=(0.1, 0.25, 0.5),
                       diagnostics=("rho_Linf", "rho_L2", "dissipation"))
    res = so.run(cfg, None, rho)
    assert np.allclose(res.series.times, [0.0, 0.1, 0.25, 0.5])
    assert res.checklist["energy_balance"]["max_rel_error"] <= 1e-10


def test_ceiling_aborts_with_partial_series(ring32):
    v0, r0 = ring32
    res = so.run(so.SimConfig(v0.grid, T=1.0, ceiling=1e-3, diagnostics=("v_L2",)), v0, r0)
    assert res.status == "aborted" and "ceiling" in res.message
    assert len(res.series.rows) == 2 and res.steps == 1


def test_diagnostics_all_finite(ring32):
    v0, r0 = ring32
    d = so.diagnostics(so.initial_state(v0, r0, v0.grid))
    assert set(d) == {"time", *so.ALL_DIAGNOSTICS}
    assert all(np.isfinite(x) for x in d.values())


def test_series_rejects_bad_records():
    s = so.DiagnosticsSeries(("a",))
    s.append({"time": 0.0, "a": 1.0})
    with pytest.raises(ValueError):
        s.append({"time": 0.0, "a": 1.0})
    with pytest.raises(FloatingPointError):
        s.append({"time": 1.0, "a": float("nan")})


def test_series_csv(tmp_path):
    s = so.DiagnosticsSeries(("a", "b"))
    s.append({"time": 0.0, "a": 1.0, "b": 0.1})
    s.append({"time": 0.5, "a": 2.0, "b": 1 / 3})
    path = s.write_csv(tmp_path / "d.csv")
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["time", "a", "b"] and float(rows[2][2]) == 1 / 3


def test_fit_decay_exponent_on_power_law():
    t = np.geomspace(0.01, 10, 40)
    assert so.fit_decay_exponent(t, 3 * t**-0.75, (0.1, 1.0)) == pytest.approx(-0.75, abs=1e-12)
    with pytest.raises(ValueError):
        so.fit_decay_exponent(t, t, (20.0, 30.0))


# -- gamma --------------------------------------------------------------------

def test_gamma_special_cases(g64):
    v, rho = random_pair(np.random.default_rng(0), g64)
    zero_rho = ScalarField(g64, np.zeros(g64.shape))
    assert np.array_equal(so.gamma(v, zero_rho).data, ax.zeta(v).data)
    zero_v = VectorField(g64, np.zeros((3,) + g64.shape))
    assert np.array_equal(so.gamma(zero_v, rho).data, ax.dr_over_r_inv_laplacian(rho, check=False).data)
    gm = lorentz_norm(so.gamma(v, rho), 3.0, 1.0)
    c22 = lorentz_norm(ax.dr_over_r_inv_laplacian(rho), 3.0, 1.0) / lorentz_norm(rho, 3.0, 1.0)
    assert gm <= lorentz_norm(ax.zeta(v), 3.0, 1.0) + c22 * lorentz_norm(rho, 3.0, 1.0) + 1e-12


def test_gamma_free_data_has_zero_gamma(g64):
    v, rho = sc.gamma_free_data(g64)
    gm = so.gamma(v, rho).data
    m = ax.axis_distance_mask(g64, 4.0)
    assert np.abs(gm[m]).max() <= 1e-3 * np.abs(ax.zeta(v).data[m]).max()


def test_gamma_rejects_swirl(g32):
    x1, x2, _ = g32.coords()
    e = np.exp(-(x1**2 + x2**2)) * np.ones(g32.shape)
    swirl = VectorField(g32, np.stack([-x2 * e, x1 * e, np.zeros(g32.shape)]))
    with pytest.raises(ValueError, match="swirl"):
        so.gamma(swirl, None)


# -- equation residuals ---------------------------------------------------------

def test_residuals_of_zero_state(g32):
    hist = [so.SimState(g32, t, zero_state(g32).v_hat, zero_state(g32).rho_hat) for t in (0.0, 0.1, 0.2)]
    out = so.equation_residuals(hist)
    assert all(out[k] == 0.0 for k in so.EQUATIONS)


def test_residuals_reject_bad_histories(g32):
    z = zero_state(g32)
    hist = [so.SimState(g32, t, z.v_hat, z.rho_hat) for t in (0.0, 0.1, 0.3)]
    with pytest.raises(ValueError, match="uniformly"):
        so.equation_residuals(hist)
    with pytest.raises(ValueError, match="three"):
        so.equation_residuals(hist[:2])


# -- configuration -----------------------------------------------------------

GOOD = """
# comment
grid.n = 32
grid.L = 8
time.T = 0.5
time.cfl = 0.4
mode = heat
diagnostics = rho_L2, rho_Linf
init.profile = critical_heat
"""


def test_parse_good_config():
    cfg, init = so.config_from_dict(so.parse_config_text(GOOD))
    assert cfg.grid == GridSpec(32, 8.0) and cfg.T == 0.5 and cfg.cfl == 0.4 and cfg.mode == "heat"
    assert cfg.diagnostics == ("rho_L2", "rho_Linf") and init == {"profile": "critical_heat"}


def test_dt_without_cfl():
    cfg, _ = so.config_from_dict(so.parse_config_text(GOOD.replace("time.cfl = 0.4", "time.dt = 0.01")))
    assert cfg.dt == 0.01 and cfg.cfl is None


def test_overrides_win():
    cfg, _ = so.config_from_dict(so.parse_config_text(GOOD), {"grid.n": 16, "time.T": None})
    assert cfg.grid.n == 16 and cfg.T == 0.5


@pytest.mark.parametrize("text,line,fragment", [
    ("", 0, "empty"),
    ("# only a comment\n", 0, "empty"),
    ("grid.n = 32\nthis is not a pair\n", 2, "key = value"),
    ("grid.n = 32\ngrid.n = 64\n", 2, "grid.n"),
    ("grid.n = 32\n[extra]\nx = 1\n", 2, "sections"),
    ("grid.n = 32\nbogus.key = 1\n", 2, "bogus.key"),
])
def test_config_errors_name_lines(text, line, fragment):
    with pytest.raises(so.ConfigError) as exc:
        so.parse_config_text(text)
    (ln, msg), = exc.value.problems[:1]
    assert ln == line and fragment in msg


@pytest.mark.parametrize("extra", ["mode = vortex", "time.dt = -1", "output.cadence = 0", "diagnostics = nope"])
def test_config_semantic_errors(tmp_path, extra):
    p = tmp_path / "c.cfg"
    p.write_text("grid.n = 32\ngrid.L = 8\n" + extra + "\n")
    with pytest.raises(so.ConfigError):
        so.load_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(so.ConfigError, match="cannot read"):
        so.load_config(tmp_path / "missing.cfg")


def test_shipped_configs_parse():
    from pathlib import Path

    for path in sorted(Path(__file__).resolve().parents[1].joinpath("configs").glob("*.cfg")):
        cfg, init = so.load_config(path)
        assert cfg.grid.n >= 32 and init.get("profile") in so.INIT_PROFILES


@pytest.mark.parametrize("profile", so.INIT_PROFILES)
def test_initial_data_profiles(g32, profile):
    v, rho = so.initial_data(g32, {"profile": profile})
    for f in (v, rho):
        assert f is None or np.all(np.isfinite(f.data))


def test_unknown_profile(g32):
    with pytest.raises(ValueError, match="profile"):
        so.initial_data(g32, {"profile": "tornado"})
