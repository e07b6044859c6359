import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from axbl import axisym as ax
from axbl import commutators as cm
from axbl import spectral as sp
from axbl.dyadic import besov_norm, build_partition
from axbl.lorentz import lorentz_norm
from axbl.spectral import GridSpec, ScalarField, VectorField

from conftest import gaussian, rel


@pytest.fixture(scope="module")
def pair64():
    return cm.random_pair(np.random.default_rng(3), GridSpec(64, 8.0))


@pytest.fixture(scope="module")
def pair32():
    return cm.random_pair(np.random.default_rng(4), GridSpec(32, 8.0))


def zero_vector(g):
    return VectorField(g, np.zeros((3,) + g.shape))


def constant_vector(g, c=(0.3, -0.7, 1.1)):
    return VectorField(g, np.stack([np.full(g.shape, ci) for ci in c]))


# -- transport commutator ---------------------------------------------------

def test_commutator_zero_velocity(pair32):
    _, rho = pair32
    assert not np.any(cm.advection_commutator(zero_vector(rho.grid), rho).data)


def test_commutator_constant_density(pair32):
    v, rho = pair32
    const = ScalarField(rho.grid, np.full(rho.grid.shape, 2.5))
    assert np.abs(cm.advection_commutator(v, const).data).max() <= 1e-12


def test_commutator_rejects_divergent_velocity(pair32):
    _, rho = pair32
    g = rho.grid
    x1, _, _ = g.coords()
    e = np.exp(-(x1**2)) * np.ones(g.shape)
    v = VectorField(g, np.stack([e, np.zeros(g.shape), np.zeros(g.shape)]))
    with pytest.raises(ValueError, match="divergence"):
        cm.advection_commutator(v, rho)


def test_commutator_rejects_non_axisymmetric(pair32):
    v, rho = pair32
    shifted = ScalarField(rho.grid, np.roll(rho.data, 1, axis=0))
    with pytest.raises(ValueError, match="axisymmetric"):
        cm.advection_commutator(v, shifted)


def test_commutator_linear_in_density():
    g = GridSpec(32, 8.0)
    rng = np.random.default_rng(9)
    v, r1 = cm.random_pair(rng, g)
    _, r2 = cm.random_pair(rng, g)
    a, b = 1.7, -0.4
    lhs = cm.advection_commutator(v, ScalarField(g, a * r1.data + b * r2.data)).data
    rhs = a * cm.advection_commutator(v, r1).data + b * cm.advection_commutator(v, r2).data
    assert rel(lhs, rhs) <= 1e-12


def test_thm31_bound_zero_and_homogeneous(pair32):
    v, rho = pair32
    assert cm.thm31_bound(v, ScalarField(rho.grid, np.zeros(rho.grid.shape))) == 0.0
    assert cm.thm31_bound(v, ScalarField(rho.grid, 2.0 * rho.data)) == 2.0 * cm.thm31_bound(v, rho)


def test_thm31_bound_recomputed_from_primitives(pair32):
    v, rho = pair32
    g = rho.grid
    x1, x2, _ = g.coords()
    zn = lorentz_norm(ax.zeta(v), 3.0, 1.0)
    xs = [ScalarField(g, x * rho.data) for x in (x1, x2)]
    b0 = sum(besov_norm(f, 0.0, np.inf, 1.0) for f in xs)
    l2 = sum(sp.lebesgue_norm(f, 2) for f in xs)
    expect = zn * (max(b0, l2) + besov_norm(rho, 0.5, 2.0, 1.0))
    assert cm.thm31_bound(v, rho) == pytest.approx(expect, rel=1e-12)


def test_commutator_bounded_by_thm31(pair64):
    v, rho = pair64
    ratio = lorentz_norm(cm.advection_commutator(v, rho), 3.0, 1.0) / cm.thm31_bound(v, rho)
    assert np.isfinite(ratio) and 0 < ratio < 10


# -- dyadic transport commutator ------------------------------------------------

def test_dyadic_commutator_constant_velocity(pair32):
    _, rho = pair32
    g = rho.grid
    for q in range(-1, build_partition(g).q_max + 1):
        c = cm.dyadic_advection_commutator(constant_vector(g), rho, q).data
        assert np.abs(c).max() <= 1e-12


def test_dyadic_commutator_zero_velocity(pair32):
    _, rho = pair32
    assert not np.any(cm.dyadic_advection_commutator(zero_vector(rho.grid), rho, 0).data)


def test_dyadic_commutators_sum_to_zero(pair64):
    v, rho = pair64
    g = rho.grid
    total = sum(cm.dyadic_advection_commutator(v, rho, q).data for q in range(-1, build_partition(g).q_max + 1))
    scale = np.abs(cm.advect(v, sp.fft(rho.data))).max()
    assert np.abs(total).max() <= 1e-10 * scale


def test_dyadic_commutator_block_range(pair32):
    v, rho = pair32
    with pytest.raises(ValueError):
        cm.dyadic_advection_commutator(v, rho, build_partition(rho.grid).q_max + 1)


# -- smoothed commutator -------------------------------------------------------

def test_smoothed_commutator_trivial_cases(g32):
    f = gaussian(g32, (0.2, 0.0, -0.1), 0.7)
    w = gaussian(g32, (0.0, 0.5, 0.0), 0.4)
    sym = build_partition(g32).symbol(1)
    const = ScalarField(g32, np.full(g32.shape, 3.0))
    assert np.abs(cm.smoothed_commutator(sym, const, w).data).max() <= 1e-12
    assert np.abs(cm.smoothed_commutator(2.5, f, w).data).max() <= 1e-12


def test_multiplier_kernel_reproduces_multiplier(g32):
    sym = build_partition(g32).symbol(0)
    u = gaussian(g32, (0.3, 0.1, 0.0), 0.5)
    kern = ScalarField(g32, cm.multiplier_kernel(sym, g32).real)
    direct = sp.ifft(sym * sp.fft(u.data), g32.n)
    assert rel(sp.convolve(u, kern).data, direct) <= 1e-12


def test_smoothed_commutator_gradient_ratio_bounded(pair64):
    v, rho = pair64
    g = rho.grid
    f = ax.zeta(v)
    grad_inf = max(np.abs(sp.ifft(1j * k * sp.fft(f.data), g.n)).max() for k in sp.wavenumbers(g, odd=True))
    ratios = []
    part = build_partition(g)
    for q in range(part.q_max):
        c = cm.smoothed_commutator(part.symbol(q), f, rho)
        gc = np.sqrt(sum(sp.lebesgue_norm(sp.ifft(1j * k * sp.fft(c.data), g.n), 2, g) ** 2
                         for k in sp.wavenumbers(g, odd=True)))
        ratios.append(gc / (grad_inf * sp.lebesgue_norm(rho, 2)))
    assert np.all(np.isfinite(ratios)) and max(ratios) < 10


# -- block commutator with a coordinate -----------------------------------------

def test_block_moment_zero(g64):
    rep = cm.check_delta_q_moment(ScalarField(g64, np.zeros(g64.shape)), 1)
    assert rep["residual"] == 0.0 and rep["norm"] == 0.0


def test_block_moment_gaussian_q3():
    g = GridSpec(128, 8.0)
    assert build_partition(g).q_max >= 3
    rho = gaussian(g, w2=0.5)
    for i in (1, 2):
        rep = cm.check_delta_q_moment(rho, 3, i)
        assert rep["residual"] <= 1e-10


def test_block_moment_argument_checks(g64):
    rho = gaussian(g64, w2=0.5)
    with pytest.raises(ValueError):
        cm.check_delta_q_moment(rho, -1)
    with pytest.raises(ValueError):
        cm.check_delta_q_moment(rho, 0, 4)
    with pytest.raises(ValueError):
        cm.check_delta_q_moment(ScalarField(g64, np.ones(g64.shape)), 0)


@pytest.mark.parametrize("n", [64, 128])
def test_block_moment_decay_slope(n):
    sl = cm.delta_q_moment_norms(cm.power_law_field(GridSpec(n, 8.0)), 1)
    assert abs(sl["slope"] + 1.0) <= 0.1


def test_symbol_gradient_matches_finite_difference(g64):
    part = build_partition(g64)
    k1, _, _ = sp.wavenumbers(g64)
    d = cm.block_symbol_gradient(g64, 1, 3)
    # derivative along xi_3 from a symmetric difference of the profile
    _, _, k3 = sp.wavenumbers(g64)
    s = np.sqrt(sp._ksq(g64))
    eps = 1e-6
    for idx in [(3, 2, 4), (1, 0, 2), (5, 5, 5)]:
        kk = np.array([k1[idx[0], 0, 0], sp.wavenumbers(g64)[1][0, idx[1], 0], k3[0, 0, idx[2]]])
        mod = np.linalg.norm(kk)
        num = (part.profile_values(np.array([np.linalg.norm(kk + [0, 0, eps])]))[2, 0]
               - part.profile_values(np.array([np.linalg.norm(kk - [0, 0, eps])]))[2, 0]) / (2 * eps)
        assert s[idx] == pytest.approx(mod)
        assert d[idx] == pytest.approx(num, abs=1e-6)


# -- probe suite ---------------------------------------------------------------

def test_probe_suite_shape_and_finiteness():
    g = GridSpec(32, 8.0)
    reps = cm.run_probe_suite(0, 3, g)
    assert [r.inequality for r in reps] == list(cm.PROBES)
    for r in reps:
        assert len(r.ratio) + r.skipped == 3
        assert np.isfinite(r.max_ratio) and all(x > 0 for x in r.rhs)


def test_probe_suite_deterministic():
    g = GridSpec(32, 8.0)
    a = cm.reports_json(cm.run_probe_suite(7, 2, g), 7)
    b = cm.reports_json(cm.run_probe_suite(7, 2, g), 7)
    assert a == b
    doc = json.loads(a)
    assert doc["seed"] == 7 and doc["ensemble"] == 2 and len(doc["probes"]) == len(cm.PROBES)


def test_probe_report_skips_degenerate():
    rep = cm.ProbeReport("x", 32, 8.0, 3)
    rep.add(1.0, 0.0)
    rep.add(1.0, 1e-20)
    rep.add(2.0, 4.0)
    assert rep.skipped == 2 and rep.ratio == [0.5] and rep.max_ratio == 0.5


@settings(max_examples=10)
@given(st.integers(0, 2**31))
def test_random_pairs_satisfy_preconditions(seed):
    v, rho = cm.random_pair(np.random.default_rng(seed), GridSpec(32, 8.0))
    cm._check_div(v)
    assert ax.rotation_defect(rho.data) <= ax.AXISYM_TOL
    assert ax.swirl_defect(v) <= ax.SWIRL_TOL
