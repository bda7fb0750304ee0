import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from helibudget.initial import abc_flow, initial_state, leray_project, taylor_green
from helibudget.oracle import generate
from helibudget.spectral import make_grid
from helibudget.systems import (
    DensityFloorError,
    Eos,
    PressureSolveError,
    SystemState,
    Tendency,
    cfl_dt,
    eos_pressure,
    pressure_source_ii,
    rhs,
    rhs_baro,
    rhs_comp,
    rhs_ii,
    rhs_mhd,
    rk4_step,
    solve_pressure_ii,
)

from conftest import band_limited

POLY = Eos("polytropic", 2.0, 1.0)
GAS = Eos("ideal-gas", 1.4)


def const(g, v):
    return np.full(g.shape, float(v))


def relmax(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


# equation of state ---------------------------------------------------------


def test_polytropic_unit_density():
    g = make_grid(8)
    s = SystemState("baro-euler", g, const(g, 1), np.zeros((3,) + g.shape), Eos("polytropic", 5 / 3, 1.0))
    np.testing.assert_allclose(eos_pressure(s), 1.0, rtol=0, atol=1e-15)


def test_ideal_gas_pressure():
    g = make_grid(8)
    s = SystemState("comp-euler", g, const(g, 2), np.zeros((3,) + g.shape), GAS, e=const(g, 1))
    np.testing.assert_allclose(eos_pressure(s), 0.8, rtol=1e-15)


def test_pressure_function_matches_quadrature():
    eos = Eos("polytropic", 5 / 3, 1.0)
    assert eos.enthalpy(1.0) == pytest.approx(2.5, rel=1e-15)
    dP = lambda r: eos.gamma * eos.K * r ** (eos.gamma - 1)  # noqa: E731
    val, _ = quad(lambda r: dP(r) / r, 0.0, 1.0)
    assert val == pytest.approx(2.5, rel=1e-10)


@pytest.mark.parametrize("kw,msg", [(dict(gamma=0.9), "γ > 1"), (dict(gamma=1.0), "γ > 1"), (dict(K=0.0), "K > 0")])
def test_eos_rejects_out_of_range(kw, msg):
    with pytest.raises(ValueError, match=msg):
        Eos("polytropic", **kw)


def test_density_floor_fault_names_location():
    g = make_grid(8)
    rho = const(g, 1)
    rho[2, 5, 1] = 1e-9
    s = SystemState("baro-euler", g, rho, np.zeros((3,) + g.shape), POLY)
    with pytest.raises(DensityFloorError) as ei:
        eos_pressure(s)
    assert ei.value.location == (2, 5, 1)
    assert "(2, 5, 1)" in str(ei.value)


def test_ii_has_no_eos_pressure():
    g = make_grid(8)
    s = SystemState("ii-euler", g, const(g, 1), np.zeros((3,) + g.shape), GAS)
    with pytest.raises(ValueError):
        eos_pressure(s)


# barotropic ------------------------------------------------------------------


def test_baro_constant_density_abc_keeps_density(g32):
    s = SystemState("baro-euler", g32, const(g32, 1), abc_flow(g32), POLY)
    assert np.max(np.abs(rhs_baro(s).rho)) <= 1e-13


def test_baro_at_rest_is_pressure_driven(g32):
    x = g32.mesh()[0]
    rho = 1 + 0.1 * np.sin(x)
    s = SystemState("baro-euler", g32, rho, np.zeros((3,) + g32.shape), POLY)
    t = rhs_baro(s)
    # P = rho^2 so rho^-1 grad P = 2 grad rho
    exact = np.stack([-0.2 * np.cos(x), 0 * x, 0 * x])
    assert np.max(np.abs(t.u - exact)) <= 1e-13
    assert np.max(np.abs(t.rho)) == 0.0


def _manufactured_baro(seed, n):
    fs = generate(seed, 2)
    g = make_grid(n)
    u = np.stack([r.evaluate(g) for r in fs.u]) * 0.5
    return SystemState("baro-euler", g, fs.rho.evaluate(g), u, POLY)


def _fd(f, axis, h):
    # fourth-order centered difference
    return (-np.roll(f, -2, axis) + 8 * np.roll(f, -1, axis) - 8 * np.roll(f, 1, axis) + np.roll(f, 2, axis)) / (12 * h)


def _fd_baro_rhs(s):
    h = s.grid.dx
    rho, u = s.rho, s.u
    P = s.eos.pressure(rho)
    du = np.stack([-sum(u[j] * _fd(u[i], j, h) for j in range(3)) - _fd(P, i, h) / rho for i in range(3)])
    drho = -sum(_fd(rho * u[j], j, h) for j in range(3))
    return drho, du


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_baro_rhs_against_refined_grid(seed):
    coarse, fine = _manufactured_baro(seed, 32), _manufactured_baro(seed, 64)
    tc, tf = rhs_baro(coarse), rhs_baro(fine)
    assert relmax(tc.u, tf.u[:, ::2, ::2, ::2]) <= 1e-8
    assert relmax(tc.rho, tf.rho[::2, ::2, ::2]) <= 1e-8


@pytest.mark.parametrize("seed", [0, 1])
def test_baro_rhs_against_finite_differences(seed):
    # convective-form finite differences converge to the spectral rhs at fourth order
    errs = []
    for n in (64, 128):
        s = _manufactured_baro(seed, n)
        t = rhs_baro(s)
        drho, du = _fd_baro_rhs(s)
        errs.append(max(relmax(du, t.u), relmax(drho, t.rho)))
    assert errs[0] <= 1e-2
    assert errs[0] / errs[1] >= 12


# variable-density incompressible ------------------------------------------------


def test_pressure_constant_density_limit(g32):
    u = taylor_green(g32)
    rho = const(g32, 1)
    P, its, res = solve_pressure_ii(g32, rho, u, return_info=True)
    src = pressure_source_ii(g32, u)
    assert np.max(np.abs(P - g32.inv_laplacian(src))) <= 1e-13
    assert res <= 1e-12 * np.max(np.abs(src))


def test_pressure_at_rest_is_zero(g32):
    P = solve_pressure_ii(g32, const(g32, 1), np.zeros((3,) + g32.shape))
    assert np.all(P == 0)


def test_pressure_stratified_abc_converges(g32):
    s = initial_state("ii-euler", g32, GAS, "abc", eps=0.3, axis="z")
    src = pressure_source_ii(g32, s.u)
    P, its, res = solve_pressure_ii(g32, s.rho, s.u, return_info=True)
    assert res <= 1e-10 * np.max(np.abs(src))
    assert 1 <= its <= 500
    flux = g32.div(g32.dealias(g32.grad(P) / s.rho))
    assert np.max(np.abs(flux - src)) <= 1e-10 * np.max(np.abs(src))
    assert abs(np.mean(P)) <= 1e-14


def test_pressure_nonconvergence_is_a_fault(g32):
    s = initial_state("ii-euler", g32, GAS, "abc", eps=0.3, axis="z")
    with pytest.raises(PressureSolveError) as ei:
        solve_pressure_ii(g32, s.rho, s.u, max_iter=2)
    assert ei.value.residual > 0


def test_ii_constant_density_is_projected_euler(g32):
    u = leray_project(g32, band_limited(g32, np.random.default_rng(1), kmax=4, vector=True))
    s = SystemState("ii-euler", g32, const(g32, 1), u, GAS)
    t = rhs_ii(s)
    conv = np.stack([g32.dealias(sum(u[j] * g32.partial(u[i], j) for j in range(3))) for i in range(3)])
    ref = -leray_project(g32, conv)
    assert relmax(t.u, ref) <= 1e-10


def test_ii_at_rest_has_zero_tendency(g32):
    s = initial_state("ii-euler", g32, GAS, "uniform", eps=0.0)
    s = s.replace(rho=1 + 0.3 * np.sin(g32.mesh()[2]))
    t = rhs_ii(s)
    assert np.all(t.u == 0) and np.all(t.rho == 0) and np.all(t.pressure == 0)


def test_ii_refined_grid_agreement():
    states = [initial_state("ii-euler", make_grid(n), GAS, "abc", eps=0.3, axis="z") for n in (32, 64)]
    tc, tf = (rhs_ii(s) for s in states)
    assert relmax(tc.u, tf.u[:, ::2, ::2, ::2]) <= 1e-6
    assert relmax(tc.rho, tf.rho[::2, ::2, ::2]) <= 1e-6


def test_ii_tendency_is_solenoidal(g32):
    s = initial_state("ii-euler", g32, GAS, "abc", eps=0.3, axis="z", tg=0.5)
    t = rhs_ii(s)
    assert np.max(np.abs(g32.div(t.u))) <= 1e-8 * np.max(np.abs([g32.grad(c) for c in t.u]))


def test_baro_and_ii_agree_when_advection_is_solenoidal(g32):
    # u.grad u = (0, 0, sin y cos x) is itself divergence-free here
    x, y, z = g32.mesh()
    u = np.stack([np.sin(y), 0 * x, np.sin(x)])
    tb = rhs_baro(SystemState("baro-euler", g32, const(g32, 1), u, POLY))
    ti = rhs_ii(SystemState("ii-euler", g32, const(g32, 1), u, GAS))
    assert np.max(np.abs(tb.u)) > 0.5
    assert np.max(np.abs(tb.u - ti.u)) <= 1e-10


# compressible and mhd -------------------------------------------------------------


def test_comp_at_rest(g32):
    x = g32.mesh()[0]
    rho, e = 1 + 0.2 * np.sin(x), 1 + 0.1 * np.cos(x)
    s = SystemState("comp-euler", g32, rho, np.zeros((3,) + g32.shape), GAS, e=e)
    t = rhs_comp(s)
    assert np.all(t.rho == 0) and np.all(t.e == 0)
    ref = -g32.dealias(g32.grad(0.4 * rho * e) / rho)
    assert np.max(np.abs(t.u - ref)) <= 1e-14


def test_comp_uniform_state_is_steady(g32):
    s = initial_state("comp-euler", g32, GAS, "uniform", rho0=1.3, e0=2.0, ux=0.4, uy=-0.2, uz=0.1)
    t = rhs_comp(s)
    for f in (t.rho, t.u, t.e):
        assert np.max(np.abs(f)) <= 1e-13


def test_acoustic_wave_speed():
    g = make_grid(16)
    s = initial_state("comp-euler", g, GAS, "acoustic", eps=1e-4)
    c = 1.0  # p0 = rho0 / gamma
    T = 1.0
    phase0 = np.angle(g.fft(s.rho)[1, 0, 0])
    steps = 20
    for _ in range(steps):
        s = rk4_step(s, T / steps)
    phase1 = np.angle(g.fft(s.rho)[1, 0, 0])
    speed = -(np.angle(np.exp(1j * (phase1 - phase0)))) / T
    assert speed == pytest.approx(c, rel=1e-2)


def _mhd_state(g, eps=0.3):
    return initial_state("mhd", g, Eos("ideal-gas", 5 / 3), "orszag-tang", eps=eps)


def test_mhd_without_field_is_comp(g32):
    s = initial_state("comp-euler", g32, GAS, "abc", eps=0.3, tg=0.5, e0=2.0)
    tc = rhs_comp(s)
    tm = rhs_mhd(s.replace(tag="mhd", B=np.zeros_like(s.u)))
    for a, b in [(tc.rho, tm.rho), (tc.u, tm.u), (tc.e, tm.e)]:
        np.testing.assert_array_equal(a, b)
    assert np.all(tm.B == 0)


def test_mhd_at_rest(g32):
    s = _mhd_state(g32)
    s = s.replace(u=np.zeros_like(s.u))
    t = rhs_mhd(s)
    assert np.max(np.abs(t.B)) <= 1e-14
    P = s.eos.pressure(s.rho, s.e)
    ref = g32.dealias(np.cross(g32.curl(s.B), s.B, axis=0) / s.rho) - g32.dealias(g32.grad(P) / s.rho)
    assert np.max(np.abs(t.u - ref)) <= 1e-13


def test_mhd_refined_grid_agreement():
    tc, tf = (rhs_mhd(_mhd_state(make_grid(n), eps=0.1)) for n in (32, 64))
    for a, b in [(tc.u, tf.u), (tc.B, tf.B), (tc.rho, tf.rho), (tc.e, tf.e)]:
        # the density tendency vanishes for this field (u.grad rho = 0, div u = 0)
        scale = max(np.max(np.abs(b)), np.max(np.abs(tf.u)))
        assert np.max(np.abs(a - b[..., ::2, ::2, ::2])) <= 1e-6 * scale


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=10)
def test_induction_keeps_field_solenoidal(seed):
    g = make_grid(16)
    rng = np.random.default_rng(seed)
    u = band_limited(g, rng, kmax=3, vector=True)
    B = leray_project(g, band_limited(g, rng, kmax=3, vector=True))
    rho = 1 + band_limited(g, rng, kmax=2, amp=0.3)
    s = SystemState("mhd", g, rho, u, GAS, e=const(g, 1.0), B=B)
    dB = rhs_mhd(s).B
    assert np.max(np.abs(g.div(dB))) <= 1e-12 * np.max(np.abs([g.grad(c) for c in dB]))


@given(st.integers(0, 2**31 - 1), st.sampled_from(["baro-euler", "comp-euler", "mhd"]))
@settings(max_examples=12)
def test_mass_tendency_integrates_to_zero(seed, tag):
    g = make_grid(16)
    rng = np.random.default_rng(seed)
    u = band_limited(g, rng, kmax=3, vector=True)
    rho = 1 + band_limited(g, rng, kmax=3, amp=0.4)
    kw = {}
    if tag != "baro-euler":
        kw["e"] = 1 + band_limited(g, rng, kmax=2, amp=0.2)
    if tag == "mhd":
        kw["B"] = leray_project(g, band_limited(g, rng, kmax=2, vector=True))
    s = SystemState(tag, g, rho, u, POLY if tag == "baro-euler" else GAS, **kw)
    drho = rhs(s).rho
    assert abs(g.integrate(drho)) <= 1e-12 * np.max(np.abs(rho * u)) * g.L**2


@pytest.mark.parametrize("tag", ["baro-euler", "ii-euler", "comp-euler", "mhd"])
def test_rhs_ignores_time(tag, g32):
    from helibudget.initial import canonical_state

    s = canonical_state(tag, make_grid(16))
    a, b = rhs(s), rhs(s.replace(t=7.25))
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.rho, b.rho)


# time stepping -----------------------------------------------------------------------


def test_rk4_fixed_point():
    g = make_grid(16)
    s = initial_state("comp-euler", g, GAS, "uniform", rho0=1.0, e0=1.0)
    s1 = rk4_step(s, 0.1)
    np.testing.assert_array_equal(s1.rho, s.rho)
    np.testing.assert_array_equal(s1.u, s.u)
    np.testing.assert_array_equal(s1.e, s.e)
    assert s1.t == pytest.approx(0.1)


def test_rk4_linear_ode():
    g = make_grid(8)
    lam = -1.3
    s = SystemState("baro-euler", g, const(g, 1), np.zeros((3,) + g.shape), POLY)
    f = lambda st_: Tendency(rho=lam * st_.rho, u=lam * st_.u)  # noqa: E731
    errs = []
    for dt in (0.2, 0.1):
        out = rk4_step(s, dt, f)
        errs.append(np.max(np.abs(out.rho - np.exp(lam * dt))))
    # local error of RK4 is (lam dt)^5 / 120 at leading order
    assert errs[0] == pytest.approx(abs(lam * 0.2) ** 5 / 120, rel=0.2)
    assert errs[0] / errs[1] == pytest.approx(32, rel=0.1)


def test_rk4_global_order_on_baro():
    g = make_grid(16)
    s0 = initial_state("baro-euler", g, POLY, "abc", eps=0.2, axis="x")
    T = 0.2

    def integrate(nsteps):
        s = s0
        for _ in range(nsteps):
            s = rk4_step(s, T / nsteps)
        return s

    ref = integrate(64)
    e1 = np.max(np.abs(integrate(8).u - ref.u))
    e2 = np.max(np.abs(integrate(16).u - ref.u))
    assert e1 / e2 == pytest.approx(16, rel=0.2)


def test_rk4_floor_violation_reports_stage():
    g = make_grid(8)
    s = SystemState("baro-euler", g, const(g, 1), np.zeros((3,) + g.shape), POLY, rho_floor=0.5)
    f = lambda st_: Tendency(rho=-np.ones(g.shape), u=np.zeros((3,) + g.shape))  # noqa: E731
    with pytest.raises(DensityFloorError) as ei:
        rk4_step(s, 1.0, lambda st_: (rhs_baro(st_), f(st_))[1])
    assert ei.value.stage is not None


def test_rk4_rejects_nonpositive_dt():
    g = make_grid(8)
    s = SystemState("baro-euler", g, const(g, 1), np.zeros((3,) + g.shape), POLY)
    with pytest.raises(ValueError):
        rk4_step(s, 0.0)


def test_cfl_polytropic_at_rest():
    g = make_grid(16)
    s = SystemState("baro-euler", g, const(g, 1), np.zeros((3,) + g.shape), POLY)
    assert cfl_dt(s, 0.25) == pytest.approx(0.25 * g.dx / np.sqrt(2), rel=1e-14)


def test_cfl_incompressible_unit_speed():
    g = make_grid(16)
    s = initial_state("ii-euler", g, GAS, "uniform", ux=1.0)
    assert cfl_dt(s, 0.25) == pytest.approx(0.25 * g.dx, rel=1e-14)


def test_cfl_mhd_sound_plus_alfven():
    g = make_grid(16)
    gam = 1.4
    s = SystemState("mhd", g, const(g, 1), np.zeros((3,) + g.shape), GAS,
                    e=const(g, 1 / (gam * (gam - 1))), B=np.stack([const(g, 1), const(g, 0), const(g, 0)]))
    assert cfl_dt(s, 0.25) == pytest.approx(0.25 * g.dx / 2, rel=1e-14)


def test_cfl_zero_speed_uses_dt_max():
    g = make_grid(8)
    s = initial_state("ii-euler", g, GAS, "uniform")
    assert cfl_dt(s, 0.25, dt_max=0.125) == 0.125


@pytest.mark.parametrize("cfl", [0.0, -0.1, 1.5])
def test_cfl_range(cfl):
    g = make_grid(8)
    s = initial_state("ii-euler", g, GAS, "uniform", ux=1.0)
    with pytest.raises(ValueError):
        cfl_dt(s, cfl)
