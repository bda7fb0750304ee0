import numpy as np
import pytest
from hypothesis import given, strategies as st

from helibudget.initial import abc_flow
from helibudget.spectral import (
    Grid,
    curl,
    dealias,
    divergence,
    gradient,
    inverse_laplacian_zero_mean,
    make_grid,
    volume_integral,
)

from conftest import band_limited

seeds = st.integers(0, 2**31 - 1)


def test_wavenumbers_default_box():
    np.testing.assert_array_equal(make_grid(8).wavenumbers, [0, 1, 2, 3, -4, -3, -2, -1])


def test_wavenumbers_scale_with_box():
    np.testing.assert_allclose(make_grid(8, np.pi).wavenumbers, [0, 2, 4, 6, -8, -6, -4, -2])


@pytest.mark.parametrize("n,L", [(7, 2 * np.pi), (6, 2 * np.pi), (9, 1.0), (32, 0.0), (32, -1.0)])
def test_bad_grid_rejected(n, L):
    with pytest.raises(ValueError):
        make_grid(n, L)


def test_dx_times_n_is_box():
    g = make_grid(24, 3.7)
    assert g.dx * g.n == pytest.approx(3.7, rel=0, abs=1e-15)


def test_gradient_of_sine(g32):
    x, y, z = g32.mesh()
    gr = gradient(g32, np.sin(x))
    assert np.max(np.abs(gr[0] - np.cos(x))) <= 1e-12
    assert np.max(np.abs(gr[1:])) <= 1e-12


def test_gradient_of_constant(g32):
    assert np.max(np.abs(gradient(g32, np.full(g32.shape, 3.5)))) == 0.0


def test_gradient_mixed_mode(g32):
    x, y, z = g32.mesh()
    s = np.sin(3 * x) * np.cos(2 * y)
    exact = np.stack([3 * np.cos(3 * x) * np.cos(2 * y), -2 * np.sin(3 * x) * np.sin(2 * y), 0 * x])
    assert np.max(np.abs(gradient(g32, s) - exact)) <= 1e-12


def test_gradient_rejects_nonfinite(g32):
    s = np.zeros(g32.shape)
    s[1, 2, 3] = np.nan
    with pytest.raises(ValueError):
        gradient(g32, s)


def test_divergence_of_sines(g32):
    x, y, z = g32.mesh()
    d = divergence(g32, np.stack([np.sin(x), np.sin(y), np.sin(z)]))
    assert np.max(np.abs(d - np.cos(x) - np.cos(y) - np.cos(z))) <= 1e-12


def test_abc_is_solenoidal_and_beltrami(g32):
    u = abc_flow(g32)
    assert np.max(np.abs(divergence(g32, u))) <= 1e-12
    assert np.max(np.abs(curl(g32, u) - u)) <= 1e-12


def test_curl_against_finite_differences(g64):
    # (0, 0, sin x): d_x of the z component gives -cos x in the y slot
    x, y, z = g64.mesh()
    v = np.stack([0 * x, 0 * x, np.sin(x)])
    c = curl(g64, v)
    vz = v[2]
    h = g64.dx
    fd = -(np.roll(vz, -1, axis=0) - np.roll(vz, 1, axis=0)) / (2 * h)
    assert np.max(np.abs(c[1] - fd)) <= h**2
    assert np.max(np.abs(c[1] + np.cos(x))) <= 1e-12
    assert np.max(np.abs(c[0])) <= 1e-12 and np.max(np.abs(c[2])) <= 1e-12


def test_volume_integrals(g32):
    x, y, z = g32.mesh()
    assert volume_integral(g32, np.ones(g32.shape)) == pytest.approx((2 * np.pi) ** 3, rel=1e-14)
    assert abs(volume_integral(g32, np.sin(x))) <= 1e-12
    u = abc_flow(g32)
    assert volume_integral(g32, np.sum(u * u, axis=0)) == pytest.approx(3 * (2 * np.pi) ** 3, rel=1e-13)


def test_dealias_cutoff():
    g = make_grid(32)
    x, y, z = g.mesh()
    for m, kept in [(12, False), (10, True)]:
        fh = g.fft(np.cos(m * x))
        out = g.ifft(dealias(g, fh))
        assert (np.max(np.abs(out)) > 0.5) == kept


def test_dealias_white_noise_keeps_retained_shell(g32):
    rng = np.random.default_rng(3)
    fh = g32.fft(rng.normal(size=g32.shape))
    out = dealias(g32, fh)
    mask = g32.dealias_mask
    np.testing.assert_array_equal(out[mask], fh[mask])
    assert np.all(out[~mask] == 0)


def test_inverse_laplacian_examples(g32):
    x, y, z = g32.mesh()
    assert np.max(np.abs(inverse_laplacian_zero_mean(g32, -np.sin(x)) - np.sin(x))) <= 1e-13
    assert np.max(np.abs(inverse_laplacian_zero_mean(g32, np.zeros(g32.shape)))) == 0.0
    f = np.sin(3 * x) * np.cos(2 * y)
    assert np.max(np.abs(inverse_laplacian_zero_mean(g32, -13 * f) - f)) <= 1e-13


def test_inverse_laplacian_rejects_mean(g32):
    x, y, z = g32.mesh()
    with pytest.raises(ValueError):
        inverse_laplacian_zero_mean(g32, 1.0 + np.sin(x))


@given(seeds)
def test_div_curl_and_curl_grad_vanish(seed):
    g = make_grid(16)
    rng = np.random.default_rng(seed)
    v = band_limited(g, rng, kmax=4, vector=True)
    s = band_limited(g, rng, kmax=4)
    assert np.max(np.abs(divergence(g, curl(g, v)))) <= 1e-12
    assert np.max(np.abs(curl(g, gradient(g, s)))) <= 1e-12


@given(seeds)
def test_divergence_integrates_to_zero(seed):
    g = make_grid(16)
    v = np.random.default_rng(seed).normal(size=(3,) + g.shape)
    assert abs(volume_integral(g, divergence(g, v))) <= 1e-12 * np.max(np.abs(v)) * g.L**3


@given(seeds)
def test_parseval(seed):
    g = make_grid(16)
    f = np.random.default_rng(seed).normal(size=g.shape)
    phys = volume_integral(g, f * f)
    assert g.spectral_energy(g.fft(f)) == pytest.approx(phys, rel=1e-12)


@given(seeds)
def test_transform_round_trip(seed):
    g = make_grid(16)
    f = np.random.default_rng(seed).normal(size=g.shape)
    assert np.max(np.abs(g.ifft(g.fft(f)) - f)) <= 1e-13 * np.max(np.abs(f))


@given(seeds, st.sampled_from([8, 16]))
def test_operators_do_not_mutate_and_are_real(seed, n):
    g = Grid(n)
    v = np.random.default_rng(seed).normal(size=(3,) + g.shape)
    before = v.copy()
    for out in (curl(g, v), divergence(g, v), gradient(g, v[0])):
        assert out.dtype == np.float64
    np.testing.assert_array_equal(v, before)
