import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from helibudget.spectral import make_grid

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def band_limited(grid, rng, kmax=3, amp=1.0, vector=False):
    """Random real field with Fourier modes |k_j| <= kmax only."""
    shape = ((3,) if vector else ()) + grid.shape
    fh = np.zeros(shape[:-1] + (grid.n // 2 + 1,), dtype=complex)
    m = np.fft.fftfreq(grid.n, 1.0 / grid.n)
    sel = np.abs(m) <= kmax
    ix = np.where(sel)[0]
    for i in ix:
        for j in ix:
            for k in range(kmax + 1):
                c = rng.normal(size=fh.shape[:-3] + (2,))
                fh[..., i, j, k] = c[..., 0] + 1j * c[..., 1]
    f = grid.ifft(fh)
    return amp * f / np.max(np.abs(f))


@pytest.fixture(scope="session")
def g32():
    return make_grid(32)


@pytest.fixture(scope="session")
def g64():
    return make_grid(64)
