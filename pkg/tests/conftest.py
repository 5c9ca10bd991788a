import numpy as np
import pytest

from mpsim.spectral import Grid, dealias, leray_project


@pytest.fixture(scope="session")
def grid16():
    return Grid(16, 2.0 * np.pi)


@pytest.fixture(scope="session")
def grid24():
    return Grid(24, 10.0)


def rng(seed: int = 0) -> np.random.Generator:
    return np.random.default_rng(seed)


def random_spinor(grid: Grid, seed: int = 0, smooth: bool = True) -> np.ndarray:
    """Random complex spinor; smooth=True band-limits it below the 2/3 cut.

    The operator-identity tolerances describe the resolved regime, so the
    property tests draw band-limited fields (tails beyond the dealias cut
    would be dominated by the truncation itself, not by the identity).
    """
    g = rng(seed)
    psi = g.standard_normal((2,) + grid.shape) + 1j * g.standard_normal((2,) + grid.shape)
    if smooth:
        psi = _lowpass(psi, grid)
    return psi


def random_divfree_field(grid: Grid, seed: int = 1, smooth: bool = True) -> np.ndarray:
    g = rng(seed)
    v = g.standard_normal((3,) + grid.shape)
    if smooth:
        v = _lowpass(v, grid)
    return leray_project(v, grid)


def random_vector_field(grid: Grid, seed: int = 2, smooth: bool = True) -> np.ndarray:
    g = rng(seed)
    v = g.standard_normal((3,) + grid.shape)
    return _lowpass(v, grid) if smooth else v


def _lowpass(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Band-limit to half the dealias cut (|m_i| < n/6), with Gaussian rolloff.

    At half the cut, every quadratic product stays below the cut and every
    triple product stays below Nyquist, so the operator identities hold to
    roundoff instead of being dominated by dealiasing placement.
    """
    from mpsim.spectral import apply_multiplier

    n = grid.n
    m = np.fft.fftfreq(n, d=1.0 / n)
    keep1 = np.abs(m) < n / 6.0
    mask = (
        keep1.reshape(n, 1, 1) & keep1.reshape(1, n, 1) & keep1.reshape(1, 1, n)
    ).astype(float)
    kc = np.pi / grid.spacing / 3.0
    filt = np.exp(-(grid.k2 / kc**2)) * mask
    return apply_multiplier(f, filt, grid)
