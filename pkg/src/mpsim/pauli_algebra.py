"""Spinor-space algebra on the grid: Pauli matrices, the magnetic kinetic
operator, probability currents, and spin densities.

A spinor field is a complex array of shape (2, n, n, n); a vector field is
real of shape (3, n, n, n). The momentum operator p = -i grad acts
spectrally, so every operator here is assembled from FFTs plus pointwise
spinor algebra, with 2/3-rule dealiasing after real-space products.

The magnetic kinetic operator is applied in its expanded form

    [sigma.(p+A)]^2 = (p+A)^2 + sigma.(curl A)
                    = -Delta + 2 A.p + |A|^2 + sigma.B,

valid in Coulomb gauge (div A = 0, which kills the p.A commutator term);
`pauli_op_twice` provides the independent two-application evaluation path
used by the operator-identity tests.
"""

from __future__ import annotations

import numpy as np

from .errors import GaugeError
from .spectral import (
    Grid,
    curl,
    dealias,
    divergence,
    fft_forward,
    fft_inverse,
)

__all__ = [
    "SIGMA",
    "sigma_dot",
    "spin_density",
    "momentum_apply",
    "laplacian_apply",
    "magnetic_terms",
    "pauli_first_order",
    "pauli_op_apply",
    "pauli_op_twice",
    "pauli_current",
    "pauli_current_decomposed",
    "gauge_residual",
    "check_coulomb_gauge",
]

# Standard representation; every algebraic relation the tests assert
# ({s_j, s_k} = 2 delta I, s_j s_k = delta I + i eps s_l) is exact in
# these integer/unit entries.
SIGMA = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)


def sigma_dot(v, psi: np.ndarray) -> np.ndarray:
    """(sigma . v) psi for v a 3-vector field (3, n,n,n) or constant (3,).

    Hardcoded component form; broadcasting handles both field-valued and
    constant v.
    """
    v0, v1, v2 = v[0], v[1], v[2]
    return np.stack(
        [
            v2 * psi[0] + (v0 - 1j * v1) * psi[1],
            (v0 + 1j * v1) * psi[0] - v2 * psi[1],
        ]
    )


def spin_density(psi: np.ndarray) -> np.ndarray:
    """<psi, sigma psi> pointwise; real (3, n, n, n).

    For a pure 2-spinor the magnitude of this vector equals |psi|^2
    pointwise, an exact algebraic identity the tests rely on.
    """
    cross = np.conj(psi[0]) * psi[1]
    return np.stack(
        [
            2.0 * cross.real,
            2.0 * cross.imag,
            (psi[0].real**2 + psi[0].imag**2) - (psi[1].real**2 + psi[1].imag**2),
        ]
    )


def momentum_apply(psi: np.ndarray, grid: Grid, psi_hat: np.ndarray | None = None) -> np.ndarray:
    """p psi = -i grad psi, spectrally; returns shape (3,) + psi.shape."""
    if psi_hat is None:
        psi_hat = fft_forward(psi, grid)
    return np.stack([fft_inverse(kj * psi_hat, grid) for kj in grid.kvec])


def laplacian_apply(psi: np.ndarray, grid: Grid, psi_hat: np.ndarray | None = None) -> np.ndarray:
    """(-Delta) psi = p^2 psi via the |k|^2 multiplier."""
    if psi_hat is None:
        psi_hat = fft_forward(psi, grid)
    return fft_inverse(grid.k2 * psi_hat, grid)


def gauge_residual(a: np.ndarray, grid: Grid) -> float:
    """Max modulus of the spectral divergence of a vector field."""
    return float(np.abs(divergence(a, grid)).max())


def check_coulomb_gauge(a: np.ndarray, grid: Grid, tol: float = 1.0e-8):
    """Raise GaugeError if div a exceeds tol scaled by the field size."""
    scale = 1.0 + float(np.abs(a).max())
    res = gauge_residual(a, grid)
    if res > tol * scale:
        raise GaugeError(
            f"vector potential is not divergence-free: max |div A| = {res:.3e} "
            f"exceeds {tol:.1e} * (1 + max|A|)"
        )


def magnetic_terms(
    psi: np.ndarray,
    a: np.ndarray,
    grid: Grid,
    *,
    psi_hat: np.ndarray | None = None,
    b_field: np.ndarray | None = None,
    a_squared: np.ndarray | None = None,
) -> np.ndarray:
    """The A-dependent part (2 A.p + |A|^2 + sigma.B) psi, dealiased.

    b_field (= curl a) and a_squared may be passed in when the caller holds
    them fixed across several applications (the stepper does).
    """
    if psi_hat is None:
        psi_hat = fft_forward(psi, grid)
    if b_field is None:
        b_field = curl(a, grid)
    if a_squared is None:
        a_squared = (a * a).sum(axis=0)
    p_psi = momentum_apply(psi, grid, psi_hat)
    a_dot_p = a[0] * p_psi[0] + a[1] * p_psi[1] + a[2] * p_psi[2]
    out = 2.0 * a_dot_p + a_squared * psi + sigma_dot(b_field, psi)
    return dealias(out, grid)


def _sigma_contract(w: np.ndarray) -> np.ndarray:
    """sum_j sigma_j w_j for a spinor-valued 3-vector w of shape (3, 2, ...)."""
    return np.stack(
        [
            w[0, 1] - 1j * w[1, 1] + w[2, 0],
            w[0, 0] + 1j * w[1, 0] - w[2, 1],
        ]
    )


def pauli_first_order(
    psi: np.ndarray,
    a: np.ndarray | None,
    grid: Grid,
    *,
    psi_hat: np.ndarray | None = None,
) -> np.ndarray:
    """sigma.(p + A) psi, dealiased; the square root of the kinetic form.

    ||pauli_first_order(psi, A)||_2^2 is the gauge-covariant kinetic energy
    and matches <psi, pauli_op_twice(psi, A)> to roundoff on dealiased psi.
    """
    if psi_hat is None:
        psi_hat = fft_forward(psi, grid)
    w = momentum_apply(psi, grid, psi_hat)
    if a is not None:
        w = w + a[:, np.newaxis] * psi[np.newaxis]
    return dealias(_sigma_contract(w), grid)


def pauli_op_apply(
    psi: np.ndarray,
    a: np.ndarray | None,
    grid: Grid,
    *,
    check_gauge: bool = True,
    psi_hat: np.ndarray | None = None,
    b_field: np.ndarray | None = None,
    a_squared: np.ndarray | None = None,
) -> np.ndarray:
    """[sigma.(p+A)]^2 psi in expanded form; a = None means the free case."""
    if psi_hat is None:
        psi_hat = fft_forward(psi, grid)
    lap = laplacian_apply(psi, grid, psi_hat)
    if a is None:
        return lap
    if check_gauge:
        check_coulomb_gauge(a, grid)
    return lap + magnetic_terms(
        psi, a, grid, psi_hat=psi_hat, b_field=b_field, a_squared=a_squared
    )


def pauli_op_twice(psi: np.ndarray, a: np.ndarray | None, grid: Grid) -> np.ndarray:
    """Apply sigma.(p+A) twice; independent evaluation path for tests."""
    return pauli_first_order(pauli_first_order(psi, a, grid), a, grid)


def pauli_current(
    psi: np.ndarray,
    a: np.ndarray | None,
    alpha: float,
    grid: Grid,
    *,
    check_gauge: bool = True,
) -> np.ndarray:
    """Probability current J = -2 alpha Re <sigma psi, sigma.(p+A) psi>.

    Real 3-vector field, dealiased. This is the direct evaluation; the
    spin-decomposed path is `pauli_current_decomposed`.
    """
    if a is not None and check_gauge:
        check_coulomb_gauge(a, grid)
    x_psi = pauli_first_order(psi, a, grid)
    c0 = np.conj(psi[0])
    c1 = np.conj(psi[1])
    # Re <sigma_j psi, X psi> written out per component of sigma_j psi.
    j_field = -2.0 * alpha * np.stack(
        [
            (c1 * x_psi[0] + c0 * x_psi[1]).real,
            (1j * (c1 * x_psi[0] - c0 * x_psi[1])).real,
            (c0 * x_psi[0] - c1 * x_psi[1]).real,
        ]
    )
    return dealias(j_field, grid)


def pauli_current_decomposed(
    psi: np.ndarray,
    a: np.ndarray | None,
    alpha: float,
    grid: Grid,
) -> np.ndarray:
    """J as convective part plus spin part:

        J = -2 alpha Re <psi, (p+A) psi> - alpha curl <psi, sigma psi>.
    """
    p_psi = momentum_apply(psi, grid)
    conv = np.stack(
        [
            (np.conj(psi[0]) * p_psi[j, 0] + np.conj(psi[1]) * p_psi[j, 1]).real
            for j in range(3)
        ]
    )
    if a is not None:
        density = (psi.real**2 + psi.imag**2).sum(axis=0)
        conv = conv + a * density
    spin = curl(dealias(spin_density(psi), grid), grid)
    return dealias(-2.0 * alpha * conv, grid) - alpha * spin
