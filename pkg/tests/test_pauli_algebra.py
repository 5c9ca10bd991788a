import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpsim.errors import GaugeError
from mpsim.pauli_algebra import (
    SIGMA,
    check_coulomb_gauge,
    laplacian_apply,
    pauli_current,
    pauli_current_decomposed,
    pauli_first_order,
    pauli_op_apply,
    pauli_op_twice,
    spin_density,
    sigma_dot,
)
from mpsim.spectral import Grid, dealias, inner, norm_l2

from conftest import random_divfree_field, random_spinor
from test_spectral import plane_wave

EPS_LC = np.zeros((3, 3, 3))
for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
    EPS_LC[i, j, k] = 1.0
    EPS_LC[i, k, j] = -1.0


class TestPauliMatrices:
    def test_hermitian(self):
        for s in SIGMA:
            assert np.array_equal(s, s.conj().T)

    def test_anticommutation_exact(self):
        for j in range(3):
            for k in range(3):
                anti = SIGMA[j] @ SIGMA[k] + SIGMA[k] @ SIGMA[j]
                assert np.array_equal(anti, 2.0 * (j == k) * np.eye(2))

    def test_commutation_exact(self):
        for j in range(3):
            for k in range(3):
                comm = SIGMA[j] @ SIGMA[k] - SIGMA[k] @ SIGMA[j]
                expected = 2j * sum(EPS_LC[j, k, l] * SIGMA[l] for l in range(3))
                assert np.array_equal(comm, expected)

    def test_product_identity_exact(self):
        for j in range(3):
            for k in range(3):
                prod = SIGMA[j] @ SIGMA[k]
                expected = (j == k) * np.eye(2) + 1j * sum(
                    EPS_LC[j, k, l] * SIGMA[l] for l in range(3)
                )
                assert np.array_equal(prod, expected)

    def test_sigma_dot_matches_matrix_form(self):
        g = np.random.default_rng(0)
        v = g.standard_normal(3)
        chi = g.standard_normal(2) + 1j * g.standard_normal(2)
        direct = sigma_dot(v, chi.reshape(2, 1, 1, 1))[:, 0, 0, 0]
        matrix = sum(v[j] * SIGMA[j] for j in range(3)) @ chi
        assert np.abs(direct - matrix).max() < 1e-14


class TestSpinDensity:
    def test_sigma3_eigenstate(self, grid16):
        psi = np.zeros((2,) + grid16.shape, dtype=complex)
        psi[0] = 1.0
        s = spin_density(psi)
        assert np.allclose(s[2], 1.0) and np.allclose(s[0], 0.0) and np.allclose(s[1], 0.0)

    def test_sigma1_eigenstate(self, grid16):
        psi = np.full((2,) + grid16.shape, 1.0 / np.sqrt(2.0), dtype=complex)
        s = spin_density(psi)
        assert np.allclose(s[0], 1.0, atol=1e-15)
        assert np.allclose(s[1], 0.0, atol=1e-15)
        assert np.allclose(s[2], 0.0, atol=1e-15)

    def test_magnitude_equals_density_pointwise(self, grid16):
        psi = random_spinor(grid16, seed=30, smooth=False)
        s = spin_density(psi)
        mag = np.sqrt((s**2).sum(axis=0))
        density = (np.abs(psi) ** 2).sum(axis=0)
        assert np.abs(mag - density).max() < 1e-12 * density.max()


class TestPauliOperator:
    def test_free_plane_wave_eigenfunction(self, grid16):
        f, k0 = plane_wave(grid16, (2, -1, 3))
        chi = np.array([0.6, 0.8j])
        psi = chi[:, None, None, None] * f
        out = pauli_op_apply(psi, None, grid16)
        assert np.abs(out - (k0 @ k0) * psi).max() < 1e-11

    def test_expansion_vs_double_application(self, grid16):
        psi = random_spinor(grid16, seed=31)
        a = random_divfree_field(grid16, seed=32)
        one = pauli_op_apply(psi, a, grid16)
        two = pauli_op_twice(psi, a, grid16)
        scale = np.abs(one).max()
        assert np.abs(one - two).max() < 1e-8 * scale

    def test_quadratic_form_real_nonnegative_and_consistent(self, grid16):
        psi = dealias(random_spinor(grid16, seed=33), grid16)
        a = random_divfree_field(grid16, seed=34)
        q = inner(psi, pauli_op_twice(psi, a, grid16), grid16)
        t_direct = norm_l2(pauli_first_order(psi, a, grid16), grid16) ** 2
        assert abs(q.imag) < 1e-10 * abs(q.real)
        assert q.real >= 0.0
        assert q.real == pytest.approx(t_direct, rel=1e-12)
        # expanded form agrees within the dealiasing tolerance on smooth fields
        q_exp = inner(psi, pauli_op_apply(psi, a, grid16), grid16)
        assert q_exp.real == pytest.approx(t_direct, rel=1e-10)
        assert abs(q_exp.imag) < 1e-10 * max(abs(q_exp.real), 1.0)

    def test_linearity_in_psi(self, grid16):
        psi1 = random_spinor(grid16, seed=35)
        psi2 = random_spinor(grid16, seed=36)
        a = random_divfree_field(grid16, seed=37)
        lhs = pauli_op_apply(psi1 + 2.5j * psi2, a, grid16)
        rhs = pauli_op_apply(psi1, a, grid16) + 2.5j * pauli_op_apply(psi2, a, grid16)
        assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(lhs).max()

    def test_gauge_violation_raises(self, grid16):
        psi = random_spinor(grid16, seed=38)
        bad = np.zeros((3,) + grid16.shape)
        X, _, _ = grid16.axes()
        bad[0] = np.sin(2.0 * np.pi * X / grid16.length)  # pure gradient content
        with pytest.raises(GaugeError):
            pauli_op_apply(psi, bad, grid16)

    def test_gauge_check_accepts_projected_field(self, grid16):
        a = random_divfree_field(grid16, seed=39)
        check_coulomb_gauge(a, grid16)

    @given(seed=st.integers(0, 50))
    @settings(max_examples=15, deadline=None)
    def test_self_adjointness_property(self, seed):
        grid = Grid(8, 4.0)
        psi = dealias(random_spinor(grid, seed=seed), grid)
        phi = dealias(random_spinor(grid, seed=seed + 1000), grid)
        a = random_divfree_field(grid, seed=seed + 2000)
        lhs = inner(phi, pauli_op_twice(psi, a, grid), grid)
        rhs = inner(pauli_op_twice(phi, a, grid), psi, grid)
        assert abs(lhs - rhs) < 1e-9 * max(abs(lhs), 1.0)


class TestPauliCurrent:
    def test_plane_wave_constant_current(self, grid16):
        f, k0 = plane_wave(grid16, (1, 2, 0))
        chi = np.array([0.6, 0.8])
        psi = chi[:, None, None, None] * f
        alpha = 1.0 / 137.0
        j = pauli_current(psi, None, alpha, grid16)
        expected = -2.0 * alpha * (np.abs(chi) ** 2).sum() * k0
        for c in range(3):
            assert np.abs(j[c] - expected[c]).max() < 1e-10

    def test_real_spinor_gives_pure_spin_current(self, grid16):
        psi = random_spinor(grid16, seed=40).real.astype(complex)
        alpha = 0.5
        j = pauli_current(psi, None, alpha, grid16)
        from mpsim.spectral import curl

        expected = -alpha * curl(dealias(spin_density(psi), grid16), grid16)
        assert np.abs(j - expected).max() < 1e-8 * max(np.abs(expected).max(), 1.0)

    def test_decomposition_two_paths_agree(self, grid16):
        psi = random_spinor(grid16, seed=41)
        a = random_divfree_field(grid16, seed=42)
        alpha = 1.0 / 137.0
        j1 = pauli_current(psi, a, alpha, grid16)
        j2 = pauli_current_decomposed(psi, a, alpha, grid16)
        assert np.abs(j1 - j2).max() < 1e-8 * np.abs(j1).max()

    def test_current_is_real(self, grid16):
        psi = random_spinor(grid16, seed=43)
        a = random_divfree_field(grid16, seed=44)
        j = pauli_current(psi, a, 1.0, grid16)
        assert np.isrealobj(j)


class TestLaplacian:
    def test_matches_momentum_squared(self, grid16):
        psi = dealias(random_spinor(grid16, seed=45), grid16)
        lap = laplacian_apply(psi, grid16)
        q = inner(psi, lap, grid16)
        t = norm_l2(pauli_first_order(psi, None, grid16), grid16) ** 2
        assert q.real == pytest.approx(t, rel=1e-12)
