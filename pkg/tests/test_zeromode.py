"""Zero-mode closed forms: residual certificates, gauge fixing, quadratures,
and the grid-based potential recovery with its documented resolution limits.

Derivative oracles use complex-step differentiation (the closed forms accept
complex points), which is exact to roundoff and therefore sharp enough for
the 1e-12-level gauge-invariance checks that finite differences cannot reach.
"""

import time

import numpy as np
import pytest

from mpsim.errors import ConfigurationError, NonconvergenceError
from mpsim.pauli_algebra import SIGMA, gauge_residual, pauli_first_order
from mpsim.spectral import Grid, norm_l2
from mpsim.zeromode import (
    ZeroModeSpec,
    certificate,
    dirac_residual,
    div_a_closed,
    gauge_fix,
    loss_yau_eval,
    pair_energy,
    radial_taper,
    sobol_ball_samples,
    zc_lower_bound,
    zc_ratio,
    zero_mode_A_from_psi,
    zeta_laplacian,
)

CS_STEP = 1e-20


def _cs_jacobian(fn, pts):
    """Exact Jacobian J[..., j, i] = d_j fn_i via complex step."""
    cols = []
    for j in range(3):
        shift = np.zeros(3, dtype=complex)
        shift[j] = 1j * CS_STEP
        cols.append(fn(pts + shift).imag / CS_STEP)
    return np.stack(cols, axis=-2)


def _curl_of(jac):
    return np.stack(
        [
            jac[..., 1, 2] - jac[..., 2, 1],
            jac[..., 2, 0] - jac[..., 0, 2],
            jac[..., 0, 1] - jac[..., 1, 0],
        ],
        axis=-1,
    )


def _spin_density_pts(psi):
    return np.einsum("...s,jst,...t->...j", psi.conj(), SIGMA, psi).real


@pytest.fixture(scope="module")
def spec():
    return ZeroModeSpec(np.array([1.0, 0.0]))


@pytest.fixture(scope="module")
def sample_points():
    rng = np.random.default_rng(7)
    return rng.uniform(-6.0, 6.0, size=(60, 3))


@pytest.fixture(scope="module")
def box96(spec):
    """The mode sampled on the large reference box (n = 96, L = 60)."""
    grid = Grid(96, 60.0)
    c = grid.length / 2.0
    x, y, z = grid.axes()
    pts = np.stack(np.broadcast_arrays(x - c, y - c, z - c), axis=-1)
    r = np.sqrt((pts**2).sum(axis=-1))
    psi_pt, a_pt, _ = loss_yau_eval(spec, pts)
    return grid, pts, r, np.moveaxis(psi_pt, -1, 0), np.moveaxis(a_pt, -1, 0)


class TestSpecConstruction:
    def test_normalizes_and_computes_spin_direction(self):
        made = ZeroModeSpec(np.array([2.0, 0.0]))
        np.testing.assert_allclose(made.phi0, [1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(made.w, [0.0, 0.0, 1.0], atol=1e-15)

    def test_spin_direction_is_unit_for_any_spinor(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            phi = rng.normal(size=2) + 1j * rng.normal(size=2)
            made = ZeroModeSpec(phi)
            assert abs(np.linalg.norm(made.w) - 1.0) < 1e-12
            assert abs(np.vdot(made.phi0, made.phi0).real - 1.0) < 1e-12

    def test_rejects_zero_spinor(self):
        with pytest.raises(ConfigurationError):
            ZeroModeSpec(np.zeros(2))

    def test_rejects_nonfinite_spinor(self):
        with pytest.raises(ConfigurationError):
            ZeroModeSpec(np.array([np.nan, 1.0]))


class TestClosedForms:
    def test_origin_values(self, spec):
        psi, a, _ = loss_yau_eval(spec, np.zeros(3))
        np.testing.assert_allclose(psi, spec.phi0 / np.pi, atol=1e-15)
        np.testing.assert_allclose(a, -3.0 * spec.w, atol=1e-15)

    def test_density_closed_form(self, spec, sample_points):
        psi, _, _ = loss_yau_eval(spec, sample_points)
        r2 = (sample_points**2).sum(axis=-1)
        rho = (np.abs(psi) ** 2).sum(axis=-1)
        expected = 1.0 / (np.pi**2 * (1.0 + r2) ** 2)
        np.testing.assert_allclose(rho, expected, rtol=1e-13)

    def test_spin_density_has_maximal_magnitude(self, spec, sample_points):
        # |<psi, sigma psi>| = |psi|^2: the spinor is pointwise a pure state
        psi, _, _ = loss_yau_eval(spec, sample_points)
        spin = _spin_density_pts(psi)
        rho = (np.abs(psi) ** 2).sum(axis=-1)
        np.testing.assert_allclose(
            np.linalg.norm(spin, axis=-1), rho, rtol=1e-13
        )

    def test_potential_is_antiparallel_to_spin(self, spec, sample_points):
        psi, a, _ = loss_yau_eval(spec, sample_points)
        spin = _spin_density_pts(psi)
        r2 = (sample_points**2).sum(axis=-1)
        scale = -3.0 * np.pi**2 * (1.0 + r2)
        np.testing.assert_allclose(a, scale[:, None] * spin, atol=1e-12)

    def test_field_strength_closed_form(self, spec, sample_points):
        # curl A = -12 pi^2 <psi, sigma psi>, so |B| = 12/(1+r^2)^2
        jac = _cs_jacobian(lambda p: loss_yau_eval(spec, p)[1], sample_points)
        b = _curl_of(jac)
        psi, _, _ = loss_yau_eval(spec, sample_points)
        np.testing.assert_allclose(
            b, -12.0 * np.pi**2 * _spin_density_pts(psi), atol=1e-13
        )
        r2 = (sample_points**2).sum(axis=-1)
        np.testing.assert_allclose(
            np.linalg.norm(b, axis=-1), 12.0 / (1.0 + r2) ** 2, rtol=1e-12
        )

    def test_imaginary_part_identity(self, spec, sample_points):
        # A ^ S + Im<psi, grad ^ (sigma psi)> = grad|psi|^2 / 2
        psi, a, grad = loss_yau_eval(spec, sample_points)
        spin = _spin_density_pts(psi)
        grad_sig = np.einsum("kst,njt->njks", SIGMA, grad)
        curl_term = np.empty_like(spin)
        for i, (j, k) in enumerate(((1, 2), (2, 0), (0, 1))):
            val = np.einsum("ns,ns->n", psi.conj(), grad_sig[:, j, k]) - np.einsum(
                "ns,ns->n", psi.conj(), grad_sig[:, k, j]
            )
            curl_term[:, i] = val.imag
        rho_grad = 2.0 * np.einsum("ns,njs->nj", psi.conj(), grad).real
        np.testing.assert_allclose(
            np.cross(a, spin) + curl_term, 0.5 * rho_grad, atol=1e-14
        )


class TestDiracResidual:
    def test_certificate_over_thousand_samples(self, spec):
        samples = sobol_ball_samples(count=1024, radius=10.0, seed=0)
        start = time.perf_counter()
        res = dirac_residual(spec, samples)
        elapsed = time.perf_counter() - start
        assert res < 1e-10  # measured 8.4e-17
        assert elapsed < 1.0

    def test_origin_residual(self, spec):
        assert dirac_residual(spec, np.zeros((1, 3))) < 1e-14

    @pytest.mark.parametrize("lam", [0.5, 2.0])
    def test_dilated_pair_is_still_annihilated(self, spec, sample_points, lam):
        # psi_l = lam^{3/2} psi(lam x), A_l = lam A(lam x) solves the same
        # equation; assemble the residual from the closed forms at lam*x
        psi, a, grad = loss_yau_eval(spec, lam * sample_points)
        psi_l = lam**1.5 * psi
        grad_l = lam**2.5 * grad
        a_l = lam * a
        out = np.zeros_like(psi_l)
        for j, sig in enumerate(SIGMA):
            out += np.einsum(
                "st,...t->...s",
                sig,
                -1j * grad_l[..., j, :] + a_l[..., j, None] * psi_l,
            )
        assert np.abs(out).max() < 1e-10


class TestGaugeFix:
    def test_gauge_function_vanishes_at_origin(self, spec):
        zeta, _ = gauge_fix(spec, np.zeros((1, 3)))
        assert zeta[0] == 0.0

    def test_series_meets_closed_form_at_seam(self, spec):
        d = np.array([0.3, 0.2, 0.1])
        d /= np.linalg.norm(d)
        lo = d * np.sqrt(0.25 - 1e-9)
        hi = d * np.sqrt(0.25 + 1e-9)
        z_lo, a_lo = gauge_fix(spec, lo[None])
        z_hi, a_hi = gauge_fix(spec, hi[None])
        assert abs(z_hi - z_lo).max() < 1e-8
        assert np.abs(a_hi - a_lo).max() < 1e-7

    def test_curl_unchanged_by_gauge_fix(self, spec, sample_points):
        jac_raw = _cs_jacobian(lambda p: loss_yau_eval(spec, p)[1], sample_points)
        jac_fix = _cs_jacobian(lambda p: gauge_fix(spec, p)[1], sample_points)
        assert np.abs(_curl_of(jac_raw) - _curl_of(jac_fix)).max() < 1e-12

    def test_divergence_identity_between_closed_forms(self, spec, sample_points):
        # div A and Lap zeta are coded independently; their equality is the
        # content of the gauge fix
        np.testing.assert_allclose(
            div_a_closed(spec, sample_points),
            zeta_laplacian(spec, sample_points),
            atol=1e-13,
        )

    def test_raw_divergence_matches_closed_form(self, spec, sample_points):
        jac = _cs_jacobian(lambda p: loss_yau_eval(spec, p)[1], sample_points)
        div = np.einsum("njj->n", jac)
        np.testing.assert_allclose(div, div_a_closed(spec, sample_points), atol=1e-13)

    def test_fixed_potential_is_divergence_free(self, spec, sample_points):
        # include series-region points: the seam must not leak into div
        pts = np.vstack([sample_points, sample_points[:10] * 0.05])
        jac = _cs_jacobian(lambda p: gauge_fix(spec, p)[1], pts)
        assert np.abs(np.einsum("njj->n", jac)).max() < 1e-10

    def test_finite_difference_oracle_agrees(self, spec):
        # independent loose check before trusting the analytic derivatives
        x0 = np.array([0.21, -0.12, 0.08])
        h = 0.02
        div_fd = 0.0
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            f = lambda p: gauge_fix(spec, p[None])[1][0, j]
            div_fd += (
                -f(x0 + 2 * e) + 8 * f(x0 + e) - 8 * f(x0 - e) + f(x0 - 2 * e)
            ) / (12 * h)
        assert abs(div_fd) < 1e-6

    def test_sampled_divergence_within_documented_tolerance(self, spec, box96):
        # on the grid the r^-2 tail and the marginally resolved core alias;
        # measured 0.53 at n = 96 vs 1.43 for the unfixed potential
        grid, pts, _, _, a_raw = box96
        _, a_fixed = gauge_fix(spec, pts)
        a_fixed = np.moveaxis(a_fixed, -1, 0)
        res_fixed = gauge_residual(a_fixed, grid)
        assert res_fixed < 0.6
        assert res_fixed < 0.5 * gauge_residual(a_raw, grid)


class TestCriticalChargeRatio:
    def test_physical_coupling(self, spec):
        alpha = 1.0 / 137.0
        start = time.perf_counter()
        ratio = zc_ratio(spec, alpha)
        elapsed = time.perf_counter() - start
        expected = 9.0 * np.pi**2 / 8.0 * 137.0**2
        assert abs(ratio / expected - 1.0) < 1e-3
        assert elapsed < 5.0

    def test_unit_coupling(self, spec):
        assert abs(zc_ratio(spec, 1.0) / (9.0 * np.pi**2 / 8.0) - 1.0) < 1e-3

    def test_coupling_scaling_is_inverse_square(self, spec):
        assert abs(zc_ratio(spec, 0.5) / (4.0 * zc_ratio(spec, 1.0)) - 1.0) < 1e-12

    def test_unreachable_tolerance_raises(self, spec):
        with pytest.raises(NonconvergenceError):
            zc_ratio(spec, 1.0, rel_tol=1e-17)

    def test_lower_bound_constant(self):
        assert zc_lower_bound(2.0) == 3.0 / (np.pi * 4.0)
        # the often-quoted rounded value at the physical coupling
        assert abs(zc_lower_bound(1.0 / 137.0) / 17932.0 - 1.0) < 1e-3


class TestPairEnergy:
    def test_energy_is_linear_in_dilation(self, spec):
        lams = (0.5, 1.0, 2.0)
        slopes = [pair_energy(spec, 1.0, z=1.0, lam=lam) / lam for lam in lams]
        mid = slopes[1]
        assert all(abs(s / mid - 1.0) < 1e-3 for s in slopes)
        # collinear through the origin, not just equal slopes
        e1 = pair_energy(spec, 1.0, z=1.0, lam=1.0)
        e2 = pair_energy(spec, 1.0, z=1.0, lam=2.0)
        assert abs(e2 - 2.0 * e1) < 1e-3 * abs(e1)

    def test_slope_sign_flips_at_critical_ratio(self, spec):
        zc = zc_ratio(spec, 1.0)
        above = [pair_energy(spec, 1.0, z=1.01 * zc, lam=lam) for lam in (1.0, 4.0)]
        below = [pair_energy(spec, 1.0, z=0.99 * zc, lam=lam) for lam in (1.0, 4.0)]
        assert above[1] < above[0]  # supercritical: dilation lowers energy
        assert below[1] > below[0]  # subcritical: dilation raises it

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_rejects_nonpositive_scale(self, spec, lam):
        with pytest.raises(ConfigurationError):
            pair_energy(spec, 1.0, z=1.0, lam=lam)


class TestPotentialFromSpinor:
    def test_plane_wave_recovers_minus_wavevector(self):
        # exactly representable data: the formula itself is certified here
        grid = Grid(16, 2.0 * np.pi)
        x, y, z = grid.axes()
        phase = np.exp(1j * (1.0 * x + 2.0 * y - 1.0 * z))
        chi = np.array([0.8, 0.6j])
        psi = chi[:, None, None, None] * phase[None]
        a = zero_mode_A_from_psi(psi, grid)
        assert not a.mask.any()
        for j, kj in enumerate((1.0, 2.0, -1.0)):
            np.testing.assert_allclose(np.asarray(a[j]), -kj, atol=1e-13)

    def test_constant_spinor_gives_zero_potential(self):
        grid = Grid(12, 5.0)
        psi = np.zeros((2, 12, 12, 12), dtype=complex)
        psi[0] = 0.6
        psi[1] = 0.8j
        a = zero_mode_A_from_psi(psi, grid)
        assert np.abs(np.asarray(a)).max() < 1e-15

    def test_low_density_region_is_masked(self, box96):
        grid, _, r, psi, _ = box96
        a = zero_mode_A_from_psi(psi, grid, floor=0.3)
        frac = a.mask.mean()
        assert 0.99 < frac < 1.0  # only the core survives a 0.3 floor
        kept = ~a.mask[0]
        assert r[kept].max() < 1.0
        assert np.isfinite(np.asarray(a)[:, kept]).all()

    def test_core_recovery_within_documented_tolerance(self, box96):
        # resolution-limited: measured max deviation 0.85 at n = 96 against
        # peak |A| = 3; the bound below is that measurement with 1.4x slack
        grid, _, _, psi, a_exact = box96
        a = zero_mode_A_from_psi(psi, grid, floor=0.3)
        kept = ~a.mask[0]
        dev = np.abs(np.ma.filled(a, 0.0) - a_exact).max(axis=0)
        assert dev[kept].max() < 1.2

    def test_core_recovery_sharpens_with_resolution(self, spec, box96):
        # same box, n 96 -> 128: measured deviation ratio 0.375
        grid96, _, _, psi96, a96 = box96
        a_coarse = zero_mode_A_from_psi(psi96, grid96, floor=0.3)
        kept = ~a_coarse.mask[0]
        dev_coarse = np.abs(np.ma.filled(a_coarse, 0.0) - a96).max(axis=0)[kept].max()

        grid = Grid(128, 60.0)
        c = grid.length / 2.0
        x, y, z = grid.axes()
        pts = np.stack(np.broadcast_arrays(x - c, y - c, z - c), axis=-1)
        psi_pt, a_pt, _ = loss_yau_eval(spec, pts)
        psi = np.moveaxis(psi_pt, -1, 0)
        a_exact = np.moveaxis(a_pt, -1, 0)
        a_fine = zero_mode_A_from_psi(psi, grid, floor=0.3)
        kept = ~a_fine.mask[0]
        dev_fine = np.abs(np.ma.filled(a_fine, 0.0) - a_exact).max(axis=0)[kept].max()
        assert dev_fine < 0.6 * dev_coarse


class TestWindowedPair:
    def test_taper_shape(self):
        r = np.array([0.0, 18.0, 23.0, 28.0, 40.0])
        w = radial_taper(r, 18.0, 28.0)
        assert w[0] == 1.0 and w[1] == 1.0
        assert 0.0 < w[2] < 1.0
        assert w[3] == 0.0 and w[4] == 0.0
        assert (np.diff(w) <= 0).all()

    def test_taper_rejects_bad_interval(self):
        with pytest.raises(ConfigurationError):
            radial_taper(np.array([1.0]), 5.0, 5.0)

    def test_first_order_residual_bounded_by_window_error(self, box96):
        # sigma.(p+A) annihilates the pair; on the tapered box the residual
        # is the skirt term |grad w||psi| plus core truncation, measured
        # 2.6e-2 at n = 96 against ||w psi|| = 0.97
        grid, _, r, psi, a = box96
        w = radial_taper(r, 18.0, 28.0)
        res = norm_l2(pauli_first_order(psi * w, a, grid), grid)
        assert res < 0.05
        assert norm_l2(psi * w, grid) > 0.95


class TestSobolSamples:
    def test_count_and_radius(self):
        pts = sobol_ball_samples(count=1024, radius=10.0, seed=0)
        assert pts.shape == (1024, 3)
        assert np.sqrt((pts**2).sum(axis=1)).max() <= 10.0

    def test_deterministic_per_seed(self):
        a = sobol_ball_samples(count=128, radius=4.0, seed=3)
        b = sobol_ball_samples(count=128, radius=4.0, seed=3)
        c = sobol_ball_samples(count=128, radius=4.0, seed=4)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)


class TestCertificate:
    def test_contents(self, spec):
        samples = sobol_ball_samples(count=256, radius=8.0, seed=2)
        cert = certificate(spec, 1.0, samples=samples)
        assert cert.keys() == {
            "max_dirac_residual",
            "zc_ratio",
            "norm",
            "scaling_slopes",
            "alpha",
            "sample_count",
        }
        assert cert["max_dirac_residual"] < 1e-10
        assert abs(cert["zc_ratio"] / (9.0 * np.pi**2 / 8.0) - 1.0) < 1e-3
        assert abs(cert["norm"] - 1.0) < 1e-10
        assert cert["sample_count"] == 256
        slopes = cert["scaling_slopes"]
        assert len(slopes) == 3
        assert max(slopes) - min(slopes) < 1e-10 * abs(slopes[1])
