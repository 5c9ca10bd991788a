"""Closed-form magnetic Dirac zero mode: construction, gauge fixing, quadratures.

The mode is the classical Loss-Yau pair

    psi(x) = (1 + i sigma.x) phi0 / (pi (1+|x|^2)^{3/2})
    A(x)   = 3 [ (|x|^2-1) w - 2(w.x) x - 2 w^x ] / (1+|x|^2)^2

with phi0 a unit spinor and w = <phi0, sigma phi0>. Everything here is
evaluated from the closed forms with hand-derived analytic derivatives; no
grid differentiation enters, because the polynomial decay |psi| ~ |x|^-2
would periodize into errors far above the 1e-10 residual target. The only
grid-based operation, zero_mode_A_from_psi, carries its own documented
windowing tolerance.

All spin contractions use the convention <u, v> = sum(conj(u) v).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NonconvergenceError
from .pauli_algebra import SIGMA
from .spectral import Grid, curl, fft_forward, fft_inverse

__all__ = [
    "ZeroModeSpec",
    "loss_yau_eval",
    "dirac_residual",
    "gauge_fix",
    "div_a_closed",
    "zeta_laplacian",
    "zc_ratio",
    "zc_lower_bound",
    "pair_energy",
    "radial_taper",
    "zero_mode_A_from_psi",
    "sobol_ball_samples",
    "certificate",
]


@dataclass(frozen=True)
class ZeroModeSpec:
    """Unit spinor phi0 and its spin direction w = <phi0, sigma phi0>.

    phi0 is normalized on construction; for a unit spinor |w| = 1 exactly
    (pure-state identity), which __post_init__ asserts.
    """

    phi0: np.ndarray
    w: np.ndarray = field(init=False)

    def __post_init__(self):
        phi0 = np.asarray(self.phi0, dtype=complex).reshape(2)
        nrm = float(np.sqrt((np.abs(phi0) ** 2).sum()))
        if nrm == 0.0 or not np.isfinite(nrm):
            raise ConfigurationError("phi0 must be a nonzero finite 2-spinor")
        phi0 = phi0 / nrm
        w = np.array(
            [np.vdot(phi0, s @ phi0).real for s in SIGMA], dtype=float
        )
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "w", w)
        assert abs(np.linalg.norm(w) - 1.0) < 1e-12


def _as_points(x):
    """(..., 3) array view of one point or a batch.

    Complex dtypes pass through untouched: every closed form below is a
    polynomial or principal-branch power in the coordinates, so callers can
    take exact derivatives by complex-step differentiation.
    """
    pts = np.asarray(x)
    if not np.iscomplexobj(pts):
        pts = np.asarray(pts, dtype=float)
    if pts.shape[-1] != 3:
        raise ConfigurationError(f"points must have trailing dimension 3, got {pts.shape}")
    return pts


def loss_yau_eval(spec: ZeroModeSpec, x):
    """Evaluate (psi, A, grad psi) at one point or a (..., 3) batch.

    Returns arrays of shapes (..., 2), (..., 3), (..., 3, 2); the gradient is
    the analytic one,

        d_j psi = i sigma_j phi0 / (pi (1+r^2)^{3/2}) - 3 x_j psi / (1+r^2),

    differentiated symbol by symbol from the closed form.
    """
    pts = _as_points(x)
    r2 = (pts**2).sum(axis=-1)[..., np.newaxis]
    s = 1.0 / (np.pi * (1.0 + r2) ** 1.5)

    sig_phi = np.stack([sig @ spec.phi0 for sig in SIGMA])  # (3, 2)
    sigma_dot_x = np.einsum("...j,jk->...k", pts, sig_phi)
    psi = (spec.phi0 + 1j * sigma_dot_x) * s

    w = spec.w
    wx = np.einsum("...j,j->...", pts, w)[..., np.newaxis]
    r2v = r2
    a = (
        3.0
        * ((r2v - 1.0) * w - 2.0 * wx * pts - 2.0 * np.cross(np.broadcast_to(w, pts.shape), pts))
        / (1.0 + r2v) ** 2
    )

    grad = (
        1j * sig_phi * s[..., np.newaxis]
        - 3.0 * pts[..., :, np.newaxis] * psi[..., np.newaxis, :] / (1.0 + r2[..., np.newaxis])
    )
    return psi, a, grad


def dirac_residual(spec: ZeroModeSpec, samples) -> float:
    """max |sigma.(p + A) psi| over the sample points, p = -i grad.

    Everything comes from loss_yau_eval's closed forms, so this certifies
    the analytic gradient against the defining zero-mode equation.
    """
    pts = _as_points(samples)
    psi, a, grad = loss_yau_eval(spec, pts)
    # sigma.(-i grad psi): contract sigma_j with the j-th derivative
    out = np.zeros_like(psi)
    for j, sig in enumerate(SIGMA):
        out += np.einsum("st,...t->...s", sig, -1j * grad[..., j, :] + a[..., j, np.newaxis] * psi)
    return float(np.abs(out).max())


def _zeta_radial(r2):
    """(u, u_s, u_ss) for u(s) = (r - arctan r)/r^3 with s = r^2.

    u = sum_j (-1)^j s^j/(2j+3) near 0 (series-safe through the removable
    singularity); the closed forms take over for s >= 0.25, where the
    cancellations are harmless. Complex s is accepted (branch chosen by the
    real part) so derivatives can be taken by complex step.
    """
    r2 = np.asarray(r2)
    if not np.iscomplexobj(r2):
        r2 = np.asarray(r2, dtype=float)
    u = np.empty_like(r2)
    us = np.empty_like(r2)
    uss = np.empty_like(r2)
    small = r2.real < 0.25
    s_small = r2[small]
    acc_u = np.zeros_like(s_small)
    acc_us = np.zeros_like(s_small)
    acc_uss = np.zeros_like(s_small)
    pow_u = np.ones_like(s_small)  # s^j
    for j in range(0, 30):
        coeff = (-1.0) ** j / (2 * j + 3)
        acc_u += coeff * pow_u
        pow_u = pow_u * s_small
    pow_us = np.ones_like(s_small)  # s^{j-1} starting at j = 1
    for j in range(1, 30):
        coeff = (-1.0) ** j * j / (2 * j + 3)
        acc_us += coeff * pow_us
        pow_us = pow_us * s_small
    pow_uss = np.ones_like(s_small)  # s^{j-2} starting at j = 2
    for j in range(2, 30):
        coeff = (-1.0) ** j * j * (j - 1) / (2 * j + 3)
        acc_uss += coeff * pow_uss
        pow_uss = pow_uss * s_small
    u[small], us[small], uss[small] = acc_u, acc_us, acc_uss

    big = ~small
    s_big = r2[big]
    r = np.sqrt(s_big)
    at = np.arctan(r)
    u[big] = (r - at) / r**3
    # du/dr = (1 - 1/(1+s))/r^3 - 3(r - arctan r)/r^4; u_s = (du/dr)/(2r)
    dudr = (1.0 - 1.0 / (1.0 + s_big)) / r**3 - 3.0 * (r - at) / r**4
    us[big] = dudr / (2.0 * r)
    # d2u/dr2 assembled term by term; u_ss = (u'' - 2 u_s)/(4 s)
    d2 = (
        6.0 / r**4
        + 6.0 / (r**4 * (1.0 + s_big))
        + 2.0 / (r**2 * (1.0 + s_big) ** 2)
        - 12.0 * at / r**5
    )
    uss[big] = (d2 - 2.0 * us[big]) / (4.0 * s_big)
    return u, us, uss


def gauge_fix(spec: ZeroModeSpec, x):
    """(zeta, A - grad zeta) at the sample points.

    zeta(x) = 3 (w.x)(|x| - arctan|x|)/|x|^3 extended through 0 by its even
    power series; grad zeta is analytic: 3 w u + 6 (w.x) u'(s) x with
    s = |x|^2. The returned potential has zero divergence identically
    (div A = Laplacian zeta = -6 (w.x)/(1+|x|^2)^2, see div_a_closed /
    zeta_laplacian).

    Pointwise the divergence vanishes to roundoff; a spectral divergence of
    the field sampled on a box does not, because the r^-2 tail and the
    marginally resolved core both alias. Measured max |div| on an L = 60 box:
    0.53 at n = 96, 0.16 at n = 128, 0.011 at n = 192, shrinking like the
    same exp(-pi n / L) law as every grid realization of this mode.
    """
    pts = _as_points(x)
    r2 = (pts**2).sum(axis=-1)
    u, us, _ = _zeta_radial(r2)
    wx = np.einsum("...j,j->...", pts, spec.w)
    zeta = 3.0 * wx * u
    grad_zeta = (
        3.0 * u[..., np.newaxis] * spec.w
        + 6.0 * (wx * us)[..., np.newaxis] * pts
    )
    _, a, _ = loss_yau_eval(spec, pts)
    return zeta, a - grad_zeta


def div_a_closed(spec: ZeroModeSpec, x):
    """Analytic divergence of the closed-form A: -6 (w.x)/(1+|x|^2)^2."""
    pts = _as_points(x)
    r2 = (pts**2).sum(axis=-1)
    wx = np.einsum("...j,j->...", pts, spec.w)
    return -6.0 * wx / (1.0 + r2) ** 2


def zeta_laplacian(spec: ZeroModeSpec, x):
    """Analytic Laplacian of the gauge function zeta.

    Lap[3 (w.x) u(|x|)] = 3 (w.x)[u'' + 4 u'/r] = 3 (w.x)[10 u_s + 4 s u_ss]
    in s = r^2 derivatives. It collapses to -6 (w.x)/(1+r^2)^2, the same
    expression as div_a_closed -- that equality is the content of the gauge
    fix. Kept as an independent evaluation so the identity is a test, not a
    tautology.
    """
    pts = _as_points(x)
    r2 = (pts**2).sum(axis=-1)
    _, us, uss = _zeta_radial(r2)
    return 3.0 * np.einsum("...j,j->...", pts, spec.w) * (10.0 * us + 4.0 * r2 * uss)


def _gauss_panels(f, a, b, panels, order=32):
    """Composite Gauss-Legendre quadrature of f over [a, b]."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
        total += half * float((weights * f(mid + half * nodes)).sum())
    return total


def _radial_integral(g, rel_tol=1e-10, max_panels=64):
    """integral_0^inf g(r) dr via r = tan(theta), refined until stable.

    Doubles the panel count until two successive composite rules agree to
    rel_tol; raises NonconvergenceError when max_panels is exhausted.
    """

    def integrand(theta):
        r = np.tan(theta)
        return g(r) / np.cos(theta) ** 2

    upper = 0.5 * np.pi * (1.0 - 1e-12)
    prev = _gauss_panels(integrand, 0.0, upper, 1)
    panels = 2
    while panels <= max_panels:
        cur = _gauss_panels(integrand, 0.0, upper, panels)
        if abs(cur - prev) <= rel_tol * max(1.0, abs(cur)):
            return cur
        prev = cur
        panels *= 2
    raise NonconvergenceError(
        f"radial quadrature did not stabilize to {rel_tol:.1e} within {max_panels} panels"
    )


def zc_ratio(spec: ZeroModeSpec, alpha: float, *, rel_tol: float = 1e-10) -> float:
    """F[A, 0] / <psi, |x|^{-1} psi> for the zero mode, by radial quadrature.

    |<psi, sigma psi>| = |psi|^2 makes both integrands radial:
    |B| = 12/(1+r^2)^2 and |psi|^2 = 1/(pi^2 (1+r^2)^2). The quadrature
    also asserts the mode's unit norm to 1e-8 as a self-check.
    """
    norm_sq = 4.0 / np.pi * _radial_integral(
        lambda r: r**2 / (1.0 + r**2) ** 2, rel_tol=rel_tol
    )
    if abs(norm_sq - 1.0) > 1e-8:
        raise NonconvergenceError(
            f"zero-mode norm quadrature returned {norm_sq!r}, expected 1"
        )
    field_energy = (
        1.0
        / (8.0 * np.pi * alpha**2)
        * 4.0
        * np.pi
        * _radial_integral(lambda r: (12.0 / (1.0 + r**2) ** 2) ** 2 * r**2, rel_tol=rel_tol)
    )
    coulomb_exp = (
        4.0 / np.pi * _radial_integral(lambda r: r / (1.0 + r**2) ** 2, rel_tol=rel_tol)
    )
    return field_energy / coulomb_exp


def zc_lower_bound(alpha: float) -> float:
    """The closed-form lower-bound constant 3/(pi alpha^2)."""
    return 3.0 / (np.pi * alpha**2)


def pair_energy(spec: ZeroModeSpec, alpha: float, z: float, lam: float = 1.0) -> float:
    """-Z <psi_l, |x|^{-1} psi_l> + F[A_l, 0] for the dilated pair at scale lam.

    psi_l(x) = lam^{3/2} psi(lam x), A_l(x) = lam A(lam x); the integrals are
    evaluated by quadrature of the scaled integrands rather than by
    multiplying closed-form answers, so linearity in lam is a measurement.
    """
    if lam <= 0:
        raise ConfigurationError(f"dilation scale must be positive, got {lam}")
    coulomb = 4.0 / np.pi * lam**3 * _radial_integral(
        lambda r: r / (1.0 + (lam * r) ** 2) ** 2
    )
    field = (
        1.0
        / (8.0 * np.pi * alpha**2)
        * 4.0
        * np.pi
        * lam**4
        * _radial_integral(lambda r: (12.0 / (1.0 + (lam * r) ** 2) ** 2) ** 2 * r**2)
    )
    return -z * coulomb + field


def radial_taper(r, inner: float, outer: float):
    """C^2 radial cutoff: 1 for r <= inner, 0 for r >= outer, quintic between.

    Multiplying a sampled decaying mode by this before FFT-based operations
    removes the periodization seam at the box faces. The price is the skirt
    term |grad w| |psi| on inner < r < outer; that term is the documented
    windowing error of any check built this way.
    """
    if not outer > inner:
        raise ConfigurationError(f"taper needs outer > inner, got [{inner}, {outer}]")
    t = np.clip((np.asarray(r) - inner) / (outer - inner), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def zero_mode_A_from_psi(psi: np.ndarray, grid: Grid, *, floor: float = 1e-6):
    """A = -[curl<psi,sigma psi> + 2 Im<psi, grad psi>] / (2 <psi,psi>) on a grid.

    Derivatives are spectral; entries where the density falls below
    floor * max density are masked (the formula divides by |psi|^2).
    Returns a masked (3, n, n, n) array.

    Accuracy on sampled decaying modes is set by how well the grid resolves
    them, not by this routine. The numerator's spectral derivatives carry a
    truncation error ~ exp(-pi n / L) for a unit-scale mode, and the division
    by 2|psi|^2 amplifies it like (1 + r^2)^2 away from the core. Measured
    against the closed-form potential of the bundled zero mode on an L = 60
    box with floor = 0.3 (peak |A| = 3): max deviation 0.85 at n = 96, 0.32
    at n = 128, 0.032 at n = 192. Fields the grid resolves exactly (plane
    waves) come back to 1e-14.
    """
    psi_hat = fft_forward(psi, grid)
    spin = np.stack(
        [
            np.einsum("s...,st,t...->...", np.conj(psi), sig, psi).real
            for sig in SIGMA
        ]
    )
    curl_spin = curl(spin, grid)
    grad_psi = np.stack(
        [fft_inverse(1j * kj * psi_hat, grid) for kj in grid.kvec]
    )  # (3, 2, n, n, n)
    im_term = 2.0 * np.einsum("s...,js...->j...", np.conj(psi), grad_psi).imag
    density = (psi.real**2 + psi.imag**2).sum(axis=0)
    cutoff = floor * float(density.max())
    invalid = density <= cutoff
    denom = np.where(invalid, 1.0, 2.0 * density)
    a = -(curl_spin + im_term) / denom
    return np.ma.masked_array(a, mask=np.broadcast_to(invalid, a.shape))


def sobol_ball_samples(count: int = 1024, radius: float = 10.0, seed: int = 0):
    """Quasi-random (count, 3) points inside the ball |x| <= radius.

    Sobol points in the bounding cube, rejected outside the ball; the
    generator draws enough extra (ball fills pi/6 of the cube) that the
    requested count is always met.
    """
    from scipy.stats import qmc

    m = int(np.ceil(np.log2(max(count, 2) / 0.3)))
    cube = (2.0 * qmc.Sobol(d=3, scramble=True, seed=seed).random_base2(m) - 1.0) * radius
    inside = cube[(cube**2).sum(axis=1) <= radius**2]
    if inside.shape[0] < count:
        raise NonconvergenceError("ball sampling under-filled; raise the budget")
    return inside[:count]


def certificate(spec: ZeroModeSpec, alpha: float, *, samples=None) -> dict:
    """JSON-ready summary: residual, ratio, norm, and dilation slopes."""
    if samples is None:
        samples = sobol_ball_samples()
    residual = dirac_residual(spec, samples)
    ratio = zc_ratio(spec, alpha)
    norm_sq = 4.0 / np.pi * _radial_integral(lambda r: r**2 / (1.0 + r**2) ** 2)
    lams = (0.5, 1.0, 2.0)
    energies = [pair_energy(spec, alpha, z=1.0, lam=lam) for lam in lams]
    slopes = [e / lam for e, lam in zip(energies, lams)]
    return {
        "max_dirac_residual": residual,
        "zc_ratio": ratio,
        "norm": float(np.sqrt(norm_sq)),
        "scaling_slopes": slopes,
        "alpha": alpha,
        "sample_count": int(np.asarray(samples).reshape(-1, 3).shape[0]),
    }
