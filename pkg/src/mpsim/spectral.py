"""Periodic-box discretization and Fourier-multiplier toolbox.

Everything downstream (spinor dynamics, wave propagation, projections,
diagnostics) reduces to diagonal operations in the discrete Fourier basis
e^{ik.x}, k = 2*pi*m/L, m in {-n/2, ..., n/2-1}^3. This module owns the
grid, the transforms, the multiplier bank, the Leray projection, and the
2/3-rule dealiasing used after real-space products.

Conventions (fixed once, documented here, tests are convention-independent):

* `fft_forward` is the plain unnormalized forward DFT (scipy.fft.fftn), so a
  plane wave e^{ik0.x} has coefficient n^3 at mode k0 and `fft_inverse`
  carries the 1/n^3 factor.
* Quadrature of a grid function is the lattice sum h^3 * sum f(x_i), exact
  for band-limited integrands; `norm_l2`, `inner` and `norm_h1` use it.
* Vector fields are arrays of shape (3, n, n, n), spinors (2, n, n, n);
  transforms act on the trailing three axes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

__all__ = [
    "Grid",
    "MultiplierBank",
    "fft_forward",
    "fft_inverse",
    "apply_multiplier",
    "grad",
    "divergence",
    "curl",
    "leray_project",
    "leray_project_hat",
    "dealias",
    "heat_propagate",
    "wave_propagate",
    "fourier_resample",
    "norm_l2",
    "norm_h1",
    "inner",
]


def _workers() -> int:
    # MPSIM_THREADS caps FFT parallelism; default 1 keeps runs bit-reproducible
    # regardless of host core count.
    try:
        return max(1, int(os.environ.get("MPSIM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [0, L)^3 with n points per axis.

    Derived arrays are computed once in __post_init__ and shared read-only:
    1D coordinates and wavenumbers, broadcastable wavevector components,
    |k|^2, |k|, and the 2/3-rule dealiasing mask.

    The unpaired Nyquist mode (m = -n/2) is zeroed in `kvec`, the wavevectors
    used for odd-order derivatives (grad/div/curl/momentum) and for the Leray
    projector, so those operators map real fields to real fields; `inv_k2` is
    built from the same zeroed vectors so the projector stays exactly
    idempotent. Scalar even multipliers (|k|^2 heat weights, wave phases,
    Sobolev weights) keep the full magnitude in `k2`/`kmag`.
    """

    n: int
    length: float
    spacing: float = field(init=False, repr=False)
    x: np.ndarray = field(init=False, repr=False)
    k1: np.ndarray = field(init=False, repr=False)
    kvec: tuple = field(init=False, repr=False)
    k2: np.ndarray = field(init=False, repr=False)
    kmag: np.ndarray = field(init=False, repr=False)
    inv_k2: np.ndarray = field(init=False, repr=False)
    dealias_mask: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be a positive even integer, got {self.n}")
        if not self.length > 0:
            raise ValueError(f"box length must be positive, got {self.length}")
        n, length = self.n, float(self.length)
        h = length / n
        x = h * np.arange(n)
        k1 = 2.0 * np.pi * np.fft.fftfreq(n, d=h)  # 2*pi*m/L in FFT order
        k1d = k1.copy()
        k1d[n // 2] = 0.0  # unpaired Nyquist mode: no real odd derivative
        kx = k1d.reshape(n, 1, 1)
        ky = k1d.reshape(1, n, 1)
        kz = k1d.reshape(1, 1, n)
        k2 = (
            k1.reshape(n, 1, 1) ** 2
            + k1.reshape(1, n, 1) ** 2
            + k1.reshape(1, 1, n) ** 2
        )
        kt2 = kx**2 + ky**2 + kz**2  # derivative-consistent |k|^2 for Leray
        inv_k2 = np.zeros_like(kt2)
        nz = kt2 > 0
        inv_k2[nz] = 1.0 / kt2[nz]  # (-Delta)^{-1} is undefined at the mean mode
        m = np.fft.fftfreq(n, d=1.0 / n)  # integer mode index in FFT order
        keep1 = np.abs(m) < n / 3.0  # 2/3 rule: drop |m| >= n/3
        mask = (
            keep1.reshape(n, 1, 1)
            & keep1.reshape(1, n, 1)
            & keep1.reshape(1, 1, n)
        )
        for name, val in (
            ("spacing", h),
            ("x", x),
            ("k1", k1),
            ("kvec", (kx, ky, kz)),
            ("k2", k2),
            ("kmag", np.sqrt(k2)),
            ("inv_k2", inv_k2),
            ("dealias_mask", mask),
        ):
            object.__setattr__(self, name, val)
        for arr in (self.x, self.k1, self.k2, self.kmag, self.inv_k2, self.dealias_mask):
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple:
        return (self.n, self.n, self.n)

    @property
    def num_modes(self) -> int:
        return self.n**3

    @property
    def cell_volume(self) -> float:
        return self.spacing**3

    def axes(self) -> tuple:
        """Broadcastable coordinate arrays (x, y, z) of shapes (n,1,1) etc."""
        n = self.n
        return (
            self.x.reshape(n, 1, 1),
            self.x.reshape(1, n, 1),
            self.x.reshape(1, 1, n),
        )


_SPATIAL_AXES = (-3, -2, -1)


def _check_shape(f: np.ndarray, grid: Grid):
    if f.shape[-3:] != grid.shape:
        raise ValueError(
            f"field shape {f.shape} does not end with grid shape {grid.shape}"
        )


def fft_forward(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Forward DFT on the trailing three axes (unnormalized)."""
    _check_shape(f, grid)
    return scipy.fft.fftn(f, axes=_SPATIAL_AXES, workers=_workers())


def fft_inverse(fhat: np.ndarray, grid: Grid) -> np.ndarray:
    """Inverse DFT on the trailing three axes (carries the 1/n^3)."""
    _check_shape(fhat, grid)
    return scipy.fft.ifftn(fhat, axes=_SPATIAL_AXES, workers=_workers())


def apply_multiplier(f: np.ndarray, multiplier: np.ndarray, grid: Grid) -> np.ndarray:
    """ifft(m * fft(f)); real input comes back real (multiplier permitting).

    The multiplier must be defined at every mode and broadcast against the
    trailing (n, n, n) axes. Realness of the output is only restored when
    both the input is real and the multiplier has the conjugate symmetry of
    a real-space-real operator; callers that know this pass real fields and
    get real fields back.
    """
    out = fft_inverse(apply_multiplier_hat(fft_forward(f, grid), multiplier, grid), grid)
    if np.isrealobj(f) and np.isrealobj(multiplier):
        return out.real
    return out


def apply_multiplier_hat(fhat: np.ndarray, multiplier: np.ndarray, grid: Grid) -> np.ndarray:
    _check_shape(fhat, grid)
    return fhat * multiplier


def grad(f: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral gradient; returns shape (3,) + f.shape (complex unless f real)."""
    fhat = fft_forward(f, grid)
    parts = [fft_inverse(1j * kj * fhat, grid) for kj in grid.kvec]
    out = np.stack(parts)
    return out.real if np.isrealobj(f) else out


def divergence(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Spectral divergence of a 3-vector field (leading axis = component)."""
    vhat = fft_forward(v, grid)
    div_hat = sum(1j * kj * vhat[j] for j, kj in enumerate(grid.kvec))
    out = fft_inverse(div_hat, grid)
    return out.real if np.isrealobj(v) else out


def curl(v: np.ndarray, grid: Grid) -> np.ndarray:
    vhat = fft_forward(v, grid)
    out = fft_inverse(curl_hat(vhat, grid), grid)
    return out.real if np.isrealobj(v) else out


def curl_hat(vhat: np.ndarray, grid: Grid) -> np.ndarray:
    kx, ky, kz = grid.kvec
    return np.stack(
        [
            1j * (ky * vhat[2] - kz * vhat[1]),
            1j * (kz * vhat[0] - kx * vhat[2]),
            1j * (kx * vhat[1] - ky * vhat[0]),
        ]
    )


def leray_project_hat(vhat: np.ndarray, grid: Grid) -> np.ndarray:
    """Mode-wise v - k (k.v)/|k|^2; the k=0 (mean) component passes through.

    The mean of a divergence-free periodic field is unconstrained, so the
    projection leaves it alone; 1/|k|^2 is taken as 0 at k = 0.
    """
    kx, ky, kz = grid.kvec
    kdotv = kx * vhat[0] + ky * vhat[1] + kz * vhat[2]
    coeff = kdotv * grid.inv_k2
    return np.stack([vhat[0] - kx * coeff, vhat[1] - ky * coeff, vhat[2] - kz * coeff])


def leray_project(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Projection onto divergence-free fields, diagonal in Fourier space."""
    out = fft_inverse(leray_project_hat(fft_forward(v, grid), grid), grid)
    return out.real if np.isrealobj(v) else out


def dealias(f: np.ndarray, grid: Grid) -> np.ndarray:
    """2/3-rule truncation: zero every mode with any |m_i| >= n/3.

    Applied after nonlinear real-space products so quadratic aliasing cannot
    contaminate retained modes.
    """
    out = fft_inverse(fft_forward(f, grid) * grid.dealias_mask, grid)
    return out.real if np.isrealobj(f) else out


@dataclass(frozen=True)
class MultiplierBank:
    """Precomputed scalar Fourier multipliers for one (grid, epsilon) pair.

    Immutable and shareable; the time-dependent entries (heat/wave) build a
    fresh array per call so the bank itself never mutates.
    """

    grid: Grid
    epsilon: float
    lam_eps_inv: np.ndarray = field(init=False, repr=False)
    inv_lap: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        lam = 1.0 / np.sqrt(1.0 + self.epsilon * self.grid.k2)
        object.__setattr__(self, "lam_eps_inv", lam)
        object.__setattr__(self, "inv_lap", self.grid.inv_k2)
        lam.setflags(write=False)

    def lam_s(self, s: float) -> np.ndarray:
        """(1 + |k|^2)^{s/2}, the Bessel-potential multiplier."""
        return (1.0 + self.grid.k2) ** (s / 2.0)

    def heat(self, t: float) -> np.ndarray:
        """exp(-(i+eps) t |k|^2): the dissipative Schrodinger-heat semigroup."""
        if t < 0:
            raise ValueError("heat multiplier requires t >= 0 (forward-only)")
        return np.exp(-(1j + self.epsilon) * t * self.grid.k2)

    def wave_cos(self, t: float) -> np.ndarray:
        """cos(|k| t)."""
        return np.cos(self.grid.kmag * t)

    def wave_sinc(self, t: float) -> np.ndarray:
        """sin(|k| t)/|k| with the analytic limit t at k = 0."""
        # np.sinc(z) = sin(pi z)/(pi z), so t*sinc(|k|t/pi) = sin(|k|t)/|k|
        # including the k = 0 limit.
        return t * np.sinc(self.grid.kmag * (t / np.pi))


def heat_propagate(psi: np.ndarray, t: float, bank: MultiplierBank) -> np.ndarray:
    """Apply the dissipative free semigroup e^{-(i+eps) t (-Delta)} to a spinor.

    Forward-only: t < 0 raises, because the heat factor e^{-eps t |k|^2}
    is a contraction only for t >= 0.
    """
    if t < 0:
        raise ValueError("heat_propagate requires t >= 0")
    return apply_multiplier(psi, bank.heat(t), bank.grid)


def wave_propagate(
    a0: np.ndarray,
    adot0: np.ndarray,
    t: float,
    alpha: float,
    bank: MultiplierBank,
) -> tuple:
    """Homogeneous solution of alpha^2 d_tt A = Delta A at time t, plus d_t A.

    Mode-wise:
      A(t)   = cos(|k| t/alpha) a0 + alpha sinc(|k| t/alpha) adot0
      d_t A  = -(|k|/alpha) sin(|k| t/alpha) a0 + cos(|k| t/alpha) adot0
    which conserves |k|^2 |A|^2 + alpha^2 |d_t A|^2 exactly per mode.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    grid = bank.grid
    s = t / alpha
    c = bank.wave_cos(s)
    snc = bank.wave_sinc(s)
    a_hat = fft_forward(a0, grid)
    adot_hat = fft_forward(adot0, grid)
    new_a = c * a_hat + alpha * snc * adot_hat
    new_adot = -(grid.k2 * snc / alpha) * a_hat + c * adot_hat
    a_t = fft_inverse(new_a, grid)
    adot_t = fft_inverse(new_adot, grid)
    if np.isrealobj(a0) and np.isrealobj(adot0):
        return a_t.real, adot_t.real
    return a_t, adot_t


def fourier_resample(f: np.ndarray, n_new: int, grid: Grid) -> tuple:
    """Trigonometric resampling to n_new points per axis on the same box.

    Zero-pads (refinement) or truncates (coarsening) the spectrum axis by
    axis with proper Nyquist splitting, so band-limited fields keep their
    values and L2 norm exactly. Returns (resampled field, new Grid).
    """
    import scipy.signal

    _check_shape(f, grid)
    out = f
    for ax in _SPATIAL_AXES:
        out = scipy.signal.resample(out, n_new, axis=ax)
    new_grid = Grid(n_new, grid.length)
    if np.isrealobj(f):
        out = out.real
    return out, new_grid


def inner(f: np.ndarray, g: np.ndarray, grid: Grid) -> complex:
    """L2 inner product <f, g> = h^3 sum conj(f) g over all leading axes."""
    return complex(np.vdot(f, g) * grid.cell_volume)


def norm_l2(f: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt((np.abs(f) ** 2).sum() * grid.cell_volume))


def norm_h1(f: np.ndarray, grid: Grid) -> float:
    """Sobolev H^1 norm via the (1+|k|^2) multiplier, Parseval-weighted."""
    fhat = fft_forward(f, grid)
    w = (1.0 + grid.k2) * (np.abs(fhat) ** 2)
    return float(np.sqrt(w.sum() * grid.cell_volume / grid.num_modes))
