"""Energy functionals, conservation-law residuals, scaling studies, and
series emission.

Everything a run reports is computed here from state snapshots; the CLI and
the tests only move these numbers around. Energies follow the convention of
the rest of the package: the kinetic and dissipation functionals see the
regularized potential A~ = Lambda_eps^{-1} A, while the field energy F is
evaluated on the raw (A, d_t A) pair.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BlowupError
from .pauli_algebra import pauli_current, pauli_first_order, pauli_op_apply
from .spectral import (
    Grid,
    MultiplierBank,
    apply_multiplier,
    curl,
    dealias,
    divergence,
    fft_forward,
    norm_l2,
)
from .state import SimParams, SimState, make_coulomb

__all__ = [
    "EnergyReport",
    "energy_report",
    "continuity_residual",
    "scaling_curve",
    "scaling_fit",
    "uniform_bound_monitor",
    "linear_fit",
    "SeriesCollector",
    "CSV_COLUMNS",
]


@dataclass(frozen=True)
class EnergyReport:
    """All named functionals of one state.

    total = kinetic + coulomb + field * norm^2. mean_shift is the torus
    Coulomb constant z*xi/L recorded so continuum comparisons stay explicit:
    continuum_total adds mean_shift * norm^2 back. grad_norm and a_norm feed
    the uniform-bound monitors and are not part of the CSV row set.
    """

    time: float
    norm: float
    kinetic: float
    coulomb: float
    field: float
    total: float
    dissipation_rate: float
    mean_shift: float
    grad_norm: float
    a_norm: float

    @property
    def continuum_total(self) -> float:
        return self.total + self.mean_shift * self.norm**2


def _regularized(a: np.ndarray, bank: MultiplierBank):
    if not np.any(a):
        return None
    return apply_multiplier(a, bank.lam_eps_inv, bank.grid)


def _h_apply(psi, atil, v, grid):
    """Full Hamiltonian H(A~) psi = [sigma.(p+A~)]^2 psi + V psi, dealiased
    products, matching the stepper's generator on band-limited states."""
    out = pauli_op_apply(psi, atil, grid, check_gauge=False)
    if v is not None:
        out = out + dealias(v * psi, grid)
    return out


def energy_report(
    state: SimState,
    params: SimParams,
    *,
    bank: MultiplierBank | None = None,
    potential=None,
) -> EnergyReport:
    """Evaluate every energy functional and the dissipation rate at a state.

    Raises BlowupError on non-finite input; all outputs are finite floats.
    """
    grid = params.grid
    if not (
        np.isfinite(state.psi).all()
        and np.isfinite(state.a).all()
        and np.isfinite(state.a_dot).all()
    ):
        raise BlowupError(f"non-finite state at t = {state.time:.6g}")
    bank = bank if bank is not None else MultiplierBank(grid, params.epsilon)
    pot = potential if potential is not None else make_coulomb(
        grid, params.z, params.nucleus_pos
    )
    psi = state.psi
    atil = _regularized(state.a, bank)

    first = pauli_first_order(psi, atil, grid)
    kinetic = norm_l2(first, grid) ** 2

    v = pot.values if params.z > 0 else None
    density = (psi.real**2 + psi.imag**2).sum(axis=0)
    coulomb = float((v * density).sum() * grid.cell_volume) if v is not None else 0.0

    alpha = params.alpha
    b = curl(state.a, grid)
    field = (
        norm_l2(b, grid) ** 2 + alpha**2 * norm_l2(state.a_dot, grid) ** 2
    ) / (8.0 * np.pi * alpha**2)

    nrm = norm_l2(psi, grid)
    total = kinetic + coulomb + field * nrm**2

    h_psi = _h_apply(psi, atil, v, grid)
    h_sq = norm_l2(h_psi, grid) ** 2
    h_exp = float((np.vdot(psi, h_psi) * grid.cell_volume).real)
    # variance form; roundoff cancellation near eigenstates is clamped at 0
    variance = max(h_sq - h_exp**2, 0.0)
    rate = -2.0 * params.epsilon * variance

    psi_hat = fft_forward(psi, grid)
    pw = grid.cell_volume / grid.num_modes
    grad_norm = float(np.sqrt(pw * (grid.k2 * (np.abs(psi_hat) ** 2)).sum()))

    return EnergyReport(
        time=state.time,
        norm=nrm,
        kinetic=kinetic,
        coulomb=coulomb,
        field=field,
        total=total,
        dissipation_rate=rate,
        mean_shift=pot.mean_shift,
        grad_norm=grad_norm,
        a_norm=norm_l2(state.a, grid),
    )


def continuity_residual(
    state_before: SimState,
    state_after: SimState,
    dt: float,
    params: SimParams,
    *,
    bank: MultiplierBank | None = None,
) -> float:
    """L2 residual of div J + d_t rho with rho = -alpha |psi|^2.

    Centered realization: the time derivative is the two-point difference
    over dt and the current is the average of the two endpoint currents, so
    the residual vanishes at the quadrature order for exact trajectories.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = params.grid
    bank = bank if bank is not None else MultiplierBank(grid, params.epsilon)

    def current(state):
        atil = _regularized(state.a, bank)
        return pauli_current(state.psi, atil, params.alpha, grid, check_gauge=False)

    j_mid = 0.5 * (current(state_before) + current(state_after))
    rho_b = (state_before.psi.real**2 + state_before.psi.imag**2).sum(axis=0)
    rho_a = (state_after.psi.real**2 + state_after.psi.imag**2).sum(axis=0)
    rho_dot = -params.alpha * (rho_a - rho_b) / dt
    return norm_l2(divergence(j_mid, grid) + rho_dot, grid)


def scaling_curve(psi, a, params: SimParams, lambdas) -> list:
    """Energies of the dilated family psi_l(x) = l^{3/2} psi(l x), A_l = l A(l x).

    The dilation is realized exactly by reinterpreting the same samples on a
    box of length L/l with the nucleus at R/l, so no resampling error enters
    at any l > 0. Returns [(l, T, V + F)]; the field energy term is the
    static F[A, 0] and the kinetic term uses the raw (unregularized) A,
    matching the energy split the dilation law is stated for. Non-positive
    l values are skipped with a warning.
    """
    grid = params.grid
    nucleus = np.asarray(params.nucleus_pos, dtype=float)
    out = []
    for lam in lambdas:
        if lam <= 0:
            warnings.warn(f"skipping non-positive scaling factor {lam}")
            continue
        g = Grid(grid.n, grid.length / lam)
        psi_l = lam**1.5 * psi
        a_l = lam * a if a is not None else None
        kinetic = norm_l2(pauli_first_order(psi_l, a_l, g), g) ** 2
        pot_energy = 0.0
        if params.z > 0:
            pot = make_coulomb(g, params.z, tuple(nucleus / lam))
            density = (psi_l.real**2 + psi_l.imag**2).sum(axis=0)
            pot_energy = float((pot.values * density).sum() * g.cell_volume)
        field = 0.0
        if a_l is not None:
            field = norm_l2(curl(a_l, g), g) ** 2 / (8.0 * np.pi * params.alpha**2)
        out.append((float(lam), kinetic, pot_energy + field))
    return out


def scaling_fit(curve) -> dict:
    """Least-squares coefficients and relative residuals of T = c2 l^2 and
    (V+F) = c1 l against a scaling_curve result."""
    lams = np.array([row[0] for row in curve])
    t_vals = np.array([row[1] for row in curve])
    vf_vals = np.array([row[2] for row in curve])
    c2 = float((lams**2 * t_vals).sum() / (lams**4).sum())
    c1 = float((lams * vf_vals).sum() / (lams**2).sum())
    t_pred = c2 * lams**2
    vf_pred = c1 * lams
    t_scale = np.abs(t_pred).max() or 1.0
    vf_scale = np.abs(vf_pred).max() or 1.0
    return {
        "kinetic_coeff": c2,
        "kinetic_residual": float(np.abs(t_vals - t_pred).max() / t_scale),
        "potential_coeff": c1,
        "potential_residual": float(np.abs(vf_vals - vf_pred).max() / vf_scale),
    }


def linear_fit(x, y) -> tuple:
    """(slope, intercept, r_squared) of a least-squares line."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot <= 1e-28 * max(1.0, float((y**2).sum())):
        # constant series: an essentially exact fit counts as perfect
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float((y**2).sum())) else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


def uniform_bound_monitor(
    series,
    *,
    initial_window: float = 0.2,
    ratio_tol: float = 1.05,
    envelope_slack: float = 0.05,
) -> dict:
    """Boundedness check over a run's EnergyReport series.

    grad_norm and field must stay within ratio_tol of their maxima over the
    first initial_window fraction of samples, so the series should start
    from a field-equilibrated state (a cold start's charge-up transient is
    real growth, not a bound violation). The |A| check fits a line plus an
    oscillation band to the first half and flags later samples that escape
    that envelope by more than envelope_slack of the peak: stationary
    oscillation passes, super-linear growth does not. Returns the empirical
    numbers plus per-monitor booleans; makes no claim about any continuum
    constants.
    """
    if len(series) < 4:
        raise ValueError("uniform_bound_monitor needs at least 4 samples")
    times = np.array([r.time for r in series])
    grad = np.array([r.grad_norm for r in series])
    fld = np.array([r.field for r in series])
    a_norm = np.array([r.a_norm for r in series])
    k = max(1, int(np.ceil(initial_window * len(series))))
    floor = 1e-12

    grad0 = grad[:k].max()
    fld0 = fld[:k].max()

    half = len(series) // 2
    slope, intercept, r2 = linear_fit(times[:half], a_norm[:half])
    band = float((a_norm[:half] - (intercept + slope * times[:half])).max())
    envelope = intercept + slope * times + max(band, 0.0)
    overshoot = float((a_norm - envelope).max())
    a_scale = max(float(a_norm.max()), floor)

    out = {
        "grad_initial_max": float(grad0),
        "grad_max": float(grad.max()),
        "grad_ok": bool(grad.max() <= ratio_tol * grad0 + floor),
        "field_initial_max": float(fld0),
        "field_max": float(fld.max()),
        "field_ok": bool(fld.max() <= ratio_tol * fld0 + floor),
        "a_norm_max": float(a_norm.max()),
        "a_envelope_slope": slope,
        "a_envelope_intercept": intercept,
        "a_envelope_r2": r2,
        "a_envelope_band": band,
        "a_envelope_overshoot": overshoot,
        "a_envelope_ok": bool(overshoot <= envelope_slack * a_scale + floor),
    }
    out["ok"] = out["grad_ok"] and out["field_ok"] and out["a_envelope_ok"]
    return out


CSV_COLUMNS = (
    "t",
    "norm",
    "kinetic",
    "coulomb",
    "field",
    "total",
    "dissipation_rate",
    "div_residual",
    "continuity_residual",
)


class SeriesCollector:
    """Run observer accumulating one diagnostics row per sampled state.

    div_residual is max(|div A|, |div d_t A|) over the grid; the continuity
    residual is taken against the previously sampled state (0.0 on the first
    row, which has no predecessor). Rows serialize with repr-exact floats so
    identical runs produce byte-identical CSV files.
    """

    def __init__(self, params: SimParams):
        self.params = params
        self.bank = MultiplierBank(params.grid, params.epsilon)
        self.potential = make_coulomb(params.grid, params.z, params.nucleus_pos)
        self.reports: list = []
        self.rows: list = []
        self._prev: SimState | None = None

    def __call__(self, state: SimState, step_report=None):
        grid = self.params.grid
        rep = energy_report(state, self.params, bank=self.bank, potential=self.potential)
        div_res = max(
            float(np.abs(divergence(state.a, grid)).max()),
            float(np.abs(divergence(state.a_dot, grid)).max()),
        )
        if self._prev is None:
            cont = 0.0
        else:
            cont = continuity_residual(
                self._prev, state, state.time - self._prev.time,
                self.params, bank=self.bank,
            )
        self.reports.append(rep)
        self.rows.append(
            (
                rep.time,
                rep.norm,
                rep.kinetic,
                rep.coulomb,
                rep.field,
                rep.total,
                rep.dissipation_rate,
                div_res,
                cont,
            )
        )
        self._prev = state

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_COLUMNS) + "\n")
            for row in self.rows:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    def summary(self) -> dict:
        if not self.reports:
            return {"samples": 0}
        totals = [r.total for r in self.reports]
        diffs = np.diff(totals)
        scale = max(abs(t) for t in totals) or 1.0
        return {
            "samples": len(self.reports),
            "final_time": self.reports[-1].time,
            "final_norm": self.reports[-1].norm,
            "max_norm_drift": max(abs(r.norm - 1.0) for r in self.reports),
            "initial_total": totals[0],
            "final_total": totals[-1],
            "energy_drop": totals[0] - totals[-1],
            "energy_drop_rate": (
                (totals[0] - totals[-1]) / (self.reports[-1].time - self.reports[0].time)
                if self.reports[-1].time > self.reports[0].time
                else 0.0
            ),
            "energy_monotone": bool((diffs <= 1e-12 * scale).all()) if len(diffs) else True,
            "min_dissipation_rate": min(r.dissipation_rate for r in self.reports),
            "max_div_residual": max(row[7] for row in self.rows),
            "max_continuity_residual": max(row[8] for row in self.rows),
            "mean_shift": self.reports[-1].mean_shift,
        }
