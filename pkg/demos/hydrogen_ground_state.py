"""
Hydrogen ground-state energy on the torus
=========================================

Samples the hydrogenic ground profile on a periodic box, evaluates its
Rayleigh quotient under the spectral kinetic operator and the lattice-summed
Coulomb potential, and shows the refinement behavior toward -Z^2/4.

The periodic Coulomb kernel has its zero mode removed, which shifts every
energy by a constant Z xi / L; energy_report records that shift so the
continuum comparison is explicit rather than folded in silently.

CLI equivalent: mpsim hydrogen --n 64 --length 40
"""

import numpy as np

from mpsim import Grid, SimParams, SimState, energy_report, make_hydrogen_ground_state

Z, L = 1.0, 40.0

print(f"Z = {Z:g}, box L = {L:g}, target E = -Z^2/4 = {-Z * Z / 4.0}")
print(f"{'n':>4} {'h':>7} {'raw total':>12} {'shift':>10} {'corrected':>12} {'rel err':>9}")

prev = None
for n in (32, 48, 64, 96, 128):
    grid = Grid(n, L)
    params = SimParams(grid=grid, epsilon=0.0, dt=0.01, t_end=0.0, alpha=1.0, z=Z)
    psi, meta = make_hydrogen_ground_state(grid, Z)
    zero = np.zeros((3,) + grid.shape)
    rep = energy_report(SimState(psi, zero, zero.copy()), params)
    e = rep.continuum_total
    rel = abs(e + 0.25) / 0.25
    print(
        f"{n:>4} {grid.spacing:>7.4f} {rep.total:>12.6f} {rep.mean_shift:>10.6f} "
        f"{e:>12.8f} {rel:>9.2e}"
    )
    if meta["warnings"]:
        print(f"     warnings: {meta['warnings']}")
    prev = e

# kinetic/Coulomb split at the blessed resolution; the virial ratio of the
# continuum ground state is <V>/<T> = -2 and the cusp quadrature error is
# what keeps the sampled profile slightly off it
grid = Grid(64, L)
params = SimParams(grid=grid, epsilon=0.0, dt=0.01, t_end=0.0, alpha=1.0, z=Z)
psi, _ = make_hydrogen_ground_state(grid, Z)
zero = np.zeros((3,) + grid.shape)
rep = energy_report(SimState(psi, zero, zero.copy()), params)
coulomb_cont = rep.coulomb + rep.mean_shift * rep.norm**2
print(f"\nn = 64 split: T = {rep.kinetic:.6f}, V = {coulomb_cont:.6f}, "
      f"V/T = {coulomb_cont / rep.kinetic:.4f} (continuum -2)")
