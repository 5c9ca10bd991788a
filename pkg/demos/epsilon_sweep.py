"""
Damping strength against the decay rate
=======================================

Repeats one short free-packet run while sweeping the damping parameter over
a decade, at a FIXED step size so every run carries identical quadrature
error. The measured energy-decay rate per unit time tracks epsilon linearly,
which is the mechanism behind the vanishing-epsilon limit: damping switches
off proportionally, with nothing nonlinear hiding underneath.

CLI equivalent: mpsim epsilon-sweep --epsilons 1e-1,3e-2,1e-2
"""

import numpy as np

from mpsim import Grid, SeriesCollector, SimParams, SimState, linear_fit, make_gaussian_packet, run

grid = Grid(24, 10.0)
eps_list = [10.0**e for e in np.linspace(-1.0, -2.0, 6)]

rates = []
for eps in eps_list:
    params = SimParams(grid=grid, epsilon=eps, dt=0.02, t_end=0.6, alpha=1.0, z=0.0)
    psi = make_gaussian_packet(grid, width=1.0)
    zero = np.zeros((3,) + grid.shape)
    coll = SeriesCollector(params)
    run(params, SimState(psi, zero, zero.copy()), observers=[coll], sample_every=5)
    rates.append(coll.summary()["energy_drop_rate"])

print(f"{'epsilon':>10} {'decay rate':>12} {'rate/eps':>10}")
for eps, r in zip(eps_list, rates):
    print(f"{eps:>10.4e} {r:>12.5e} {r / eps:>10.5f}")

slope, intercept, r2 = linear_fit(np.log10(eps_list), np.log10(rates))
print(f"\nlog-log fit: slope {slope:.4f}, R^2 = {r2:.6f}")
print("slope 1 means the decay rate is proportional to epsilon over the decade")
