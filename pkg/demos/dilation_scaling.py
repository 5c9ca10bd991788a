"""
Dilation scaling of the energy pieces
=====================================

The kinetic term scales like lambda^2 under psi(x) -> lambda^{3/2}
psi(lambda x), A(x) -> lambda A(lambda x), while the Coulomb and field terms
scale like lambda. That split is why the total can be driven to -infinity
once the lambda coefficient goes negative: the lambda^2 piece cannot save a
negative slope at the origin of the (T, V+F) parabola.

scaling_curve realizes the dilation exactly (the same samples reread on a
box of length L/lambda), so the fit residuals are roundoff, not quadrature.

CLI equivalent: mpsim scaling --lambdas 0.5,1,2,4
"""

import numpy as np

from mpsim import (
    Grid,
    SimParams,
    make_divfree_random_field,
    make_gaussian_packet,
    scaling_curve,
    scaling_fit,
)

grid = Grid(24, 10.0)
params = SimParams(grid=grid, epsilon=1e-2, dt=0.01, t_end=0.0, alpha=1.0, z=1.0)
psi = make_gaussian_packet(grid, width=1.0)
a = make_divfree_random_field(grid, 0.3, seed=3)

lambdas = (0.5, 1.0, 2.0, 4.0)
curve = scaling_curve(psi, a, params, lambdas)

print(f"{'lambda':>7} {'T':>12} {'V + F':>12} {'T/l^2':>12} {'(V+F)/l':>12}")
for lam, t, vf in curve:
    print(f"{lam:>7.2f} {t:>12.6f} {vf:>12.6f} {t / lam**2:>12.6f} {vf / lam:>12.6f}")

fit = scaling_fit(curve)
print(f"\nfit: T = {fit['kinetic_coeff']:.6f} l^2   residual {fit['kinetic_residual']:.2e}")
print(f"     V+F = {fit['potential_coeff']:.6f} l   residual {fit['potential_residual']:.2e}")

t1, vf1 = fit["kinetic_coeff"], fit["potential_coeff"]
if vf1 < 0:
    lam_star = -vf1 / (2.0 * t1)
    print(f"parabola minimum at lambda* = {lam_star:.4f}, E(lambda*) = {-vf1**2 / (4 * t1):.6f}")
else:
    print("V + F > 0 for this pair: the energy grows in every dilation direction")
