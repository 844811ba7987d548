"""Light cone of a local perturbation in the PXP chain (N=10, a few minutes)."""
import numpy as np

from swtbounds.closed import front_fit, light_cone
from swtbounds.lattice import SY, build_pxp, local_term

n, omega = 10, 2.0
times = np.linspace(0, 5.2, 53)
for delta0 in (10.0, 100.0):
    h0, v = build_pxp(n, delta0, omega)
    grid = light_cone(h0.total() + v.total(), local_term(SY, (1,), n), n, times)
    fit = front_fit(grid, 1.0)
    print(f"delta0 = {delta0:5.0f}: velocity {fit.velocity:.3f}, R^2 {fit.r_squared:.5f}")
    for site, tc in sorted(fit.crossings.items()):
        print(f"    site {site:2d} reached at t = {tc:.3f}")
