"""Strong dissipation freezes dynamics into the decoherence-free subspace.

One driven atom saturates at a small constant; two atoms with joint decay
drift slowly at a rate set by the second-order effective jump.
"""
import numpy as np

from swtbounds.opensys import build_example1, build_example2, epsilon_open, saturation_value, slope_fit

delta0, omega = 1.0, 0.05

m, o = build_example1(delta0, omega)
tr = epsilon_open(m, o, np.linspace(0, 40, 401))
print(f"single atom: saturation {saturation_value(tr):.6f}, "
      f"closed form {2 * omega * delta0 / (2 * delta0**2 + omega**2):.6f}")

m, o = build_example2(delta0, omega)
tr = epsilon_open(m, o, np.linspace(0, 400, 801))
slope = slope_fit(tr, (40, 400))
print(f"two atoms: slope {slope:.3e} vs omega^2/4delta0 = {omega**2 / (4 * delta0):.3e}")
print(f"  max eps/bound {np.max(tr.epsilon[1:] / tr.bounds['bound_exact'][1:]):.3f}")
