"""Closed-system error against the two linear bounds for a random gapped instance."""
import numpy as np

from swtbounds.closed import epsilon_closed
from swtbounds.linalg import op_norm
from swtbounds.rng import random_closed_instance

inst = random_closed_instance(seed=42)
vn = op_norm(inst.v)
print(f"dim {inst.h0.shape[0]}, band rank {inst.split.rank}, ||V||/gap = {vn / inst.split.gap:.3f}")

tr = epsilon_closed(inst.h0, inst.v, inst.split, inst.observable, np.linspace(0, 20 / vn, 11))
print(f"{'t*||V||':>8} {'eps':>10} " + " ".join(f"{k:>10}" for k in tr.bounds))
for i, t in enumerate(tr.times):
    cols = " ".join(f"{tr.bounds[k][i]:10.4f}" for k in tr.bounds)
    print(f"{t * vn:8.2f} {tr.epsilon[i]:10.4f} {cols}")
