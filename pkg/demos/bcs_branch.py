"""Self-consistent kink-BCS mean fields along the field axis of the J2 = 1 chain.

Prints the branch, the field where dDelta/dg peaks and the field where a bound
pair costs as much as two free quasiparticles.
"""
import numpy as np

from isingkz import bcs

g_values = np.linspace(0.0, 3.0, 13)
print("    g       rho      Delta      t_f        E0")
for s in bcs.sweep(g_values, n_k=2048):
    print(f"{s.g:5.2f}  {s.rho:8.5f}  {s.delta:8.5f}  {s.t_f:8.5f}  {s.e0_per_site:9.5f}")

print(f"peak of dDelta/dg at g = {bcs.locate_critical():.5f}")
print(f"crossover: perturbative {bcs.locate_crossover('perturbative'):.6f}, "
      f"self-consistent {bcs.locate_crossover('full_bcs'):.6f}")
