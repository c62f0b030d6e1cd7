"""Kink density after linear ramps through the critical point of the NN chain.

Prints the numerically integrated density next to the Landau-Zener closed form
and the fitted exponent.
"""
from isingkz import analysis, integrable
from isingkz.protocols import momentum_grid

grid = momentum_grid(None, 2048)
taus = [8.0, 16.0, 32.0, 64.0, 128.0]
rho = []
for tau in taus:
    ensemble, protocol = integrable.linear_ramp_ensemble(tau, grid)
    final = integrable.evolve_modes(ensemble, protocol, 0.0)
    rho.append(integrable.excitation_density(final))
    closed = integrable.kink_density_closed(tau)
    print(f"tauQ={tau:6.1f}  rho={rho[-1]:.6f}  closed form={closed:.6f}  ratio={rho[-1] / closed:.4f}")

fit = analysis.fit_power_law(taus, rho)
print(f"rho ~ tauQ^{fit.exponent:.4f}")
