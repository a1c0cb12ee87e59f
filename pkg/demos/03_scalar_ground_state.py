# %% [markdown]
# # Scalar ground state of -Delta u = mu u^p
#
# The decoupled problem gives the starting point of the homotopy. Changing mu
# only rescales the solution by mu^(-1/(p-1)).

# %%
import numpy as np

from nehari_forge.grid import Domain
from nehari_forge.scalar_solver import least_energy_scalar

d = Domain.unit_square(64)
u1 = least_energy_scalar(1.0, 3.0, d)
u4 = least_energy_scalar(4.0, 3.0, d)
print("max u (mu=1):", u1.max(), " min:", u1.min())
print("u_4 vs u_1 / 2:", np.abs(u4 - 0.5 * u1).max())
print("Nehari identity ||u||^2 / int u^4 =", d.h1_inner(u1, u1) / d.lp_integral(u1, 4))

# %%
energies = []
for n in (32, 64, 128):
    dn = Domain.unit_square(n)
    u = least_energy_scalar(1.0, 3.0, dn)
    energies.append(0.25 * dn.h1_inner(u, u))
    print(f"n={n:4d}  energy {energies[-1]:.8f}")
