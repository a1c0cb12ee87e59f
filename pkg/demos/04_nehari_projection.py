# %% [markdown]
# # Projecting onto the Nehari set
#
# Any state whose components all have a positive part can be scaled
# componentwise onto the Nehari set. Coupling only pushes the amplitudes up,
# and they blow up as a component's positive part disappears.

# %%
import numpy as np

from nehari_forge.grid import Domain
from nehari_forge.nehari import (
    S_map,
    SystemParams,
    nehari_residual,
    normalize_to_sphere,
    project_to_nehari,
)

d = Domain.unit_square(48)
params = SystemParams(3, [1, 2], [[0, -0.8], [-0.3, 0]], 1, 1)
x, y = d.coordinates()
u = normalize_to_sphere(d, np.stack([np.sin(np.pi * x) * np.sin(np.pi * y) * (1 + x), np.sin(np.pi * x) * np.sin(2 * np.pi * y) ** 2]))
for t in (0, 0.5, 1):
    s, su = project_to_nehari(params, d, u, t)
    print(f"t={t}: s={np.round(s, 4)}  Nehari residual {np.abs(nehari_residual(params, d, su, t)).max():.1e}")
S = S_map(params, d, u, 1.0)
print("<S_i(u), u_i> =", [d.h1_inner(S[i], u[i]) for i in range(2)])

# %%
line = Domain.interval(4000)
phi = line.sine_mode((1,))
for eps in (1.4, 1.0, 0.6):
    v = normalize_to_sphere(line, np.stack([eps * phi - phi**2, phi]))
    print(f"eps={eps}: s_1 = {project_to_nehari(params, line, v, 1.0)[0][0]:.1f}")
