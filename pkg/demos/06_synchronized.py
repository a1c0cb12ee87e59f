# %% [markdown]
# # Synchronized solutions (w, rho w)
#
# The verdict depends only on exponents and coefficients. When it holds, a
# scalar two-term equation gives the common profile.

# %%
import numpy as np

from nehari_forge.grid import Domain
from nehari_forge.nehari import SystemParams
from nehari_forge.sync import nodal_ratio, sync_criterion, sync_solve, synchronized_ansatz_gap
from nehari_forge.system_solver import continue_in_t, relative_residual

good = SystemParams(3, [1, 4], [[0, -2], [-1, 0]], 1, 1)
bad = SystemParams(3, [1, 1], [[0, -1], [-0.25, 0]], 1, 1)
print(sync_criterion(good))
print(sync_criterion(bad))

d = Domain.unit_square(48)
u = sync_solve(good, d)
print("residual:", relative_residual(good, d, u, 1.0), " ratio range:", np.ptp(nodal_ratio(u)))

# %%
w, _ = continue_in_t(bad, d)
print("violating case: ratio variance", np.var(nodal_ratio(w)), " ansatz gap", synchronized_ansatz_gap(bad, d, w))
