# %% [markdown]
# # Profiles grow without bound with the interaction strength
#
# Solutions of -Delta w + a w^q = mu w^p get larger as a grows. The competition
# term also sharpens the profile near the boundary.

# %%
from nehari_forge.grid import Domain
from nehari_forge.sync import unboundedness_experiment

d = Domain.unit_square(64)
table = unboundedness_experiment(1.0, 3.0, 2.0, [0, 1, 10, 100, 300], d, workers=2)
for r in table.rows:
    print(f"a={r.a:6.1f}  ||w||={r.norm_w:9.3f}  int w^3={r.int_wq1:10.3f}  Nehari error {r.nehari_error:.1e}")
print("increasing:", table.increasing)

# %% [markdown]
# A lambda sweep for a generic competing pair: norms grow while the overlap
# integral eventually drops.

# %%
from nehari_forge.nehari import SystemParams
from nehari_forge.system_solver import lambda_sweep

params = SystemParams(3, [1, 1], [[0, -1], [-0.25, 0]], 1, 1)
for rep in lambda_sweep(params, Domain.unit_square(32), [1, 2, 5, 10, 20, 50, 100]):
    print(f"kappa={rep.kappa:5.0f}  norms={rep.norms[0]:.3f},{rep.norms[1]:.3f}  overlap={rep.overlaps['1-2']:.3f}  ok={rep.certified}")
