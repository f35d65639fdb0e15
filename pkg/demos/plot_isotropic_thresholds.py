"""
Isotropic states and the CHSH inequality
========================================

For each local dimension we compute the largest isotropic weight p for which
no CHSH violation is possible, and compare it with separability and known
local-model thresholds.
"""

from bellbound import bell, states, ub

# %%
# Numerical route: enumerate trace profiles of the observables, solve the
# fixed-trace dual for each, and bisect on p.

chsh = bell.named("chsh")
for d in (2, 3):
    p, _ = ub.ub_threshold(chsh, lambda t, d=d: states.isotropic(d, t), d)
    print(f"d={d}: numerical threshold {p:.5f}")

# %%
# Semianalytic route: the bound only needs the largest singular value of the
# traceless correlation block, which is linear in p.

print(" d   p_sep    p_ub     p_lhv_proj  p_lhv_povm")
for d in (2, 3, 4, 5, 10):
    p = ub.semianalytic_threshold(lambda t, d=d: states.isotropic(d, t), d)
    th = states.thresholds("isotropic", d)
    print(f"{d:2d}  {th.p_sep:.5f}  {p:.5f}  {th.p_proj_lhv:.5f}     {th.p_povm_lhv:.5f}")

# %%
# Between the separability threshold and the CHSH threshold the state is
# entangled yet certified not to violate CHSH.
