"""
A state that violates I3322 but not CH
======================================

The two-qubit family rho_CG(p) violates I3322 for large p even though its
correlation matrix rules out any CH or CHSH violation.
"""

from bellbound import bell, lb, states, ub

i3322 = bell.named("i3322")

# %%
# Horodecki's criterion on the two largest singular values of T.

rho = states.collins_gisin(0.85)
values = lb.horodecki_values(rho)
print(f"s1^2 + s2^2 = {values.singular_sum:.4f}, CHSH violation: {values.violates}")

# %%
# The see-saw nevertheless finds measurements with a positive I3322 value.

result = lb.seesaw(rho, i3322, lb.SeesawConfig(restarts=20))
print(f"I3322 lower bound at p=0.85: {result.value:.6f}")

# %%
# At p = 0.5 the fixed-trace dual, maximized over trace profiles, certifies
# that no measurements can violate the inequality.

bound = ub.ub_enumerate_profiles(i3322, states.collins_gisin(0.5))
print(f"I3322 upper bound at p=0.5: {bound.value:.2e} (best profile {bound.best_profile})")
