"""
Tsirelson's bound from both sides
=================================

The see-saw search gives a lower bound on the largest CHSH value a state can
reach, and the Lagrange-dual SDP gives an upper bound. For the singlet both
meet at 2 sqrt(2).
"""

import numpy as np

from bellbound import bell, lb, states, ub

# %%
# Lower bound by alternating optimization
# ---------------------------------------
# Each restart draws random POVMs for Alice and then alternates exact
# best responses. The best restart wins.

rho = states.singlet()
chsh = bell.named("chsh")
result = lb.seesaw(rho, chsh, lb.SeesawConfig(restarts=20, rng_seed=2024))
print(f"see-saw value     {result.value:.9f} after {result.sweeps} sweeps")

# %%
# The history of one restart never decreases, one entry per half-sweep.

print(np.round(result.history[:6], 6))

# %%
# Upper bound by the Lagrange dual
# --------------------------------

bound = ub.ub_state_independent(chsh, rho)
print(f"dual upper bound  {bound.value:.9f}")
print(f"2 sqrt(2)         {2 * np.sqrt(2):.9f}")

# %%
# The optimal Alice observables found by the search anticommute, as expected
# for a maximal CHSH violation.

a0, a1 = (bell.observable_from_povm(s) for s in result.measurements.alice)
print("|| {A0, A1} || =", np.linalg.norm(a0 @ a1 + a1 @ a0))
