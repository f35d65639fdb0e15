"""
Hidden nonlocality revealed by local filtering
==============================================

Local filters applied before a Bell test can turn a state without CHSH
violation into one with a violation.
"""

import numpy as np

from bellbound import lb, nonstandard, states

# %%
# Gisin's filter
# --------------
# Pick p between the thresholds with and without filtering.

theta = 0.35
th = states.gisin_thresholds(theta)
p = 0.5 * (th.pL_filtered + th.pL)
raw = states.gisin(p, theta)
filtered, success = nonstandard.apply_filter(raw, nonstandard.gisin_filters(theta))
print(f"p={p:.4f}  thresholds: filtered {th.pL_filtered:.4f}, unfiltered {th.pL:.4f}")
print("unfiltered CHSH max:", 2 * np.sqrt(lb.horodecki_values(raw).singular_sum))
print("filtered CHSH max:  ", 2 * np.sqrt(lb.horodecki_values(filtered).singular_sum))
print(f"filter success probability {success:.4f}")

# %%
# Popescu's projection
# --------------------
# Projecting a Werner state of dimension d at its local-model threshold onto
# a two-dimensional subspace on each side leaves a two-qubit Werner state.

for d in range(3, 8):
    out, _ = nonstandard.apply_filter(states.werner(d, 1 - 1 / d),
                                      nonstandard.popescu_projection(d))
    value = 2 * np.sqrt(lb.horodecki_values(out).singular_sum)
    print(f"d={d}: CHSH after projection {value:.5f}")
