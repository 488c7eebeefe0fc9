# %% [markdown]
# # The normalized process W_n = Z_n / r_n
#
# With tau = lim E(k)/k and r_n = tau^n prod m_i, W_n is a supermartingale
# when E(k)/k never exceeds tau, and a martingale when the two are equal.

# %%
from pathlib import Path

import numpy as np

from cpve import (build_normalizer, check_thm6_hypotheses, monte_carlo, parse_model_file,
                  prop1_profile, second_moment_recursion, supermartingale_check, w_statistics)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
binom = parse_model_file(FIXTURES / "binomial_control.toml")
removal = parse_model_file(FIXTURES / "removal_control.toml")

print("binomial control E[W_n]:", np.round(supermartingale_check(binom, 12, 1e-14).points, 12))
print("removal control  E[W_n]:", np.round(supermartingale_check(removal.with_initial(4), 12).points, 6))

# %%
res = second_moment_recursion(binom, 12, 1e-14)
for row in res.rows[::3]:
    print(f"n={row.n:2d}  E[W^2] direct {row.direct[0]:.12f}  recursion {row.recursive:.12f}")

# %% [markdown]
# Terminal E[W_H] / N and the extinction bracket for growing initial sizes.

# %%
for row in prop1_profile(removal, 10, sizes=(1, 4, 16, 64)):
    print(row)

# %%
rep = monte_carlo(binom, 60, 5000, 11, pop_cap=10**15)
stats = w_statistics(rep, build_normalizer(binom, 60))
print(f"P(W_60 > 0) = {stats.p_w_positive:.4f}, survival = {rep.survival_at_horizon:.4f}")
print("check_thm6_hypotheses:", check_thm6_hypotheses(binom, k_max=1000, n_max=200).conclusion)
