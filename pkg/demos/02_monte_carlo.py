# %% [markdown]
# # Monte Carlo replications
#
# Paths are simulated in blocks; every block draws from its own child of the
# master seed, so results do not depend on the number of worker processes.

# %%
from pathlib import Path

from cpve import monte_carlo, parse_model_file, simulate_path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"
model = parse_model_file(FIXTURES / "gw_half.toml")

print("one path:", simulate_path(model, 15, 2024).z)

# %%
rep = monte_carlo(model, 200, 20_000, 2)
print(f"P(Z_200 = 0) ~ {rep.extinct_by_gen[-1]:.4f}; 95% survival CI {rep.survival_ci} (1 - q = 0.5)")
print("mid-band frequency (0 < Z <= 20) at n = 10, 50, 200:",
      [round(rep.mid_band_by_gen[n], 4) for n in (10, 50, 200)])

# %%
same = monte_carlo(model, 200, 20_000, 2, workers=2)
print("identical with two workers:", same.to_dict() == rep.to_dict())
