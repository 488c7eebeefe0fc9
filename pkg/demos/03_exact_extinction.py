# %% [markdown]
# # Exact propagation and extinction brackets
#
# The law of Z_n is computed by composing probability generating functions.
# Truncated mass is never renormalized away, so each generation yields a
# rigorous bracket for P(Z_n = 0).

# %%
from pathlib import Path

from cpve import extinction_bounds, parse_model_file, propagate

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

gw = parse_model_file(FIXTURES / "gw_half.toml")
pmfs = propagate(gw, 60, 1e-12, state_cap=2**18, absorb_above=2**18)
lo, hi = extinction_bounds(pmfs)[60]
print(f"GW fixture: P(Z_60 = 0) in [{lo:.6f}, {hi:.6f}]; the extinction probability is 1/2")

# %% [markdown]
# With Binomial(k, 1/2) thinning, the pgf of the process reduces to
# h(s) = 1 - c + c f(s), which lets us check the engine against plain iteration.

# %%
model = parse_model_file(FIXTURES / "binomial_control.toml")
pmfs = propagate(model, 25, 1e-14)
f = model.offspring.law(0)
s = 0.0
for n, p in enumerate(pmfs):
    if n % 5 == 0:
        print(f"n={n:2d}  engine {p.mass[0]:.15f}  iteration {s:.15f}  leaked {p.leaked:.1e}")
    s = 0.5 + 0.5 * float(f.pgf(s))

# %%
capped = parse_model_file(FIXTURES / "capped.toml")
q = extinction_bounds(propagate(capped, 300, 1e-12))
print("capped control, P(Z_n = 0) at n = 50, 100, 300:", [round(q[n][0], 8) for n in (50, 100, 300)])
