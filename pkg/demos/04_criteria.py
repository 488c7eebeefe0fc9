# %% [markdown]
# # Extinction and survival criteria
#
# Every checker returns per-hypothesis verdicts (HOLDS, FAILS or
# INCONCLUSIVE) with numeric evidence, and draws a conclusion only when every
# hypothesis holds.

# %%
import json
from pathlib import Path

from cpve import (check_thm2, check_thm3, check_thm4, check_thm5, find_eta,
                  growth_rate_matrix, parse_model_file)

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def show(rep):
    print(rep.theorem, "->", rep.conclusion)
    for h in rep.hypotheses:
        print(f"   {h.verdict.value:12s} {h.name}  ({h.evidence.value})")


show(check_thm2(parse_model_file(FIXTURES / "subcritical_geometric.toml")))
show(check_thm3(parse_model_file(FIXTURES / "capped.toml")))

# %% [markdown]
# The binomial-control fixture is uniformly supercritical with eta = 1.25.
# The product lower bound on survival needs a large enough initial size; the
# checker reports the smallest size at which it is non-vacuous.

# %%
model = parse_model_file(FIXTURES / "binomial_control.toml")
print("eta =", find_eta(model))
rep = check_thm5(model, delta=0.1)
show(rep)
print(json.dumps({k: rep.bounds[k] for k in ("minimal_N", "vacuous", "bound_at_minimal_N")}, indent=2))

# %% [markdown]
# The second-moment survival condition cannot be met: d^2(k) >= E(k)^2 keeps
# gamma / eta^2 at 1 or above.  The report carries this as a diagnostic.

# %%
rep = check_thm4(parse_model_file(FIXTURES / "gw_half.toml"))
show(rep)
print("jensen diagnostic:", rep.diagnostics["jensen"])

# %%
print(growth_rate_matrix(model, 3, 6))
