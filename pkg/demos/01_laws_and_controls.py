# %% [markdown]
# # Offspring laws, schedules and control families
#
# A model is an offspring schedule (one law per generation), a control
# family phi(k) giving the number of progenitors when k individuals are
# present, and an initial size.

# %%
import numpy as np

from cpve import (BinomialControl, Capped, Geometric, Identity, ModelSpec, PoissonControl,
                  Tabulated, constant_schedule, dumps_model)
from cpve.schedule import Convergent, ParametricSchedule

law = Tabulated.from_mapping({0: 0.1, 1: 0.1, 3: 0.8})
print("mean, variance, second moment:", law.moments())
print("pgf at 0.5:", law.pgf(0.5))

# %% [markdown]
# Schedules can vary with the generation.  Here alpha_n = 0.4 + 0.3 * 0.5^n,
# so the mean decreases to 2/3.

# %%
sched = ParametricSchedule("geometric", Convergent(0.4, 0.3, 0.5))
print([round(sched.mean(n), 4) for n in range(6)])

# %% [markdown]
# Each control family exposes E(k), Var phi(k) and the ratio E(k)/k in closed form.

# %%
k = np.arange(1, 9)
for ctrl in (Identity(), BinomialControl(0.5), BinomialControl(0.5, removed=2), PoissonControl(0.8), Capped(5)):
    print(f"{ctrl!r:45s} E(k)/k = {np.round(np.asarray(ctrl.mean(k), dtype=float) / k, 3)}")

# %% [markdown]
# Models round-trip through the TOML model-file format.

# %%
model = ModelSpec(constant_schedule(law), BinomialControl(0.5), 1)
print(dumps_model(model))
