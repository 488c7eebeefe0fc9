# %% [markdown]
# # Command-line report
#
# `cpve report MODEL --seed S` writes one deterministic JSON document with
# criteria verdicts, exact brackets, Monte Carlo estimates and martingale
# statistics.  The same calls are available in-process through `cpve.cli.main`.

# %%
import json
import tempfile
from pathlib import Path

from cpve.cli import main

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

with tempfile.TemporaryDirectory() as out:
    code = main(["report", str(FIXTURES / "binomial_control.toml"), "--seed", "5", "--horizon", "30",
                 "--replications", "2000", "--k-max", "1000", "--n-max", "200", "--output-dir", out])
    doc = json.loads((Path(out) / "report.json").read_text())

print("exit code", code)
print("sections:", sorted(doc))
print("theorem5 report:", doc["criteria"]["reports"]["theorem5"]["conclusion"])
print("survival CI:", doc["monte_carlo"]["survival_ci"])
