# %% [markdown]
# # Rendering prompts
#
# Every plan can be phrased under several prompting regimes. Graph-aware regimes
# additionally embed one of four graph encodings.

# %%
import json
from pathlib import Path

from asyncplan import Plan
from asyncplan.render import Regime, render_prompt
from asyncplan.textio import parse_task_block

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
plan = Plan.from_dict(json.loads((DATA / "calzones.json").read_text()))

# %%
print(render_prompt(plan, "zero_shot").text)

# %%
print(render_prompt(plan, Regime.PLAG_EXPLICIT, graph_format="csr").text[-600:])

# %% [markdown]
# Constraint sentences come from ten templates, and the economic form merges
# constraints that share a first step.

# %%
for t in (1, 5, 10):
    block = render_prompt(plan, "zero_shot", template=t, economic=True).text
    constraints = block.split("above steps:\n", 1)[1].split("\n\n", 1)[0]
    print(f"template {t}:\n{constraints}\n")

# %% [markdown]
# Rendering is invertible: parsing the text gives the plan back.

# %%
assert parse_task_block(render_prompt(plan, "zero_shot", template=7).text) == plan
print("round trip ok")
