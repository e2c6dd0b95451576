# %% [markdown]
# # Solving small asynchronous plans
#
# A plan is a list of timed steps plus "A before B" constraints. With as many
# workers as we like, the shortest completion time is the longest path through
# the plan DAG, where each edge carries the duration of the step it leaves.

# %%
import json
from pathlib import Path

from asyncplan import Plan, build_dag, critical_path, optimal_makespan
from asyncplan.textio import serialize_adjacency_list, serialize_edge_list, serialize_time_mapping

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
calzones = Plan.from_dict(json.loads((DATA / "calzones.json").read_text()))
dag = build_dag(calzones)

# %%
for step in calzones.steps:
    print(f"{step.index}. {step.text} ({step.duration})")
print([tuple(c) for c in calzones.constraints])

# %% [markdown]
# The dough has to rest while the filling is prepared, so the two branches run
# side by side and only the longer one matters.

# %%
print("makespan:", dag.format_time(optimal_makespan(dag)))
print("critical path:", critical_path(dag))

# %% [markdown]
# The same DAG in the textual shapes used inside prompts.

# %%
print(serialize_adjacency_list(dag))
print(serialize_time_mapping(dag))
print(serialize_edge_list(dag))

# %% [markdown]
# Longer horizons work the same way; the answer is displayed in the plan's own
# coarsest unit so a plan written in days is answered in days.

# %%
video = build_dag(Plan.from_dict(json.loads((DATA / "video_game.json").read_text())))
print(video.format_time(optimal_makespan(video)))
