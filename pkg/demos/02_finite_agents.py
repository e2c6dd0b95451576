# %% [markdown]
# # When workers are scarce
#
# With `k` agents the problem becomes precedence-constrained scheduling on
# identical machines. Small plans are solved exactly by branch and bound; larger
# ones fall back to list scheduling or simulated annealing.

# %%
import json
from pathlib import Path

from asyncplan import Plan, build_dag, optimal_makespan
from asyncplan.scheduler import (
    AnnealParams,
    finite_makespan_exact,
    finite_makespan_heuristic,
    total_work,
)

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
breakfast = build_dag(Plan.from_dict(json.loads((DATA / "breakfast.json").read_text())))

# %%
for k in (1, 2, 3):
    sched = finite_makespan_exact(breakfast, k)
    print(f"k={k}: {breakfast.format_time(sched.makespan)}")
print("unlimited:", breakfast.format_time(optimal_makespan(breakfast)))
print("one agent does everything:", total_work(breakfast) // 60, "min")

# %% [markdown]
# Two cooks: one grinds and brews, the other toasts and then fries.

# %%
print(finite_makespan_exact(breakfast, 2).gantt())

# %% [markdown]
# Heuristics never beat the exact optimum and never lose to a single agent.

# %%
import numpy as np

from asyncplan.synth import GenConfig, gen_sp_dag

dag = gen_sp_dag(30, GenConfig(), np.random.default_rng(1))
exact = finite_makespan_exact(dag, 3).makespan
for method in ("list_schedule", "anneal"):
    h = finite_makespan_heuristic(dag, 3, method, AnnealParams(iterations=1000, seed=0))
    print(method, dag.format_time(h.makespan), "exact", dag.format_time(exact))
