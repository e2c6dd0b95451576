# %% [markdown]
# # Grading completions and comparing systems
#
# Answers are read from the right-most quoted duration. Two scripted responders
# stand in for models here: one always answers the gold, the other adds every
# step up as if nothing could run in parallel.

# %%
from asyncplan.duration import add, format_duration
from asyncplan.evalstats import compare_systems, format_table, grade, grade_completion
from asyncplan.synth import generate_instances

instances = generate_instances(200, seed=11)
records = {"plag_oracle": [], "sequential": []}
for inst in instances:
    answers = {
        "plag_oracle": inst.dag.format_time(inst.gold),
        "sequential": format_duration(add(*inst.plan.durations.values())),
    }
    for system, answer in answers.items():
        text = f'So the shortest possible time is "{answer}".'
        records[system].append(grade_completion(f"{system}:{inst.id}", text, inst.gold, inst.complexity,
                                                system, inst.id))

# %%
for system, recs in records.items():
    rep = grade(recs)
    print(system, round(rep.accuracy, 3), {f"{lo}-{hi}": round(a, 2) for (lo, hi), a in rep.bin_accuracy().items()})

# %% [markdown]
# McNemar's test on the discordant instances, corrected with Holm's step-down
# procedure. A dagger marks a significant win.

# %%
print(format_table(compare_systems(records)))
