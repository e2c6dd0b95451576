# %% [markdown]
# # Generating a benchmark
#
# Synthetic plans are random series-parallel DAGs with an exact node-plus-edge
# count. Each instance draws from its own seeded generator, so runs are
# reproducible regardless of parallelism.

# %%
import json
import tempfile
from collections import Counter
from pathlib import Path

from asyncplan.synth import GenConfig, assemble_dataset, gen_prototypical_batch, generate_instances

config = GenConfig(complexity_range=(10, 40), seed=7)
instances = generate_instances(62, config, jobs=2)
print(Counter(i.complexity for i in instances).most_common(3))

# %%
first = instances[0]
print(first.id, first.complexity, first.dag.format_time(first.gold))
print(first.graphs["edge_list"])

# %%
out = Path(tempfile.mkdtemp())
manifest = assemble_dataset(instances, out, regimes=["zero_shot", "plag_bag"], templates=range(1, 3),
                            economic=[False, True], graph_formats=["adjacency_list"], config=config, seed=7)
print(json.dumps({k: manifest[k] for k in ("n_instances", "n_prompts", "complexity_bins")}, indent=1))

# %% [markdown]
# The prototypical variant strips the story away and asks for a longest path
# over integer weights.

# %%
proto = gen_prototypical_batch(3, 10, 12, seed=0)
print(proto[0].prompt)
print("gold:", proto[0].gold)
