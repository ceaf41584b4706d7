"""Run the 4x3 factorial experiment at desk scale and audit it.

The harness executes every load x norm cell against one shared population
and corpus, persists each cell's event log as JSON Lines, and writes a
manifest with SHA-256 digests so any rerun can be verified byte for byte.
The two descriptive audits afterwards are pure functions of the persisted
files: realized algorithmic feed sizes, and the action mix per cell.
"""

import tempfile
from pathlib import Path

from socialsim import ExperimentPlan, generate_population, generate_seed_corpus, run_experiment
from socialsim.harness import descriptive_shares, load_experiment, realized_load_audit
from socialsim.policy import mock_policy_spec
from socialsim.population import load_population

profiles, graph = generate_population(120, seed=5)
corpus = generate_seed_corpus(seed=5)

plan = ExperimentPlan(
    base_seed=41,
    policy=mock_policy_spec(),
    n_agents=120,
    timesteps=120,
    activation_p=0.03,
)

out = Path(tempfile.mkdtemp(prefix="socialsim_demo_"))
manifest = run_experiment(plan, profiles, graph, corpus, out, workers=1)
print(f"artifacts in {out}")
print(f"cells run: {len(manifest['cells'])}, all ok: {all(c['status'] == 'ok' for c in manifest['cells'])}")
print(f"population digest (shared by every cell): {manifest['population_sha256'][:16]}...")

# audits recomputed entirely from the files on disk
_, per_cell = load_experiment(out)
_, loaded_graph = load_population(out / "population.jsonl")

print(f"\n{'cell':<28} {'algo mean':>9} {'max':>4} {'read':>6} {'like':>6} {'repost':>7} {'quote':>6}")
for name in sorted(per_cell):
    audit = realized_load_audit(per_cell[name], loaded_graph)
    shares = descriptive_shares(per_cell[name])
    s = shares.shares
    print(
        f"{name:<28} {audit.mean:>9.2f} {audit.max:>4} "
        f"{s['read']:>6.1%} {s['like']:>6.1%} {s['repost']:>7.1%} {s['quote']:>6.1%}"
    )

print("\nreading dominates everywhere; the repost-dominant regime shifts the")
print("engaged minority toward reposts, the like-dominant regime toward likes.")
