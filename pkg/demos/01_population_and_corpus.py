"""Generate the synthetic inputs: a heavy-tailed population and a seed corpus.

The study design needs 558 agents with a follower network dominated by a
handful of influential accounts, plus 50 topical seed posts of 150-300
tokens. Real platform data is not redistributable, so both are generated
deterministically from a seed. This script builds them, shows what the
heavy tail looks like, and round-trips everything through the JSONL format
the rest of the pipeline consumes.
"""

import tempfile
from collections import Counter
from pathlib import Path

from socialsim import generate_population, generate_seed_corpus, top_influencers
from socialsim.population import population_digest, save_corpus, save_population, token_count

profiles, graph = generate_population(558, seed=1)
corpus = generate_seed_corpus(seed=1)

print(f"agents: {len(profiles)}, follow edges: {graph.n_edges}")
print(f"population digest: {population_digest(profiles, graph)[:16]}...")

deg = graph.in_degrees()
influencers = top_influencers(graph)
print("\ntop-8 accounts by follower count (the influencers):")
for a in influencers:
    p = next(pr for pr in profiles if pr.id == a)
    print(f"  {p.name}: {deg[a]} followers, verified={p.verified}, keywords={sorted(p.keywords)[:3]}...")

buckets = Counter(min(deg[a], 50) // 5 * 5 for a in deg)
print("\nin-degree histogram (bucket -> count):")
for lo in sorted(buckets):
    label = f"{lo}-{lo + 4}" if lo < 50 else "50+"
    print(f"  {label:>6}: {'#' * min(buckets[lo], 60)}")

lengths = [token_count(b) for b in corpus]
print(f"\nseed corpus: {len(corpus)} unique posts, token counts {min(lengths)}-{max(lengths)}")
print(f"first post, first 12 tokens: {' '.join(corpus[0].split()[:12])} ...")

out = Path(tempfile.mkdtemp(prefix="socialsim_demo_"))
save_population(profiles, graph, out / "population.jsonl")
save_corpus(corpus, out / "corpus.jsonl")
print(f"\nwrote population.jsonl and corpus.jsonl to {out} (same format the CLI consumes)")
