"""Feed construction: followed-account posts plus recency/relevance-ranked algorithmic posts.

Ranking uses only recency and topic relevance; popularity counters never
enter the score, so popularity-cue effects stay in the decision stage. For
a viewing agent, the followed pool is every eligible post authored by a
followee and the algorithmic pool is every other eligible post. Labeling by
authorship keeps the partition reconstructable from persisted logs plus the
population file.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .core import LoadLevel, Post, RunConfig

if TYPE_CHECKING:  # pragma: no cover
    from .engine import WorldState
    from .population import AgentProfile

FOLLOWED = "followed"
ALGORITHMIC = "algorithmic"


@dataclass(slots=True, frozen=True)
class FeedEntry:
    """One feed slot: the post, its popularity snapshot, and its pool label."""

    post: int
    likes: int
    reshares: int
    slot: str  # FOLLOWED or ALGORITHMIC
    content: str = ""


def content_tokens(text: str) -> frozenset[str]:
    return frozenset(text.lower().split())


def keyword_relevance(tokens: frozenset[str], keywords: frozenset[str]) -> float:
    """Jaccard overlap between post tokens and the agent's interest keywords."""
    if not tokens or not keywords:
        return 0.0
    inter = len(tokens & keywords)
    if inter == 0:
        return 0.0
    return inter / len(tokens | keywords)


def score_post(
    post: Post,
    profile: "AgentProfile",
    now: int,
    *,
    w_recency: float = 0.7,
    w_relevance: float = 0.3,
    decay: float = 0.01,
) -> float:
    """Ranking score in [0, 1] when the weights sum to 1.

    score = w_recency * exp(-decay * age) + w_relevance * jaccard(tokens, keywords)
    """
    age = now - post.created_at
    if age < 0:
        raise ValueError(f"post {post.id} created in the future (t={post.created_at} > now={now})")
    rel = keyword_relevance(content_tokens(post.content), frozenset(k.lower() for k in profile.keywords))
    return w_recency * math.exp(-decay * age) + w_relevance * rel


def select_feed(agent: int, world: "WorldState", load: LoadLevel, config: RunConfig) -> list[FeedEntry]:
    """Build the agent's feed for the current timestep.

    Up to 3 highest-scoring eligible followee posts, then up to
    load.algorithmic_count highest-scoring posts from the rest of the pool.
    A followed shortfall is backfilled from the algorithmic pool so the
    total stays on target when supply allows. Eligible means: not authored
    by the agent and not previously engaged by the agent. Ties break by
    ascending post id; the result is deterministic in the world state.
    """
    followees = world.follow_sets.get(agent, frozenset())
    engaged = world.engaged.get(agent, ())
    now = world.now

    followed_pool: list[tuple[float, int]] = []
    algo_pool: list[tuple[float, int]] = []
    for post in world.posts:
        if post.author == agent or post.id in engaged:
            continue
        s = world.rank_score(agent, post)
        if post.author in followees:
            followed_pool.append((-s, post.id))
        else:
            algo_pool.append((-s, post.id))

    followed_pool.sort()
    algo_pool.sort()

    n_followed = min(load.followed_count, len(followed_pool))
    shortfall = load.followed_count - n_followed
    n_algo = min(load.algorithmic_count + shortfall, len(algo_pool))

    entries: list[FeedEntry] = []
    for _, pid in followed_pool[:n_followed]:
        entries.append(_entry(world, pid, FOLLOWED))
    for _, pid in algo_pool[:n_algo]:
        entries.append(_entry(world, pid, ALGORITHMIC))
    return entries


def _entry(world: "WorldState", pid: int, slot: str) -> FeedEntry:
    post = world.posts[pid]
    c = post.counters
    return FeedEntry(post=pid, likes=c.likes, reshares=c.reshares, slot=slot, content=post.content)


def realized_algorithmic_count(feed: list[FeedEntry]) -> int:
    """Number of algorithmic slots actually delivered, backfill included."""
    return sum(1 for e in feed if e.slot == ALGORITHMIC)
