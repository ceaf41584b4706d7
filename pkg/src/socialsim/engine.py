"""Deterministic discrete-time scheduler for one simulated run.

Each timestep draws one activation Bernoulli per agent, then processes the
activated agents sequentially in ascending id order. Every activated agent
gets a feed built against the current world state (so it sees all updates
from earlier agents in the same timestep), one decision, one exposure
record per feed slot, and any resulting repost/quote enters the post pool
immediately.

Randomness comes from counter-keyed substreams of the run seed: one stream
per timestep for activations, one per (timestep, agent) for decisions.
Replays of the same (config, population, corpus, policy fixtures) produce
byte-identical logs regardless of refactoring order.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ActionKind,
    ConfigurationError,
    ExposureRecord,
    PopularityCounters,
    Post,
    PostCreation,
    PostKind,
    RunConfig,
)
from .policy import DecisionContext, Policy, decide
from .population import AgentProfile, FollowGraph
from .recommender import content_tokens, keyword_relevance, select_feed

_STREAM_ACTIVATION = 1
_STREAM_DECISION = 2


def substream(seed: int, stream: int, *keys: int) -> np.random.Generator:
    """Independent generator keyed by (seed, stream, keys...)."""
    return np.random.default_rng(np.random.SeedSequence((seed, stream, *keys)))


@dataclass
class EventLog:
    """Append-only run log: exposure rows interleaved with post creations."""

    records: list[ExposureRecord | PostCreation] = field(default_factory=list)

    def append(self, record: ExposureRecord | PostCreation) -> None:
        self.records.append(record)

    def exposures(self) -> list[ExposureRecord]:
        return [r for r in self.records if isinstance(r, ExposureRecord)]

    def creations(self) -> list[PostCreation]:
        return [r for r in self.records if isinstance(r, PostCreation)]

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


class WorldState:
    """Mutable run state: post store, counters, per-agent memory, caches."""

    def __init__(self, profiles: Sequence[AgentProfile], graph: FollowGraph, config: RunConfig):
        self.profiles: dict[int, AgentProfile] = {p.id: p for p in profiles}
        self.follow_sets: dict[int, frozenset[int]] = {p.id: graph.follows_of(p.id) for p in profiles}
        self.posts: list[Post] = []
        self.engaged: dict[int, set[int]] = {p.id: set() for p in profiles}
        self.history: dict[int, deque] = {
            p.id: deque(maxlen=config.history_window) for p in profiles
        }
        self.now: int = 0
        self._decay = config.recency_decay
        self._w_rec = config.w_recency
        self._w_rel = config.w_relevance
        self._tokens: list[frozenset[str]] = []
        self._keywords: dict[int, frozenset[str]] = {
            p.id: frozenset(k.lower() for k in p.keywords) for p in profiles
        }
        self._relevance: dict[tuple[int, int], float] = {}
        self._recency: list[float] = [1.0]

    def new_post(self, author: int, content: str, kind: PostKind, source: int | None, t: int) -> Post:
        post = Post(
            id=len(self.posts),
            author=author,
            content=content,
            kind=kind,
            source_link=source,
            created_at=t,
            counters=PopularityCounters(),
        )
        self.posts.append(post)
        self._tokens.append(content_tokens(content))
        return post

    def rank_score(self, agent: int, post: Post) -> float:
        """Recency/relevance ranking score; relevance memoized per (agent, post)."""
        age = self.now - post.created_at
        while len(self._recency) <= age:
            self._recency.append(math.exp(-self._decay * len(self._recency)))
        key = (agent, post.id)
        rel = self._relevance.get(key)
        if rel is None:
            rel = keyword_relevance(self._tokens[post.id], self._keywords[agent])
            self._relevance[key] = rel
        return self._w_rec * self._recency[age] + self._w_rel * rel

    def state_digest(self) -> str:
        import hashlib
        import json

        payload = json.dumps(
            [
                (p.id, p.author, p.kind.value, p.source_link, p.created_at,
                 p.counters.likes, p.counters.reposts, p.counters.quotes)
                for p in self.posts
            ]
        ).encode()
        return hashlib.sha256(payload).hexdigest()


def initialize(
    profiles: Sequence[AgentProfile],
    graph: FollowGraph,
    corpus: Sequence[str],
    config: RunConfig,
    log: EventLog | None = None,
) -> WorldState:
    """Seed the world: corpus posts at t=0, authored round-robin by influencers.

    Influencers are taken in ascending id order. Production populations carry
    exactly eight (enforced by the population module); the engine itself only
    requires at least one so that reduced hand-built scenarios stay runnable.
    """
    if not corpus:
        raise ConfigurationError("corpus is empty")
    influencers = sorted(p.id for p in profiles if p.influencer)
    if not influencers:
        raise ConfigurationError("population has no influencers to author seed posts")
    world = WorldState(profiles, graph, config)
    for i, body in enumerate(corpus):
        author = influencers[i % len(influencers)]
        post = world.new_post(author, body, PostKind.SEED, None, 0)
        if log is not None:
            log.append(PostCreation(post=post.id, kind=PostKind.SEED, author=author, source=None, t=0))
    return world


def step(world: WorldState, t: int, config: RunConfig, policy: Policy, log: EventLog) -> None:
    """Advance one timestep: activate, build feeds, decide, apply, log."""
    world.now = t
    agent_ids = sorted(world.profiles)
    draws = substream(config.seed, _STREAM_ACTIVATION, t).random(len(agent_ids))
    for agent, u in zip(agent_ids, draws):
        if u >= config.activation_p:
            continue
        feed = select_feed(agent, world, config.load, config)
        if not feed:
            continue  # nothing to read, nothing to log
        context = DecisionContext(
            feed=tuple(feed),
            profile=world.profiles[agent],
            history=tuple(world.history[agent]),
            regime=config.norm,
        )
        rng = substream(config.seed, _STREAM_DECISION, t, agent)
        decision = decide(policy, context, rng)
        target = decision.target if decision.action.is_engagement else None
        for entry in feed:
            action = decision.action if entry.post == target else ActionKind.READ
            log.append(
                ExposureRecord(
                    run=config.seed,
                    load=config.load,
                    norm=config.norm,
                    t=t,
                    agent=agent,
                    post=entry.post,
                    likes=entry.likes,
                    reshares=entry.reshares,
                    action=action,
                )
            )
        if target is None:
            continue
        _apply_engagement(world, agent, decision, t, log)


def _apply_engagement(world: WorldState, agent: int, decision, t: int, log: EventLog) -> None:
    source = world.posts[decision.target]
    if decision.action is ActionKind.LIKE:
        source.counters.likes += 1
    elif decision.action is ActionKind.REPOST:
        source.counters.reposts += 1
        post = world.new_post(agent, source.content, PostKind.REPOST, source.id, t)
        log.append(PostCreation(post=post.id, kind=PostKind.REPOST, author=agent, source=source.id, t=t))
    elif decision.action is ActionKind.QUOTE:
        source.counters.quotes += 1
        content = f"{decision.commentary} // {source.content}"
        post = world.new_post(agent, content, PostKind.QUOTE, source.id, t)
        log.append(PostCreation(post=post.id, kind=PostKind.QUOTE, author=agent, source=source.id, t=t))
    world.engaged[agent].add(decision.target)
    world.history[agent].append((decision.action, decision.target, t))


def run(
    config: RunConfig,
    policy: Policy,
    profiles: Sequence[AgentProfile],
    graph: FollowGraph,
    corpus: Sequence[str],
) -> EventLog:
    """Initialize and execute all timesteps; returns the complete event log."""
    if len(profiles) != config.n_agents:
        raise ConfigurationError(
            f"config expects {config.n_agents} agents but population has {len(profiles)}"
        )
    log = EventLog()
    world = initialize(profiles, graph, corpus, config, log)
    for t in range(config.timesteps):
        step(world, t, config, policy, log)
    return log


def recount_counters(records: Iterable[ExposureRecord | PostCreation]) -> dict[int, PopularityCounters]:
    """Brute-force recount of every post's counters from the log alone.

    Independent oracle for the engine's incremental bookkeeping: likes are
    like-rows targeting the post, reposts/quotes are the matching engagement
    rows (equivalently, creation records pointing at it as source).
    """
    counters: dict[int, PopularityCounters] = {}
    for r in records:
        if isinstance(r, PostCreation):
            counters.setdefault(r.post, PopularityCounters())
        elif isinstance(r, ExposureRecord):
            c = counters.setdefault(r.post, PopularityCounters())
            if r.action is ActionKind.LIKE:
                c.likes += 1
            elif r.action is ActionKind.REPOST:
                c.reposts += 1
            elif r.action is ActionKind.QUOTE:
                c.quotes += 1
    return counters
