"""Synthetic agent populations, follow graphs, and seed corpora, plus JSONL loaders.

The real platform data behind the study design (profiles, partial follower
network, topic-specific posts) is not redistributable, so this module
generates structurally comparable stand-ins: a heavy-tailed follow graph
whose top accounts act as influencers, and a synthetic topical corpus in
the required token range. Loaders accept user-supplied files in the same
format for runs against real data.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import AgentId, ConfigurationError, FormatError

N_INFLUENCERS = 8
SEED_CORPUS_SIZE = 50
TOKEN_RANGE = (150, 300)


@dataclass(slots=True, frozen=True)
class AgentProfile:
    id: AgentId
    name: str
    keywords: frozenset[str]
    verified: bool
    influencer: bool

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError(f"agent {self.id}: keywords must be non-empty")


class FollowGraph:
    """Directed follower -> followee edges, fixed for a whole experiment."""

    def __init__(self, follows: Mapping[AgentId, Iterable[AgentId]]):
        self._follows: dict[AgentId, frozenset[AgentId]] = {}
        for follower, followees in follows.items():
            fs = frozenset(followees)
            if follower in fs:
                raise ValueError(f"agent {follower} cannot follow itself")
            self._follows[int(follower)] = fs

    def follows_of(self, agent: AgentId) -> frozenset[AgentId]:
        return self._follows.get(agent, frozenset())

    def agents(self) -> list[AgentId]:
        return sorted(self._follows)

    def edges(self) -> list[tuple[AgentId, AgentId]]:
        return sorted(
            (follower, followee)
            for follower, followees in self._follows.items()
            for followee in followees
        )

    @property
    def n_edges(self) -> int:
        return sum(len(f) for f in self._follows.values())

    def in_degrees(self) -> dict[AgentId, int]:
        deg = {a: 0 for a in self._follows}
        for followees in self._follows.values():
            for followee in followees:
                deg[followee] = deg.get(followee, 0) + 1
        return deg

    def digest(self) -> str:
        payload = json.dumps(self.edges(), separators=(",", ":")).encode()
        return hashlib.sha256(payload).hexdigest()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, FollowGraph) and self._follows == other._follows


def top_influencers(graph: FollowGraph, k: int = N_INFLUENCERS) -> list[AgentId]:
    """The k agents with highest in-degree; ties broken by smaller id."""
    deg = graph.in_degrees()
    return sorted(deg, key=lambda a: (-deg[a], a))[:k]


# Vocabulary shared by profile keywords and synthetic post bodies so that
# keyword relevance varies across agent-post pairs instead of pinning at zero.
_TOPIC_WORDS = [
    "model", "benchmark", "inference", "weights", "opensource", "training",
    "tokens", "latency", "reasoning", "alignment", "chips", "compute",
    "dataset", "finetune", "agents", "search", "coding", "math", "release",
    "pricing", "context", "scaling", "eval", "safety", "quantization",
    "distillation", "multimodal", "api", "startup", "research", "deploy",
    "throughput", "gpu", "cluster", "pipeline", "demo", "leaderboard",
    "hallucination", "retrieval", "embedding", "translation", "assistant",
    "openweights", "robotics", "speech", "vision", "ranking", "memory",
]

_FILLER_WORDS = [
    "the", "a", "this", "that", "new", "fast", "still", "really", "just",
    "today", "again", "better", "worse", "cheaper", "impressive", "wild",
    "honestly", "apparently", "finally", "everyone", "nobody", "somehow",
    "quietly", "massively", "barely", "already", "surprisingly",
]

_VERBS = [
    "ships", "beats", "drops", "claims", "shows", "breaks", "matches",
    "needs", "runs", "costs", "tests", "compares", "outperforms", "misses",
    "doubles", "halves", "reports", "confirms", "questions", "measures",
]


def generate_population(
    n: int,
    seed: int,
    *,
    exponent: float = 2.5,
    n_influencers: int = N_INFLUENCERS,
    min_influencer_follows: int = 2,
) -> tuple[list[AgentProfile], FollowGraph]:
    """Generate n agents with a heavy-tailed follow graph.

    In-degrees are drawn from a discrete power law (zipf, configurable
    exponent, capped at n-1) and followers assigned uniformly at random.
    Every agent is then guaranteed to follow at least `min_influencer_follows`
    of the provisional top-in-degree accounts, so followed feeds have ample
    supply from the first timestep. The final top-8 in-degree agents are
    flagged as influencers, ties broken by ascending id. Pure function of
    (n, seed).
    """
    if n < 10:
        raise ConfigurationError(f"population needs at least 10 agents to seat {n_influencers} influencers, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x506F50)))

    in_deg = np.minimum(rng.zipf(exponent, size=n), n - 1)
    follows: dict[int, set[int]] = {i: set() for i in range(n)}
    for i in range(n):
        picks = rng.choice(n - 1, size=int(in_deg[i]), replace=False)
        for p in picks:
            follower = int(p) if p < i else int(p) + 1  # skip self
            follows[follower].add(i)

    def _top(k: int) -> list[int]:
        deg = {a: 0 for a in range(n)}
        for followees in follows.values():
            for f in followees:
                deg[f] += 1
        return sorted(range(n), key=lambda a: (-deg[a], a))[:k]

    # Backbone: everyone follows a couple of high-in-degree accounts. Extra
    # edges only land on the provisional top set, so it stays the top set.
    candidates = _top(n_influencers)
    need = min(min_influencer_follows, n_influencers - 1)
    for i in range(n):
        options = [c for c in candidates if c != i and c not in follows[i]]
        missing = need - len(follows[i] & set(candidates))
        for _ in range(max(missing, 0)):
            pick = options.pop(int(rng.integers(len(options))))
            follows[i].add(pick)

    influencers = set(_top(n_influencers))
    keyword_counts = rng.integers(3, 7, size=n)
    verified_draws = rng.random(n)
    profiles = []
    for i in range(n):
        kw = rng.choice(len(_TOPIC_WORDS), size=int(keyword_counts[i]), replace=False)
        profiles.append(
            AgentProfile(
                id=i,
                name=f"user_{i:04d}",
                keywords=frozenset(_TOPIC_WORDS[j] for j in kw),
                verified=(i in influencers) or bool(verified_draws[i] < 0.05),
                influencer=i in influencers,
            )
        )
    return profiles, FollowGraph(follows)


def generate_seed_corpus(
    seed: int,
    *,
    size: int = SEED_CORPUS_SIZE,
    token_range: tuple[int, int] = TOKEN_RANGE,
) -> list[str]:
    """Generate `size` unique synthetic post bodies of 150-300 whitespace tokens."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x436F72)))
    lo, hi = token_range
    bodies: list[str] = []
    seen: set[str] = set()
    while len(bodies) < size:
        target = int(rng.integers(lo, hi + 1))
        words: list[str] = []
        while len(words) < target:
            sentence = _sentence(rng)
            words.extend(sentence)
        body = " ".join(words[:target])
        if body in seen:
            continue
        seen.add(body)
        bodies.append(body)
    return bodies


def _sentence(rng: np.random.Generator) -> list[str]:
    n_mid = int(rng.integers(4, 9))
    words = [_TOPIC_WORDS[int(rng.integers(len(_TOPIC_WORDS)))]]
    words.append(_VERBS[int(rng.integers(len(_VERBS)))])
    for _ in range(n_mid):
        pool = _TOPIC_WORDS if rng.random() < 0.45 else _FILLER_WORDS
        words.append(pool[int(rng.integers(len(pool)))])
    words[0] = words[0].capitalize()
    words[-1] = words[-1] + "."
    return words


def token_count(body: str) -> int:
    """Whitespace tokenization; the corpus length check uses this count."""
    return len(body.split())


# ---------------------------------------------------------------------------
# Persistence. Population files are JSON Lines, one object per agent:
#   {"id": int, "name": str, "keywords": [str], "verified": bool, "follows": [int]}
# Corpus files are JSON Lines of {"content": str}.
# The influencer flag is not stored; it is recomputed as top-8 in-degree.
# ---------------------------------------------------------------------------


def population_to_lines(profiles: Sequence[AgentProfile], graph: FollowGraph) -> list[str]:
    lines = []
    for p in sorted(profiles, key=lambda p: p.id):
        obj = {
            "id": p.id,
            "name": p.name,
            "keywords": sorted(p.keywords),
            "verified": p.verified,
            "follows": sorted(graph.follows_of(p.id)),
        }
        lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
    return lines


def save_population(profiles: Sequence[AgentProfile], graph: FollowGraph, path: str | Path) -> None:
    Path(path).write_text("\n".join(population_to_lines(profiles, graph)) + "\n", encoding="utf-8")


def population_digest(profiles: Sequence[AgentProfile], graph: FollowGraph) -> str:
    payload = "\n".join(population_to_lines(profiles, graph)).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def load_population(path: str | Path) -> tuple[list[AgentProfile], FollowGraph]:
    """Parse a population file, enforcing all structural invariants.

    Errors name the offending line. The influencer flag is derived from the
    loaded graph (top-8 in-degree, ties by smaller id).
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"population file not found: {path}")
    rows: list[tuple[int, dict]] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
        for key in ("id", "name", "keywords", "verified", "follows"):
            if key not in obj:
                raise FormatError(f"{path}:{lineno}: missing key {key!r}")
        if not isinstance(obj["id"], int) or obj["id"] < 0:
            raise FormatError(f"{path}:{lineno}: id must be a non-negative integer")
        if obj["id"] in [o["id"] for _, o in rows]:
            raise FormatError(f"{path}:{lineno}: duplicate agent id {obj['id']}")
        if obj["id"] in obj["follows"]:
            raise FormatError(f"{path}:{lineno}: agent {obj['id']} follows itself")
        if not obj["keywords"]:
            raise FormatError(f"{path}:{lineno}: keywords must be non-empty")
        rows.append((lineno, obj))
    if not rows:
        raise FormatError(f"{path}: empty population file")

    ids = {obj["id"] for _, obj in rows}
    for lineno, obj in rows:
        unknown = set(obj["follows"]) - ids
        if unknown:
            raise FormatError(f"{path}:{lineno}: follows reference unknown agent ids {sorted(unknown)}")

    graph = FollowGraph({obj["id"]: obj["follows"] for _, obj in rows})
    influencers = set(top_influencers(graph))
    profiles = [
        AgentProfile(
            id=obj["id"],
            name=str(obj["name"]),
            keywords=frozenset(str(k) for k in obj["keywords"]),
            verified=bool(obj["verified"]),
            influencer=obj["id"] in influencers,
        )
        for _, obj in rows
    ]
    profiles.sort(key=lambda p: p.id)
    return profiles, graph


def save_corpus(bodies: Sequence[str], path: str | Path) -> None:
    lines = [json.dumps({"content": b}, separators=(",", ":"), ensure_ascii=False) for b in bodies]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def corpus_digest(bodies: Sequence[str]) -> str:
    payload = "\n".join(bodies).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def load_corpus(path: str | Path, *, token_range: tuple[int, int] = TOKEN_RANGE) -> list[str]:
    """Parse a corpus file. Duplicate bodies are errors; out-of-range token
    counts only warn, since real corpora may legitimately differ."""
    path = Path(path)
    if not path.exists():
        raise FormatError(f"corpus file not found: {path}")
    bodies: list[str] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise FormatError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
        if "content" not in obj or not isinstance(obj["content"], str) or not obj["content"]:
            raise FormatError(f"{path}:{lineno}: expected a non-empty 'content' string")
        body = obj["content"]
        if body in seen:
            raise FormatError(f"{path}:{lineno}: duplicate post body")
        seen.add(body)
        n_tok = token_count(body)
        if not token_range[0] <= n_tok <= token_range[1]:
            warnings.warn(
                f"{path}:{lineno}: token count {n_tok} outside {token_range}",
                stacklevel=2,
            )
        bodies.append(body)
    if not bodies:
        raise FormatError(f"{path}: empty corpus file")
    return bodies
