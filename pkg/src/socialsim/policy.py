"""Agent decision-making: pluggable policies, prompt assembly, and response parsing.

Three interchangeable policies produce one decision per activation:

* ScriptedPolicy replays a fixed intent sequence (tests, trace fixtures).
* ParametricLogitPolicy draws from a known two-stage logistic process and
  is the ground-truth generator for estimator recovery checks.
* LlmPolicy sends a prompt over an OpenAI-compatible chat endpoint (or a
  recorded fixture transport) and parses the reply.

Whatever the policy does, the engine only ever sees a valid Decision:
malformed model output, transport failures, and invariant violations all
degrade to read-only with a logged warning, never an exception.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .core import (
    ActionKind,
    ConfigurationError,
    LoadLevel,
    NormRegime,
    popularity_composite,
)
from .population import AgentProfile
from .recommender import FeedEntry
from .stats import N_COLUMNS, design_row

log = logging.getLogger(__name__)

HISTORY_WINDOW = 8


@dataclass(slots=True, frozen=True)
class DecisionContext:
    """Everything a policy may condition on for one activation."""

    feed: tuple[FeedEntry, ...]
    profile: AgentProfile
    history: tuple[tuple[ActionKind, int, int], ...]  # (action, post, timestep)
    regime: NormRegime

    def __post_init__(self) -> None:
        if len(self.history) > HISTORY_WINDOW:
            raise ValueError(f"history window is {HISTORY_WINDOW}, got {len(self.history)}")


@dataclass(slots=True, frozen=True)
class Decision:
    """Either read everything, or engage exactly one feed post."""

    action: ActionKind
    target: int | None = None
    commentary: str | None = None

    def __post_init__(self) -> None:
        if self.action is ActionKind.READ:
            if self.target is not None or self.commentary is not None:
                raise ValueError("read-only decisions carry no target or commentary")
        else:
            if self.target is None:
                raise ValueError(f"{self.action.value} requires a target post")
            if self.action is ActionKind.QUOTE and not self.commentary:
                raise ValueError("quote requires non-empty commentary")
            if self.action is not ActionKind.QUOTE and self.commentary is not None:
                raise ValueError("commentary is only valid for quotes")

    @classmethod
    def read_all(cls) -> "Decision":
        return cls(action=ActionKind.READ)


class Policy(Protocol):
    def decide(self, context: DecisionContext, rng: np.random.Generator) -> Decision: ...


def decide(policy: Policy, context: DecisionContext, rng: np.random.Generator) -> Decision:
    """Obtain a decision, guaranteeing the Decision invariants hold.

    An empty feed always yields read-only. Policy-internal failures (LLM
    transport errors after retries, invalid targets) degrade to read-only
    rather than aborting the run.
    """
    if not context.feed:
        return Decision.read_all()
    try:
        decision = policy.decide(context, rng)
    except TransportError as e:
        log.warning("policy transport failed, degrading to read-only: %s", e)
        return Decision.read_all()
    if decision.action.is_engagement:
        feed_ids = {e.post for e in context.feed}
        if decision.target not in feed_ids:
            log.warning("policy targeted post %s outside the feed, degrading to read-only", decision.target)
            return Decision.read_all()
    return decision


# ---------------------------------------------------------------------------
# Scripted policy
# ---------------------------------------------------------------------------

Intent = str | tuple  # "read" | (action_name, feed_index[, commentary])


class ScriptedPolicy:
    """Replays a cyclic sequence of intents against whatever feed shows up.

    An intent is "read" or (action, feed_index, [commentary]); the index is
    resolved against the current feed so scripts stay valid regardless of
    which posts are shown. Out-of-range indexes fall back to read-only.
    """

    def __init__(self, intents: Sequence[Intent]):
        if not intents:
            raise ConfigurationError("scripted policy needs at least one intent")
        self.intents = list(intents)
        self._cursor = 0

    def decide(self, context: DecisionContext, rng: np.random.Generator) -> Decision:
        intent = self.intents[self._cursor % len(self.intents)]
        self._cursor += 1
        if intent == "read":
            return Decision.read_all()
        name, index = intent[0], intent[1]
        commentary = intent[2] if len(intent) > 2 else None
        if index >= len(context.feed):
            return Decision.read_all()
        action = ActionKind(name)
        if action is ActionKind.QUOTE and commentary is None:
            commentary = "adding a note on this"
        if action is not ActionKind.QUOTE:
            commentary = None
        return Decision(action=action, target=context.feed[index].post, commentary=commentary)


# ---------------------------------------------------------------------------
# Parametric logistic policy
# ---------------------------------------------------------------------------


class ParametricLogitPolicy:
    """Two-stage logistic decision process with known coefficients.

    Threshold stage: every feed post i gets an independent engagement draw
    with probability p_i = logistic(x_i . b_threshold), where x_i is the
    24-column design row for the post's popularity composite and the run's
    condition cell. If several posts pass, the one with the highest draw is
    engaged (one engagement per activation); if none pass, read-only.

    Allocation stage: the engaged post's action is sampled from the
    multinomial logit over {like, repost, quote} defined by the two
    allocation coefficient blocks (like is the reference outcome).

    Within one condition cell the linear predictor is affine in the
    composite, so both stages reduce to precomputed (offset, slope) pairs.
    """

    def __init__(
        self,
        threshold_coef: Sequence[float],
        allocation_coef: Sequence[Sequence[float]],
        load: LoadLevel,
        norm: NormRegime,
    ):
        t = np.asarray(threshold_coef, dtype=np.float64)
        a = np.asarray(allocation_coef, dtype=np.float64)
        if t.shape != (N_COLUMNS,):
            raise ConfigurationError(f"threshold coefficients must have shape ({N_COLUMNS},), got {t.shape}")
        if a.shape != (2, N_COLUMNS):
            raise ConfigurationError(f"allocation coefficients must have shape (2, {N_COLUMNS}), got {a.shape}")
        self.threshold_coef = t
        self.allocation_coef = a
        x0 = design_row(0.0, load, norm)
        x1 = design_row(1.0, load, norm)
        self._thr_offset = float(x0 @ t)
        self._thr_slope = float(x1 @ t) - self._thr_offset
        self._alloc_offset = a @ x0  # (2,)
        self._alloc_slope = a @ x1 - self._alloc_offset

    def engage_probability(self, composite: float) -> float:
        eta = self._thr_offset + self._thr_slope * composite
        if eta >= 0:
            return 1.0 / (1.0 + math.exp(-eta))
        e = math.exp(eta)
        return e / (1.0 + e)

    def allocation_probabilities(self, composite: float) -> tuple[float, float, float]:
        """(like, repost, quote) probabilities for an engaged post."""
        eta_r = self._alloc_offset[0] + self._alloc_slope[0] * composite
        eta_q = self._alloc_offset[1] + self._alloc_slope[1] * composite
        m = max(0.0, eta_r, eta_q)
        el, er, eq = math.exp(-m), math.exp(eta_r - m), math.exp(eta_q - m)
        z = el + er + eq
        return el / z, er / z, eq / z

    def decide(self, context: DecisionContext, rng: np.random.Generator) -> Decision:
        draws = rng.random(len(context.feed))
        best: tuple[float, int] | None = None
        for entry, u in zip(context.feed, draws):
            p = self.engage_probability(popularity_composite(entry.likes, entry.reshares))
            if u < p and (best is None or u > best[0]):
                best = (float(u), entry.post)
        if best is None:
            return Decision.read_all()
        target = best[1]
        entry = next(e for e in context.feed if e.post == target)
        p_like, p_repost, _ = self.allocation_probabilities(popularity_composite(entry.likes, entry.reshares))
        v = rng.random()
        if v < p_like:
            return Decision(action=ActionKind.LIKE, target=target)
        if v < p_like + p_repost:
            return Decision(action=ActionKind.REPOST, target=target)
        return Decision(action=ActionKind.QUOTE, target=target, commentary=f"worth a closer look at post {target}")


# ---------------------------------------------------------------------------
# Prompt assembly
# ---------------------------------------------------------------------------

_RESPONSE_INSTRUCTIONS = (
    'Reply with a single JSON object and nothing else: {"action": "read" | "like" | '
    '"repost" | "quote", "post_id": <post id, required unless action is "read">, '
    '"comment": "<your commentary, required only when quoting>"}'
)


def system_prompt(regime: NormRegime) -> str:
    lines = [
        "You are a social media user browsing your feed on a microblogging platform.",
        "You can read the posts shown to you, or engage with exactly one of them by",
        "liking it, reposting it to your followers, or quoting it with your own commentary.",
    ]
    if regime.prompt_fragment:
        lines.append(regime.prompt_fragment)
    lines.append(_RESPONSE_INSTRUCTIONS)
    return "\n".join(lines)


def user_prompt(context: DecisionContext) -> str:
    p = context.profile
    lines = [
        f"Your profile: {p.name}"
        + (", verified account" if p.verified else "")
        + f". Interests: {', '.join(sorted(p.keywords))}.",
    ]
    if context.history:
        lines.append("Your recent interactions:")
        for action, post, t in context.history:
            lines.append(f"- {action.value} post {post} at step {t}")
    else:
        lines.append("You have no recent interactions.")
    lines.append("Your feed now:")
    for entry in context.feed:
        lines.append(f"[post {entry.post}] (likes: {entry.likes}, reshares: {entry.reshares}) {entry.content}")
    return "\n".join(lines)


def build_prompt(context: DecisionContext) -> str:
    """Deterministic full prompt text (system part, blank line, user part)."""
    return system_prompt(context.regime) + "\n\n" + user_prompt(context)


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------

_ACTION_NAMES = {a.value: a for a in ActionKind}


def parse_response(raw: str, feed: Sequence[FeedEntry]) -> Decision:
    """Parse arbitrary model output into a valid Decision.

    Expects one JSON object with an "action" key; any deviation (no JSON,
    unknown action, target outside the feed, quote without commentary)
    degrades to read-only with a logged warning. Total over all inputs.
    """
    obj = _extract_json(raw)
    if obj is None:
        log.warning("unparseable policy response, degrading to read-only: %.120r", raw)
        return Decision.read_all()
    action_name = str(obj.get("action", "")).strip().lower()
    action = _ACTION_NAMES.get(action_name)
    if action is None:
        log.warning("unknown action %r in policy response, degrading to read-only", action_name)
        return Decision.read_all()
    if action is ActionKind.READ:
        return Decision.read_all()
    target = obj.get("post_id")
    if isinstance(target, str) and target.strip().lstrip("-").isdigit():
        target = int(target.strip())
    if not isinstance(target, int) or isinstance(target, bool):
        log.warning("missing or non-integer post_id in policy response, degrading to read-only")
        return Decision.read_all()
    if target not in {e.post for e in feed}:
        log.warning("post_id %s not in feed, degrading to read-only", target)
        return Decision.read_all()
    commentary = obj.get("comment")
    if action is ActionKind.QUOTE:
        if not isinstance(commentary, str) or not commentary.strip():
            log.warning("quote without commentary, degrading to read-only")
            return Decision.read_all()
        return Decision(action=action, target=target, commentary=commentary)
    return Decision(action=action, target=target)


def _extract_json(raw: str) -> dict | None:
    if not isinstance(raw, str) or not raw:
        return None
    try:
        obj = json.loads(raw)
        if isinstance(obj, dict):
            return obj
    except (json.JSONDecodeError, RecursionError):
        pass
    # Fall back to balanced-brace scanning so JSON embedded in prose still parses.
    start = raw.find("{")
    while start != -1:
        depth = 0
        for i in range(start, len(raw)):
            ch = raw[i]
            if ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        obj = json.loads(raw[start : i + 1])
                        if isinstance(obj, dict):
                            return obj
                    except (json.JSONDecodeError, RecursionError):
                        pass
                    break
        start = raw.find("{", start + 1)
    return None


# ---------------------------------------------------------------------------
# LLM transport and policy
# ---------------------------------------------------------------------------


class TransportError(RuntimeError):
    """A chat-completion round trip failed after all retries."""


def request_hash(request: dict) -> str:
    payload = json.dumps(request, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class FixtureTransport:
    """Replays recorded responses keyed by request hash (offline tests).

    Fixture files are JSON Lines of {"request_hash": ..., "response_text": ...}.
    """

    def __init__(self, path: str | Path):
        self.responses: dict[str, str] = {}
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"fixture file not found: {p}")
        for line in p.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            self.responses[obj["request_hash"]] = obj["response_text"]

    def complete(self, request: dict) -> str:
        h = request_hash(request)
        if h not in self.responses:
            raise TransportError(f"no recorded response for request hash {h[:12]}...")
        return self.responses[h]


class HttpTransport:
    """One OpenAI-compatible chat-completion round trip per request."""

    def __init__(self, base_url: str, api_key: str | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self._session = None

    def complete(self, request: dict) -> str:
        import requests

        if self._session is None:
            self._session = requests.Session()
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                json=request,
                headers=headers,
                timeout=self.timeout,
            )
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except Exception as e:  # noqa: BLE001 - any transport problem is retryable
            raise TransportError(str(e)) from e


class RecordingTransport:
    """Wraps a live transport and appends fixture lines for later replay."""

    def __init__(self, inner, path: str | Path):
        self.inner = inner
        self.path = Path(path)

    def complete(self, request: dict) -> str:
        text = self.inner.complete(request)
        line = json.dumps({"request_hash": request_hash(request), "response_text": text}, ensure_ascii=False)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")
        return text


class LlmPolicy:
    """Decision policy backed by a chat-completion endpoint."""

    def __init__(
        self,
        transport,
        model: str,
        temperature: float = 0.6,
        max_retries: int = 3,
        retry_wait: float = 0.5,
    ):
        self.transport = transport
        self.model = model
        self.temperature = temperature
        self.max_retries = max_retries
        self.retry_wait = retry_wait

    def build_request(self, context: DecisionContext) -> dict:
        return {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [
                {"role": "system", "content": system_prompt(context.regime)},
                {"role": "user", "content": user_prompt(context)},
            ],
        }

    def decide(self, context: DecisionContext, rng: np.random.Generator) -> Decision:
        request = self.build_request(context)
        last: TransportError | None = None
        for attempt in range(self.max_retries + 1):
            try:
                raw = self.transport.complete(request)
                return parse_response(raw, context.feed)
            except TransportError as e:
                last = e
                if attempt < self.max_retries and self.retry_wait > 0:
                    time.sleep(self.retry_wait * (attempt + 1))
        raise last if last is not None else TransportError("transport failed")


# ---------------------------------------------------------------------------
# Policy configs (serializable; built into live policies per run)
# ---------------------------------------------------------------------------


@dataclass
class ScriptedSpec:
    kind: str = field(default="scripted", init=False)
    intents: list = field(default_factory=lambda: ["read"])


@dataclass
class ParametricLogitSpec:
    kind: str = field(default="parametric", init=False)
    threshold: list[float] = field(default_factory=list)
    allocation: list[list[float]] = field(default_factory=list)


@dataclass
class LlmSpec:
    kind: str = field(default="llm", init=False)
    endpoint: str = ""
    model: str = "qwen3-8b"
    temperature: float = 0.6
    timeout: float = 30.0
    max_retries: int = 3
    transport: str = "live"  # "live" | "fixtures"
    fixture_path: str | None = None

PolicySpec = ScriptedSpec | ParametricLogitSpec | LlmSpec


def default_mock_coefficients() -> tuple[list[float], list[list[float]]]:
    """Plausible two-stage coefficients for offline (mock) runs.

    Engagement is rare and load-dampened; popularity raises it. Allocation
    leans toward likes except under the repost-heavy regime. Values chosen
    for lively but sparse logs, not to reproduce any particular estimate.
    """
    threshold = [0.0] * N_COLUMNS
    threshold[0] = -3.6   # intercept
    threshold[1] = 0.5    # popularity
    threshold[2] = -0.3   # low load
    threshold[3] = -0.6   # medium load
    threshold[4] = -1.0   # high load
    threshold[5] = 0.3    # like-dominant regime
    threshold[6] = -0.3   # repost-dominant regime
    repost = [0.0] * N_COLUMNS
    quote = [0.0] * N_COLUMNS
    repost[0], quote[0] = -1.2, -0.8
    repost[1], quote[1] = 0.1, -0.2
    repost[5], quote[5] = -1.2, -1.0   # like-dominant: everything else recedes
    repost[6], quote[6] = 3.0, 0.4     # repost-dominant: reposts dominate
    return threshold, [repost, quote]


def mock_policy_spec() -> ParametricLogitSpec:
    threshold, allocation = default_mock_coefficients()
    return ParametricLogitSpec(threshold=threshold, allocation=allocation)


def policy_spec_to_obj(spec: PolicySpec) -> dict:
    if isinstance(spec, ScriptedSpec):
        return {"kind": "scripted", "intents": [list(i) if isinstance(i, (list, tuple)) else i for i in spec.intents]}
    if isinstance(spec, ParametricLogitSpec):
        return {"kind": "parametric", "threshold": list(spec.threshold), "allocation": [list(r) for r in spec.allocation]}
    if isinstance(spec, LlmSpec):
        return {
            "kind": "llm",
            "endpoint": spec.endpoint,
            "model": spec.model,
            "temperature": spec.temperature,
            "timeout": spec.timeout,
            "max_retries": spec.max_retries,
            "transport": spec.transport,
            "fixture_path": spec.fixture_path,
        }
    raise ConfigurationError(f"unknown policy spec {spec!r}")


def policy_spec_from_obj(obj: dict) -> PolicySpec:
    kind = obj.get("kind")
    if kind == "scripted":
        return ScriptedSpec(intents=[tuple(i) if isinstance(i, list) else i for i in obj["intents"]])
    if kind in ("parametric", "mock"):
        if kind == "mock" or "threshold" not in obj:
            return mock_policy_spec()
        return ParametricLogitSpec(threshold=obj["threshold"], allocation=obj["allocation"])
    if kind == "llm":
        return LlmSpec(
            endpoint=obj.get("endpoint", ""),
            model=obj.get("model", "qwen3-8b"),
            temperature=obj.get("temperature", 0.6),
            timeout=obj.get("timeout", 30.0),
            max_retries=obj.get("max_retries", 3),
            transport=obj.get("transport", "live"),
            fixture_path=obj.get("fixture_path"),
        )
    raise ConfigurationError(f"unknown policy kind {kind!r}")


def build_policy(
    spec: PolicySpec,
    load: LoadLevel,
    norm: NormRegime,
    *,
    api_key: str | None = None,
) -> Policy:
    """Instantiate a live policy for one run of the given condition cell."""
    if isinstance(spec, ScriptedSpec):
        return ScriptedPolicy(spec.intents)
    if isinstance(spec, ParametricLogitSpec):
        return ParametricLogitPolicy(spec.threshold, spec.allocation, load, norm)
    if isinstance(spec, LlmSpec):
        if spec.transport == "fixtures":
            if not spec.fixture_path:
                raise ConfigurationError("fixture transport requires fixture_path")
            transport = FixtureTransport(spec.fixture_path)
        else:
            if not spec.endpoint:
                raise ConfigurationError("live transport requires an endpoint")
            transport = HttpTransport(spec.endpoint, api_key=api_key, timeout=spec.timeout)
        return LlmPolicy(transport, model=spec.model, temperature=spec.temperature, max_retries=spec.max_retries)
    raise ConfigurationError(f"unknown policy spec {spec!r}")
