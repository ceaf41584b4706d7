import json
import math

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from socialsim.core import ActionKind, LoadLevel, NormRegime, popularity_composite
from socialsim.policy import (
    Decision,
    DecisionContext,
    FixtureTransport,
    LlmPolicy,
    LlmSpec,
    ParametricLogitPolicy,
    ParametricLogitSpec,
    RecordingTransport,
    ScriptedPolicy,
    ScriptedSpec,
    TransportError,
    build_policy,
    build_prompt,
    decide,
    mock_policy_spec,
    parse_response,
    policy_spec_from_obj,
    policy_spec_to_obj,
    request_hash,
)
from socialsim.recommender import FeedEntry
from socialsim.stats import N_COLUMNS

from conftest import tiny_profiles


def _feed(*entries):
    out = []
    for pid, likes, resh in entries:
        out.append(FeedEntry(post=pid, likes=likes, reshares=resh, slot="algorithmic", content=f"body {pid}"))
    return tuple(out)


def _context(feed=None, regime=NormRegime.NO_NORM, history=()):
    return DecisionContext(
        feed=feed if feed is not None else _feed((3, 0, 0), (7, 2, 1)),
        profile=tiny_profiles()[2],
        history=tuple(history),
        regime=regime,
    )


def _rng(seed=0):
    return np.random.default_rng(seed)


class TestDecision:
    def test_read_all_carries_nothing(self):
        with pytest.raises(ValueError):
            Decision(action=ActionKind.READ, target=3)

    def test_quote_requires_commentary(self):
        with pytest.raises(ValueError):
            Decision(action=ActionKind.QUOTE, target=3)

    def test_like_rejects_commentary(self):
        with pytest.raises(ValueError):
            Decision(action=ActionKind.LIKE, target=3, commentary="nope")

    def test_engagement_requires_target(self):
        with pytest.raises(ValueError):
            Decision(action=ActionKind.LIKE)


class TestScriptedPolicy:
    def test_read_script(self):
        policy = ScriptedPolicy(["read"])
        for _ in range(5):
            assert policy.decide(_context(), _rng()).action is ActionKind.READ

    def test_intents_resolve_against_feed(self):
        policy = ScriptedPolicy([("like", 1)])
        d = policy.decide(_context(), _rng())
        assert d.action is ActionKind.LIKE
        assert d.target == 7

    def test_out_of_range_index_reads(self):
        policy = ScriptedPolicy([("like", 9)])
        assert policy.decide(_context(), _rng()).action is ActionKind.READ

    def test_cycles(self):
        policy = ScriptedPolicy([("like", 0), "read"])
        actions = [policy.decide(_context(), _rng()).action for _ in range(4)]
        assert actions == [ActionKind.LIKE, ActionKind.READ, ActionKind.LIKE, ActionKind.READ]

    def test_quote_gets_default_commentary(self):
        policy = ScriptedPolicy([("quote", 0)])
        d = policy.decide(_context(), _rng())
        assert d.action is ActionKind.QUOTE and d.commentary


class TestParametricLogitPolicy:
    def _policy(self, intercept=-1.0, pop=0.5, load=LoadLevel.LOWEST, norm=NormRegime.NO_NORM):
        thr = [0.0] * N_COLUMNS
        thr[0], thr[1] = intercept, pop
        alloc = [[0.0] * N_COLUMNS, [0.0] * N_COLUMNS]
        return ParametricLogitPolicy(thr, alloc, load, norm)

    def test_degenerate_intercept_always_reads(self):
        for intercept in (float("-inf"), -1e9):
            policy = self._policy(intercept=intercept, pop=0.0)
            rng = _rng(1)
            assert all(policy.decide(_context(), rng).action is ActionKind.READ for _ in range(200))

    def test_engage_rate_matches_closed_form(self):
        # empirical any-engagement rate over 1e5 draws vs 1 - prod(1 - p_i)
        policy = self._policy(intercept=-2.0, pop=0.6)
        context = _context(feed=_feed((1, 0, 0), (2, 3, 2), (3, 10, 5), (4, 1, 0), (5, 0, 2)))
        ps = [policy.engage_probability(popularity_composite(e.likes, e.reshares)) for e in context.feed]
        closed_form = 1.0 - math.prod(1.0 - p for p in ps)
        n = 100_000
        rng = _rng(7)
        engaged = sum(policy.decide(context, rng).action.is_engagement for _ in range(n))
        rate = engaged / n
        sigma = math.sqrt(closed_form * (1 - closed_form) / n)
        assert abs(rate - closed_form) <= 3 * sigma

    def test_allocation_probabilities_sum_to_one(self):
        policy = self._policy()
        for c in (0.0, 1.3, 4.0):
            assert sum(policy.allocation_probabilities(c)) == pytest.approx(1.0, abs=1e-12)

    def test_zero_condition_coefficients_make_cells_exchangeable(self):
        # Only intercept and popularity are nonzero: the action distribution on a
        # fixed feed must be the same in every condition cell (3-sigma chi-square).
        thr = [0.0] * N_COLUMNS
        thr[0], thr[1] = -1.2, 0.4
        alloc = [[0.0] * N_COLUMNS, [0.0] * N_COLUMNS]
        alloc[0][0], alloc[1][0] = -0.4, -0.8
        feed = _feed((1, 2, 1), (2, 0, 0), (3, 6, 3))
        n = 4000
        table = []
        for i, load in enumerate(LoadLevel):
            for j, norm in enumerate(NormRegime):
                policy = ParametricLogitPolicy(thr, alloc, load, norm)
                context = _context(feed=feed, regime=norm)
                rng = np.random.default_rng(1234)  # same stream per cell
                counts = {a: 0 for a in ActionKind}
                for _ in range(n):
                    counts[policy.decide(context, rng).action] += 1
                table.append([counts[a] for a in ActionKind])
        # identical streams and identical probabilities give identical rows; a
        # chi-square over the 12 x 4 table cannot reject homogeneity
        _, p, _, _ = chi2_contingency(np.array(table))
        assert p > 0.0027

    def test_quote_decisions_carry_commentary(self):
        thr = [0.0] * N_COLUMNS
        thr[0] = 5.0  # nearly always engage
        alloc = [[0.0] * N_COLUMNS, [0.0] * N_COLUMNS]
        alloc[1][0] = 8.0  # nearly always quote
        policy = ParametricLogitPolicy(thr, alloc, LoadLevel.LOWEST, NormRegime.NO_NORM)
        d = policy.decide(_context(), _rng(3))
        assert d.action is ActionKind.QUOTE and d.commentary

    def test_coefficient_shape_validation(self):
        with pytest.raises(Exception):
            ParametricLogitPolicy([0.0] * 3, [[0.0] * N_COLUMNS] * 2, LoadLevel.LOWEST, NormRegime.NO_NORM)


class TestDecideWrapper:
    def test_empty_feed_reads(self):
        policy = ScriptedPolicy([("like", 0)])
        context = _context(feed=())
        assert decide(policy, context, _rng()).action is ActionKind.READ

    def test_out_of_feed_target_degrades(self):
        class Rogue:
            def decide(self, context, rng):
                return Decision(action=ActionKind.LIKE, target=999)

        assert decide(Rogue(), _context(), _rng()).action is ActionKind.READ

    def test_transport_failure_degrades_to_read(self):
        class FailingTransport:
            calls = 0

            def complete(self, request):
                FailingTransport.calls += 1
                raise TransportError("boom")

        policy = LlmPolicy(FailingTransport(), model="m", max_retries=2, retry_wait=0.0)
        d = decide(policy, _context(), _rng())
        assert d.action is ActionKind.READ
        assert FailingTransport.calls == 3  # initial try + 2 retries


class TestPrompts:
    def test_no_norm_prompt_has_no_percentages(self):
        prompt = build_prompt(_context(regime=NormRegime.NO_NORM))
        assert "%" not in prompt

    def test_like_dominant_prompt(self):
        prompt = build_prompt(_context(regime=NormRegime.LIKE_DOMINANT))
        for pct in ("80%", "15%", "5%"):
            assert pct in prompt

    def test_repost_dominant_prompt(self):
        prompt = build_prompt(_context(regime=NormRegime.REPOST_DOMINANT))
        assert "90%" in prompt and "10%" in prompt
        # never an explicit like percentage
        assert "80%" not in prompt and "5%" not in prompt
        assert "like (" not in prompt

    def test_prompt_never_mentions_load_condition(self):
        for load_word in ("load", "lowest", "medium", "algorithmic"):
            prompt = build_prompt(_context()).lower()
            assert load_word not in prompt

    def test_prompt_is_deterministic(self):
        c = _context(history=[(ActionKind.LIKE, 4, 2)])
        assert build_prompt(c) == build_prompt(c)

    def test_prompt_shows_feed_with_counters_and_history(self):
        c = _context(history=[(ActionKind.QUOTE, 4, 2)])
        prompt = build_prompt(c)
        assert "(likes: 2, reshares: 1)" in prompt
        assert "quote post 4 at step 2" in prompt
        assert "body 7" in prompt


class TestParseResponse:
    def test_well_formed_like(self):
        d = parse_response('{"action":"like","post_id":7}', _context().feed)
        assert d.action is ActionKind.LIKE and d.target == 7

    def test_quote_without_comment_degrades(self):
        d = parse_response('{"action":"quote","post_id":7}', _context().feed)
        assert d.action is ActionKind.READ

    def test_prose_fallback(self):
        d = parse_response("I think I will just read.", _context().feed)
        assert d.action is ActionKind.READ

    def test_json_embedded_in_prose(self):
        raw = 'Sure! Here is my choice: {"action": "repost", "post_id": 3} hope that helps'
        d = parse_response(raw, _context().feed)
        assert d.action is ActionKind.REPOST and d.target == 3

    def test_unknown_action_degrades(self):
        assert parse_response('{"action":"share","post_id":7}', _context().feed).action is ActionKind.READ

    def test_target_not_in_feed_degrades(self):
        assert parse_response('{"action":"like","post_id":999}', _context().feed).action is ActionKind.READ

    def test_string_post_id_accepted(self):
        d = parse_response('{"action":"like","post_id":"7"}', _context().feed)
        assert d.target == 7

    def test_boolean_post_id_degrades(self):
        assert parse_response('{"action":"like","post_id":true}', _context().feed).action is ActionKind.READ

    def test_non_object_json_degrades(self):
        assert parse_response("[1, 2, 3]", _context().feed).action is ActionKind.READ

    def test_quote_full_round(self):
        d = parse_response('{"action":"quote","post_id":3,"comment":"nice"}', _context().feed)
        assert d.action is ActionKind.QUOTE and d.commentary == "nice"


class TestTransports:
    def test_fixture_round_trip(self, tmp_path):
        fixture = tmp_path / "fixtures.jsonl"

        class Stub:
            def complete(self, request):
                return '{"action":"like","post_id":3}'

        recorder = RecordingTransport(Stub(), fixture)
        request = {"model": "m", "temperature": 0.6, "messages": [{"role": "user", "content": "hi"}]}
        assert recorder.complete(request) == '{"action":"like","post_id":3}'

        replay = FixtureTransport(fixture)
        assert replay.complete(request) == '{"action":"like","post_id":3}'
        with pytest.raises(TransportError):
            replay.complete({"model": "other", "temperature": 0.6, "messages": []})

    def test_request_hash_is_order_insensitive(self):
        a = {"model": "m", "temperature": 0.6}
        b = {"temperature": 0.6, "model": "m"}
        assert request_hash(a) == request_hash(b)

    def test_llm_policy_with_fixture(self, tmp_path):
        context = _context()
        policy = LlmPolicy(None, model="m", temperature=0.6)
        request = policy.build_request(context)
        fixture = tmp_path / "fx.jsonl"
        fixture.write_text(
            json.dumps({"request_hash": request_hash(request), "response_text": '{"action":"repost","post_id":3}'})
            + "\n"
        )
        policy.transport = FixtureTransport(fixture)
        d = decide(policy, context, _rng())
        assert d.action is ActionKind.REPOST and d.target == 3


class TestPolicySpecs:
    def test_round_trip(self):
        for spec in (ScriptedSpec(intents=["read", ("like", 0)]), mock_policy_spec(), LlmSpec(endpoint="http://x", model="q")):
            obj = policy_spec_to_obj(spec)
            assert policy_spec_to_obj(policy_spec_from_obj(json.loads(json.dumps(obj)))) == obj

    def test_build_policy_dispatch(self):
        assert isinstance(build_policy(ScriptedSpec(), LoadLevel.LOW, NormRegime.NO_NORM), ScriptedPolicy)
        assert isinstance(build_policy(mock_policy_spec(), LoadLevel.LOW, NormRegime.NO_NORM), ParametricLogitPolicy)

    def test_llm_spec_requires_endpoint_or_fixture(self):
        with pytest.raises(Exception):
            build_policy(LlmSpec(endpoint="", transport="live"), LoadLevel.LOW, NormRegime.NO_NORM)
        with pytest.raises(Exception):
            build_policy(LlmSpec(transport="fixtures", fixture_path=None), LoadLevel.LOW, NormRegime.NO_NORM)

    def test_history_window_enforced(self):
        with pytest.raises(ValueError):
            DecisionContext(
                feed=(),
                profile=tiny_profiles()[0],
                history=tuple((ActionKind.LIKE, i, i) for i in range(9)),
                regime=NormRegime.NO_NORM,
            )
