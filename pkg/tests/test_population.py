import json
import warnings

import pytest

from socialsim.core import ConfigurationError, FormatError
from socialsim.population import (
    FollowGraph,
    generate_population,
    generate_seed_corpus,
    load_corpus,
    load_population,
    population_digest,
    population_to_lines,
    save_corpus,
    save_population,
    token_count,
    top_influencers,
)


class TestGeneratePopulation:
    def test_deterministic_byte_for_byte(self):
        p1, g1 = generate_population(558, seed=1)
        p2, g2 = generate_population(558, seed=1)
        assert population_to_lines(p1, g1) == population_to_lines(p2, g2)

    def test_different_seeds_differ(self):
        p1, g1 = generate_population(60, seed=1)
        p2, g2 = generate_population(60, seed=2)
        assert population_to_lines(p1, g1) != population_to_lines(p2, g2)

    @pytest.mark.parametrize("seed", [1, 7, 99])
    def test_exactly_eight_influencers(self, seed):
        profiles, _ = generate_population(558, seed=seed)
        assert sum(p.influencer for p in profiles) == 8

    def test_in_degrees_sum_equals_edge_count(self):
        _, graph = generate_population(10, seed=7)
        recount = sum(1 for _ in graph.edges())
        assert sum(graph.in_degrees().values()) == recount == graph.n_edges

    def test_rejects_tiny_populations(self):
        with pytest.raises(ConfigurationError):
            generate_population(9, seed=1)

    def test_influencers_are_top_in_degree(self):
        profiles, graph = generate_population(80, seed=3)
        deg = graph.in_degrees()
        expected = sorted(deg, key=lambda a: (-deg[a], a))[:8]
        flagged = sorted(p.id for p in profiles if p.influencer)
        assert sorted(expected) == flagged

    def test_everyone_follows_an_influencer(self):
        profiles, graph = generate_population(120, seed=5)
        influencers = {p.id for p in profiles if p.influencer}
        for p in profiles:
            assert graph.follows_of(p.id) & influencers, f"agent {p.id} follows no influencer"

    def test_no_self_edges(self):
        _, graph = generate_population(60, seed=9)
        assert all(follower != followee for follower, followee in graph.edges())

    def test_keywords_non_empty(self):
        profiles, _ = generate_population(40, seed=2)
        assert all(p.keywords for p in profiles)


class TestSeedCorpus:
    def test_fifty_unique_bodies(self):
        corpus = generate_seed_corpus(seed=1)
        assert len(corpus) == 50
        assert len(set(corpus)) == 50

    def test_token_counts_in_range(self):
        corpus = generate_seed_corpus(seed=1)
        for body in corpus:
            assert 150 <= token_count(body) <= 300

    def test_deterministic(self):
        assert generate_seed_corpus(seed=1) == generate_seed_corpus(seed=1)
        assert generate_seed_corpus(seed=1) != generate_seed_corpus(seed=2)


class TestPopulationIO:
    def test_round_trip(self, tmp_path):
        profiles, graph = generate_population(60, seed=4)
        path = tmp_path / "pop.jsonl"
        save_population(profiles, graph, path)
        loaded_profiles, loaded_graph = load_population(path)
        assert loaded_profiles == sorted(profiles, key=lambda p: p.id)
        assert loaded_graph == graph
        assert population_digest(profiles, graph) == population_digest(loaded_profiles, loaded_graph)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FormatError, match="not found"):
            load_population(tmp_path / "nope.jsonl")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "pop.jsonl"
        path.write_text("")
        with pytest.raises(FormatError, match="empty"):
            load_population(path)

    def test_self_edge_rejected_naming_line(self, tmp_path):
        path = tmp_path / "pop.jsonl"
        rows = [
            {"id": 0, "name": "a", "keywords": ["x"], "verified": False, "follows": [1]},
            {"id": 1, "name": "b", "keywords": ["x"], "verified": False, "follows": [1]},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows))
        with pytest.raises(FormatError, match=r":2:.*follows itself"):
            load_population(path)

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "pop.jsonl"
        rows = [
            {"id": 0, "name": "a", "keywords": ["x"], "verified": False, "follows": []},
            {"id": 0, "name": "b", "keywords": ["x"], "verified": False, "follows": []},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows))
        with pytest.raises(FormatError, match=r":2:.*duplicate"):
            load_population(path)

    def test_unknown_followee_rejected(self, tmp_path):
        path = tmp_path / "pop.jsonl"
        rows = [{"id": 0, "name": "a", "keywords": ["x"], "verified": False, "follows": [42]}]
        path.write_text("\n".join(json.dumps(r) for r in rows))
        with pytest.raises(FormatError, match="unknown agent ids"):
            load_population(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "pop.jsonl"
        path.write_text('{"id": 0, "name": "a", "keywords": ["x"], "verified": false, "follows": []}\n{broken')
        with pytest.raises(FormatError, match=":2:"):
            load_population(path)


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        corpus = generate_seed_corpus(seed=3, size=10)
        path = tmp_path / "corpus.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path) == corpus

    def test_duplicate_body_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        body = " ".join(["tok"] * 200)
        path.write_text("\n".join(json.dumps({"content": body}) for _ in range(2)))
        with pytest.raises(FormatError, match="duplicate"):
            load_corpus(path)

    def test_out_of_range_tokens_warn_not_error(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps({"content": "too short"}))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            bodies = load_corpus(path)
        assert bodies == ["too short"]
        assert any("token count" in str(w.message) for w in caught)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("\n")
        with pytest.raises(FormatError, match="empty"):
            load_corpus(path)


class TestFollowGraph:
    def test_rejects_self_edges(self):
        with pytest.raises(ValueError):
            FollowGraph({1: {1}})

    def test_digest_stable(self):
        g1 = FollowGraph({0: {1, 2}, 1: {2}, 2: set()})
        g2 = FollowGraph({2: set(), 1: {2}, 0: {2, 1}})
        assert g1.digest() == g2.digest()

    def test_top_influencers_tie_break_by_id(self):
        # all in-degrees equal: the 3 smallest ids win
        g = FollowGraph({0: {1}, 1: {2}, 2: {3}, 3: {0}})
        assert top_influencers(g, k=3) == [0, 1, 2]
