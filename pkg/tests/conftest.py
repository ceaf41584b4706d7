import pytest

from socialsim.population import AgentProfile, FollowGraph, generate_population, generate_seed_corpus


@pytest.fixture(scope="session")
def small_population():
    return generate_population(40, seed=11)


@pytest.fixture(scope="session")
def small_corpus():
    return generate_seed_corpus(seed=11, size=12)


def tiny_profiles():
    """Five hand-built agents; 0 and 1 are influencers."""
    return [
        AgentProfile(0, "ua", frozenset(["kw0"]), True, True),
        AgentProfile(1, "ub", frozenset(["kw1"]), True, True),
        AgentProfile(2, "uc", frozenset(["kw2"]), False, False),
        AgentProfile(3, "ud", frozenset(["kw3"]), False, False),
        AgentProfile(4, "ue", frozenset(["kw4"]), False, False),
    ]


def tiny_graph():
    return FollowGraph({0: {1}, 1: {0}, 2: {0}, 3: {0, 1}, 4: {1}})
