"""Network initialization, connection dynamics, and influence scoring."""

import math

import pytest

from polarsim.graph import (
    ConnectionDynamicsParams,
    NetworkInitParams,
    SocialGraph,
    UnknownAgent,
    evolve_connections,
    follow_probability,
    influence_score,
    init_network,
)
from polarsim.kernels import Rng
from polarsim.model import Agent, Role

from . import oracle


def agent(aid, opinion, role=Role.REGULAR):
    return Agent(
        id=aid,
        username=f"u{aid}",
        biography="b",
        personality="p",
        opinion=opinion,
        role=role,
    )


def population(n_pro=10, n_contra=10, influencers=()):
    agents = []
    for i in range(n_pro):
        agents.append(agent(i, 0.8, Role.INFLUENCER if i in influencers else Role.REGULAR))
    for i in range(n_pro, n_pro + n_contra):
        agents.append(agent(i, -0.8, Role.INFLUENCER if i in influencers else Role.REGULAR))
    return agents


class TestSocialGraph:
    def test_no_self_loops(self):
        g = SocialGraph([0, 1])
        with pytest.raises(ValueError):
            g.add_edge(0, 0)

    def test_duplicate_edges_collapse(self):
        g = SocialGraph([0, 1])
        assert g.add_edge(0, 1)
        assert not g.add_edge(0, 1)
        assert g.edge_count == 1

    def test_follower_sum_equals_edge_count(self):
        g = SocialGraph(range(5))
        g.add_edge(0, 1), g.add_edge(2, 1), g.add_edge(3, 4)
        assert sum(g.follower_count(n) for n in g.nodes) == g.edge_count == 3

    def test_adjacency_round_trip(self):
        g = SocialGraph(range(4))
        g.add_edge(0, 1), g.add_edge(0, 2), g.add_edge(3, 0)
        again = SocialGraph.from_adjacency(g.to_adjacency())
        assert again == g

    def test_unknown_agent(self):
        g = SocialGraph([0])
        with pytest.raises(UnknownAgent):
            g.followers(99)


class TestInitNetwork:
    def test_zero_cross_probability_means_no_cross_edges(self):
        agents = population()
        params = NetworkInitParams(0.4, 0.2, 0.0)
        graph = init_network(agents, params, Rng(3))
        signs = {a.id: 1 if a.opinion >= 0 else -1 for a in agents}
        for i, j in graph.edges():
            assert signs[i] == signs[j]

    def test_probability_one_gives_complete_same_sign_digraph(self):
        agents = [agent(i, 0.5) for i in range(6)]
        # cross_sign must be < same_sign_regular, so use an all-same-sign population
        params = NetworkInitParams(1.0, 1.0 - 1e-12, 0.5)
        graph = init_network(agents, params, Rng(4))
        assert graph.edge_count >= 6 * 5 - 1  # p_s is not exactly 1
        params_exact = NetworkInitParams(1.0, 0.999999999999, 0.0)
        graph = init_network(agents, params_exact, Rng(4))
        for i in range(6):
            for j in range(6):
                if i != j:
                    assert graph.has_edge(i, j)

    def test_influencers_attract_more_followers(self):
        agents = population(influencers={0, 10})
        params = NetworkInitParams()
        inf_in, reg_in = 0.0, 0.0
        runs = 1000
        for seed in range(runs):
            graph = init_network(agents, params, Rng(seed))
            inf_in += sum(graph.follower_count(i) for i in (0, 10)) / 2
            reg_in += sum(
                graph.follower_count(a.id) for a in agents if a.id not in (0, 10)
            ) / (len(agents) - 2)
        assert inf_in / runs > reg_in / runs
        # closed form: influencer in-degree 9*0.4 + 10*0.05; regular 9*0.2 + 10*0.05
        assert inf_in / runs == pytest.approx(9 * 0.4 + 10 * 0.05, abs=0.1)
        assert reg_in / runs == pytest.approx(9 * 0.2 + 10 * 0.05, abs=0.05)

    def test_ordering_constraint_enforced(self):
        with pytest.raises(ValueError):
            NetworkInitParams(0.2, 0.4, 0.05)
        with pytest.raises(ValueError):
            NetworkInitParams(0.4, 0.2, 0.2)

    def test_deterministic(self):
        agents = population()
        a = init_network(agents, NetworkInitParams(), Rng(9))
        b = init_network(agents, NetworkInitParams(), Rng(9))
        assert a == b


class TestFollowProbability:
    def test_same_opinion_frozen(self):
        params = ConnectionDynamicsParams()
        assert follow_probability(0.3, 0.3, params) == pytest.approx(
            float(oracle.p_react(0.3, 0.3, 0.5, 0.0, 0.0)), abs=1e-12
        )
        assert follow_probability(0.3, 0.3, params) == pytest.approx(0.46752584, abs=1e-6)

    def test_large_gap_vanishes(self):
        params = ConnectionDynamicsParams()
        value = follow_probability(0.8, -0.8, params)
        assert value == pytest.approx(float(oracle.p_react(0.8, -0.8, 0.5, 0.0, 0.0)), rel=1e-9)
        assert value < 1e-40  # oracle value 8.443e-49

    def test_independent_of_magnitude_with_zero_weight(self):
        # same distance up to float rounding of the subtraction
        params = ConnectionDynamicsParams()
        assert follow_probability(0.9, 0.7, params) == pytest.approx(
            follow_probability(0.1, -0.1, params), rel=1e-12
        )

    def test_symmetric_in_the_pair(self):
        params = ConnectionDynamicsParams()
        assert follow_probability(0.4, -0.2, params) == follow_probability(-0.2, 0.4, params)


class TestEvolveConnections:
    def setup_method(self):
        self.agents = {a.id: a for a in population()}

    def full_candidates(self, candidates=()):
        return {aid: list(candidates) for aid in self.agents}

    def test_unfollow_probability_one_clears_graph(self):
        graph = init_network(list(self.agents.values()), NetworkInitParams(), Rng(5))
        params = ConnectionDynamicsParams(unfollow_prob=1.0)
        evolve_connections(graph, self.agents, self.full_candidates(), params, Rng(6))
        assert graph.edge_count == 0

    def test_fixpoint_with_no_candidates_no_unfollow(self):
        graph = init_network(list(self.agents.values()), NetworkInitParams(), Rng(5))
        before = graph.copy()
        params = ConnectionDynamicsParams(unfollow_prob=0.0)
        changes = evolve_connections(graph, self.agents, self.full_candidates(), params, Rng(6))
        assert graph == before
        assert changes.added == [] and changes.removed == []

    def test_unfollow_binomial_rate(self):
        # 1000-edge graph, one step at p=0.05: expect 50 +- 3 sigma (6.9),
        # checked on the mean over seeds.
        big = {a.id: a for a in [agent(i, 0.8) for i in range(200)]}
        removed_counts = []
        for seed in range(40):
            graph = SocialGraph(big)
            rng = Rng(seed)
            edges = 0
            while edges < 1000:
                i, j = rng.index(200), rng.index(200)
                if i != j and graph.add_edge(i, j):
                    edges += 1
            params = ConnectionDynamicsParams(unfollow_prob=0.05)
            changes = evolve_connections(
                graph, big, {aid: [] for aid in big}, params, Rng(seed + 1000)
            )
            assert changes.unfollow_draws == 1000
            removed_counts.append(len(changes.removed))
        mean_removed = sum(removed_counts) / len(removed_counts)
        sigma = math.sqrt(1000 * 0.05 * 0.95)
        assert abs(mean_removed - 50) < 3 * sigma / math.sqrt(len(removed_counts))

    def test_candidates_can_be_followed(self):
        graph = SocialGraph(self.agents)
        params = ConnectionDynamicsParams(unfollow_prob=0.0)
        # same-sign candidates only, many seeds: some follows must happen
        added = 0
        for seed in range(50):
            g = graph.copy()
            changes = evolve_connections(
                g, self.agents, {0: [1, 2, 3], 1: [0, 2]}, params, Rng(seed)
            )
            added += len(changes.added)
            for i, j in changes.added:
                assert i in (0, 1) and j != i
        assert added > 0

    def test_self_candidate_ignored(self):
        graph = SocialGraph(self.agents)
        params = ConnectionDynamicsParams(unfollow_prob=0.0)
        changes = evolve_connections(graph, self.agents, {0: [0]}, params, Rng(1))
        assert changes.added == []

    def test_deterministic(self):
        graph1 = init_network(list(self.agents.values()), NetworkInitParams(), Rng(5))
        graph2 = graph1.copy()
        params = ConnectionDynamicsParams()
        evolve_connections(graph1, self.agents, self.full_candidates([0, 5]), params, Rng(8))
        evolve_connections(graph2, self.agents, self.full_candidates([0, 5]), params, Rng(8))
        assert graph1 == graph2

    def test_structure_invariants_after_fuzz(self):
        params = ConnectionDynamicsParams()
        for seed in range(20):
            graph = init_network(list(self.agents.values()), NetworkInitParams(), Rng(seed))
            for step in range(5):
                evolve_connections(
                    graph,
                    self.agents,
                    self.full_candidates([seed % 20, (seed + step) % 20]),
                    params,
                    Rng(seed * 31 + step),
                )
                edges = graph.edges()
                assert len(edges) == len(set(edges))
                assert all(i != j for i, j in edges)
                assert sum(graph.follower_count(n) for n in graph.nodes) == graph.edge_count


class TestInfluenceScore:
    def test_fraction(self):
        g = SocialGraph(range(30))
        for follower in range(1, 7):
            g.add_edge(follower, 0)
        assert influence_score(g, 0) == pytest.approx(6 / 29)

    def test_zero_and_one(self):
        g = SocialGraph(range(4))
        for follower in (1, 2, 3):
            g.add_edge(follower, 0)
        assert influence_score(g, 0) == 1.0
        assert influence_score(g, 1) == 0.0

    def test_unknown_agent(self):
        g = SocialGraph(range(3))
        with pytest.raises(UnknownAgent):
            influence_score(g, 99)
