import numpy as np
import pytest
from scipy.stats import binom

from mixedtrails.core import GroupAssignmentProbabilities
from mixedtrails.synthgen import (
    BLUE, RED, ColoredGraph, WalkerConfig, build_theta, generate_ba_graph, paper_hypotheses, simulate_walker,
    simulate_walkers,
)


@pytest.fixture(scope="module")
def graph():
    return generate_ba_graph(100, 10, 0.5, seed=3)


class TestGraph:
    def test_edge_count_and_shape(self, graph):
        assert graph.n_nodes == 100
        assert graph.n_edges == 45 + 90 * 10
        assert graph.is_connected()
        assert all(i not in nb for i, nb in enumerate(graph.edges))
        adj = graph.adjacency()
        assert (adj != adj.T).nnz == 0 and adj.max() == 1

    def test_all_red(self):
        g = generate_ba_graph(30, 3, p_red=1.0, seed=0)
        assert set(g.node_color) == {RED}
        link = build_theta(g, "link").theta
        red = build_theta(g, RED).theta
        assert abs(link - red).max() == 0.0

    def test_red_fraction(self):
        lo, hi = binom.interval(0.99, 100, 0.5)
        inside = sum(lo <= generate_ba_graph(100, 10, 0.5, seed=s).node_color.count(RED) <= hi for s in range(20))
        assert inside >= 18

    @pytest.mark.parametrize("n,m", [(5, 5), (1, 0), (10, 0)])
    def test_invalid_sizes(self, n, m):
        with pytest.raises(ValueError):
            generate_ba_graph(n, m)

    def test_seeded(self):
        assert generate_ba_graph(40, 4, seed=9) == generate_ba_graph(40, 4, seed=9)
        assert generate_ba_graph(40, 4, seed=9) != generate_ba_graph(40, 4, seed=10)


class TestTheta:
    def test_two_red_two_blue(self):
        # star: node 0 linked to two red and two blue leaves
        edges = (frozenset({1, 2, 3, 4}),) + tuple(frozenset({0}) for _ in range(4))
        g = ColoredGraph(5, edges, (RED, RED, RED, BLUE, BLUE))
        row = build_theta(g, RED).theta.toarray()[0]
        np.testing.assert_allclose(row, [0, 10 / 22, 10 / 22, 1 / 22, 1 / 22], rtol=1e-15)
        np.testing.assert_allclose(build_theta(g, BLUE).theta.toarray()[0], [0, 1 / 22, 1 / 22, 10 / 22, 10 / 22])
        np.testing.assert_allclose(build_theta(g, "link").theta.toarray()[0], [0, 0.25, 0.25, 0.25, 0.25])

    def test_rows_stochastic_support_in_adjacency(self, graph):
        adj = graph.adjacency()
        for v in ("link", RED, BLUE):
            theta = build_theta(graph, v).theta
            np.testing.assert_allclose(np.asarray(theta.sum(axis=1)).ravel(), 1.0, atol=1e-12)
            assert (theta.multiply(adj) != theta).nnz == 0

    def test_unknown_variant(self, graph):
        with pytest.raises(ValueError):
            build_theta(graph, "green")


class TestWalkers:
    def test_size_and_edges(self, graph):
        d = simulate_walkers(graph, WalkerConfig("link", 500, 10, seed=1))
        assert len(d) == 5000
        adj = graph.adjacency().tocsr()
        assert np.all(np.asarray(adj[d.src, d.dst]).ravel() == 1)
        assert set(d.metadata) == {"walker_color", "majority", "shade", "matrix"}

    def test_full_size_count(self, graph):
        d = simulate_walkers(graph, WalkerConfig("link", 10_000, 10, seed=1))
        assert len(d) == 100_000

    def test_link_frequencies_converge(self, graph):
        # hubs have ~40 targets, so multinomial noise alone gives TV ~0.05 at
        # full size; a larger sample puts every row well below the bound
        d = simulate_walkers(graph, WalkerConfig("link", 50_000, 10, seed=4))
        counts = d.counts().toarray()
        theta = build_theta(graph, "link").theta.toarray()
        rows = np.flatnonzero(counts.sum(axis=1) >= 1000)
        assert rows.size > 0
        for i in rows:
            emp = counts[i] / counts[i].sum()
            assert 0.5 * np.abs(emp - theta[i]).sum() < 0.05

    def test_color_walkers_prefer_their_color(self, graph):
        d = simulate_walkers(graph, WalkerConfig("color", 2000, 10, seed=2))
        red_target = np.array([graph.node_color[j] == RED for j in d.dst])
        wc = np.array(d.metadata["walker_color"])
        assert red_target[wc == RED].mean() - red_target[wc == BLUE].mean() > 0.5

    def test_memory_first_step_never_draw(self, graph):
        d = simulate_walkers(graph, WalkerConfig("memory", 300, 5, seed=2))
        first = d.positions == 0
        maj = np.array(d.metadata["majority"])
        mat = np.array(d.metadata["matrix"])
        assert "draw" not in set(maj[first])
        assert set(mat[first]) <= {RED, BLUE}
        assert np.all((mat == "link") == (maj == "draw"))

    def test_majority_counts_visits(self):
        # path graph coloured red-blue-red: majority after visiting 0, 1 is a draw
        edges = (frozenset({1}), frozenset({0, 2}), frozenset({1}))
        g = ColoredGraph(3, edges, (RED, BLUE, RED))
        cfg = WalkerConfig("memory", 50, 4, seed=0)
        for w in range(50):
            rec = simulate_walker(g, cfg, w)
            for k, maj in enumerate(rec.majority):
                seen = [g.node_color[v] for v in rec.nodes[: k + 1]]
                r, b = seen.count(RED), seen.count(BLUE)
                assert maj == (RED if r > b else BLUE if b > r else "draw")

    def test_violet_full_shade_equals_red_color_walker(self, graph):
        violet = WalkerConfig("violet", 50, 10, seed=8, fixed_shade=1.0, p_red_walker=1.0)
        color = WalkerConfig("color", 50, 10, seed=8, p_red_walker=1.0)
        for w in range(50):
            a = simulate_walker(graph, violet, w)
            b = simulate_walker(graph, color, w)
            assert a.nodes == b.nodes and set(a.matrix) == {RED}

    def test_order_independent_and_deterministic(self, graph):
        cfg = WalkerConfig("violet", 40, 6, seed=5)
        d = simulate_walkers(graph, cfg)
        for w in (39, 0, 17):
            rec = simulate_walker(graph, cfg, w)
            rows = np.flatnonzero(np.array(d.sequence_ids) == f"w{w}")
            assert list(d.src[rows]) == list(rec.nodes[:-1])
            assert list(d.dst[rows]) == list(rec.nodes[1:])
        again = simulate_walkers(graph, cfg)
        assert np.array_equal(d.src, again.src) and d.metadata == again.metadata

    def test_config_validation(self):
        with pytest.raises(ValueError):
            WalkerConfig("zigzag")
        with pytest.raises(ValueError):
            WalkerConfig("link", n_walkers=0)


class TestStudyHypotheses:
    @pytest.fixture(scope="class")
    @staticmethod
    def data():
        g = generate_ba_graph(30, 3, seed=1)
        return g, simulate_walkers(g, WalkerConfig("violet", 20, 5, seed=1))

    def test_structures(self, data):
        g, d = data
        hs = {h.name: h for h in paper_hypotheses(g, d, ["link", "link-color", "color", "mem", "violet",
                                                            "violet-naive"])}
        assert hs["link"].gamma.o == 1
        assert hs["mem"].gamma.groups == (RED, BLUE, "draw")
        theta = {v: build_theta(g, v).theta.toarray() for v in ("link", RED, BLUE)}
        for phi, v in zip(hs["mem"].phis, (RED, BLUE, "link")):
            np.testing.assert_array_equal(phi.dense(), theta[v])
        k = d.metadata["walker_color"].index(BLUE)
        np.testing.assert_array_equal(hs["color"].gamma.gamma[k], [0.0, 1.0])
        s = float(d.metadata["shade"][0])
        np.testing.assert_allclose(hs["violet"].gamma.gamma[0], [s, 1 - s])
        assert hs["violet-naive"].naive_elicitation and not hs["violet"].naive_elicitation

    def test_shade_row(self):
        g = GroupAssignmentProbabilities((RED, BLUE), [[0.3, 0.7]])
        np.testing.assert_allclose(g.gamma[0], [0.3, 0.7])

    def test_missing_metadata(self, data):
        g, d = data
        from mixedtrails.core import TransitionDataset

        bare = TransitionDataset(d.space, d.src, d.dst)
        with pytest.raises(ValueError, match="metadata"):
            paper_hypotheses(g, bare, ["color"])
        with pytest.raises(ValueError):
            paper_hypotheses(g, d, ["nope"])
