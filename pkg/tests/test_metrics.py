from __future__ import annotations

from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rwpart.graph import Graph
from rwpart.metrics import (
    balance_variance,
    connection_report,
    evaluate,
    expected_communication,
    modularity,
    partition_improvements,
    render_table,
    replication_objective,
    vertexcut_improvement,
)
from rwpart.partition import ALGORITHMS, PartitionConfig, PartitionSet, SeedSelectionError, from_assignment, partition

from conftest import random_connected, two_triangles, two_triangles_bridge


def newman(g: Graph, assign) -> float:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges.tolist())
    groups = [set(np.flatnonzero(np.asarray(assign) == i).tolist()) for i in range(max(assign) + 1)]
    return nx.community.modularity(h, [s for s in groups if s])


def record_chain_oracle(g: Graph, ps: PartitionSet) -> float:
    """Stationary hand-off rate from a dense eigen-solve over (partition, vertex) states."""
    states = [(i, v) for i in range(ps.k) for v in ps.members[i].tolist()]
    index = {s: j for j, s in enumerate(states)}
    parts = {v: [i for i in range(ps.k) if v in set(ps.members[i].tolist())] for v in range(g.n)}
    ne = ps.edge_counts
    P = np.zeros((len(states), len(states)))
    leave = np.zeros(len(states))
    for (i, v), j in index.items():
        nb = g.adjacency[v]
        for u in nb:
            if (i, u) in index:
                P[j, index[(i, u)]] += 1 / len(nb)
            else:
                leave[j] += 1 / len(nb)
                tot = sum(ne[q] for q in parts[u])
                for q in parts[u]:
                    w = ne[q] / tot if tot else 1 / len(parts[u])
                    P[j, index[(q, u)]] += w / len(nb)
    lazy = 0.5 * (np.eye(len(states)) + P)
    vals, vecs = np.linalg.eig(lazy.T)
    x = np.real(vecs[:, np.argmin(np.abs(vals - 1))])
    x = x / x.sum()
    return float(x @ leave)


# ---- modularity

def test_single_partition_modularity_zero(bridge_graph):
    ps = PartitionSet(n=6, k=1, members=[range(6)], edge_owner=np.zeros(7, dtype=np.int64))
    assert modularity(bridge_graph, ps) == pytest.approx(0.0, abs=1e-15)


def test_two_disjoint_triangles():
    g = two_triangles()
    ps = from_assignment(g, [0, 0, 0, 1, 1, 1], 2)
    assert modularity(g, ps) == pytest.approx(0.5, abs=1e-15)


def test_bridge_split_matches_newman(bridge_graph):
    ps = from_assignment(bridge_graph, [0, 0, 0, 1, 1, 1], 2)
    value = modularity(bridge_graph, ps)
    assert value == pytest.approx(newman(bridge_graph, [0, 0, 0, 1, 1, 1]), abs=1e-12)
    assert value == pytest.approx(5 / 14, abs=1e-15)


def test_replicated_vertex_counts_full_degree_per_membership(bridge_graph):
    ps = partition(bridge_graph, PartitionConfig("vertexcut", 2))
    # Pa0 = {a,b,c,d} owns 4 edges, Pa1 = {d,e,f} owns 3; d's degree 3 counts in both volumes
    tp = np.array([8, 6]) / 14
    vol = np.array([2 + 2 + 3 + 3, 3 + 2 + 2]) / 14
    assert partition_improvements(bridge_graph, ps) == pytest.approx(tp - vol ** 2, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(4, 40), k=st.integers(2, 5))
def test_modularity_is_newman_without_replicas(seed, n, k):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, n, n)
    assign = rng.integers(0, k, size=n)
    ps = from_assignment(g, assign, k)
    assert modularity(g, ps) == pytest.approx(newman(g, assign.tolist()), abs=1e-12)
    assert np.all(partition_improvements(g, ps) <= 0.25 + 1e-15)


def test_modularity_needs_edges():
    g = Graph(3, np.empty((0, 2)))
    with pytest.raises(ValueError):
        modularity(g, from_assignment(g, [0, 1, 1], 2))


# ---- balance

def test_balance_variance_examples():
    g = Graph(4, [(0, 1), (2, 3)])
    assert balance_variance(from_assignment(g, [0, 0, 1, 1], 2)) == 0.0
    assert balance_variance(PartitionSet(n=4, k=2, members=[range(4), []], edge_owner=[0, 0])) == 0.5


def test_balance_variance_table_two_sizes():
    sizes = [34963, 34965, 34443, 34384, 34707, 34388, 39500, 35017, 34506, 34418]
    total = sum(sizes)
    want = sum((Fraction(s) - Fraction(total, 10)) ** 2 for s in sizes) / total ** 2
    members = []
    start = 0
    for s in sizes:
        members.append(range(start, start + s))
        start += s
    ps = PartitionSet(n=total, k=10, members=members, edge_owner=np.empty(0, dtype=np.int64))
    assert balance_variance(ps) == pytest.approx(float(want), rel=1e-12)
    assert 0 < balance_variance(ps) < 1e-3


# ---- connection

def test_connection_counts(bridge_graph):
    bfs = partition(bridge_graph, PartitionConfig("bfs", 2))
    assert connection_report(bridge_graph, bfs) == [1, 1]
    g = two_triangles()
    together = from_assignment(g, [0, 0, 0, 0, 0, 0], 2)
    assert connection_report(g, together) == [2, 0]
    assert not evaluate(g, together).connected


# ---- vertex-cut metric

def test_vertexcut_improvement_null_without_cuts(bridge_graph):
    assert vertexcut_improvement(bridge_graph, from_assignment(bridge_graph, [0, 0, 0, 1, 1, 1], 2)) is None


def test_vertexcut_improvement_everything_cut(bridge_graph):
    owner = np.array([0, 0, 0, 0, 1, 1, 1])
    ps = PartitionSet(n=6, k=2, members=[range(6), range(6)], edge_owner=owner)
    ps.check(bridge_graph)
    N = 12
    want = Fraction(0)
    for i in range(2):
        want += Fraction(6, N)
        for v in range(6):
            want -= Fraction(1, N) * (1 - Fraction(6, N) ** int(bridge_graph.degrees[v]))
    assert want == Fraction(5, 24)
    assert vertexcut_improvement(bridge_graph, ps) == pytest.approx(float(want), abs=1e-15)


# ---- communication

def test_expected_communication_single_partition(bridge_graph):
    ps = PartitionSet(n=6, k=1, members=[range(6)], edge_owner=np.zeros(7, dtype=np.int64))
    assert expected_communication(bridge_graph, ps) == 0.0


def test_expected_communication_bridge_cut(bridge_graph):
    ps = partition(bridge_graph, PartitionConfig("vertexcut", 2))
    assert expected_communication(bridge_graph, ps) == pytest.approx(2 / 21, abs=1e-13)


def test_even_split_vertex():
    # hub of degree 4 held by two partitions with two owned edges each
    g = Graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    ps = PartitionSet(n=5, k=2, members=[[0, 1, 2], [0, 3, 4]], edge_owner=[0, 0, 1, 1])
    d_in = ps.d_in(g)
    deg = g.degrees[ps.rec_vertex]
    per_hub = (d_in - d_in ** 2 / deg)[ps.rec_vertex == 0].sum()
    assert per_hub == 2
    assert expected_communication(g, ps) == pytest.approx(per_hub / (2 * g.m), abs=1e-13)


def test_expected_communication_is_cut_fraction_without_replicas(rng):
    for _ in range(10):
        g = random_connected(rng, 30, 30)
        assign = rng.integers(0, 3, size=g.n)
        ps = from_assignment(g, assign, 3)
        cut = np.sum(assign[g.edges[:, 0]] != assign[g.edges[:, 1]])
        assert expected_communication(g, ps) == pytest.approx(cut / g.m, abs=1e-12)


@pytest.mark.parametrize("alg", ALGORITHMS)
def test_expected_communication_matches_dense_oracle(rng, alg):
    for _ in range(4):
        g = random_connected(rng, int(rng.integers(8, 25)), 20)
        try:
            ps = partition(g, PartitionConfig(alg, 3, seed=1))
        except SeedSelectionError:
            continue
        assert expected_communication(g, ps) == pytest.approx(record_chain_oracle(g, ps), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(3, 6))
def test_merging_partitions_never_raises_communication(seed, k):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, 30, 25)
    assign = rng.integers(0, k, size=g.n)
    a, b = sorted(rng.choice(k, size=2, replace=False).tolist())
    merged = np.where(assign == b, a, assign)
    merged = np.where(merged > b, merged - 1, merged)
    before = expected_communication(g, from_assignment(g, assign, k))
    after = expected_communication(g, from_assignment(g, merged, k - 1))
    assert after <= before + 1e-12


# ---- replication

def test_replication_objective():
    g = two_triangles_bridge()
    assert replication_objective(from_assignment(g, [0, 0, 0, 1, 1, 1], 2)) == 1.0
    ps = partition(g, PartitionConfig("vertexcut", 2))
    assert replication_objective(ps) == pytest.approx(7 / 6)


# ---- report

def test_report_text_and_ranges(bridge_graph):
    ps = partition(bridge_graph, PartitionConfig("bfs", 2))
    rep = evaluate(bridge_graph, ps)
    text = rep.to_text()
    keys = [ln.split("=")[0] for ln in text.splitlines()]
    assert keys == list(rep.FIELDS)
    assert "vertexcut_improvement=null" in text
    assert "connection=YES" in text
    assert rep.communication_objective == pytest.approx(rep.expected_communication / 2)
    assert rep.attained_vertex_imbalance == pytest.approx(4 * 2 / 6)
    table = render_table([rep, evaluate(bridge_graph, partition(bridge_graph, PartitionConfig("vertexcut", 2)))])
    assert "bfs" in table and "vertexcut" in table


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), k=st.integers(2, 5), alg=st.sampled_from(ALGORITHMS))
def test_metric_ranges(seed, k, alg):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, int(rng.integers(k + 4, 60)), 40)
    try:
        ps = partition(g, PartitionConfig(alg, k, seed=seed))
    except SeedSelectionError:
        return
    rep = evaluate(g, ps)
    assert max(rep.improvements) <= 0.25 + 1e-15
    assert 0 <= rep.balance_variance <= (k - 1) / k + 1e-15
    assert rep.vertexcut_improvement is None or -1 <= rep.vertexcut_improvement <= 1
    assert 0 <= rep.expected_communication < 1
    assert rep.replication_objective >= 1
