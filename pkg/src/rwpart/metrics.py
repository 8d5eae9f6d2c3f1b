"""Quality metrics for a PartitionSet.

Five headline metrics (modularity, balance variance, build time, connection,
vertex-cut improvement) plus the replication and communication objectives
the greedy algorithms approximate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from .graph import Graph
from .partition import PartitionSet

__all__ = [
    "MetricsReport",
    "partition_improvements",
    "modularity",
    "balance_variance",
    "connection_report",
    "vertexcut_improvement",
    "expected_communication",
    "record_chain",
    "replication_objective",
    "evaluate",
    "render_table",
]


def partition_improvements(g: Graph, ps: PartitionSet) -> np.ndarray:
    """Per-partition ``tp - ep``.

    ``tp`` is the share of edge ends held by internal owned edges of the
    partition; ``ep`` is the squared share of total degree of its members,
    every membership of a replicated vertex counting its full degree.
    """
    if g.m == 0:
        raise ValueError("modularity is undefined for a graph without edges")
    two_m = 2.0 * g.m
    tp = np.bincount(ps.rec_part, weights=ps.d_in(g), minlength=ps.k) / two_m
    vol = np.bincount(ps.rec_part, weights=g.degrees[ps.rec_vertex], minlength=ps.k) / two_m
    return tp - vol * vol


def modularity(g: Graph, ps: PartitionSet) -> float:
    """Sum of per-partition improvements; Newman modularity when nothing is cut."""
    return float(partition_improvements(g, ps).sum())


def balance_variance(ps: PartitionSet) -> float:
    """``sum_i (N_i - N/k)^2 / N^2`` with replicas counted in ``N_i``."""
    sizes = ps.sizes.astype(float)
    total = sizes.sum()
    if total <= 0:
        raise ValueError("balance variance needs at least one member")
    return float(((sizes - total / ps.k) ** 2).sum() / total ** 2)


def connection_report(g: Graph, ps: PartitionSet) -> list[int]:
    """Number of connected pieces per partition (internal owned edges only).

    An empty partition reports 0.
    """
    internal = ps.internal_edges(g)
    own = ps.edge_owner[internal]
    ends = g.edges[internal]
    a = ps.record_index(own, ends[:, 0])
    b = ps.record_index(own, ends[:, 1])
    nrec = len(ps.rec_key)
    adj = csr_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(nrec, nrec))
    if nrec == 0:
        return [0] * ps.k
    _, labels = _cc(adj, directed=False)
    counts = []
    for i in range(ps.k):
        counts.append(int(len(np.unique(labels[ps.rec_part == i]))))
    return counts


def vertexcut_improvement(g: Graph, ps: PartitionSet) -> float | None:
    """Observed minus random-hash-expected share of cut-vertex records.

    ``None`` when no vertex is cut.
    """
    nc = np.bincount(ps.rec_part, weights=ps.rec_is_replica, minlength=ps.k)
    if nc.sum() == 0:
        return None
    total = float(ps.sizes.sum())
    share = ps.sizes[ps.rec_part] / total
    expected = np.bincount(ps.rec_part, weights=1.0 - share ** g.degrees[ps.rec_vertex],
                           minlength=ps.k)
    return float(((nc - expected) / total).sum())


def record_chain(g: Graph, ps: PartitionSet) -> tuple[csr_matrix, np.ndarray]:
    """Transition matrix of the walk over member records, and per-record exit probability.

    From record ``(i, v)`` a neighbour ``u`` is drawn uniformly; the walker
    stays in ``i`` if ``u`` is a member there, otherwise it re-homes at ``u``
    with probability ``Ne_j / sum Ne`` over ``u``'s partitions.
    """
    nrec = len(ps.rec_key)
    deg = g.degrees[ps.rec_vertex]
    ptr = np.zeros(nrec + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    rec = np.repeat(np.arange(nrec), deg)
    slot = np.arange(ptr[-1]) - ptr[rec] + g.indptr[ps.rec_vertex][rec]
    u = g.indices[slot]
    tgt = ps.record_index(ps.rec_part[rec], u)
    stay = tgt >= 0
    inv_d = 1.0 / deg[rec]

    lu, lr = u[~stay], rec[~stay]
    lo = ps.vp_indptr[lu]
    cnt = ps.vp_indptr[lu + 1] - lo
    rr = np.repeat(lr, cnt)
    pos = np.repeat(lo, cnt) + np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
    ne = ps.edge_counts[ps.vp_parts].astype(float)
    owner_v = np.repeat(np.arange(g.n), np.diff(ps.vp_indptr))
    tot = np.bincount(owner_v, weights=ne, minlength=g.n)
    nr = np.diff(ps.vp_indptr)
    w = np.where(tot[owner_v] > 0, ne / np.where(tot[owner_v] > 0, tot[owner_v], 1.0), 1.0 / nr[owner_v])

    rows = np.concatenate([rec[stay], rr])
    cols = np.concatenate([tgt[stay], ps.vp_records[pos]])
    vals = np.concatenate([inv_d[stay], w[pos] / deg[rr]])
    P = csr_matrix((vals, (rows, cols)), shape=(nrec, nrec))
    exit_prob = np.bincount(lr, minlength=nrec) / np.maximum(deg, 1)
    return P, exit_prob


def expected_communication(g: Graph, ps: PartitionSet, tol: float = 1e-14,
                           max_iter: int = 100_000) -> float:
    """Probability that a stationary walk step changes partition.

    Exact stationary rate of the chain from :func:`record_chain`, found by
    power iteration on its lazy version.  When walkers only ever sit in a
    partition through edges it owns this is ``sum (d_in - d_in^2 / d) / sum d``;
    with no replicas it is ``cut / m``.
    """
    if g.m == 0:
        return 0.0
    P, exit_prob = record_chain(g, ps)
    if not exit_prob.any():
        return 0.0
    PT = P.T.tocsr()
    nr = ps.replication[ps.rec_vertex]
    x = g.degrees[ps.rec_vertex] / nr
    x = x / x.sum()
    for _ in range(max_iter):
        nxt = 0.5 * (x + PT @ x)
        if np.abs(nxt - x).sum() < tol:
            x = nxt
            break
        x = nxt
    return float(min(max(x @ exit_prob, 0.0), 1.0))


def replication_objective(ps: PartitionSet) -> float:
    """Mean number of partitions holding a vertex."""
    return float(ps.replication.sum() / ps.n)


@dataclass
class MetricsReport:
    algorithm: str
    k: int
    n: int
    m: int
    total_members: int
    modularity: float
    balance_variance: float
    build_time: float | None
    subgraph_counts: list[int]
    vertexcut_improvement: float | None
    replication_objective: float
    expected_communication: float
    communication_objective: float
    attained_edge_imbalance: float
    attained_vertex_imbalance: float
    cut_vertices: int
    improvements: list[float] = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return all(c == 1 for c in self.subgraph_counts)

    FIELDS = (
        "algorithm", "k", "n", "m", "total_members", "modularity", "balance_variance",
        "build_time", "connection", "subgraph_counts", "vertexcut_improvement",
        "replication_objective", "expected_communication", "communication_objective",
        "attained_edge_imbalance", "attained_vertex_imbalance", "cut_vertices",
    )

    def as_dict(self) -> dict[str, object]:
        return {
            "algorithm": self.algorithm,
            "k": self.k,
            "n": self.n,
            "m": self.m,
            "total_members": self.total_members,
            "modularity": self.modularity,
            "balance_variance": self.balance_variance,
            "build_time": self.build_time,
            "connection": "YES" if self.connected else "NO",
            "subgraph_counts": self.subgraph_counts,
            "vertexcut_improvement": self.vertexcut_improvement,
            "replication_objective": self.replication_objective,
            "expected_communication": self.expected_communication,
            "communication_objective": self.communication_objective,
            "attained_edge_imbalance": self.attained_edge_imbalance,
            "attained_vertex_imbalance": self.attained_vertex_imbalance,
            "cut_vertices": self.cut_vertices,
        }

    def to_text(self) -> str:
        """``key=value`` lines in a fixed order; floats as ``%.12g``, missing as ``null``."""
        lines = []
        for key, val in self.as_dict().items():
            if val is None:
                txt = "null"
            elif isinstance(val, float):
                txt = f"{val:.12g}"
            elif isinstance(val, list):
                txt = ",".join(str(x) for x in val)
            else:
                txt = str(val)
            lines.append(f"{key}={txt}\n")
        return "".join(lines)


def evaluate(g: Graph, ps: PartitionSet, build_time: float | None = None) -> MetricsReport:
    imps = partition_improvements(g, ps)
    ec = expected_communication(g, ps)
    sizes = ps.sizes
    return MetricsReport(
        algorithm=ps.algorithm,
        k=ps.k,
        n=g.n,
        m=g.m,
        total_members=int(sizes.sum()),
        modularity=float(imps.sum()),
        balance_variance=balance_variance(ps),
        build_time=ps.build_time if build_time is None else build_time,
        subgraph_counts=connection_report(g, ps),
        vertexcut_improvement=vertexcut_improvement(g, ps),
        replication_objective=replication_objective(ps),
        expected_communication=ec,
        communication_objective=ec / ps.k,
        attained_edge_imbalance=float(ps.edge_counts.max() * ps.k / g.m) if g.m else 0.0,
        attained_vertex_imbalance=float(sizes.max() * ps.k / sizes.sum()),
        cut_vertices=int(len(ps.cut_vertices)),
        improvements=imps.tolist(),
    )


def render_table(reports: list[MetricsReport]) -> str:
    """Human-readable comparison, one row per algorithm."""
    head = f"{'Algorithm':<12}{'Modularity':>12}{'Balance':>10}{'Time':>12}{'Connection':>12}{'Vertex-cut':>12}{'E(C)':>10}"
    rows = [head, "-" * len(head)]
    for r in reports:
        vc = "null" if r.vertexcut_improvement is None else f"{r.vertexcut_improvement:.2f}"
        t = "n/a" if r.build_time is None else f"{r.build_time:.2f}s"
        rows.append(f"{r.algorithm:<12}{r.modularity:>12.2f}{r.balance_variance:>10.2f}{t:>12}"
                    f"{'YES' if r.connected else 'NO':>12}{vc:>12}{r.expected_communication:>10.4f}")
    return "\n".join(rows) + "\n"
