"""Undirected, unweighted graphs: loading, normalisation, generation, components.

Vertices are dense integers ``0..n-1``. The user-facing id of each vertex is
kept in ``Graph.labels`` so that output files can speak the caller's ids.
"""

from __future__ import annotations

import io
import os
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

__all__ = [
    "Graph",
    "GraphError",
    "ParseError",
    "NormalizeOptions",
    "LoadReport",
    "ComponentLabeling",
    "load_edge_list",
    "write_edge_list",
    "connected_components",
    "generate_power_law",
    "is_bipartite",
]


class GraphError(ValueError):
    """Invalid graph input or parameters."""


class ParseError(GraphError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class NormalizeOptions:
    """How raw edge records are turned into a simple graph.

    ``adjacency`` switches the reader from ``u v`` pairs to adjacency rows
    ``u n1 n2 ...`` (a row may hold just ``u``).  ``repair_orphans`` appends a
    sink vertex and links every id that shows up only as a neighbour to it.
    """

    repair_orphans: bool = False
    adjacency: bool = False


@dataclass
class LoadReport:
    n: int = 0
    m: int = 0
    records: int = 0
    self_loops_dropped: int = 0
    duplicates_dropped: int = 0
    orphans_repaired: int = 0
    sink_label: int | None = None

    def to_text(self) -> str:
        rows = [
            ("n", self.n),
            ("m", self.m),
            ("records", self.records),
            ("self_loops_dropped", self.self_loops_dropped),
            ("duplicates_dropped", self.duplicates_dropped),
            ("orphans_repaired", self.orphans_repaired),
            ("sink_label", "none" if self.sink_label is None else self.sink_label),
        ]
        return "".join(f"{k}={v}\n" for k, v in rows)


class Graph:
    """Immutable simple undirected graph in CSR form.

    Attributes
    ----------
    indptr, indices : ndarray
        CSR adjacency; neighbours of ``v`` are ``indices[indptr[v]:indptr[v+1]]``,
        sorted ascending.
    slot_edge : ndarray
        Edge id of every CSR slot, aligned with ``indices``.
    edges : ndarray, shape (m, 2)
        Edge list with ``u < v``, sorted lexicographically; row ``e`` is edge ``e``.
    degrees : ndarray
    labels : ndarray
        Original (user-facing) id of each dense vertex.
    """

    def __init__(self, n: int, edges: np.ndarray, labels: np.ndarray | None = None,
                 report: LoadReport | None = None):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if len(edges):
            if edges.min() < 0 or edges.max() >= n:
                raise GraphError("edge endpoint outside 0..n-1")
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            if np.any(lo == hi):
                raise GraphError("self-loops are not allowed")
            order = np.lexsort((hi, lo))
            lo, hi = lo[order], hi[order]
            if np.any((lo[1:] == lo[:-1]) & (hi[1:] == hi[:-1])):
                raise GraphError("duplicate edges are not allowed")
            edges = np.stack([lo, hi], axis=1)
        m = len(edges)

        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        eid = np.concatenate([np.arange(m), np.arange(m)])
        order = np.lexsort((dst, src))
        degrees = np.bincount(src, minlength=n).astype(np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(degrees, out=indptr[1:])

        if labels is None:
            labels = np.arange(n, dtype=np.int64)
        labels = np.asarray(labels, dtype=np.int64)
        if len(labels) != n:
            raise GraphError("labels must have one entry per vertex")

        self.n = int(n)
        self.m = int(m)
        self.edges = edges
        self.indptr = indptr
        self.indices = dst[order].astype(np.int64)
        self.slot_edge = eid[order].astype(np.int64)
        self.degrees = degrees
        self.labels = labels
        self.report = report
        for arr in (self.edges, self.indptr, self.indices, self.slot_edge,
                    self.degrees, self.labels):
            arr.setflags(write=False)

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.degrees[v])

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Neighbour lists as plain Python lists (for the pure-Python loops)."""
        ind = self.indices.tolist()
        ptr = self.indptr.tolist()
        return [ind[ptr[v]:ptr[v + 1]] for v in range(self.n)]

    @cached_property
    def label_index(self) -> dict[int, int]:
        return {int(lab): v for v, lab in enumerate(self.labels.tolist())}

    def dense_id(self, label: int) -> int:
        try:
            return self.label_index[int(label)]
        except KeyError:
            raise GraphError(f"unknown vertex id {label}") from None

    def edge_id(self, u: int, v: int) -> int:
        """Id of edge ``(u, v)``; raises ``KeyError`` when absent."""
        lo, hi = self.indptr[u], self.indptr[u + 1]
        pos = lo + np.searchsorted(self.indices[lo:hi], v)
        if pos >= hi or self.indices[pos] != v:
            raise KeyError((u, v))
        return int(self.slot_edge[pos])

    def to_scipy(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))

    def same_structure(self, other: Graph) -> bool:
        return (self.n == other.n and np.array_equal(self.edges, other.edges)
                and np.array_equal(self.labels, other.labels))


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8")), False
    if isinstance(source, io.TextIOBase):
        return source, False
    return io.TextIOWrapper(source, encoding="utf-8"), False


def _parse_records(stream: Iterable[str], adjacency: bool):
    """Yield ``(lineno, source, neighbours)`` for every data line."""
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if not adjacency and len(parts) != 2:
            raise ParseError(f"expected 2 ids, got {len(parts)}", lineno)
        try:
            ids = [int(p) for p in parts]
        except ValueError:
            raise ParseError(f"non-integer id in {line!r}", lineno) from None
        if any(i < 0 for i in ids):
            raise ParseError(f"negative id in {line!r}", lineno)
        yield lineno, ids[0], ids[1:]


def load_edge_list(source, options: NormalizeOptions | None = None) -> Graph:
    """Read an edge list (path, text stream, byte stream or bytes) into a Graph.

    Self-loops and repeated edges (in either orientation) are dropped and
    counted in ``graph.report``.  Ids are remapped to ``0..n-1`` in ascending
    order of the original id.
    """
    options = options or NormalizeOptions()
    stream, owned = _open_text(source)
    srcs: list[int] = []
    dsts: list[int] = []
    sources: set[int] = set()
    mentioned: set[int] = set()
    records = 0
    try:
        for _, u, nbrs in _parse_records(stream, options.adjacency):
            mentioned.add(u)
            if nbrs:
                sources.add(u)
            for v in nbrs:
                mentioned.add(v)
                srcs.append(u)
                dsts.append(v)
                records += 1
    finally:
        if owned:
            stream.close()
    if not mentioned:
        raise ParseError("empty input")

    report = LoadReport(records=records)
    if options.repair_orphans:
        orphans = sorted(mentioned - sources)
        if orphans:
            sink = max(mentioned) + 1
            mentioned.add(sink)
            srcs.extend(orphans)
            dsts.extend([sink] * len(orphans))
            report.orphans_repaired = len(orphans)
            report.sink_label = sink

    labels = np.array(sorted(mentioned), dtype=np.int64)
    u = np.searchsorted(labels, np.asarray(srcs, dtype=np.int64))
    v = np.searchsorted(labels, np.asarray(dsts, dtype=np.int64))
    loops = u == v
    report.self_loops_dropped = int(loops.sum())
    u, v = u[~loops], v[~loops]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if len(lo) else np.empty((0, 2), np.int64)
    report.duplicates_dropped = int(len(lo) - len(pairs))
    report.n, report.m = len(labels), len(pairs)
    return Graph(len(labels), pairs, labels=labels, report=report)


def write_edge_list(g: Graph, target) -> None:
    """Write ``g`` as ``u v`` lines using the original vertex ids."""
    lab = g.labels
    lines = [f"# n={g.n} m={g.m}\n"]
    lines.extend(f"{a} {b}\n" for a, b in zip(lab[g.edges[:, 0]].tolist(), lab[g.edges[:, 1]].tolist()))
    text = "".join(lines)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


@dataclass
class ComponentLabeling:
    """Component index per vertex; ``-1`` marks vertices outside the subset."""

    component_id: np.ndarray
    component_count: int

    def groups(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.component_count)]
        for v, c in enumerate(self.component_id.tolist()):
            if c >= 0:
                out[c].append(v)
        return out


def _canonical_labels(raw: np.ndarray, mask: np.ndarray) -> tuple[np.ndarray, int]:
    # renumber so that components are ordered by their smallest vertex
    comp = np.full(len(raw), -1, dtype=np.int64)
    seen: dict[int, int] = {}
    for v in np.flatnonzero(mask).tolist():
        c = int(raw[v])
        if c not in seen:
            seen[c] = len(seen)
        comp[v] = seen[c]
    return comp, len(seen)


def connected_components(g: Graph, restrict_to: Iterable[int] | None = None) -> ComponentLabeling:
    """Connected components, optionally of the subgraph induced by ``restrict_to``."""
    if restrict_to is None:
        mask = np.ones(g.n, dtype=bool)
        adj = g.to_scipy()
    else:
        mask = np.zeros(g.n, dtype=bool)
        mask[np.fromiter(restrict_to, dtype=np.int64)] = True
        if not mask.any():
            return ComponentLabeling(np.full(g.n, -1, dtype=np.int64), 0)
        keep = mask[g.edges[:, 0]] & mask[g.edges[:, 1]]
        e = g.edges[keep]
        adj = csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(g.n, g.n))
    if g.n == 0:
        return ComponentLabeling(np.empty(0, dtype=np.int64), 0)
    _, raw = _cc(adj, directed=False)
    comp, count = _canonical_labels(raw, mask)
    return ComponentLabeling(comp, count)


def generate_power_law(n: int, edges_per_new_vertex: int, rng_seed: int) -> Graph:
    """Preferential-attachment graph grown from a clique of ``edges_per_new_vertex + 1``.

    Each new vertex links to ``edges_per_new_vertex`` distinct existing
    vertices picked with probability proportional to their degree, so
    ``m = (n - m0) * epnv + m0 * (m0 - 1) / 2`` with ``m0 = epnv + 1``.
    """
    k = int(edges_per_new_vertex)
    if k < 1 or n < k + 1:
        raise GraphError(f"need n >= edges_per_new_vertex + 1 >= 2, got n={n}, "
                         f"edges_per_new_vertex={edges_per_new_vertex}")
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    m0 = k + 1
    edges: list[tuple[int, int]] = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # one entry per edge endpoint: sampling uniformly from it is degree-proportional
    ends: list[int] = [x for e in edges for x in e]
    buf = rng.random(1 << 16)
    pos = 0
    for v in range(m0, n):
        chosen: set[int] = set()
        while len(chosen) < k:
            if pos == len(buf):
                buf = rng.random(1 << 16)
                pos = 0
            chosen.add(ends[int(buf[pos] * len(ends))])
            pos += 1
        for t in sorted(chosen):
            edges.append((t, v))
            ends.append(t)
            ends.append(v)
    return Graph(n, np.array(edges, dtype=np.int64))


def is_bipartite(g: Graph) -> bool:
    color = [-1] * g.n
    adj = g.adjacency
    for s in range(g.n):
        if color[s] >= 0:
            continue
        color[s] = 0
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if color[w] < 0:
                    color[w] = 1 - color[u]
                    queue.append(w)
                elif color[w] == color[u]:
                    return False
    return True
