"""Runtime tables for walking a partitioned graph, and the partition file format.

For each member record (partition ``i``, vertex ``v``) the vertex-neighbour
table holds NoP, the neighbours reached over edges that partition ``i`` owns
internally, and NoOP, every other neighbour.  The vertex-partition table maps
each vertex to the ascending list of partitions holding it.

Partition file layout::

    # rwpart partition v1
    algorithm=vertexcut
    k=2
    seed=7
    n=6
    m=7
    records=7
    #partition vertex is_replica nop noop
    0 2 0 0,1,3 -
    1 3 1 4,5 2

Vertex ids are the graph's original labels; ``-`` marks an empty list.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph import Graph, ParseError
from .partition import IntegrityError, PartitionSet

__all__ = ["PartitionTables", "build_tables", "write_partition", "read_partition"]

FORMAT_TAG = "# rwpart partition v1"


@dataclass(frozen=True, eq=False)
class PartitionTables:
    """Flat arrays; record ``r`` has neighbours ``nbrs[ptr[r]:ptr[r+1]]``, NoP first."""

    n: int
    k: int
    rec_part: np.ndarray
    rec_vertex: np.ndarray
    ptr: np.ndarray
    nbrs: np.ndarray
    nop_count: np.ndarray
    vp_indptr: np.ndarray
    vp_parts: np.ndarray
    vp_records: np.ndarray
    part_edges: np.ndarray
    degrees: np.ndarray

    def record(self, part: int, v: int) -> int:
        lo, hi = self.vp_indptr[v], self.vp_indptr[v + 1]
        for j in range(lo, hi):
            if self.vp_parts[j] == part:
                return int(self.vp_records[j])
        raise IntegrityError(f"vertex {v} is not a member of partition {part}")

    def nop(self, part: int, v: int) -> list[int]:
        r = self.record(part, v)
        return self.nbrs[self.ptr[r]:self.ptr[r] + self.nop_count[r]].tolist()

    def noop(self, part: int, v: int) -> list[int]:
        r = self.record(part, v)
        return self.nbrs[self.ptr[r] + self.nop_count[r]:self.ptr[r + 1]].tolist()

    def partitions_of(self, v: int) -> list[int]:
        return self.vp_parts[self.vp_indptr[v]:self.vp_indptr[v + 1]].tolist()

    @property
    def record_count(self) -> int:
        return len(self.rec_part)


def build_tables(g: Graph, ps: PartitionSet) -> PartitionTables:
    """Vertex-neighbour and vertex-partition tables for ``ps``.

    Raises :class:`IntegrityError` if ``ps`` violates its invariants.
    """
    ps.check(g)
    internal = ps.internal_edges(g)
    deg = g.degrees[ps.rec_vertex]
    ptr = np.zeros(len(deg) + 1, dtype=np.int64)
    np.cumsum(deg, out=ptr[1:])
    rec = np.repeat(np.arange(len(deg)), deg)
    # CSR slot of every (record, neighbour) pair
    slot = np.arange(ptr[-1]) - ptr[rec] + g.indptr[ps.rec_vertex][rec]
    eid = g.slot_edge[slot]
    is_nop = internal[eid] & (ps.edge_owner[eid] == ps.rec_part[rec])
    order = np.lexsort((g.indices[slot], ~is_nop, rec))
    return PartitionTables(
        n=g.n,
        k=ps.k,
        rec_part=ps.rec_part.copy(),
        rec_vertex=ps.rec_vertex.copy(),
        ptr=ptr,
        nbrs=g.indices[slot][order],
        nop_count=np.bincount(rec, weights=is_nop, minlength=len(deg)).astype(np.int64),
        vp_indptr=ps.vp_indptr.copy(),
        vp_parts=ps.vp_parts.copy(),
        vp_records=ps.vp_records.copy(),
        part_edges=ps.edge_counts.copy(),
        degrees=g.degrees.copy(),
    )


def _fmt_ids(ids) -> str:
    return ",".join(map(str, ids)) if len(ids) else "-"


def write_partition(g: Graph, ps: PartitionSet, target, tables: PartitionTables | None = None) -> None:
    """Write ``ps`` with its NoP/NoOP lists in the documented text format."""
    t = tables if tables is not None else build_tables(g, ps)
    lab = g.labels
    nbr_labels = lab[t.nbrs].tolist()
    ptr = t.ptr.tolist()
    nop = t.nop_count.tolist()
    rep = ps.rec_is_replica.tolist()
    out = [
        FORMAT_TAG + "\n",
        f"algorithm={ps.algorithm}\n",
        f"k={ps.k}\n",
        f"seed={'none' if ps.seed is None else ps.seed}\n",
        f"n={g.n}\n",
        f"m={g.m}\n",
        f"records={t.record_count}\n",
        "#partition vertex is_replica nop noop\n",
    ]
    for r, (p, v) in enumerate(zip(t.rec_part.tolist(), lab[t.rec_vertex].tolist())):
        a, b = ptr[r], ptr[r + 1]
        mid = a + nop[r]
        out.append(f"{p} {v} {int(rep[r])} {_fmt_ids(nbr_labels[a:mid])} {_fmt_ids(nbr_labels[mid:b])}\n")
    text = "".join(out)
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)


def _parse_ids(tok: str, lineno: int) -> list[int]:
    if tok == "-":
        return []
    try:
        return [int(x) for x in tok.split(",")]
    except ValueError:
        raise ParseError(f"bad id list {tok!r}", lineno) from None


def read_partition(source, g: Graph) -> PartitionSet:
    """Inverse of :func:`write_partition`; ``g`` must be the graph it was written for.

    Edge owners are recovered from NoP lists; an edge in no NoP list is a
    cross edge and goes to the lowest partition of its endpoints.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    else:
        lines = source.read().splitlines(keepends=True)
    if not lines or lines[0].strip() != FORMAT_TAG:
        raise ParseError("not an rwpart partition file", 1)
    header: dict[str, str] = {}
    recs: list[tuple[int, int, list[int], list[int]]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" in line and not recs:
            key, _, val = line.partition("=")
            header[key] = val
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(f"expected 5 fields, got {len(parts)}", lineno)
        try:
            p, v = int(parts[0]), g.dense_id(int(parts[1]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        recs.append((p, v, _parse_ids(parts[3], lineno), _parse_ids(parts[4], lineno)))
    try:
        k = int(header["k"])
        if int(header["n"]) != g.n or int(header["m"]) != g.m:
            raise IntegrityError("partition file was written for a different graph")
    except KeyError as exc:
        raise ParseError(f"missing header field {exc}") from None
    members: list[list[int]] = [[] for _ in range(k)]
    owner = np.full(g.m, -1, dtype=np.int64)
    for p, v, nop, noop in recs:
        if not 0 <= p < k:
            raise IntegrityError(f"partition id {p} outside 0..{k - 1}")
        members[p].append(v)
        nb = sorted(g.dense_id(x) for x in nop + noop)
        if nb != g.adjacency[v]:
            raise IntegrityError(f"record ({p}, {g.labels[v]}): NoP+NoOP differ from the graph's neighbours")
        for x in nop:
            owner[g.edge_id(v, g.dense_id(x))] = p
    loose = np.flatnonzero(owner < 0)
    if len(loose):
        first = np.full(g.n, np.iinfo(np.int64).max)
        for p in range(k - 1, -1, -1):
            first[members[p]] = p
        owner[loose] = np.minimum(first[g.edges[loose, 0]], first[g.edges[loose, 1]])
    seed = header.get("seed", "none")
    ps = PartitionSet(n=g.n, k=k, members=[np.array(m, dtype=np.int64) for m in members],
                      edge_owner=owner, algorithm=header.get("algorithm", "custom"),
                      seed=None if seed == "none" else int(seed))
    ps.check(g)
    return ps
