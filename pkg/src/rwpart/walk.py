"""Random walks over partition tables.

A walker lives in one partition at a time.  Each step picks a neighbour
uniformly from NoP + NoOP of its current record, which is exactly the
graph's neighbour list, so the vertex sequence is the ordinary simple random
walk.  Stepping to a vertex that is not a member of the current partition is
a communication event: the segment in progress closes and the walker is
re-homed at the new vertex, picking among its partitions with probability
proportional to their edge counts.  The arrival step is step 1 of the new
segment, so only the very first segment can have length 0.

Randomness: walker ``w`` of an ensemble with base seed ``s`` draws from
``PCG64(SeedSequence(s, spawn_key=(w,)))``.  A walk consumes, in order, one
integer for a random start vertex (if no start is given), one double for the
initial home if the start vertex is replicated, then blocks of
``chunk_size`` doubles for neighbour choice followed by ``chunk_size``
doubles for re-homing.
"""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba as nb
import numpy as np

from .graph import Graph, is_bipartite
from .partition import IntegrityError
from .tables import PartitionTables

__all__ = [
    "WalkRecord",
    "CcdfTable",
    "stationary_distribution",
    "choose_home_partition",
    "run_partitioned_walk",
    "run_walk_ensemble",
    "ccdf",
    "jump_times",
    "jump_rate_stderr",
    "write_segments",
    "write_ccdf",
]

log = logging.getLogger(__name__)

CHUNK = 1 << 18
SEQUENCE_CAP = 100_000


@nb.njit(cache=True, nogil=True)
def _home(u, x, vp_indptr, vp_parts, vp_records, part_edges):
    lo = vp_indptr[u]
    hi = vp_indptr[u + 1]
    if hi - lo == 1:
        return vp_records[lo]
    total = 0
    for j in range(lo, hi):
        total += part_edges[vp_parts[j]]
    if total == 0:
        j = lo + int(x * (hi - lo))
        return vp_records[min(j, hi - 1)]
    target = x * total
    acc = 0.0
    for j in range(lo, hi):
        acc += part_edges[vp_parts[j]]
        if target < acc:
            return vp_records[j]
    return vp_records[hi - 1]


@nb.njit(cache=True, nogil=True)
def _walk_chunk(u_step, u_home, rec_part, rec_vertex, ptr, nbrs, nop_count,
                vp_indptr, vp_parts, vp_records, part_edges,
                cur_rec, cur_len, segs, nseg, visits, seq, seq_off):
    comm = 0
    for t in range(u_step.shape[0]):
        r = cur_rec
        p = rec_part[r]
        start = ptr[r]
        deg = ptr[r + 1] - start
        j = int(u_step[t] * deg)
        if j >= deg:
            j = deg - 1
        u = nbrs[start + j]
        nxt = -1
        # NoP neighbours are members by construction; NoOP ones may still be co-resident
        for q in range(vp_indptr[u], vp_indptr[u + 1]):
            if vp_parts[q] == p:
                nxt = vp_records[q]
                break
        if nxt < 0:
            segs[nseg] = cur_len
            nseg += 1
            cur_len = 0
            comm += 1
            nxt = _home(u, u_home[t], vp_indptr, vp_parts, vp_records, part_edges)
        cur_len += 1
        cur_rec = nxt
        visits[u] += 1
        if seq_off + t < seq.shape[0]:
            seq[seq_off + t] = u
    return cur_rec, cur_len, nseg, comm


@dataclass
class WalkRecord:
    """Outcome of one walker.

    ``segment_lengths`` holds steps spent in each partition between hand-offs;
    ``visits[v]`` counts arrivals at ``v`` (the start vertex is not counted).
    """

    seed: object
    start: int
    total_steps: int
    segment_lengths: np.ndarray
    communication_count: int
    visits: np.ndarray
    sequence: np.ndarray | None = None
    walker: int = 0

    @property
    def jump_rate(self) -> float:
        return self.communication_count / self.total_steps


@dataclass
class CcdfTable:
    lengths: np.ndarray
    ccdf: np.ndarray

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.lengths.tolist(), self.ccdf.tolist()))

    def at(self, ell) -> np.ndarray:
        """P(L >= ell) for arbitrary lengths (step-function lookup)."""
        ell = np.asarray(ell)
        idx = np.searchsorted(self.lengths, ell, side="left")
        padded = np.append(self.ccdf, 0.0)
        return padded[idx]


def stationary_distribution(g: Graph) -> np.ndarray:
    """``d(j) / sum d``; warns when the graph is bipartite (no limiting distribution)."""
    if g.m == 0:
        raise ValueError("stationary distribution needs at least one edge")
    if is_bipartite(g):
        warnings.warn("graph is bipartite: the walk is periodic and does not converge to pi",
                      RuntimeWarning, stacklevel=2)
    return g.degrees / g.degrees.sum()


def choose_home_partition(tables: PartitionTables, v: int, rng: np.random.Generator) -> int:
    """Partition for a walker arriving at ``v``.

    A vertex held by one partition consumes no randomness; otherwise
    partition ``f`` wins with probability ``Ne_f / sum Ne`` over ``v``'s partitions.
    """
    lo, hi = int(tables.vp_indptr[v]), int(tables.vp_indptr[v + 1])
    if hi == lo:
        raise IntegrityError(f"vertex {v} is not a member of any partition")
    if hi - lo == 1:
        return int(tables.vp_parts[lo])
    r = _home(v, rng.random(), tables.vp_indptr, tables.vp_parts, tables.vp_records,
              tables.part_edges)
    return int(tables.rec_part[r])


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def run_partitioned_walk(tables: PartitionTables, total_steps: int, seed=None,
                         start: int | None = None, record_sequence: bool | None = None,
                         chunk_size: int = CHUNK, walker: int = 0) -> WalkRecord:
    if total_steps < 1:
        raise ValueError("total_steps must be >= 1")
    if record_sequence is None:
        record_sequence = total_steps <= SEQUENCE_CAP
    rng = _rng(seed)
    if start is None:
        start = int(rng.integers(tables.n))
    if tables.degrees[start] == 0:
        raise ValueError(f"start vertex {start} is isolated")
    home = choose_home_partition(tables, start, rng)
    cur = tables.record(home, start)

    segs = np.zeros(total_steps + 1, dtype=np.int64)
    visits = np.zeros(tables.n, dtype=np.int64)
    seq = np.zeros(total_steps if record_sequence else 0, dtype=np.int64)
    nseg, cur_len, comm, done = 0, 0, 0, 0
    while done < total_steps:
        c = min(chunk_size, total_steps - done)
        u_step = rng.random(c)
        u_home = rng.random(c)
        cur, cur_len, nseg, cc = _walk_chunk(
            u_step, u_home, tables.rec_part, tables.rec_vertex, tables.ptr, tables.nbrs,
            tables.nop_count, tables.vp_indptr, tables.vp_parts, tables.vp_records,
            tables.part_edges, cur, cur_len, segs, nseg, visits, seq, done)
        comm += cc
        done += c
    segs[nseg] = cur_len
    nseg += 1
    return WalkRecord(seed=seed, start=start, total_steps=total_steps,
                      segment_lengths=segs[:nseg].copy(), communication_count=comm,
                      visits=visits, sequence=seq if record_sequence else None, walker=walker)


def jump_times(rec: WalkRecord) -> np.ndarray:
    """Step numbers (1-based) at which hand-offs happened."""
    # the arrival step opens the next segment, so a hand-off at step t follows t-1 closed steps
    return np.cumsum(rec.segment_lengths)[:-1] + 1


def jump_rate_stderr(rec: WalkRecord, batches: int = 100) -> float:
    """Batch-means standard error of ``rec.jump_rate``.

    Hand-offs of one walker are serially correlated (a walker that just
    crossed a boundary often steps straight back), so ``sqrt(p(1-p)/N)``
    understates the spread; the spread of per-batch rates does not.
    """
    size = rec.total_steps // batches
    if batches < 2 or size < 1:
        raise ValueError("need at least 2 batches of at least one step")
    used = size * batches
    t = jump_times(rec)
    counts = np.bincount((t[t <= used] - 1) // size, minlength=batches)
    return float(np.std(counts / size, ddof=1) / np.sqrt(batches))


def default_threads() -> int:
    env = os.environ.get("RWPART_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_walk_ensemble(tables: PartitionTables, walkers: int, steps_per_walker: int,
                      base_seed: int, threads: int | None = None,
                      start: int | None = None) -> list[WalkRecord]:
    """Independent walkers on shared read-only tables, ordered by walker id.

    The result depends only on the seeds, never on ``threads``.
    """
    if walkers < 1:
        raise ValueError("walkers must be >= 1")
    threads = threads or default_threads()

    def one(w: int) -> WalkRecord:
        ss = np.random.SeedSequence(base_seed, spawn_key=(w,))
        return run_partitioned_walk(tables, steps_per_walker, seed=ss, start=start,
                                    record_sequence=False, walker=w)

    if threads == 1 or walkers == 1:
        return [one(w) for w in range(walkers)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(walkers)))


def ccdf(records: list[WalkRecord]) -> CcdfTable:
    """Empirical P(L >= l) over the pooled segment lengths."""
    if not records:
        raise ValueError("no walk records")
    pooled = np.concatenate([r.segment_lengths for r in records])
    if len(pooled) == 0:
        raise ValueError("no segments in pool")
    lengths, counts = np.unique(pooled, return_counts=True)
    tail = np.cumsum(counts[::-1])[::-1]
    return CcdfTable(lengths=lengths, ccdf=tail / len(pooled))


def write_segments(records: list[WalkRecord], target) -> None:
    """One ``walker,segment,length`` row per segment."""
    out = ["walker,segment,length\n"]
    for rec in records:
        out.extend(f"{rec.walker},{i},{L}\n" for i, L in enumerate(rec.segment_lengths.tolist()))
    _write(target, "".join(out))


def write_ccdf(table: CcdfTable, target) -> None:
    out = ["length,ccdf\n"]
    out.extend(f"{L},{p:.12g}\n" for L, p in zip(table.lengths.tolist(), table.ccdf.tolist()))
    _write(target, "".join(out))


def _write(target, text: str) -> None:
    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        target.write(text)
