"""Greedy partitioners for random-walk workloads plus a random-hash baseline.

Every algorithm returns a :class:`PartitionSet`: member vertices per
partition (a vertex may sit in several partitions under ``vertexcut``) and an
owner partition for every edge.

Ordering conventions shared by all algorithms: vertices are ranked by degree
descending then id ascending, partitions act in index order each round.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .graph import Graph, connected_components

__all__ = [
    "ALGORITHMS",
    "PartitionConfig",
    "PartitionSet",
    "PartitionError",
    "SeedSelectionError",
    "IntegrityError",
    "select_seeds",
    "partition",
    "partition_bfs",
    "partition_ldfs",
    "partition_balance",
    "partition_vertexcut",
    "partition_random_hash",
    "from_assignment",
]


class PartitionError(ValueError):
    pass


class SeedSelectionError(PartitionError):
    def __init__(self, k: int, found: int):
        self.k = k
        self.found = found
        super().__init__(f"only {found} pairwise non-adjacent vertices available, "
                         f"need k={k} (short by {k - found})")


class IntegrityError(PartitionError):
    pass


@dataclass(frozen=True)
class PartitionConfig:
    algorithm: str
    k: int
    seed: int | None = None
    # explicit initial vertices; bypasses select_seeds when given
    seeds: tuple[int, ...] | None = None

    def validate(self, g: Graph) -> None:
        if self.algorithm not in ALGORITHMS:
            raise PartitionError(f"unknown algorithm {self.algorithm!r}; "
                                 f"choose from {', '.join(ALGORITHMS)}")
        if self.k < 2:
            raise PartitionError(f"k must be >= 2, got {self.k}")
        if self.k > g.n:
            raise PartitionError(f"k={self.k} exceeds vertex count n={g.n}")
        if self.seeds is not None:
            if len(self.seeds) != self.k or len(set(self.seeds)) != self.k:
                raise PartitionError("explicit seeds must be k distinct vertices")
            if any(not 0 <= s < g.n for s in self.seeds):
                raise PartitionError("explicit seed outside 0..n-1")


@dataclass(eq=False)
class PartitionSet:
    """Partitions of one graph: members per partition and an owner per edge.

    ``members[i]`` is the sorted array of vertices in partition ``i``;
    ``edge_owner[e]`` the partition holding edge ``e``.  An owned edge is
    *internal* when both endpoints are members of its owner.  The no-cut
    algorithms also produce *cross* edges: endpoints in different
    partitions, owned by the lower-indexed one, far endpoint not replicated.
    """

    n: int
    k: int
    members: list[np.ndarray]
    edge_owner: np.ndarray
    algorithm: str = "custom"
    seed: int | None = None
    build_time: float | None = None
    seeds: tuple[int, ...] | None = None
    leftover_components: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.members = [np.unique(np.asarray(m, dtype=np.int64)) for m in self.members]
        self.edge_owner = np.asarray(self.edge_owner, dtype=np.int64)
        if len(self.members) != self.k:
            raise IntegrityError(f"expected {self.k} member sets, got {len(self.members)}")

    # ---- member records: one per (partition, vertex), ordered by partition then vertex

    @cached_property
    def rec_part(self) -> np.ndarray:
        return np.repeat(np.arange(self.k), [len(m) for m in self.members])

    @cached_property
    def rec_vertex(self) -> np.ndarray:
        if not self.members:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(self.members)

    @cached_property
    def rec_key(self) -> np.ndarray:
        # strictly increasing, so searchsorted finds (partition, vertex) records
        return self.rec_part * self.n + self.rec_vertex

    def record_index(self, parts, vertices) -> np.ndarray:
        """Record index for each (partition, vertex) pair, -1 where not a member."""
        key = np.asarray(parts, dtype=np.int64) * self.n + np.asarray(vertices, dtype=np.int64)
        pos = np.searchsorted(self.rec_key, key)
        pos = np.minimum(pos, len(self.rec_key) - 1)
        hit = self.rec_key[pos] == key
        return np.where(hit, pos, -1)

    def is_member(self, parts, vertices) -> np.ndarray:
        return self.record_index(parts, vertices) >= 0

    @cached_property
    def replication(self) -> np.ndarray:
        """NR(v): number of partitions holding vertex v."""
        return np.bincount(self.rec_vertex, minlength=self.n)

    @cached_property
    def sizes(self) -> np.ndarray:
        """N_i, replicas included."""
        return np.array([len(m) for m in self.members], dtype=np.int64)

    @cached_property
    def edge_counts(self) -> np.ndarray:
        """Ne(Pa_i): edges owned by each partition."""
        return np.bincount(self.edge_owner, minlength=self.k)

    @cached_property
    def cut_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.replication >= 2)

    @cached_property
    def rec_is_replica(self) -> np.ndarray:
        """True for every record of a cut vertex (NR >= 2)."""
        return self.replication[self.rec_vertex] >= 2

    @cached_property
    def _vp(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        order = np.lexsort((self.rec_part, self.rec_vertex))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(self.replication, out=indptr[1:])
        return indptr, self.rec_part[order], order

    @property
    def vp_indptr(self) -> np.ndarray:
        return self._vp[0]

    @property
    def vp_parts(self) -> np.ndarray:
        """Partitions of each vertex, ascending; slice with ``vp_indptr``."""
        return self._vp[1]

    @property
    def vp_records(self) -> np.ndarray:
        """Record index aligned with ``vp_parts``."""
        return self._vp[2]

    def partitions_of(self, v: int) -> list[int]:
        return self.vp_parts[self.vp_indptr[v]:self.vp_indptr[v + 1]].tolist()

    def internal_edges(self, g: Graph) -> np.ndarray:
        """Mask of edges whose endpoints are both members of the owner."""
        return (self.is_member(self.edge_owner, g.edges[:, 0])
                & self.is_member(self.edge_owner, g.edges[:, 1]))

    def d_in(self, g: Graph) -> np.ndarray:
        """Per record: internal owned edges of that partition touching the vertex."""
        internal = self.internal_edges(g)
        own = self.edge_owner[internal]
        ends = g.edges[internal]
        r = np.concatenate([self.record_index(own, ends[:, 0]), self.record_index(own, ends[:, 1])])
        return np.bincount(r, minlength=len(self.rec_key))

    def check(self, g: Graph) -> None:
        """Raise :class:`IntegrityError` on the first violated invariant."""
        if g.n != self.n:
            raise IntegrityError(f"partition covers n={self.n}, graph has n={g.n}")
        if len(self.edge_owner) != g.m:
            raise IntegrityError(f"{len(self.edge_owner)} edge owners for m={g.m} edges")
        if len(self.rec_vertex) and (self.rec_vertex.min() < 0 or self.rec_vertex.max() >= g.n):
            raise IntegrityError("member vertex outside 0..n-1")
        missing = np.flatnonzero(self.replication == 0)
        if len(missing):
            raise IntegrityError(f"vertex {int(g.labels[missing[0]])} belongs to no partition")
        bad = np.flatnonzero((self.edge_owner < 0) | (self.edge_owner >= self.k))
        if len(bad):
            u, w = g.edges[bad[0]]
            raise IntegrityError(f"edge ({g.labels[u]}, {g.labels[w]}) has no valid owner")
        cross = np.flatnonzero(~self.internal_edges(g))
        u, w = g.edges[cross, 0], g.edges[cross, 1]
        first = self.vp_parts[self.vp_indptr[:-1]]
        ok = self.edge_owner[cross] == np.minimum(first[u], first[w])
        single = (self.replication[u] == 1) & (self.replication[w] == 1)
        ok &= ~single | (first[u] != first[w])
        for j in np.flatnonzero(~single).tolist():
            if set(self.partitions_of(int(u[j]))) & set(self.partitions_of(int(w[j]))):
                ok[j] = False
        if not ok.all():
            e = cross[np.flatnonzero(~ok)[0]]
            a, b = g.edges[e]
            raise IntegrityError(
                f"edge ({g.labels[a]}, {g.labels[b]}) owned by partition "
                f"{int(self.edge_owner[e])} breaks the ownership rule")

    def summary(self) -> str:
        return (f"{self.algorithm}: k={self.k} sizes={self.sizes.tolist()} "
                f"edges={self.edge_counts.tolist()} cut={len(self.cut_vertices)}")


ALGORITHMS = ("bfs", "ldfs", "balance", "vertexcut", "random")


def select_seeds(g: Graph, k: int) -> list[int]:
    """k pairwise non-adjacent vertices, greedily by degree (desc) then id."""
    if k < 2:
        raise PartitionError(f"k must be >= 2, got {k}")
    order = np.lexsort((np.arange(g.n), -g.degrees)).tolist()
    adj = g.adjacency
    blocked = bytearray(g.n)
    seeds: list[int] = []
    for v in order:
        if blocked[v]:
            continue
        seeds.append(v)
        if len(seeds) == k:
            return seeds
        blocked[v] = 1
        for w in adj[v]:
            blocked[w] = 1
    raise SeedSelectionError(k, len(seeds))


def _seeds(g: Graph, cfg: PartitionConfig) -> list[int]:
    return list(cfg.seeds) if cfg.seeds is not None else select_seeds(g, cfg.k)


def _place_leftovers(g: Graph, assign: list[int], sizes: list[int]) -> int:
    """Give each unassigned component, whole, to the currently smallest partition."""
    rest = [v for v in range(g.n) if assign[v] < 0]
    if not rest:
        return 0
    comps = connected_components(g, restrict_to=rest).groups()
    for comp in comps:
        target = min(range(len(sizes)), key=lambda i: (sizes[i], i))
        for v in comp:
            assign[v] = target
        sizes[target] += len(comp)
    return len(comps)


def from_assignment(g: Graph, assign, k: int, **meta) -> PartitionSet:
    """PartitionSet for a one-partition-per-vertex labelling.

    Edges inside a partition are owned by it; a cross edge goes to the
    lower-indexed endpoint partition and no replica is created.
    """
    assign = np.asarray(assign, dtype=np.int64)
    members = [np.flatnonzero(assign == i) for i in range(k)]
    pu, pw = assign[g.edges[:, 0]], assign[g.edges[:, 1]]
    return PartitionSet(n=g.n, k=k, members=members, edge_owner=np.minimum(pu, pw), **meta)


def partition_bfs(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Round-robin BFS: on its turn a partition absorbs every free neighbour."""
    seeds = _seeds(g, cfg)
    adj = g.adjacency
    assign = [-1] * g.n
    for i, s in enumerate(seeds):
        assign[s] = i
    layers = [[s] for s in seeds]
    remaining = g.n - cfg.k
    while remaining and any(layers):
        for i in range(cfg.k):
            grown = []
            for u in layers[i]:
                for w in adj[u]:
                    if assign[w] < 0:
                        assign[w] = i
                        grown.append(w)
            layers[i] = grown
            remaining -= len(grown)
    sizes = [assign.count(i) for i in range(cfg.k)] if remaining else []
    left = _place_leftovers(g, assign, sizes) if remaining else 0
    return from_assignment(g, assign, cfg.k, algorithm="bfs", seed=cfg.seed,
                           seeds=tuple(seeds), leftover_components=left)


def partition_ldfs(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Large-degree-first: grow whichever frontier vertex has the largest degree.

    The chosen vertex joins the partition of its largest-degree assigned
    neighbour (lower partition index on ties).
    """
    seeds = _seeds(g, cfg)
    adj = g.adjacency
    deg = g.degrees.tolist()
    assign = [-1] * g.n
    queued = bytearray(g.n)
    heap: list[tuple[int, int]] = []

    def enqueue_free_neighbours(v: int) -> None:
        for w in adj[v]:
            if assign[w] < 0 and not queued[w]:
                queued[w] = 1
                heapq.heappush(heap, (-deg[w], w))

    for i, s in enumerate(seeds):
        assign[s] = i
        queued[s] = 1
    for s in seeds:
        enqueue_free_neighbours(s)
    while heap:
        _, v = heapq.heappop(heap)
        best_deg, best_part = -1, -1
        for w in adj[v]:
            p = assign[w]
            if p >= 0 and (deg[w] > best_deg or (deg[w] == best_deg and p < best_part)):
                best_deg, best_part = deg[w], p
        assign[v] = best_part
        enqueue_free_neighbours(v)
    left = 0
    if -1 in assign:
        sizes = [assign.count(i) for i in range(cfg.k)]
        left = _place_leftovers(g, assign, sizes)
    return from_assignment(g, assign, cfg.k, algorithm="ldfs", seed=cfg.seed,
                           seeds=tuple(seeds), leftover_components=left)


def partition_balance(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Round-robin, one vertex per turn: the free neighbour with the largest degree."""
    seeds = _seeds(g, cfg)
    k = cfg.k
    adj = g.adjacency
    deg = g.degrees.tolist()
    assign = [-1] * g.n
    heaps: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    queued: list[set[int]] = [set() for _ in range(k)]

    def grow(i: int, v: int) -> None:
        assign[v] = i
        h, q = heaps[i], queued[i]
        for w in adj[v]:
            if assign[w] < 0 and w not in q:
                q.add(w)
                heapq.heappush(h, (-deg[w], w))

    for i, s in enumerate(seeds):
        assign[s] = i
    for i, s in enumerate(seeds):
        grow(i, s)
    remaining = g.n - k
    while remaining:
        acted = False
        for i in range(k):
            h = heaps[i]
            while h and assign[h[0][1]] >= 0:
                heapq.heappop(h)
            if not h:
                continue
            _, v = heapq.heappop(h)
            grow(i, v)
            remaining -= 1
            acted = True
        if not acted:
            break
    left = 0
    if remaining:
        sizes = [assign.count(i) for i in range(k)]
        left = _place_leftovers(g, assign, sizes)
    return from_assignment(g, assign, k, algorithm="balance", seed=cfg.seed,
                           seeds=tuple(seeds), leftover_components=left)


def partition_vertexcut(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Balance-style growth that cuts (replicates) vertices already taken elsewhere.

    Each turn partition ``i`` takes the largest-degree vertex ``v`` of its
    neighbour set.  A free ``v`` is merged and all its neighbours join the
    neighbour set.  A taken ``v`` gets a replica in ``i`` which takes over
    the still-unowned edges from ``v`` to members of ``i``; only ``v``'s free
    neighbours join the neighbour set, and ``v``'s neighbours inside ``i`` are
    dropped from the neighbour sets of the other partitions holding ``v``.
    A taken vertex with no unowned edge into ``i`` is discarded, since a
    replica there would own nothing.

    Growth stops once every vertex is placed.  Edges still unowned at that
    point join their endpoints' shared partition if one exists; otherwise the
    lower-degree endpoint is replicated into the lowest partition of the other.
    """
    seeds = _seeds(g, cfg)
    k = cfg.k
    adj = g.adjacency
    ptr = g.indptr.tolist()
    slot_edge = g.slot_edge.tolist()
    adj_e = [slot_edge[ptr[v]:ptr[v + 1]] for v in range(g.n)]
    deg = g.degrees.tolist()
    owner = [-1] * g.m
    parts_of: list[list[int]] = [[] for _ in range(g.n)]
    heaps: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    frontier: list[set[int]] = [set() for _ in range(k)]
    replicas = 0

    def push(i: int, w: int) -> None:
        if w not in frontier[i]:
            frontier[i].add(w)
            heapq.heappush(heaps[i], (-deg[w], w))

    def merge(i: int, v: int) -> None:
        parts_of[v].append(i)
        for w, e in zip(adj[v], adj_e[v]):
            if i in parts_of[w]:
                if owner[e] < 0:
                    owner[e] = i
            else:
                push(i, w)

    def cut(i: int, v: int) -> bool:
        gained = [e for w, e in zip(adj[v], adj_e[v]) if owner[e] < 0 and i in parts_of[w]]
        if not gained:
            return False
        for e in gained:
            owner[e] = i
        others = list(parts_of[v])
        parts_of[v].append(i)
        inside = [w for w in adj[v] if i in parts_of[w]]
        for w in adj[v]:
            if not parts_of[w]:
                push(i, w)
        for j in others:
            fj = frontier[j]
            for w in inside:
                fj.discard(w)
        return True

    for i, s in enumerate(seeds):
        parts_of[s].append(i)
    for i, s in enumerate(seeds):
        for w in adj[s]:
            if i not in parts_of[w]:
                push(i, w)
    unassigned = g.n - k
    while unassigned:
        acted = False
        for i in range(k):
            h, f = heaps[i], frontier[i]
            while h:
                _, v = heapq.heappop(h)
                if v not in f:
                    continue
                f.discard(v)
                if i in parts_of[v]:
                    continue
                if not parts_of[v]:
                    merge(i, v)
                    unassigned -= 1
                    acted = True
                    break
                if cut(i, v):
                    replicas += 1
                    acted = True
                    break
        if not acted:
            break

    left = 0
    if unassigned:
        assign = [p[0] if p else -1 for p in parts_of]
        sizes = [0] * k
        for p in parts_of:
            for i in p:
                sizes[i] += 1
        left = _place_leftovers(g, assign, sizes)
        for v, p in enumerate(parts_of):
            if not p:
                p.append(assign[v])

    patched = 0
    for e, (u, w) in enumerate(g.edges.tolist()):
        if owner[e] >= 0:
            continue
        common = set(parts_of[u]).intersection(parts_of[w])
        if common:
            owner[e] = min(common)
            continue
        x, y = (u, w) if (deg[u], u) < (deg[w], w) else (w, u)
        p = min(parts_of[y])
        parts_of[x].append(p)
        owner[e] = p
        patched += 1

    members: list[list[int]] = [[] for _ in range(k)]
    for v, p in enumerate(parts_of):
        for i in p:
            members[i].append(v)
    return PartitionSet(n=g.n, k=k, members=[np.array(m, dtype=np.int64) for m in members],
                        edge_owner=np.array(owner, dtype=np.int64), algorithm="vertexcut",
                        seed=cfg.seed, seeds=tuple(seeds), leftover_components=left,
                        extra={"growth_cuts": replicas, "patched_edges": patched})


def partition_random_hash(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Every vertex lands in a uniformly random partition (seeded PCG64)."""
    seed = cfg.seed if cfg.seed is not None else int(np.random.SeedSequence().entropy % (1 << 63))
    rng = np.random.Generator(np.random.PCG64(seed))
    assign = rng.integers(0, cfg.k, size=g.n)
    return from_assignment(g, assign, cfg.k, algorithm="random", seed=seed)


_DISPATCH = {
    "bfs": partition_bfs,
    "ldfs": partition_ldfs,
    "balance": partition_balance,
    "vertexcut": partition_vertexcut,
    "random": partition_random_hash,
}


def partition(g: Graph, cfg: PartitionConfig) -> PartitionSet:
    """Validate ``cfg``, run the chosen algorithm and time it."""
    cfg.validate(g)
    start = time.perf_counter()
    ps = _DISPATCH[cfg.algorithm](g, cfg)
    ps.build_time = time.perf_counter() - start
    return ps
