from __future__ import annotations

import numpy as np
import pytest

from rwpart.graph import Graph

A, B, C, D, E, F = range(6)


def two_triangles_bridge() -> Graph:
    """Triangles {a,b,c} and {d,e,f} joined by the bridge c-d."""
    return Graph(6, [(A, B), (A, C), (B, C), (C, D), (D, E), (D, F), (E, F)])


def two_triangles() -> Graph:
    return Graph(6, [(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5)])


def path(n: int) -> Graph:
    return Graph(n, [(i, i + 1) for i in range(n - 1)])


def cycle(n: int) -> Graph:
    return Graph(n, [(i, (i + 1) % n) for i in range(n)])


def complete(n: int) -> Graph:
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_connected(rng: np.random.Generator, n: int, extra: int) -> Graph:
    """Random spanning tree plus up to ``extra`` random chords."""
    edges = {(int(rng.integers(v)), v) for v in range(1, n)}
    for _ in range(extra):
        u, w = (int(x) for x in rng.integers(n, size=2))
        if u != w:
            edges.add((min(u, w), max(u, w)))
    return Graph(n, sorted(edges))


@pytest.fixture
def bridge_graph() -> Graph:
    return two_triangles_bridge()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(results):
        ok, title, detail = results[num]
        terminalreporter.write_line(f"criterion {num} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
