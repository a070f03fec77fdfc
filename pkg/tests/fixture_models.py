"""Shared fixture models and independent oracles used across the test suite."""

import numpy as np

from kirigami_stack.shapes import box_mesh, icosphere, random_polycube
from kirigami_stack.voxel_surface import network_from_cells, network_from_mesh

ROD = [(0, 0, z) for z in range(7)]
PLATE = [(x, y, 0) for x in range(3) for y in range(3)]
FIXTURE_CELLS = {
    "cube": [(0, 0, 0)],
    "rod": ROD,
    "plate": PLATE,
    "ell": [(0, 0, 0), (1, 0, 0), (0, 1, 0)],
    "stair": [(0, 0, 0), (1, 0, 0), (1, 0, 1), (2, 0, 1), (2, 0, 2)],
    "hollow": [(x, y, z) for x in range(3) for y in range(3) for z in range(3) if (x, y, z) != (1, 1, 1)],
}


def fixture_cells():
    cells = dict(FIXTURE_CELLS)
    rng = np.random.default_rng(2024)
    for i in range(3):
        cells[f"random{i}"] = random_polycube(rng, 20)
    return cells


def fixture_networks(thickness=0.1):
    nets = {name: network_from_cells(c, thickness=thickness) for name, c in fixture_cells().items()}
    nets["sphere8"], _ = network_from_mesh(icosphere(3, 4.0), 8, thickness=thickness)
    return nets


def box_network(size, thickness=0.1):
    return network_from_mesh(box_mesh(size), max(size), thickness=thickness)[0]


class _Budget(Exception):
    pass


def hamiltonian_oracle(neighbors, budgets=(64, 512, 4096)):
    """Exhaustive depth-first Hamiltonian cycle search; returns an order or None.

    Searches from every start node under growing step budgets first; the
    final search from node 0 is unbounded, so None means no cycle exists.
    """
    n = len(neighbors)
    if n < 3:
        return None
    nbrs = [sorted(set(int(x) for x in row)) for row in neighbors]
    for budget in budgets:
        for start in range(n):
            try:
                return _search(nbrs, start, budget)
            except _Budget:
                continue
    return _search(nbrs, 0, None)


def _search(nbrs, start, budget):
    """Backtracking from ``start``, pruned on free degree.

    Every unvisited node needs two usable edges, a neighbour of the path end
    with exactly two is the forced next step, and at most one such node may
    hang off the start (it must close the cycle).
    """
    n = len(nbrs)
    calls = [0]
    path = [start]
    used = [False] * n
    used[start] = True

    def free(v, last):
        return sum(1 for w in nbrs[v] if not used[w] or w == last or w == start)

    def reachable(last):
        seen = {last}
        stack = [last]
        while stack:
            v = stack.pop()
            for w in nbrs[v]:
                if not used[w] and w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) - 1

    def extend():
        calls[0] += 1
        if budget is not None and calls[0] > budget:
            raise _Budget()
        last = path[-1]
        remaining = n - len(path)
        if remaining == 0:
            return start in nbrs[last]
        forced = []
        closing = 0
        for v in range(n):
            if used[v]:
                continue
            f = free(v, last)
            if f < 2:
                return False
            if f == 2:
                if last in nbrs[v] and remaining > 1:
                    forced.append(v)
                if start in nbrs[v] and last not in nbrs[v]:
                    closing += 1
        if len(forced) > 1 or closing > 1 or reachable(last) != remaining:
            return False
        if forced:
            options = forced
        else:
            options = [v for v in nbrs[last] if not used[v]]
            options.sort(key=lambda v: (free(v, last), v))
        for nxt in options:
            used[nxt] = True
            path.append(nxt)
            if extend():
                return True
            path.pop()
            used[nxt] = False
        return False

    return list(path) if extend() else None


def pairwise_collisions(cells, levels):
    """O(n^2) oracle: every pair of panels sharing a (cell, level) slot."""
    cells = [tuple(int(v) for v in c) for c in cells]
    levels = [int(z) for z in levels]
    out = []
    for i in range(len(levels)):
        for j in range(i + 1, len(levels)):
            if cells[i] == cells[j] and levels[i] == levels[j]:
                out.append((i, j))
    return out
