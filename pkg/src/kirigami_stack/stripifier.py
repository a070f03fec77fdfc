"""Hamiltonian cycles over the panel dual graph.

Pipeline: split an Euler tour of the 4-regular dual graph into a 2-factor,
splice its cycles together across 4-cycles of the graph, then splice the
leftovers with longer alternating-cycle switches (randomly perturbing the
cover when none applies), and fall back to exact backtracking on small
graphs.
"""

from collections import deque
from dataclasses import dataclass, field
import itertools
import random
import time

from .errors import CycleNotFound, MergeStuck, TwoFactorNotFound

EXACT_THRESHOLD = 60


@dataclass(frozen=True)
class DualGraph:
    neighbors: tuple  # node -> tuple of neighbor ids
    edge_label: dict = field(repr=False)  # (min, max) -> shared-edge id

    @property
    def n(self):
        return len(self.neighbors)

    def degree_histogram(self):
        hist = {}
        for nb in self.neighbors:
            hist[len(nb)] = hist.get(len(nb), 0) + 1
        return hist

    def has_edge(self, a, b):
        return (min(a, b), max(a, b)) in self.edge_label

    @classmethod
    def from_edges(cls, n, edges):
        nbrs = [[] for _ in range(n)]
        labels = {}
        for eid, (a, b) in enumerate(edges):
            key = (min(a, b), max(a, b))
            if a == b or key in labels:
                raise ValueError(f"graph is not simple at edge {key}")
            labels[key] = eid
            nbrs[a].append(b)
            nbrs[b].append(a)
        return cls(tuple(tuple(sorted(x)) for x in nbrs), labels)


@dataclass(frozen=True)
class StripCycle:
    """Cyclic panel order; hinge i joins order[i] to order[i+1 mod n].

    Per hinge: the shared edge id, the edge slot on the upstream panel
    (``out_slots``), the slot on the downstream panel (``in_slots``) and the
    folded-state dihedral.
    """

    order: tuple
    hinges: tuple
    out_slots: tuple = ()
    in_slots: tuple = ()
    dihedrals: tuple = ()

    def __len__(self):
        return len(self.order)

    @classmethod
    def from_order(cls, order, network):
        order = tuple(int(p) for p in order)
        n = len(order)
        out_s, in_s, edges, dih = [], [], [], []
        for i in range(n):
            a, b = order[i], order[(i + 1) % n]
            s = network.slot_between(a, b)
            out_s.append(s)
            in_s.append(int(network.back_slot[a, s]))
            edges.append(int(network.edge_ids[a, s]))
            dih.append(float(network.dihedral[a, s]))
        return cls(order, tuple(edges), tuple(out_s), tuple(in_s), tuple(dih))


@dataclass(frozen=True)
class CycleCover:
    cycles: tuple  # tuple of tuples of node ids

    @property
    def n_nodes(self):
        return sum(len(c) for c in self.cycles)


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    detail: str = ""

    def __str__(self):
        return f"{self.kind} at index {self.index}" + (f": {self.detail}" if self.detail else "")


@dataclass
class SolverConfig:
    seed: int = 0
    retry_budget: int = 8
    time_budget: float = 60.0
    exact_threshold: int = EXACT_THRESHOLD
    repair_moves_per_node: int = 200


def build_dual_graph(network):
    edges = [(a, b) for a, _, b, _ in network.edges]
    return DualGraph.from_edges(len(network), edges)


def _canonical_cycle(cycle):
    i = cycle.index(min(cycle))
    c = cycle[i:] + cycle[:i]
    if len(c) > 2 and c[-1] < c[1]:
        c = [c[0]] + c[1:][::-1]
    return tuple(c)


def _cycles_of(adj2):
    """Decompose a 2-regular adjacency map {node: [a, b]} into canonical cycles."""
    seen = set()
    cycles = []
    for start in sorted(adj2):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        prev, cur = start, adj2[start][0]
        while cur != start:
            cyc.append(cur)
            seen.add(cur)
            a, b = adj2[cur]
            prev, cur = cur, (b if a == prev else a)
        cycles.append(_canonical_cycle(cyc))
    return tuple(sorted(cycles))


def _euler_circuit(g, rng):
    adj = [list(nb) for nb in g.neighbors]
    for lst in adj:
        rng.shuffle(lst)
    used = set()
    start = rng.randrange(g.n)
    stack = [start]
    circuit = []
    ptr = [0] * g.n
    while stack:
        v = stack[-1]
        while ptr[v] < len(adj[v]) and (min(v, adj[v][ptr[v]]), max(v, adj[v][ptr[v]])) in used:
            ptr[v] += 1
        if ptr[v] == len(adj[v]):
            circuit.append(stack.pop())
        else:
            w = adj[v][ptr[v]]
            used.add((min(v, w), max(v, w)))
            stack.append(w)
    return circuit


def compute_2factor(g, seed=0, retries=16):
    """Spanning vertex-disjoint cycle cover of a connected 4-regular graph.

    Edges of an Euler circuit are colored alternately; since the circuit has
    an even number (2n) of edges each visit of a vertex contributes one edge
    of each color, so both color classes are 2-factors. The one with fewer
    cycles is returned. A 2-regular input is its own cover.
    """
    degrees = set(len(nb) for nb in g.neighbors)
    if degrees == {2}:
        return CycleCover(_cycles_of({v: list(nb) for v, nb in enumerate(g.neighbors)}))
    if degrees != {4}:
        raise TwoFactorNotFound(f"graph is not 4-regular (degrees {sorted(degrees)})")
    rng = random.Random(seed)
    for _ in range(retries):
        circuit = _euler_circuit(g, rng)
        if len(circuit) != 2 * g.n + 1:
            raise TwoFactorNotFound("dual graph is not connected")
        best = None
        for color in (0, 1):
            adj2 = {v: [] for v in range(g.n)}
            for i in range(color, len(circuit) - 1, 2):
                a, b = circuit[i], circuit[i + 1]
                adj2[a].append(b)
                adj2[b].append(a)
            if any(len(x) != 2 for x in adj2.values()):
                continue
            cycles = _cycles_of(adj2)
            if best is None or len(cycles) < len(best):
                best = cycles
        if best is not None:
            return CycleCover(best)
    raise TwoFactorNotFound("Euler-tour splitting failed within retry budget")


def _four_cycles(g):
    """All 4-cycles as canonical tuples (p0 minimal, p1 < p3)."""
    found = set()
    nb = [set(x) for x in g.neighbors]
    for a in range(g.n):
        for x in g.neighbors[a]:
            for y in g.neighbors[a]:
                if x >= y:
                    continue
                for b in nb[x] & nb[y]:
                    if b == a:
                        continue
                    found.add(_canonical_cycle([a, x, b, y]))
    return sorted(found)


class _Cover:
    """Mutable 2-factor with cycle labels, supporting switches on graph 4-cycles."""

    def __init__(self, g, cycles, sites=None):
        self.g = g
        self.nb = [None] * g.n
        self.label = [0] * g.n
        self.members = {}
        for cid, cyc in enumerate(cycles):
            k = len(cyc)
            for i, v in enumerate(cyc):
                self.nb[v] = [cyc[i - 1], cyc[(i + 1) % k]]
                self.label[v] = cid
            self.members[cid] = set(cyc)
        self.next_label = len(cycles)
        self.sites = _four_cycles(g) if sites is None else sites
        self.pos = [0] * g.n
        self.pos_len = {}
        self.sites_of = [[] for _ in range(g.n)]
        for sid, s in enumerate(self.sites):
            for v in s:
                self.sites_of[v].append(sid)

    @property
    def n_cycles(self):
        return len(self.members)

    def has(self, a, b):
        return b in self.nb[a]

    def switch_options(self, sid):
        """Yield (removed, added) edge pairs valid for site ``sid``."""
        p = self.sites[sid]
        e = [(p[0], p[1]), (p[1], p[2]), (p[2], p[3]), (p[3], p[0])]
        for rem, add in (((e[0], e[2]), (e[1], e[3])), ((e[1], e[3]), (e[0], e[2]))):
            if all(self.has(*x) for x in rem) and not any(self.has(*x) for x in add):
                yield rem, add

    def _replace(self, rem, add):
        for a, b in rem:
            self.pos_len.pop(self.label[a], None)
        for a, b in rem:
            self.nb[a].remove(b)
            self.nb[b].remove(a)
        for a, b in add:
            self.nb[a].append(b)
            self.nb[b].append(a)

    def merge_at(self, rem, add):
        la, lb = self.label[rem[0][0]], self.label[rem[1][0]]
        self._replace(rem, add)
        if len(self.members[la]) < len(self.members[lb]):
            la, lb = lb, la
        for v in self.members[lb]:
            self.label[v] = la
        self.members[la] |= self.members.pop(lb)

    def merge_labels(self, labels):
        """Fold the member sets of ``labels`` into the largest one."""
        labels = sorted(set(labels), key=lambda c: (-len(self.members[c]), c))
        keep = labels[0]
        for c in labels[1:]:
            for v in self.members[c]:
                self.label[v] = keep
            self.members[keep] |= self.members.pop(c)

    def apply_general(self, rem, add):
        """Apply an arbitrary valid switch and rebuild labels of the cycles it touches."""
        old = {self.label[v] for e in rem for v in e}
        nodes = set()
        for c in old:
            nodes |= self.members.pop(c)
        self._replace(rem, add)
        seen = set()
        for start in sorted(nodes):
            if start in seen:
                continue
            part = [start]
            seen.add(start)
            prev, cur = start, self.nb[start][0]
            while cur != start:
                part.append(cur)
                seen.add(cur)
                x, y = self.nb[cur]
                prev, cur = cur, (y if x == prev else x)
            lab = self.next_label
            self.next_label += 1
            self.members[lab] = set(part)
            for v in part:
                self.label[v] = lab

    def _positions(self, lab):
        """Index every node of cycle ``lab`` along its order (cached until it changes)."""
        if lab not in self.pos_len:
            start = min(self.members[lab])
            prev, cur, i = start, self.nb[start][0], 0
            self.pos[start] = 0
            while cur != start:
                i += 1
                self.pos[cur] = i
                x, y = self.nb[cur]
                prev, cur = cur, (y if x == prev else x)
            self.pos_len[lab] = i + 1
        return self.pos_len[lab]

    def cycles_after(self, rem, add):
        """Cycle count that the switch (rem, add) would leave, without applying it.

        Each touched cycle falls apart into arcs between its removed edges;
        the arcs and the added edges are then joined by union-find.
        """
        cuts = {}
        for a, b in rem:
            lab = self.label[a]
            size = self._positions(lab)
            pa, pb = self.pos[a], self.pos[b]
            lo = pa if (pa + 1) % size == pb else pb
            cuts.setdefault(lab, []).append(lo)
        parent = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ends = []
        for lab, cut in cuts.items():
            size = self.pos_len[lab]
            cut.sort()
            seq_start = {}
            for i, c in enumerate(cut):
                nxt = cut[(i + 1) % len(cut)]
                seq_start[(c + 1) % size] = nxt
            for a, b in rem:
                if self.label[a] == lab:
                    ends.extend((a, b))
            at = {self.pos[v]: v for v in ends if self.label[v] == lab}
            for p0, p1 in seq_start.items():
                ra, rb = find(at[p0]), find(at[p1])
                parent[ra] = rb
        for a, b in add:
            ra, rb = find(a), find(b)
            parent[ra] = rb
        roots = {find(v) for v in ends}
        return self.n_cycles - len(cuts) + len(roots)

    def merge_pass(self, queue):
        """Splice cycles at every mergeable site reachable from ``queue``."""
        queued = set(queue)
        queue = deque(queue)
        merged = 0
        while queue and self.n_cycles > 1:
            sid = queue.popleft()
            queued.discard(sid)
            for rem, add in self.switch_options(sid):
                if self.label[rem[0][0]] != self.label[rem[1][0]]:
                    self.merge_at(rem, add)
                    merged += 1
                    for v in self.sites[sid]:
                        for s2 in self.sites_of[v]:
                            if s2 not in queued:
                                queued.add(s2)
                                queue.append(s2)
                    break
        return merged

    def order(self):
        start = 0
        seq = [start]
        prev, cur = start, min(self.nb[start])
        while cur != start:
            seq.append(cur)
            x, y = self.nb[cur]
            prev, cur = cur, (y if x == prev else x)
        return seq

    def cycles(self):
        return _cycles_of({v: list(x) for v, x in enumerate(self.nb)})


def merge_cycles(cover, g):
    """Splice the cycles of ``cover`` into one by 4-cycle switches.

    Each splice removes cover edges (a, a') and (b, b') from two different
    cycles and adds graph edges (a, b) and (a', b'). Raises MergeStuck when
    no splice remains and more than one cycle is left.
    """
    state = _Cover(g, cover.cycles)
    state.merge_pass(range(len(state.sites)))
    if state.n_cycles > 1:
        raise MergeStuck(state.n_cycles)
    return tuple(state.order())


def _alternating_cycles(state, target, max_depth, distinct):
    """Alternating cycles whose first removed edge lies on cycle ``target``.

    Removed cover edges alternate with added graph edges. With ``distinct``
    every removed edge must come from a different cycle, which guarantees
    the switch leaves those cycles spliced into one.
    """
    g = state.g

    def dfs(x0, y, rem, add, labels, nodes):
        if len(rem) >= max_depth:
            return
        for u in g.neighbors[y]:
            if u in nodes or state.has(y, u):
                continue
            lu = state.label[u]
            if distinct and lu in labels:
                continue
            for u2 in sorted(state.nb[u]):
                if u2 in nodes:
                    continue
                if g.has_edge(u2, x0) and not state.has(u2, x0):
                    yield rem + [(u, u2)], add + [(y, u), (u2, x0)]
                yield from dfs(x0, u2, rem + [(u, u2)], add + [(y, u)], labels | {lu}, nodes | {u, u2})

    for x0 in sorted(state.members[target]):
        for x1 in sorted(state.nb[x0]):
            yield from dfs(x0, x1, [(x0, x1)], [], {target}, {x0, x1})


def _alternating_merge(state, target, max_depth, deep_depth=8, max_trials=4096):
    """Splice ``target`` into neighbouring cycles; returns touched nodes or None.

    Distinct-cycle switches are tried first. Failing those, switches that
    reuse a cycle are searched by increasing length (diagonal staircase
    regions need up to six removed edges) and the first one that lowers the
    cycle count is applied.
    """
    for rem, add in _alternating_cycles(state, target, max_depth, True):
        labels = {state.label[a] for a, _ in rem}
        state._replace(rem, add)
        state.merge_labels(labels)
        return [v for e in rem for v in e]
    before = state.n_cycles
    for depth in range(3, deep_depth + 1):
        for rem, add in itertools.islice(_alternating_cycles(state, target, depth, False), max_trials):
            if len(rem) == depth and state.cycles_after(rem, add) < before:
                state.apply_general(rem, add)
                return [v for e in rem for v in e]
    return None


def _random_alternating(state, rng, start_nodes, max_depth):
    """A random valid switch (alternating cycle) through a cover edge at one of ``start_nodes``."""
    g = state.g
    x0 = start_nodes[rng.randrange(len(start_nodes))]
    x1 = state.nb[x0][rng.randrange(2)]
    rem, add, nodes = [(x0, x1)], [], {x0, x1}
    y = x1
    for _ in range(max_depth - 1):
        options = [(u, u2) for u in g.neighbors[y] if u not in nodes and not state.has(y, u)
                   for u2 in state.nb[u] if u2 not in nodes]
        if not options:
            return None
        u, u2 = options[rng.randrange(len(options))]
        rem.append((u, u2))
        add.append((y, u))
        nodes |= {u, u2}
        y = u2
        if g.has_edge(y, x0) and not state.has(y, x0) and (len(rem) >= 2) and rng.random() < 0.7:
            return rem, add + [(y, x0)]
    return None


def _repair(state, rng, max_moves, deadline, max_depth=4, split_prob=0.1):
    """Merge remaining cycles by alternating-cycle splices, perturbing when stuck.

    Small cycles are spliced first. When no splice of depth ``max_depth``
    exists for any cycle, a random alternating switch near the smallest
    cycle is applied; switches that raise the cycle count are kept with
    probability ``split_prob`` and otherwise undone.
    """
    moves = 0
    while state.n_cycles > 1 and moves < max_moves:
        if time.monotonic() > deadline:
            break
        merged = False
        by_size = sorted(state.members, key=lambda c: (len(state.members[c]), min(state.members[c])))
        for rep in [min(state.members[c]) for c in by_size[:-1]]:
            # tentative switches renumber labels, so track cycles by a member node
            target = state.label[rep]
            touched = _alternating_merge(state, target, max_depth)
            if touched is not None:
                state.merge_pass(sorted({s for v in touched for s in state.sites_of[v]}))
                merged = True
                break
        if merged:
            continue
        target = min(state.members, key=lambda c: (len(state.members[c]), min(state.members[c])))
        ring = set()
        for v in state.members[target]:
            ring.add(v)
            ring.update(state.g.neighbors[v])
        ring = sorted(ring)
        for _ in range(64):
            moves += 1
            move = _random_alternating(state, rng, ring, 3)
            if move is None:
                continue
            rem, add = move
            if state.cycles_after(rem, add) > state.n_cycles and rng.random() > split_prob:
                continue
            state.apply_general(rem, add)
            touched = [v for e in rem for v in e]
            state.merge_pass(sorted({s for v in touched for s in state.sites_of[v]}))
            break
    return state.n_cycles == 1


def exact_hamiltonian_cycle(g, deadline=None, node_budget=5_000_000):
    """Backtracking search from node 0 with degree pruning; None if none found."""
    n = g.n
    if n < 3:
        return None
    nbrs = g.neighbors
    visited = [False] * n
    avail = [len(nb) for nb in nbrs]
    path = [0]
    visited[0] = True
    expanded = [0]

    def extend(cur):
        expanded[0] += 1
        if expanded[0] > node_budget or (deadline and expanded[0] % 4096 == 0 and time.monotonic() > deadline):
            raise TimeoutError
        if len(path) == n:
            return 0 in nbrs[cur]
        # cur leaves the frontier for its unvisited neighbors except the one we step to
        for x in nbrs[cur]:
            if visited[x]:
                continue
            ok = True
            if cur != 0:  # the start stays available to close the cycle
                for w in nbrs[cur]:
                    if not visited[w] and w != x:
                        avail[w] -= 1
                        if avail[w] < 2:
                            ok = False
            if ok:
                visited[x] = True
                path.append(x)
                if extend(x):
                    return True
                path.pop()
                visited[x] = False
            if cur != 0:
                for w in nbrs[cur]:
                    if not visited[w] and w != x:
                        avail[w] += 1
        return False

    try:
        found = extend(0)
    except (TimeoutError, RecursionError):
        return None
    return list(path) if found else None


def find_hamiltonian_cycle(network, config=None):
    """Hamiltonian cycle over the panels of ``network``.

    Stages run in order until one succeeds: 2-factor + splice merging (with
    repair) for each retry seed, then exact backtracking when the network is
    small. The result depends only on the network and ``config.seed``.
    """
    config = config or SolverConfig()
    g = build_dual_graph(network)
    deadline = time.monotonic() + config.time_budget
    sites = _four_cycles(g)
    remaining = None
    for attempt in range(config.retry_budget):
        seed = config.seed * 1_000_003 + attempt
        cover = compute_2factor(g, seed=seed)
        state = _Cover(g, cover.cycles, sites=sites)
        state.merge_pass(range(len(sites)))
        if state.n_cycles > 1:
            rng = random.Random(seed)
            _repair(state, rng, config.repair_moves_per_node * g.n, deadline)
        if state.n_cycles == 1:
            return StripCycle.from_order(state.order(), network)
        remaining = state.n_cycles if remaining is None else min(remaining, state.n_cycles)
        if time.monotonic() > deadline:
            break
    if g.n <= config.exact_threshold:
        order = exact_hamiltonian_cycle(g, deadline=deadline + config.time_budget)
        if order is not None:
            return StripCycle.from_order(order, network)
        raise CycleNotFound(f"exact search found no Hamiltonian cycle over {g.n} panels",
                            remaining_cycles=remaining)
    raise CycleNotFound(f"no Hamiltonian cycle found over {g.n} panels "
                        f"({remaining} cycles remained after repair)", remaining_cycles=remaining)


def validate_cycle(cycle, network):
    """First violation of the Hamiltonian-cycle properties, or None."""
    n = len(network)
    order = list(cycle.order)
    if len(order) != n:
        return Violation("wrong length", min(len(order), n), f"{len(order)} != {n} panels")
    seen = {}
    for i, p in enumerate(order):
        if not 0 <= p < n:
            return Violation("unknown panel", i, str(p))
        if p in seen:
            return Violation("duplicate panel", i, f"panel {p} first at {seen[p]}")
        seen[p] = i
    if len(cycle.hinges) != n:
        return Violation("wrong hinge count", min(len(cycle.hinges), n))
    for i in range(n):
        a, b = order[i], order[(i + 1) % n]
        hits = [s for s in range(4) if network.neighbors[a, s] == b]
        if not hits:
            return Violation("non-adjacent step", i, f"{a} -> {b}")
        if network.edge_ids[a, hits[0]] != cycle.hinges[i]:
            return Violation("hinge mismatch", i, f"edge {cycle.hinges[i]} does not join {a} and {b}")
        if cycle.out_slots and (cycle.out_slots[i] != hits[0]
                                or cycle.in_slots[i] != network.back_slot[a, hits[0]]):
            return Violation("slot mismatch", i, f"recorded slots disagree with edge {cycle.hinges[i]}")
    return None
