"""Structural analysis of weak models.

Trackability is decided on product graphs. Two node sequences that permit
the same color sequence are a walk in the *pair graph*, whose vertices are
same-colored node pairs. Intersecting same-colored cycles (exponential
growth) are exactly pair-graph strongly connected components that mix a
diagonal vertex ``(u, u)`` with an off-diagonal one. Unbounded polynomial
growth needs a cycle at ``a``, a cycle at ``b != a`` and a path ``a -> b``,
all permitting one color sequence. That is a walk in the *triple graph*
from ``(a, a, b)`` to ``(a, b, b)``.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .graphs import period, reachable, tarjan_scc
from .model import NodeMapping, WeakModel, WeakModelError, to_single_colored

__all__ = [
    "NodeClassification",
    "PairGraph",
    "Regime",
    "IntersectingCyclePair",
    "ForkWitness",
    "TrackabilityReport",
    "BoundReport",
    "Automorphisms",
    "classify_nodes",
    "pair_graph",
    "classify_trackability",
    "check_cycle_pair",
    "check_fork",
    "hypothesis_bound",
    "hypothesis_set_bounds",
    "automorphism_count",
    "AUTOMORPHISM_LIMIT",
]

AUTOMORPHISM_LIMIT = 12


# -- recurrent / transient decomposition -------------------------------------


@dataclass(frozen=True)
class NodeClassification:
    recurrent_classes: tuple[frozenset[str], ...]
    transient: frozenset[str]
    period: dict[frozenset[str], int]
    components: tuple[frozenset[str], ...] = field(repr=False, default=())

    @property
    def strongly_connected(self) -> bool:
        return len(self.recurrent_classes) == 1 and not self.transient

    def class_of(self, node: str) -> Optional[frozenset[str]]:
        for cls in self.recurrent_classes:
            if node in cls:
                return cls
        return None

    @property
    def aperiodic(self) -> bool:
        return all(p == 1 for p in self.period.values())


def classify_nodes(model: WeakModel) -> NodeClassification:
    """Split nodes into recurrent classes and transient nodes.

    A strongly connected component is a recurrent class when no edge leaves
    it and it contains at least one edge. A lone node without a self-loop
    has period 0 and is always transient.
    """
    succ = model.successors
    comps = tarjan_scc(range(len(model.nodes)), lambda v: succ[v])
    comps = sorted((sorted(c) for c in comps), key=lambda c: c[0])
    names = model.nodes
    recurrent, transient, periods = [], set(), {}
    for comp in comps:
        inside = set(comp)
        closed = all(w in inside for v in comp for w in succ[v])
        p = period(comp, succ)
        members = frozenset(names[i] for i in comp)
        if closed and p > 0:
            recurrent.append(members)
            periods[members] = p
        else:
            transient |= members
    return NodeClassification(
        tuple(recurrent), frozenset(transient), periods,
        tuple(frozenset(names[i] for i in c) for c in comps),
    )


# -- pair graph ----------------------------------------------------------------


@dataclass(frozen=True)
class PairGraph:
    """Same-colored ordered node pairs; edges advance both coordinates at once."""

    model: WeakModel
    pair_nodes: frozenset[tuple[str, str]]
    pair_edges: frozenset[tuple[tuple[str, str], tuple[str, str]]]
    _succ: dict[tuple[int, int], tuple[tuple[int, int], ...]] = field(repr=False, default_factory=dict)

    def successors(self, pair: tuple[str, str]) -> tuple[tuple[str, str], ...]:
        idx = self.model.index
        names = self.model.nodes
        key = (idx[pair[0]], idx[pair[1]])
        return tuple((names[a], names[b]) for a, b in self._succ.get(key, ()))


def _pair_successors(model: WeakModel) -> dict[tuple[int, int], tuple[tuple[int, int], ...]]:
    labels = model.labels
    succ = model.successors
    n = len(model.nodes)
    out = {}
    for u in range(n):
        for v in range(n):
            if labels[u] != labels[v]:
                continue
            out[(u, v)] = tuple(
                (a, b) for a in succ[u] for b in succ[v] if labels[a] == labels[b]
            )
    return out


def pair_graph(model: WeakModel) -> PairGraph:
    if not model.is_single_colored:
        raise WeakModelError("pair graph needs a single-colored model; transform it first")
    succ = _pair_successors(model)
    names = model.nodes
    nodes = frozenset((names[u], names[v]) for u, v in succ)
    edges = frozenset(
        ((names[u], names[v]), (names[a], names[b]))
        for (u, v), targets in succ.items() for a, b in targets
    )
    return PairGraph(model, nodes, edges, succ)


# -- trackability ----------------------------------------------------------------


class Regime(str, enum.Enum):
    UNTRACKABLE = "Untrackable"
    BOUNDED = "TrackableBounded"
    UNBOUNDED_POLY = "TrackableUnboundedPoly"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class IntersectingCyclePair:
    """Two closed walks of equal length permitting one color sequence.

    Both sequences repeat their first node at the end.
    """

    first: tuple[str, ...]
    second: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.first) - 1


@dataclass(frozen=True)
class ForkWitness:
    """Cycle ``pi1`` at a, cycle ``pi2`` at b != a, and path ``pi3`` from a to b."""

    pi1: tuple[str, ...]
    pi2: tuple[str, ...]
    pi3: tuple[str, ...]

    @property
    def length(self) -> int:
        return len(self.pi1) - 1


@dataclass(frozen=True)
class TrackabilityReport:
    regime: Regime
    witness: Optional[IntersectingCyclePair | ForkWitness] = None

    @property
    def trackable(self) -> bool:
        return self.regime is not Regime.UNTRACKABLE


def _same_colors(model: WeakModel, u: str, v: str) -> bool:
    return bool(set(model.colors_of(u)) & set(model.colors_of(v)))


def _is_walk(model: WeakModel, seq) -> bool:
    edges = set(model.edges)
    return all((a, b) in edges for a, b in zip(seq, seq[1:]))


def check_cycle_pair(model: WeakModel, witness: IntersectingCyclePair) -> list[str]:
    """Violated conditions of an intersecting same-colored cycle pair (empty if valid)."""
    a, b = witness.first, witness.second
    problems = []
    if len(a) != len(b) or len(a) < 2:
        return ["cycles must have equal length of at least one step"]
    if not all(_same_colors(model, x, y) for x, y in zip(a, b)):
        problems.append("cycles do not permit the same color sequence")
    if a[0] != a[-1] or b[0] != b[-1] or not _is_walk(model, a) or not _is_walk(model, b):
        problems.append("sequences are not closed cycles of the model")
    if not any(x == y for x, y in zip(a, b)):
        problems.append("cycles never intersect")
    if not any(x != y for x, y in zip(a, b)):
        problems.append("cycles are identical")
    return problems


def check_fork(model: WeakModel, witness: ForkWitness) -> list[str]:
    """Violated fork conditions: shared colors, two distinct cycles, and the path between them."""
    p1, p2, p3 = witness.pi1, witness.pi2, witness.pi3
    problems = []
    if not (len(p1) == len(p2) == len(p3)) or len(p1) < 2:
        return ["paths must share a length of at least one step"]
    if not all(_same_colors(model, x, y) and _same_colors(model, y, z)
               and _same_colors(model, x, z) for x, y, z in zip(p1, p2, p3)):
        problems.append("paths do not permit the same color sequence")
    if not all(_is_walk(model, p) for p in (p1, p2, p3)):
        problems.append("a sequence is not a walk of the model")
    if p1[0] != p1[-1]:
        problems.append("pi1 is not a cycle")
    if p2[0] != p2[-1]:
        problems.append("pi2 is not a cycle")
    if p1[0] == p2[0]:
        problems.append("pi1 and pi2 start at the same node")
    if p3[0] != p1[0] or p3[-1] != p2[0]:
        problems.append("pi3 does not lead from the start of pi1 to the start of pi2")
    return problems


def _bfs_path(source, is_target, successors, allowed=None):
    """Shortest path (list of states) from ``source`` to a state with ``is_target``.

    Successors are visited in the order given, so the result is
    deterministic. The source itself only counts as a target after at least
    one step.
    """
    parent = {source: None}
    queue = deque([source])
    while queue:
        state = queue.popleft()
        for nxt in successors(state):
            if allowed is not None and not allowed(nxt):
                continue
            if is_target(nxt):
                path = [nxt, state]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            if nxt not in parent:
                parent[nxt] = state
                queue.append(nxt)
    return None


def _cycle_pair_witness(model, succ, comp_of, bad_components):
    names = model.nodes
    best = None
    for p in range(len(model.nodes)):
        comp = comp_of.get((p, p))
        if comp not in bad_components:
            continue

        def successors(state, comp=comp):
            (u, v), seen_off = state
            for a, b in succ[(u, v)]:
                if comp_of[(a, b)] == comp:
                    yield (a, b), seen_off or a != b

        path = _bfs_path(((p, p), False), lambda s, p=p: s == ((p, p), True), successors)
        if path is not None and (best is None or len(path) < len(best)):
            best = path
    pairs = [pair for pair, _ in best]
    return IntersectingCyclePair(
        tuple(names[u] for u, _ in pairs), tuple(names[v] for _, v in pairs)
    )


def _fork_witness(model, succ, comp_of, comp_size):
    """Shortest fork, or None. Candidates are filtered through the pair graph first."""
    labels = model.labels
    node_succ = model.successors
    names = model.nodes
    n = len(model.nodes)

    def on_cycle(pair):
        if comp_size[comp_of[pair]] > 1:
            return True
        return pair in succ[pair]

    def triple_successors(state):
        x, y, z = state
        for a in node_succ[x]:
            la = labels[a]
            for b in node_succ[y]:
                if labels[b] != la:
                    continue
                for c in node_succ[z]:
                    if labels[c] == la:
                        yield (a, b, c)

    best = None
    for p in range(n):
        from_diag = None
        for q in range(n):
            if q == p or labels[q] != labels[p] or not on_cycle((p, q)):
                continue
            if from_diag is None:
                from_diag = reachable([(p, p)], lambda s: succ[s])
            if (p, q) not in from_diag:
                continue
            target = (p, q, q)
            path = _bfs_path((p, p, q), lambda s, t=target: s == t, triple_successors)
            if path is not None and (best is None or len(path) < len(best)):
                best = path
    if best is None:
        return None
    return ForkWitness(
        tuple(names[x] for x, _, _ in best),
        tuple(names[z] for _, _, z in best),
        tuple(names[y] for _, y, _ in best),
    )


def _classify_single(model: WeakModel) -> TrackabilityReport:
    succ = _pair_successors(model)
    comps = tarjan_scc(sorted(succ), lambda s: succ[s])
    comp_of = {}
    comp_size = []
    bad = set()
    for i, comp in enumerate(comps):
        comp_size.append(len(comp))
        diag = off = False
        for pair in comp:
            comp_of[pair] = i
            if pair[0] == pair[1]:
                diag = True
            else:
                off = True
        if diag and off:
            bad.add(i)
    if bad:
        return TrackabilityReport(
            Regime.UNTRACKABLE, _cycle_pair_witness(model, succ, comp_of, bad)
        )
    fork = _fork_witness(model, succ, comp_of, comp_size)
    if fork is not None:
        return TrackabilityReport(Regime.UNBOUNDED_POLY, fork)
    return TrackabilityReport(Regime.BOUNDED)


def _map_back(witness, mapping: NodeMapping):
    if witness is None:
        return None
    back = mapping.to_original
    if isinstance(witness, IntersectingCyclePair):
        return IntersectingCyclePair(back(witness.first), back(witness.second))
    return ForkWitness(back(witness.pi1), back(witness.pi2), back(witness.pi3))


def classify_trackability(model: WeakModel) -> TrackabilityReport:
    """Decide the growth regime of ``n_G(t)`` and extract a witness.

    Multi-colored models are split first and witnesses are mapped back to
    the original node ids.
    """
    if model.is_single_colored:
        return _classify_single(model)
    single, mapping = to_single_colored(model)
    report = _classify_single(single)
    return TrackabilityReport(report.regime, _map_back(report.witness, mapping))


# -- hypothesis-set bounds -----------------------------------------------------


def hypothesis_set_bounds(k: int, total_excess: int) -> tuple[int, int]:
    """Known-start and unknown-start bounds from ``K`` and ``sum(M_v - 1)``."""
    known = 1 + total_excess
    return known, k * known


@dataclass(frozen=True)
class BoundReport:
    K: int
    M: dict[str, int]
    bound_known_start: int
    bound_unknown_start: int
    strongly_connected: bool
    regime: Regime

    @property
    def applicable(self) -> bool:
        """Whether the model is strongly connected and of bounded growth.

        Outside these conditions the bounds mean nothing. Inside them the
        unknown-start bound has held on every model tried, but the
        known-start bound can be exceeded when a hypothesis revisits a
        branching node while an earlier branch is still unresolved (see the
        tests for a five-node example).
        """
        return self.strongly_connected and self.regime is Regime.BOUNDED


def hypothesis_bound(model: WeakModel) -> BoundReport:
    """``K``, per-node multiplicities ``M_v`` and the two hypothesis-set bounds.

    For multi-colored nodes a color counts toward a group whenever the node
    can emit it, so out-neighbors that merely *may* share a color are grouped.
    """
    succ = model.successors
    k = max(sum(1 for cs in model.coloring if c in cs) for c in model.palette)
    multiplicity = {}
    for i, node in enumerate(model.nodes):
        groups = [sum(1 for w in succ[i] if c in model.coloring[w]) for c in model.palette]
        multiplicity[node] = max([1] + groups)
    known, unknown = hypothesis_set_bounds(k, sum(m - 1 for m in multiplicity.values()))
    return BoundReport(
        k, multiplicity, known, unknown,
        classify_nodes(model).strongly_connected,
        classify_trackability(model).regime,
    )


# -- automorphisms ---------------------------------------------------------------


@dataclass(frozen=True)
class Automorphisms:
    count: int
    generators: tuple[dict[str, str], ...]


def automorphism_count(model: WeakModel) -> Automorphisms:
    """Order of the color-preserving automorphism group, by backtracking.

    The order is built up orbit by orbit along a stabilizer chain
    (``|Aut| = prod |orbit of v_i under the stabilizer of v_0..v_{i-1}|``),
    so only one automorphism per orbit point is ever searched for. The
    automorphisms found along the way generate the group.
    """
    n = len(model.nodes)
    if n > AUTOMORPHISM_LIMIT:
        raise WeakModelError(f"automorphism search limited to {AUTOMORPHISM_LIMIT} nodes")
    adj = [set(s) for s in model.successors]
    coloring = model.coloring
    signature = [
        (coloring[v], len(model.successors[v]), len(model.predecessors[v]), v in adj[v])
        for v in range(n)
    ]

    def consistent(assign: list[int], u: int, w: int) -> bool:
        return all((x in adj[u]) == (assign[x] in adj[w]) and (u in adj[x]) == (w in adj[assign[x]])
                   for x in range(u))

    def extend(assign: list[int], used: set[int]) -> Optional[list[int]]:
        u = len(assign)
        if u == n:
            return list(assign)
        for w in range(n):
            if w in used or signature[w] != signature[u] or not consistent(assign, u, w):
                continue
            assign.append(w)
            used.add(w)
            found = extend(assign, used)
            assign.pop()
            used.discard(w)
            if found is not None:
                return found
        return None

    order = 1
    generators = []
    for i in range(n):
        prefix = list(range(i))
        orbit = 1
        for w in range(n):
            # images of v_0..v_{i-1} are pinned, so v_i can only move to a later node
            if w <= i or signature[w] != signature[i] or not consistent(prefix, i, w):
                continue
            found = extend(prefix + [w], set(prefix) | {w})
            if found is not None:
                orbit += 1
                generators.append({model.nodes[a]: model.nodes[b] for a, b in enumerate(found)})
        order *= orbit
    return Automorphisms(order, tuple(generators))
