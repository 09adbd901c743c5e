"""Small directed-graph utilities over integer vertex ids."""

from __future__ import annotations

from collections import deque
from math import gcd
from typing import Callable, Hashable, Iterable, Sequence, TypeVar

V = TypeVar("V", bound=Hashable)


def tarjan_scc(vertices: Iterable[V], successors: Callable[[V], Iterable[V]]) -> list[list[V]]:
    """Strongly connected components, iterative Tarjan.

    Components come out in reverse topological order (sinks first), which
    is what Tarjan's algorithm naturally produces.
    """
    index: dict[V, int] = {}
    lowlink: dict[V, int] = {}
    on_stack: set[V] = set()
    stack: list[V] = []
    components: list[list[V]] = []
    counter = 0

    for root in vertices:
        if root in index:
            continue
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(successors(root)))]
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)
    return components


def reachable(sources: Iterable[V], successors: Callable[[V], Iterable[V]]) -> set[V]:
    seen = set(sources)
    queue = deque(seen)
    while queue:
        v = queue.popleft()
        for w in successors(v):
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return seen


def period(members: Sequence[int], successors: Sequence[Sequence[int]]) -> int:
    """gcd of cycle lengths inside a strongly connected vertex set.

    Uses BFS levels: every internal edge ``u -> v`` contributes
    ``level[u] + 1 - level[v]``. Returns 0 when the set has no internal edge.
    """
    inside = set(members)
    root = members[0]
    level = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in successors[u]:
            if v in inside and v not in level:
                level[v] = level[u] + 1
                queue.append(v)
    g = 0
    for u in members:
        for v in successors[u]:
            if v in inside:
                g = gcd(g, level[u] + 1 - level[v])
    return abs(g)
