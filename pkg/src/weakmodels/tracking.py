"""Exact online maintenance of the hypothesis set for an observed color sequence.

A trellis layer maps each node that can be occupied at that time step to
the number of consistent node sequences ending there and to the set of
predecessor nodes in the previous layer. Counts are Python ints, so they
never overflow, even when the hypothesis set doubles every few steps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

from .model import WeakModel, WeakModelError

__all__ = [
    "Trellis",
    "Enumeration",
    "GrowthProfile",
    "init_tracker",
    "step",
    "track",
    "hypothesis_count",
    "enumerate_hypotheses",
    "worst_case_growth",
    "GROWTH_GUARD",
]

GROWTH_GUARD = 10**7

# node index -> (count, predecessor indices)
Layer = dict[int, tuple[int, tuple[int, ...]]]


class _Chain(NamedTuple):
    """Persistent list of layers, newest first, so stepping never copies history."""

    layer: Layer
    color: str
    prev: Optional["_Chain"]


@dataclass(frozen=True, eq=False)
class Trellis:
    model: WeakModel
    starts: frozenset[int]
    horizon: Optional[int] = None
    length: int = 0
    dead: bool = False
    _chain: Optional[_Chain] = None
    _window: tuple[tuple[Layer, str], ...] = ()

    @property
    def counting_only(self) -> bool:
        return self.horizon is not None

    def _recent(self) -> list[tuple[Layer, str]]:
        """Retained layers, oldest first."""
        if self.horizon is not None:
            return list(self._window)
        out = []
        node = self._chain
        while node is not None:
            out.append((node.layer, node.color))
            node = node.prev
        out.reverse()
        return out

    @property
    def last_layer(self) -> Layer:
        if self.horizon is not None:
            return self._window[-1][0] if self._window else {}
        return self._chain.layer if self._chain is not None else {}

    @property
    def observed(self) -> tuple[str, ...]:
        """Observed colors still held by the trellis (all of them unless a horizon is set)."""
        return tuple(c for _, c in self._recent())

    @property
    def allowed_starts(self) -> tuple[str, ...]:
        return tuple(self.model.nodes[i] for i in sorted(self.starts))

    def layers(self) -> list[dict[str, tuple[int, frozenset[str]]]]:
        """Retained layers keyed by node id, oldest first."""
        names = self.model.nodes
        return [
            {names[n]: (cnt, frozenset(names[p] for p in preds))
             for n, (cnt, preds) in sorted(layer.items())}
            for layer, _ in self._recent()
        ]

    def __len__(self):
        return self.length


def init_tracker(
    model: WeakModel, start: Optional[str] = None, horizon: Optional[int] = None
) -> Trellis:
    """Empty trellis for a single-colored model.

    With ``start`` the first observation must come from that node; otherwise
    any node may start. A positive ``horizon`` keeps only that many recent
    layers (counting-only mode; enumeration is then unavailable).
    """
    if not model.is_single_colored:
        raise WeakModelError("tracking needs a single-colored model; transform it first")
    if start is None:
        starts = frozenset(range(len(model.nodes)))
    else:
        if start not in model.index:
            raise WeakModelError(f"unknown start node {start!r}")
        starts = frozenset([model.index[start]])
    if horizon is not None and horizon < 1:
        raise WeakModelError("horizon must be positive")
    return Trellis(model, starts, horizon)


def _first_layer(model: WeakModel, starts: Iterable[int], color: int) -> Layer:
    labels = model.labels
    return {n: (1, ()) for n in sorted(starts) if labels[n] == color}


def _next_layer(model: WeakModel, layer: Layer, color: int) -> Layer:
    labels = model.labels
    succ = model.successors
    acc: dict[int, list] = {}
    for n in sorted(layer):
        cnt = layer[n][0]
        for s in succ[n]:
            if labels[s] != color:
                continue
            slot = acc.get(s)
            if slot is None:
                acc[s] = [cnt, [n]]
            else:
                slot[0] += cnt
                slot[1].append(n)
    return {s: (v[0], tuple(v[1])) for s, v in sorted(acc.items())}


def step(trellis: Trellis, color: str) -> Trellis:
    """Consume one observed color and return the extended trellis."""
    model = trellis.model
    try:
        c = model.color_index[color]
    except KeyError:
        raise WeakModelError(f"unknown color {color!r}") from None
    if trellis.dead:
        layer: Layer = {}
    elif trellis.length == 0:
        layer = _first_layer(model, trellis.starts, c)
    else:
        layer = _next_layer(model, trellis.last_layer, c)
    dead = not layer
    if trellis.horizon is None:
        return Trellis(model, trellis.starts, None, trellis.length + 1, dead,
                       _Chain(layer, color, trellis._chain))
    window = (trellis._window + ((layer, color),))[-trellis.horizon:]
    return Trellis(model, trellis.starts, trellis.horizon, trellis.length + 1, dead,
                   None, window)


def track(model: WeakModel, colors: Iterable[str], start: Optional[str] = None,
          horizon: Optional[int] = None) -> Trellis:
    trellis = init_tracker(model, start, horizon)
    for c in colors:
        trellis = step(trellis, c)
    return trellis


def hypothesis_count(trellis: Trellis) -> int:
    """Exact number of node sequences consistent with everything observed."""
    if trellis.dead:
        return 0
    return sum(cnt for cnt, _ in trellis.last_layer.values())


class Enumeration(NamedTuple):
    sequences: list[tuple[str, ...]]
    truncated: bool


def _iter_paths(layers: Sequence[Layer]) -> Iterator[tuple[int, ...]]:
    """Paths through the trellis in canonical lexicographic order."""
    t_max = len(layers)
    # alive[t]: nodes at layer t with a continuation to the last layer
    alive: list[set[int]] = [set() for _ in range(t_max)]
    alive[-1] = set(layers[-1])
    succ: list[dict[int, list[int]]] = [dict() for _ in range(t_max)]
    for t in range(t_max - 1, 0, -1):
        for n in alive[t]:
            for p in layers[t][n][1]:
                alive[t - 1].add(p)
                succ[t - 1].setdefault(p, []).append(n)
    for d in succ:
        for v in d.values():
            v.sort()

    path: list[int] = []
    stack = [iter(sorted(alive[0]))]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if path:
                path.pop()
            continue
        path.append(nxt)
        depth = len(path)
        if depth == t_max:
            yield tuple(path)
            path.pop()
        else:
            stack.append(iter(succ[depth - 1].get(nxt, ())))


def enumerate_hypotheses(trellis: Trellis, cap: int) -> Enumeration:
    """Up to ``cap`` hypotheses in canonical order, flagging truncation."""
    if cap < 1:
        raise WeakModelError("cap must be positive")
    if trellis.counting_only:
        raise WeakModelError("enumeration is unavailable in counting-only mode")
    if trellis.dead or trellis.length == 0:
        return Enumeration([], False)
    names = trellis.model.nodes
    layers = [layer for layer, _ in trellis._recent()]
    out = []
    for path in _iter_paths(layers):
        if len(out) == cap:
            return Enumeration(out, True)
        out.append(tuple(names[i] for i in path))
    return Enumeration(out, False)


# -- worst-case growth -------------------------------------------------------


@dataclass(frozen=True)
class GrowthProfile:
    """``n[t-1]`` is the worst-case hypothesis count over color sequences of length ``t``."""

    n: tuple[int, ...]
    argmax_sequences: tuple[tuple[str, ...], ...]

    @property
    def max(self) -> int:
        return max(self.n) if self.n else 0


def _counts_key(counts: dict[int, int]) -> tuple[tuple[int, int], ...]:
    return tuple(sorted(counts.items()))


def worst_case_growth(model: WeakModel, t_max: int,
                      start: Optional[str] = None) -> GrowthProfile:
    """Exhaustive ``n_G(t)`` for ``t = 1..t_max``.

    Every color sequence is explored, level by level. Prefixes that leave
    the per-node count vector identical have identical futures, so only one
    of them (the lexicographically smallest) is extended; dead prefixes are
    dropped. The maximum is unaffected by either reduction.
    """
    if not model.is_single_colored:
        raise WeakModelError("growth analysis needs a single-colored model")
    if t_max < 1:
        raise WeakModelError("t_max must be positive")
    if len(model.palette) ** t_max > GROWTH_GUARD:
        raise WeakModelError(
            f"|palette|^t_max = {len(model.palette)}^{t_max} exceeds guard {GROWTH_GUARD}"
        )
    starts = range(len(model.nodes)) if start is None else [model.index[start]]
    labels = model.labels
    succ = model.successors
    n_colors = len(model.palette)

    level: dict[tuple, tuple[int, ...]] = {}
    for c in range(n_colors):
        counts = {n: 1 for n in starts if labels[n] == c}
        if counts:
            level.setdefault(_counts_key(counts), (c,))

    ns: list[int] = []
    argmax: list[tuple[str, ...]] = []
    for t in range(1, t_max + 1):
        if t > 1:
            nxt: dict[tuple, tuple[int, ...]] = {}
            for key, seq in level.items():
                per_color: list[dict[int, int]] = [dict() for _ in range(n_colors)]
                for n, cnt in key:
                    for s in succ[n]:
                        bucket = per_color[labels[s]]
                        bucket[s] = bucket.get(s, 0) + cnt
                for c, counts in enumerate(per_color):
                    if counts:
                        k = _counts_key(counts)
                        if k not in nxt:
                            nxt[k] = seq + (c,)
            level = nxt
        best, best_seq = 0, ()
        for key, seq in level.items():
            total = sum(cnt for _, cnt in key)
            if total > best:
                best, best_seq = total, seq
        ns.append(best)
        argmax.append(tuple(model.palette[c] for c in best_seq))
        if not level:
            # every sequence of this length is impossible; so are all longer ones
            ns.extend([0] * (t_max - t))
            argmax.extend([()] * (t_max - t))
            break
    return GrowthProfile(tuple(ns), tuple(argmax))
