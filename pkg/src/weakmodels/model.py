"""Weak models: node-colored directed graphs and their ``.wm`` text format."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

__all__ = [
    "WeakModelError",
    "ParseError",
    "WeakModel",
    "NodeMapping",
    "parse_model",
    "serialize_model",
    "to_single_colored",
    "SEPARATOR",
]

SEPARATOR = "__"
HEADER = "weakmodel v1"

_TOKEN = re.compile(r"^[A-Za-z0-9_]+$")
_DECIMAL = re.compile(r"^(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


class WeakModelError(ValueError):
    """Base class for domain errors raised by this package."""


class ParseError(WeakModelError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class WeakModel:
    """A weak model ``(V, E, L, Phi)``.

    ``coloring`` is aligned with ``nodes``; each entry lists the node's
    colors in palette order. ``edges`` keeps declaration order, and
    ``probabilities`` (when present) is aligned with ``edges``.

    Declaration order of nodes is the canonical order used for every
    tie-break in the package.
    """

    nodes: tuple[str, ...]
    palette: tuple[str, ...]
    coloring: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[str, str], ...] = ()
    start: Optional[str] = None
    probabilities: Optional[tuple[float, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "palette", tuple(self.palette))
        object.__setattr__(self, "edges", tuple((u, v) for u, v in self.edges))
        palette_pos = {c: i for i, c in enumerate(self.palette)}
        coloring = tuple(
            tuple(sorted(set(cs), key=lambda c: palette_pos.get(c, len(palette_pos))))
            for cs in self.coloring
        )
        object.__setattr__(self, "coloring", coloring)
        if self.probabilities is not None:
            object.__setattr__(
                self, "probabilities", tuple(float(p) for p in self.probabilities)
            )
        self._validate(palette_pos)

    def _validate(self, palette_pos):
        if not self.nodes:
            raise WeakModelError("model has no nodes")
        if len(set(self.palette)) != len(self.palette):
            raise WeakModelError("duplicate color in palette")
        if len(set(self.nodes)) != len(self.nodes):
            raise WeakModelError("duplicate node id")
        if len(self.coloring) != len(self.nodes):
            raise WeakModelError("coloring must have one entry per node")
        for tok in self.palette:
            if not _TOKEN.match(tok):
                raise WeakModelError(f"invalid color name {tok!r}")
        for node, colors in zip(self.nodes, self.coloring):
            if not _TOKEN.match(node):
                raise WeakModelError(f"invalid node id {node!r}")
            if not colors:
                raise WeakModelError(f"node {node!r} has no colors")
            for c in colors:
                if c not in palette_pos:
                    raise WeakModelError(f"node {node!r} uses undeclared color {c!r}")
        index = set(self.nodes)
        seen = set()
        for u, v in self.edges:
            for endpoint in (u, v):
                if endpoint not in index:
                    raise WeakModelError(f"edge references undeclared node {endpoint!r}")
            if (u, v) in seen:
                raise WeakModelError(f"duplicate edge {u} -> {v}")
            seen.add((u, v))
        if self.start is not None and self.start not in index:
            raise WeakModelError(f"start references undeclared node {self.start!r}")
        if self.probabilities is not None and len(self.probabilities) != len(self.edges):
            raise WeakModelError("probabilities must be given for every edge")

    # -- derived structure -------------------------------------------------

    @cached_property
    def index(self) -> dict[str, int]:
        return {n: i for i, n in enumerate(self.nodes)}

    @cached_property
    def color_index(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.palette)}

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        """Out-neighbor indices per node, in canonical (declaration) order."""
        out: list[list[int]] = [[] for _ in self.nodes]
        for u, v in self.edges:
            out[self.index[u]].append(self.index[v])
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def predecessors(self) -> tuple[tuple[int, ...], ...]:
        inc: list[list[int]] = [[] for _ in self.nodes]
        for u, v in self.edges:
            inc[self.index[v]].append(self.index[u])
        return tuple(tuple(sorted(s)) for s in inc)

    @property
    def is_single_colored(self) -> bool:
        return all(len(cs) == 1 for cs in self.coloring)

    @cached_property
    def labels(self) -> tuple[int, ...]:
        """Palette index of each node's color (single-colored models only)."""
        if not self.is_single_colored:
            raise WeakModelError("model is multi-colored; transform it first")
        return tuple(self.color_index[cs[0]] for cs in self.coloring)

    def colors_of(self, node: str) -> tuple[str, ...]:
        return self.coloring[self.index[node]]

    def color(self, node: str) -> str:
        """The single color of ``node`` (the lumping function)."""
        cs = self.colors_of(node)
        if len(cs) != 1:
            raise WeakModelError(f"node {node!r} is multi-colored")
        return cs[0]

    @property
    def has_probabilities(self) -> bool:
        return self.probabilities is not None

    def edge_probabilities(self) -> dict[tuple[str, str], float]:
        if self.probabilities is None:
            raise WeakModelError("model carries no transition probabilities")
        return dict(zip(self.edges, self.probabilities))

    def with_probabilities(
        self, probabilities: Optional[Mapping[tuple[str, str], float]]
    ) -> "WeakModel":
        """Copy of the model carrying ``probabilities`` (``None`` strips them)."""
        if probabilities is None:
            probs = None
        else:
            extra = set(probabilities) - set(self.edges)
            if extra:
                u, v = sorted(extra)[0]
                raise WeakModelError(f"probability given for non-edge {u} -> {v}")
            missing = [e for e in self.edges if e not in probabilities]
            if missing:
                u, v = missing[0]
                raise WeakModelError(f"missing probability for edge {u} -> {v}")
            probs = tuple(probabilities[e] for e in self.edges)
        return WeakModel(
            self.nodes, self.palette, self.coloring, self.edges, self.start, probs
        )

    def with_start(self, start: Optional[str]) -> "WeakModel":
        return WeakModel(
            self.nodes, self.palette, self.coloring, self.edges, start, self.probabilities
        )

    @classmethod
    def build(
        cls,
        colors: Mapping[str, str | Iterable[str]],
        edges: Iterable[tuple[str, str]] = (),
        palette: Optional[Sequence[str]] = None,
        start: Optional[str] = None,
        probabilities: Optional[Mapping[tuple[str, str], float]] = None,
    ) -> "WeakModel":
        """Convenience constructor from ``{node: color or colors}``.

        The palette defaults to colors in order of first use.
        """
        nodes = tuple(colors)
        coloring = []
        used: list[str] = []
        for n in nodes:
            cs = colors[n]
            cs = (cs,) if isinstance(cs, str) else tuple(cs)
            coloring.append(cs)
            for c in cs:
                if c not in used:
                    used.append(c)
        model = cls(nodes, tuple(palette) if palette else tuple(used), tuple(coloring),
                    tuple(edges), start)
        if probabilities is not None:
            model = model.with_probabilities(probabilities)
        return model


# -- text format --------------------------------------------------------------


def _check_token(tok: str, kind: str, lineno: int) -> str:
    if not _TOKEN.match(tok):
        raise ParseError(f"invalid {kind} {tok!r}", lineno)
    return tok


def parse_model(text: str) -> WeakModel:
    """Parse a ``.wm`` document into a validated :class:`WeakModel`."""
    lines = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        content = raw.split("#", 1)[0].strip()
        if content:
            lines.append((lineno, content.split()))
    if not lines:
        raise ParseError("empty document")

    lineno, toks = lines[0]
    if " ".join(toks) != HEADER:
        raise ParseError(f"expected header {HEADER!r}", lineno)

    palette: list[str] = []
    nodes: list[str] = []
    coloring: list[tuple[str, ...]] = []
    edges: list[tuple[str, str]] = []
    probs: list[Optional[float]] = []
    start = None
    stage = 0  # 0 header, 1 colors, 2 nodes, 3 edges, 4 start
    node_set: set[str] = set()
    edge_set: set[tuple[str, str]] = set()

    for lineno, toks in lines[1:]:
        kind = toks[0]
        if kind == "colors":
            if stage != 0:
                raise ParseError("duplicate or misplaced 'colors' line", lineno)
            if len(toks) < 2:
                raise ParseError("'colors' needs at least one color", lineno)
            for c in toks[1:]:
                _check_token(c, "color", lineno)
                if c in palette:
                    raise ParseError(f"duplicate color {c!r}", lineno)
                palette.append(c)
            stage = 1
        elif kind == "node":
            if stage not in (1, 2):
                raise ParseError("'node' line out of order", lineno)
            if len(toks) != 3:
                raise ParseError("expected 'node <id> <color>[,<color>...]'", lineno)
            node = _check_token(toks[1], "node id", lineno)
            if SEPARATOR in node:
                raise ParseError(f"node id {node!r} contains reserved '{SEPARATOR}'", lineno)
            if node in node_set:
                raise ParseError(f"duplicate node {node!r}", lineno)
            cs = toks[2].split(",")
            for c in cs:
                if c not in palette:
                    raise ParseError(f"node {node!r} references undeclared color {c!r}", lineno)
            if len(set(cs)) != len(cs):
                raise ParseError(f"node {node!r} lists a color twice", lineno)
            node_set.add(node)
            nodes.append(node)
            coloring.append(tuple(cs))
            stage = 2
        elif kind == "edge":
            if stage not in (2, 3):
                raise ParseError("'edge' line out of order", lineno)
            if len(toks) not in (3, 4):
                raise ParseError("expected 'edge <from> <to> [<prob>]'", lineno)
            u, v = toks[1], toks[2]
            for endpoint in (u, v):
                if endpoint not in node_set:
                    raise ParseError(f"edge references undeclared node {endpoint!r}", lineno)
            if (u, v) in edge_set:
                raise ParseError(f"duplicate edge {u} -> {v}", lineno)
            p = None
            if len(toks) == 4:
                if not _DECIMAL.match(toks[3]):
                    raise ParseError(f"malformed probability {toks[3]!r}", lineno)
                p = float(toks[3])
            if probs and (probs[0] is None) != (p is None):
                raise ParseError("probabilities must appear on all edges or none", lineno)
            edge_set.add((u, v))
            edges.append((u, v))
            probs.append(p)
            stage = 3
        elif kind == "start":
            if stage not in (2, 3):
                raise ParseError("duplicate or misplaced 'start' line", lineno)
            if len(toks) != 2:
                raise ParseError("expected 'start <id>'", lineno)
            if toks[1] not in node_set:
                raise ParseError(f"start references undeclared node {toks[1]!r}", lineno)
            start = toks[1]
            stage = 4
        else:
            raise ParseError(f"unknown directive {kind!r}", lineno)

    if stage < 2:
        raise ParseError("model declares no nodes")
    probabilities = tuple(probs) if probs and probs[0] is not None else None
    try:
        return WeakModel(tuple(nodes), tuple(palette), tuple(coloring),
                         tuple(edges), start, probabilities)
    except WeakModelError as exc:
        raise ParseError(str(exc)) from None


def serialize_model(model: WeakModel) -> str:
    """Canonical ``.wm`` text; ``parse_model`` inverts it exactly."""
    out = [HEADER, "colors " + " ".join(model.palette)]
    for node, colors in zip(model.nodes, model.coloring):
        out.append(f"node {node} {','.join(colors)}")
    for i, (u, v) in enumerate(model.edges):
        if model.probabilities is None:
            out.append(f"edge {u} {v}")
        else:
            out.append(f"edge {u} {v} {model.probabilities[i]!r}")
    if model.start is not None:
        out.append(f"start {model.start}")
    return "\n".join(out) + "\n"


# -- multi-colored -> single-colored -----------------------------------------


@dataclass(frozen=True)
class NodeMapping:
    """Correspondence between an original model and its single-colored form.

    ``forward`` maps each original node to its derived nodes; ``backward``
    maps each derived node to ``(original, color)``. ``start_nodes`` lists the
    derived nodes standing in for the original start node, if any.
    """

    forward: dict[str, tuple[str, ...]]
    backward: dict[str, tuple[str, str]]
    start_nodes: tuple[str, ...] = field(default=())

    def to_original(self, sequence: Iterable[str]) -> tuple[str, ...]:
        return tuple(self.backward[n][0] for n in sequence)


def to_single_colored(model: WeakModel) -> tuple[WeakModel, NodeMapping]:
    """Split every multi-colored node into one node per color.

    Single-colored nodes keep their ids; a node ``b`` with colors ``B, R``
    becomes ``b__B`` and ``b__R``, each inheriting all of ``b``'s edges.
    Transition probabilities are not carried over: splitting a node has no
    well-defined effect on them without emission probabilities.
    """
    forward: dict[str, tuple[str, ...]] = {}
    backward: dict[str, tuple[str, str]] = {}
    nodes: list[str] = []
    coloring: list[tuple[str, ...]] = []
    for node, colors in zip(model.nodes, model.coloring):
        if len(colors) == 1:
            derived = (node,)
        else:
            derived = tuple(f"{node}{SEPARATOR}{c}" for c in colors)
        forward[node] = derived
        for d, c in zip(derived, colors):
            backward[d] = (node, c)
            nodes.append(d)
            coloring.append((c,))
    edges = [(du, dv) for u, v in model.edges for du in forward[u] for dv in forward[v]]

    start = None
    start_nodes: tuple[str, ...] = ()
    if model.start is not None:
        start_nodes = forward[model.start]
        if len(start_nodes) == 1:
            start = start_nodes[0]
    single = WeakModel(tuple(nodes), model.palette, tuple(coloring), tuple(edges), start)
    return single, NodeMapping(forward, backward, start_nodes)
