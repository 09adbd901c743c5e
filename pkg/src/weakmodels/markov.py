"""Weak models with transition probabilities: lumped Markov chains.

Emissions are deterministic (each node emits its single color), so an
observation sequence only masks which nodes may be occupied at each step.
All likelihoods are kept in base-2 log domain and entropies are in bits.

Sequence routines come in two flavours: single-sequence functions taking
color names, and ``*_batch`` functions over integer color arrays of shape
``(batch, T)`` that the experiments use to process many traversals at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .model import WeakModel, WeakModelError
from .structure import NodeClassification, classify_nodes

__all__ = [
    "MarkovChain",
    "TimingVector",
    "Traversal",
    "ROW_TOL",
    "RESIDUAL_TOL",
    "attach_probabilities",
    "uniform_chain",
    "stationary_distribution",
    "mean_absorption_times",
    "mean_first_passage",
    "mean_recurrence_time",
    "rng_stream",
    "sample_traversal",
    "sample_paths",
    "encode_colors",
    "viterbi",
    "viterbi_batch",
    "forward_log_prob",
    "forward_log_prob_batch",
    "posterior_path_entropy",
    "posterior_path_entropy_batch",
    "markov_entropy_rate",
    "path_entropy",
]

ROW_TOL = 1e-9
RESIDUAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MarkovChain:
    """A single-colored weak model with transition matrix ``P`` (declaration order)."""

    model: WeakModel
    P: np.ndarray

    @cached_property
    def classification(self) -> NodeClassification:
        return classify_nodes(self.model)

    @cached_property
    def log2_P(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log2(self.P)

    @cached_property
    def labels(self) -> np.ndarray:
        return np.asarray(self.model.labels, dtype=np.intp)

    @cached_property
    def emission_mask(self) -> np.ndarray:
        """``mask[c, i]`` is 0 where node ``i`` emits color ``c`` and ``-inf`` elsewhere."""
        n_colors = len(self.model.palette)
        mask = np.full((n_colors, len(self.model.nodes)), -np.inf)
        mask[self.labels, np.arange(len(self.model.nodes))] = 0.0
        return mask

    @cached_property
    def row_entropy(self) -> np.ndarray:
        """Entropy in bits of each node's outgoing transition distribution."""
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(self.P > 0, -self.P * self.log2_P, 0.0)
        return terms.sum(axis=1)

    def node(self, name: str) -> int:
        try:
            return self.model.index[name]
        except KeyError:
            raise WeakModelError(f"unknown node {name!r}") from None


@dataclass(frozen=True)
class TimingVector:
    values: dict[str, float]
    kind: str
    residual: float


@dataclass(frozen=True)
class Traversal:
    nodes: tuple[str, ...]
    colors: tuple[str, ...]
    seed: int
    stream: Optional[int] = None


# -- construction -----------------------------------------------------------


def attach_probabilities(
    model: WeakModel, probabilities: Optional[Mapping[tuple[str, str], float]] = None
) -> MarkovChain:
    """Validate transition probabilities on ``model`` and build the chain.

    Without ``probabilities`` the ones carried by the model are used. The
    support must be exactly the edge set and every row must sum to one.
    """
    if not model.is_single_colored:
        raise WeakModelError("Markov chains need a single-colored model")
    if probabilities is None:
        if not model.has_probabilities:
            raise WeakModelError("model carries no transition probabilities")
        probabilities = model.edge_probabilities()
    edges = set(model.edges)
    for (u, v), p in probabilities.items():
        if (u, v) not in edges:
            raise WeakModelError(f"probability given for non-edge {u} -> {v}")
        if not (0.0 < p <= 1.0):
            raise WeakModelError(f"probability of {u} -> {v} must lie in (0, 1], got {p}")
    n = len(model.nodes)
    P = np.zeros((n, n))
    for u, v in model.edges:
        if (u, v) not in probabilities:
            raise WeakModelError(f"missing probability for edge {u} -> {v}")
        P[model.index[u], model.index[v]] = probabilities[(u, v)]
    sums = P.sum(axis=1)
    for i, s in enumerate(sums):
        if abs(s - 1.0) > ROW_TOL:
            raise WeakModelError(
                f"outgoing probabilities of {model.nodes[i]!r} sum to {s!r}, not 1"
            )
    P.setflags(write=False)
    return MarkovChain(model, P)


def uniform_chain(model: WeakModel) -> MarkovChain:
    """Chain choosing uniformly among each node's out-edges."""
    succ = model.successors
    names = model.nodes
    probs = {}
    for i, out in enumerate(succ):
        for j in out:
            probs[(names[i], names[j])] = 1.0 / len(out)
    return attach_probabilities(model, probs)


# -- linear-system quantities -------------------------------------------------


def _solve(A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    x = np.linalg.solve(A, b)
    residual = float(np.max(np.abs(A @ x - b))) if len(b) else 0.0
    if residual >= RESIDUAL_TOL:
        raise WeakModelError(f"linear solve residual {residual:.3g} exceeds {RESIDUAL_TOL}")
    return x, residual


def _recurrent_class(chain: MarkovChain, members) -> list[int]:
    members = frozenset(members)
    if members not in chain.classification.recurrent_classes:
        raise WeakModelError(f"{sorted(members)} is not a recurrent class")
    return sorted(chain.node(n) for n in members)


def stationary_distribution(chain: MarkovChain, members) -> dict[str, float]:
    """Stationary distribution of the chain restricted to a recurrent class."""
    idx = _recurrent_class(chain, members)
    sub = chain.P[np.ix_(idx, idx)]
    A = (sub - np.eye(len(idx))).T
    A[-1, :] = 1.0
    b = np.zeros(len(idx))
    b[-1] = 1.0
    pi, _ = _solve(A, b)
    return {chain.model.nodes[i]: float(p) for i, p in zip(idx, pi)}


def mean_absorption_times(chain: MarkovChain) -> TimingVector:
    """Expected steps until some recurrent class is entered (0 for recurrent nodes)."""
    names = chain.model.nodes
    transient = sorted(chain.node(n) for n in chain.classification.transient)
    values = {n: 0.0 for n in names}
    residual = 0.0
    if transient:
        sub = chain.P[np.ix_(transient, transient)]
        mu, residual = _solve(np.eye(len(transient)) - sub, np.ones(len(transient)))
        for i, m in zip(transient, mu):
            values[names[i]] = float(m)
    return TimingVector(values, "absorption", residual)


def _passage_states(chain: MarkovChain, v: str, within_class: bool) -> list[int]:
    cls = chain.classification.class_of(v)
    if cls is None:
        raise WeakModelError(f"node {v!r} is transient; it is not revisited almost surely")
    if within_class:
        return sorted(chain.node(n) for n in cls)
    if len(chain.classification.recurrent_classes) > 1:
        raise WeakModelError(
            f"some states cannot reach {v!r}; restrict to its recurrent class"
        )
    return list(range(len(chain.model.nodes)))


def mean_first_passage(chain: MarkovChain, v: str, within_class: bool = False) -> TimingVector:
    """Expected steps to first reach ``v`` from every state (0 at ``v``).

    With ``within_class`` only the recurrent class of ``v`` is considered.
    """
    target = chain.node(v)
    states = _passage_states(chain, v, within_class)
    others = [i for i in states if i != target]
    names = chain.model.nodes
    values = {v: 0.0}
    residual = 0.0
    if others:
        sub = chain.P[np.ix_(others, others)]
        t, residual = _solve(np.eye(len(others)) - sub, np.ones(len(others)))
        values.update({names[i]: float(x) for i, x in zip(others, t)})
    ordered = {names[i]: values[names[i]] for i in states}
    return TimingVector(ordered, "first_passage", residual)


def mean_recurrence_time(chain: MarkovChain, v: str, within_class: bool = False) -> float:
    """Expected steps for the chain to return to ``v``."""
    passage = mean_first_passage(chain, v, within_class)
    row = chain.P[chain.node(v)]
    return 1.0 + float(sum(row[chain.node(n)] * t for n, t in passage.values.items()))


# -- sampling -------------------------------------------------------------------


def rng_stream(seed: int, stream: Optional[int] = None) -> np.random.Generator:
    """Generator for ``seed``; ``stream`` selects an independent child stream."""
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    if stream is None:
        return np.random.default_rng(np.random.SeedSequence(seed))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(stream),)))


def _walk(chain: MarkovChain, start: int, uniforms: np.ndarray) -> np.ndarray:
    """Node paths driven by per-step uniforms of shape ``(batch, steps - 1)``."""
    P = chain.P
    n = P.shape[0]
    cum = np.cumsum(P, axis=1)
    last_nonzero = np.array([np.flatnonzero(row)[-1] for row in P])
    batch, moves = uniforms.shape
    paths = np.empty((batch, moves + 1), dtype=np.intp)
    paths[:, 0] = start
    cur = paths[:, 0]
    for t in range(moves):
        nxt = (uniforms[:, t, None] >= cum[cur]).sum(axis=1)
        nxt = np.where(nxt >= n, last_nonzero[cur], nxt)
        paths[:, t + 1] = nxt
        cur = nxt
    return paths


def sample_paths(chain: MarkovChain, start: str, steps: int, seed: int,
                 streams: Sequence[int]) -> np.ndarray:
    """Node-index paths, one row per stream; row ``k`` uses ``rng_stream(seed, streams[k])``."""
    if steps < 1:
        raise WeakModelError("steps must be positive")
    s = chain.node(start)
    uniforms = np.empty((len(streams), steps - 1))
    for k, stream in enumerate(streams):
        uniforms[k] = rng_stream(seed, stream).random(steps - 1)
    return _walk(chain, s, uniforms)


def sample_traversal(chain: MarkovChain, start: str, steps: int, seed: int,
                     stream: Optional[int] = None) -> Traversal:
    """Random walk of ``steps`` nodes beginning at ``start``."""
    if steps < 1:
        raise WeakModelError("steps must be positive")
    uniforms = rng_stream(seed, stream).random(steps - 1)[None, :]
    path = _walk(chain, chain.node(start), uniforms)[0]
    names = chain.model.nodes
    nodes = tuple(names[i] for i in path)
    return Traversal(nodes, tuple(chain.model.color(n) for n in nodes), seed, stream)


# -- sequence likelihoods ---------------------------------------------------------


def encode_colors(chain: MarkovChain, colors: Sequence[str]) -> np.ndarray:
    try:
        return np.array([chain.model.color_index[c] for c in colors], dtype=np.intp)
    except KeyError as exc:
        raise WeakModelError(f"unknown color {exc.args[0]!r}") from None


def _log_init(chain: MarkovChain, first: np.ndarray, start: Optional[str]) -> np.ndarray:
    """log2 initial distribution per batch row: the start node, else uniform over the first color."""
    n = len(chain.model.nodes)
    if start is not None:
        init = np.full(n, -np.inf)
        init[chain.node(start)] = 0.0
        return chain.emission_mask[first] + init
    mask = chain.emission_mask[first]
    k = np.isfinite(mask).sum(axis=1, keepdims=True)
    # a first color no node emits leaves the row at -inf (probability zero)
    return mask - np.log2(np.maximum(k, 1))


def _check_batch(colors: np.ndarray) -> np.ndarray:
    colors = np.asarray(colors, dtype=np.intp)
    if colors.ndim != 2 or colors.shape[1] == 0:
        raise WeakModelError("color batch must have shape (batch, T) with T >= 1")
    return colors


def _forward(chain: MarkovChain, colors: np.ndarray, start: Optional[str]) -> np.ndarray:
    """log2 forward variables, shape ``(T, batch, N)``."""
    logP = chain.log2_P
    mask = chain.emission_mask
    T = colors.shape[1]
    out = np.empty((T,) + (colors.shape[0], logP.shape[0]))
    out[0] = _log_init(chain, colors[:, 0], start)
    for t in range(1, T):
        out[t] = np.logaddexp2.reduce(out[t - 1][:, :, None] + logP[None], axis=1) + mask[colors[:, t]]
    return out


def _backward(chain: MarkovChain, colors: np.ndarray) -> np.ndarray:
    """log2 backward variables, shape ``(T, batch, N)``."""
    logP = chain.log2_P
    mask = chain.emission_mask
    T = colors.shape[1]
    out = np.empty((T,) + (colors.shape[0], logP.shape[0]))
    out[-1] = 0.0
    for t in range(T - 2, -1, -1):
        nxt = mask[colors[:, t + 1]] + out[t + 1]
        out[t] = np.logaddexp2.reduce(logP[None] + nxt[:, None, :], axis=2)
    return out


def forward_log_prob_batch(chain: MarkovChain, colors: np.ndarray,
                           start: Optional[str] = None) -> np.ndarray:
    """log2 p(y) per row; ``-inf`` marks impossible sequences."""
    colors = _check_batch(colors)
    logP = chain.log2_P
    mask = chain.emission_mask
    alpha = _log_init(chain, colors[:, 0], start)
    for t in range(1, colors.shape[1]):
        alpha = np.logaddexp2.reduce(alpha[:, :, None] + logP[None], axis=1) + mask[colors[:, t]]
    return np.logaddexp2.reduce(alpha, axis=1)


def forward_log_prob(chain: MarkovChain, colors: Sequence[str],
                     start: Optional[str] = None) -> float:
    """log2 probability of observing ``colors``."""
    if len(colors) == 0:
        raise WeakModelError("color sequence is empty")
    return float(forward_log_prob_batch(chain, encode_colors(chain, colors)[None], start)[0])


def viterbi_batch(chain: MarkovChain, colors: np.ndarray,
                  start: Optional[str] = None) -> tuple[np.ndarray, np.ndarray]:
    """Most probable node paths ``(batch, T)`` and their log2 probabilities.

    Ties go to the node earliest in declaration order, both for the final
    node and for every predecessor choice while backtracking.
    """
    colors = _check_batch(colors)
    logP = chain.log2_P
    mask = chain.emission_mask
    B, T = colors.shape
    delta = _log_init(chain, colors[:, 0], start)
    back = np.empty((T, B, logP.shape[0]), dtype=np.intp)
    rows = np.arange(B)
    for t in range(1, T):
        scores = delta[:, :, None] + logP[None]
        back[t] = np.argmax(scores, axis=1)
        delta = np.take_along_axis(scores, back[t][:, None, :], axis=1)[:, 0, :] + mask[colors[:, t]]
    paths = np.empty((B, T), dtype=np.intp)
    paths[:, -1] = np.argmax(delta, axis=1)
    best = delta[rows, paths[:, -1]]
    for t in range(T - 1, 0, -1):
        paths[:, t - 1] = back[t][rows, paths[:, t]]
    return paths, best


def viterbi(chain: MarkovChain, colors: Sequence[str],
            start: Optional[str] = None) -> tuple[tuple[str, ...], float]:
    if len(colors) == 0:
        raise WeakModelError("color sequence is empty")
    paths, best = viterbi_batch(chain, encode_colors(chain, colors)[None], start)
    if not np.isfinite(best[0]):
        raise WeakModelError("no node sequence is consistent with the colors")
    names = chain.model.nodes
    return tuple(names[i] for i in paths[0]), float(best[0])


def _entropy_terms(logp: np.ndarray, axis: int) -> np.ndarray:
    """-sum p log2 p along ``axis`` for log2-probabilities (``-inf`` entries contribute 0)."""
    finite = np.isfinite(logp)
    safe = np.where(finite, logp, 0.0)
    return -(np.where(finite, np.exp2(safe) * safe, 0.0)).sum(axis=axis)


def posterior_path_entropy_batch(chain: MarkovChain, colors: np.ndarray,
                                 start: Optional[str] = None) -> np.ndarray:
    """Exact H(X_[T] | Y_[T] = y) in bits per row.

    The posterior over paths is itself a (time-inhomogeneous) Markov chain,
    so its entropy is H(X_1 | y) + sum_t H(X_{t+1} | X_t, y), with the
    conditional transition laws read off the backward variables.
    Rows with p(y) = 0 yield ``nan``.
    """
    colors = _check_batch(colors)
    logP = chain.log2_P
    mask = chain.emission_mask
    beta = _backward(chain, colors)
    alpha = _log_init(chain, colors[:, 0], start)
    logZ = np.logaddexp2.reduce(alpha + beta[0], axis=1)
    possible = np.isfinite(logZ)
    logZ_safe = np.where(possible, logZ, 0.0)

    gamma_log = alpha + beta[0] - logZ_safe[:, None]
    total = _entropy_terms(gamma_log, axis=1)
    T = colors.shape[1]
    for t in range(T - 1):
        nxt = mask[colors[:, t + 1]] + beta[t + 1]
        with np.errstate(invalid="ignore"):
            cond = logP[None] + nxt[:, None, :] - beta[t][:, :, None]
        live = np.isfinite(beta[t])
        cond = np.where(live[:, :, None], cond, -np.inf)
        h = _entropy_terms(cond, axis=2)
        weight = np.exp2(gamma_log)
        total = total + (weight * h).sum(axis=1)
        alpha = np.logaddexp2.reduce(alpha[:, :, None] + logP[None], axis=1) + mask[colors[:, t + 1]]
        gamma_log = alpha + beta[t + 1] - logZ_safe[:, None]
    return np.where(possible, total, np.nan)


def posterior_path_entropy(chain: MarkovChain, colors: Sequence[str],
                           start: Optional[str] = None) -> float:
    if len(colors) == 0:
        raise WeakModelError("color sequence is empty")
    h = posterior_path_entropy_batch(chain, encode_colors(chain, colors)[None], start)[0]
    if np.isnan(h):
        raise WeakModelError("color sequence has probability zero")
    return float(max(h, 0.0))


# -- entropy rates -----------------------------------------------------------------


def markov_entropy_rate(chain: MarkovChain, members) -> float:
    """Entropy rate in bits/step of the chain run inside a recurrent class."""
    pi = stationary_distribution(chain, members)
    return float(sum(p * chain.row_entropy[chain.node(n)] for n, p in pi.items()))


def path_entropy(chain: MarkovChain, T: int, start: Optional[str] = None) -> float:
    """Exact H(X_[T]) in bits for a walk of ``T`` nodes.

    The walk starts at ``start`` or, without one, uniformly at random.
    """
    n = len(chain.model.nodes)
    if start is None:
        p = np.full(n, 1.0 / n)
        h = float(np.log2(n))
    else:
        p = np.zeros(n)
        p[chain.node(start)] = 1.0
        h = 0.0
    rows = chain.row_entropy
    for _ in range(T - 1):
        h += float(p @ rows)
        p = p @ chain.P
    return h
