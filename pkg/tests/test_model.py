import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import FIXTURE_NAMES, brute_hypotheses, random_model
from weakmodels import (
    ParseError,
    WeakModel,
    WeakModelError,
    load_fixture,
    parse_model,
    serialize_model,
    to_single_colored,
)
from weakmodels.fixtures import fixture_text

FIG5A_TEXT = """\
weakmodel v1
# a comment line
colors B R
node a B
node b R   # trailing comment
node c B
edge a b
edge b c
edge c a
start a
"""


def test_parse_basic_model():
    m = parse_model(FIG5A_TEXT)
    assert m.nodes == ("a", "b", "c")
    assert m.palette == ("B", "R")
    assert m.edges == (("a", "b"), ("b", "c"), ("c", "a"))
    assert m.start == "a"
    assert m.is_single_colored
    assert m.labels == (0, 1, 0)


def test_fig4_shape():
    m = load_fixture("FIG4")
    assert len(m.nodes) == 10
    assert len(m.edges) == 12


def test_fig1_is_multicolored():
    m = load_fixture("FIG1")
    assert not m.is_single_colored
    assert m.colors_of("b") == ("B", "R")
    with pytest.raises(WeakModelError):
        m.color("b")


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_round_trip(name):
    m = load_fixture(name)
    assert parse_model(serialize_model(m)) == m


def test_probabilities_parse_and_serialize_exactly():
    m = load_fixture("FIG8S-P")
    out_of_a = [p for (u, _), p in zip(m.edges, m.probabilities) if u == "a"]
    assert sum(out_of_a) == pytest.approx(1.0, abs=1e-15)
    again = parse_model(serialize_model(m))
    assert again.probabilities == m.probabilities


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("", None, "empty"),
        ("weakmodel v2\n", 1, "header"),
        ("weakmodel v1\nnode a B\n", 2, "out of order"),
        ("weakmodel v1\ncolors B\nnode a R\n", 3, "undeclared color"),
        ("weakmodel v1\ncolors B\nnode a B\nnode a B\n", 4, "duplicate node"),
        ("weakmodel v1\ncolors B B\n", 2, "duplicate color"),
        ("weakmodel v1\ncolors B\nnode a B\nedge a z\n", 4, "undeclared node"),
        ("weakmodel v1\ncolors B\nnode a B\nedge a a\nedge a a\n", 5, "duplicate edge"),
        ("weakmodel v1\ncolors B\nnode a B\nstart q\n", 4, "undeclared node"),
        ("weakmodel v1\ncolors B\nnode a__x B\n", 3, "reserved"),
        ("weakmodel v1\ncolors B\nnode a B\nedge a a 1/2\n", 4, "malformed probability"),
        ("weakmodel v1\ncolors B\nnode a B\nnode b B\nedge a b 1.0\nedge b a\n", 6, "all edges"),
        ("weakmodel v1\ncolors B\nnode a B\nedge a a\nnode b B\n", 5, "out of order"),
        ("weakmodel v1\ncolors B\nnode a B\nfrobnicate\n", 4, "unknown directive"),
        ("weakmodel v1\ncolors B\n", None, "no nodes"),
        ("weakmodel v1\ncolors B\nnode a-b B\n", 3, "invalid node id"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ParseError) as info:
        parse_model(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    if line is not None:
        assert str(info.value).startswith(f"line {line}: ")


def test_build_and_validation():
    m = WeakModel.build({"a": "B", "b": ("R", "B")}, [("a", "b")])
    assert m.palette == ("B", "R")
    assert m.coloring == (("B",), ("B", "R"))
    with pytest.raises(WeakModelError):
        WeakModel.build({"a": "B"}, [("a", "z")])
    with pytest.raises(WeakModelError):
        WeakModel.build({"a": "B"}, [("a", "a")], probabilities={("a", "b"): 1.0})
    with pytest.raises(WeakModelError):
        WeakModel((), ("B",), ())


def test_with_probabilities_and_start():
    m = WeakModel.build({"a": "B", "b": "R"}, [("a", "b"), ("b", "a")])
    p = m.with_probabilities({("a", "b"): 1.0, ("b", "a"): 1.0}).with_start("b")
    assert p.edge_probabilities() == {("a", "b"): 1.0, ("b", "a"): 1.0}
    assert p.start == "b"
    with pytest.raises(WeakModelError, match="missing"):
        m.with_probabilities({("a", "b"): 1.0})


# -- multi-colored transform ------------------------------------------------------


def test_transform_fig1():
    m = load_fixture("FIG1")
    single, mapping = to_single_colored(m)
    assert single.is_single_colored
    assert set(single.nodes) == {"a", "b__B", "b__R", "c"}
    assert mapping.forward["b"] == ("b__B", "b__R")
    assert mapping.backward["b__R"] == ("b", "R")
    # b -> b becomes four edges, a -> b and b -> c two each
    assert len(single.edges) == 4 + 2 + 2 + 1
    assert mapping.to_original(["a", "b__R", "b__B", "c"]) == ("a", "b", "b", "c")


def test_transform_keeps_single_colored_ids():
    m = load_fixture("FIG5A")
    single, mapping = to_single_colored(m)
    assert single.nodes == m.nodes
    assert set(single.edges) == set(m.edges)
    assert all(mapping.forward[v] == (v,) for v in m.nodes)


def test_transform_maps_start_and_drops_probabilities():
    m = WeakModel.build({"a": ("B", "R"), "b": "B"}, [("a", "b"), ("b", "a")], start="b",
                        probabilities={("a", "b"): 1.0, ("b", "a"): 1.0})
    single, mapping = to_single_colored(m)
    assert single.start == "b"
    assert single.probabilities is None
    m2 = m.with_start("a")
    single2, mapping2 = to_single_colored(m2)
    assert single2.start is None
    assert mapping2.start_nodes == ("a__B", "a__R")


def _transformed_hypotheses(model, colors):
    single, mapping = to_single_colored(model)
    return sorted({mapping.to_original(h) for h in brute_hypotheses(single, colors)})


@pytest.mark.parametrize("length", range(1, 7))
def test_transform_preserves_hypotheses_fig1(length):
    m = load_fixture("FIG1")
    for colors in itertools.product(m.palette, repeat=length):
        assert _transformed_hypotheses(m, colors) == sorted(brute_hypotheses(m, colors))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), data=st.data())
def test_transform_soundness_on_random_multicolored(seed, data):
    base = random_model(seed, n_range=(3, 5))
    # give some nodes a second color
    extra = data.draw(st.lists(st.booleans(), min_size=len(base.nodes), max_size=len(base.nodes)))
    colors = {}
    for node, cs, more in zip(base.nodes, base.coloring, extra):
        other = [c for c in base.palette if c not in cs]
        colors[node] = cs + (other[0],) if more and other else cs
    m = WeakModel.build(colors, base.edges, palette=base.palette)
    single, _ = to_single_colored(m)
    sizes = [len(cs) for cs in m.coloring]
    assert len(single.nodes) == sum(sizes)
    assert len(single.edges) == sum(sizes[m.index[u]] * sizes[m.index[v]] for u, v in m.edges)
    length = data.draw(st.integers(1, 5))
    colors_seq = data.draw(st.lists(st.sampled_from(m.palette), min_size=length, max_size=length))
    assert _transformed_hypotheses(m, colors_seq) == sorted(brute_hypotheses(m, colors_seq))


# -- round trip on arbitrary models --------------------------------------------------------

tokens = st.from_regex(r"[A-Za-z][A-Za-z0-9]{0,4}", fullmatch=True)


@st.composite
def models(draw):
    palette = draw(st.lists(tokens, min_size=1, max_size=3, unique=True))
    nodes = draw(st.lists(tokens, min_size=1, max_size=6, unique=True))
    colors = {n: tuple(draw(st.lists(st.sampled_from(palette), min_size=1,
                                     max_size=len(palette), unique=True))) for n in nodes}
    pairs = list(itertools.product(nodes, nodes))
    edges = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=12))
    start = draw(st.one_of(st.none(), st.sampled_from(nodes)))
    model = WeakModel.build(colors, edges, palette=palette, start=start)
    if edges and draw(st.booleans()):
        probs = {e: draw(st.floats(0.001, 1.0)) for e in edges}
        model = model.with_probabilities(probs)
    return model


@settings(max_examples=150, deadline=None)
@given(models())
def test_round_trip_property(model):
    text = serialize_model(model)
    assert parse_model(text) == model
    assert serialize_model(parse_model(text)) == text


def test_fixture_text_unknown():
    with pytest.raises(KeyError):
        fixture_text("NOPE")
