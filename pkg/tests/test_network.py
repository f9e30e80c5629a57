import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wardrop.costs import Affine, Constant, Monomial, StepGeometric
from wardrop.errors import DomainError, GameError
from wardrop.network import (
    Edge,
    FlowProfile,
    Network,
    build_parallel,
    edge_flows,
    load_network,
    network_from_spec,
    network_to_spec,
    social_cost,
    social_cost_log,
    social_cost_path_form,
)


def _series_parallel():
    """Two parallel edges into a shared tail edge: P1={e1,e3}, P2={e2,e3}."""
    return Network(
        ("s", "v", "t"),
        (Edge("e1", "s", "v"), Edge("e2", "s", "v"), Edge("e3", "v", "t")),
        (Affine(0.0, 1.0), Constant(1.0), Affine(0.0, 1.0)),
        "s",
        "t",
    )


def test_build_parallel_examples():
    net = build_parallel([Affine(0.0, 1.0), Constant(1.0)])
    assert net.n_paths == 2
    assert all(len(p) == 1 for p in net.paths)

    single = build_parallel([Affine(0.0, 1.0)])
    assert single.n_paths == 1
    f = FlowProfile((4.0,), 4.0)
    assert edge_flows(single, f).tolist() == [4.0]

    three = build_parallel([Constant(1.0), Constant(2.0), Constant(3.0)])
    flows = FlowProfile((1.0, 2.0, 3.0), 6.0)
    assert edge_flows(three, flows).tolist() == [1.0, 2.0, 3.0]


def test_build_parallel_rejects_empty():
    with pytest.raises(DomainError):
        build_parallel([])


def test_edge_flows_examples():
    net = build_parallel([Affine(0.0, 1.0), Constant(1.0)])
    assert edge_flows(net, FlowProfile((3.0, 4.0), 7.0)).tolist() == [3.0, 4.0]

    sp = _series_parallel()
    x = edge_flows(sp, FlowProfile((1.0, 2.0), 3.0))
    assert x.tolist() == [1.0, 2.0, 3.0]  # shared edge carries the sum

    assert edge_flows(net, FlowProfile((0.0, 0.0), 0.0)).tolist() == [0.0, 0.0]


def test_edge_flows_dimension_mismatch():
    net = build_parallel([Affine(0.0, 1.0), Constant(1.0)])
    with pytest.raises(DomainError):
        edge_flows(net, FlowProfile((1.0,), 1.0))


def test_flow_profile_feasibility():
    with pytest.raises(DomainError):
        FlowProfile((1.0, 1.0), 3.0)
    with pytest.raises(DomainError):
        FlowProfile((-0.5, 1.5), 1.0)
    assert FlowProfile.of([0.25, 0.75]).total == 1.0


def test_social_cost_examples():
    net = build_parallel([Affine(0.0, 1.0), Constant(1.0)])
    assert social_cost(net, FlowProfile((0.5, 0.5), 1.0)) == pytest.approx(0.75)
    assert social_cost(net, FlowProfile((1.0, 0.0), 1.0)) == pytest.approx(1.0)
    assert social_cost(net, FlowProfile((0.0, 0.0), 0.0)) == 0.0


@settings(max_examples=30)
@given(st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=2, max_size=2))
def test_edge_and_path_form_agree(flows):
    net = build_parallel([Affine(1.0, 2.0), Monomial(1.0, 2.0)])
    f = FlowProfile.of(flows)
    edge_form = social_cost(net, f)
    path_form = social_cost_path_form(net, f)
    assert edge_form == pytest.approx(path_form, rel=1e-12, abs=1e-12)


def test_edge_and_path_form_agree_on_shared_edge():
    sp = _series_parallel()
    f = FlowProfile((1.25, 2.5), 3.75)
    assert social_cost(sp, f) == pytest.approx(social_cost_path_form(sp, f), rel=1e-12)


def test_edge_flows_linear():
    sp = _series_parallel()
    f = np.array([1.0, 2.0])
    g = np.array([0.5, 3.0])
    a, b = 2.0, 0.25
    combo = edge_flows(sp, FlowProfile.of(a * f + b * g))
    parts = a * edge_flows(sp, FlowProfile.of(f)) + b * edge_flows(sp, FlowProfile.of(g))
    assert np.allclose(combo, parts, rtol=1e-12)


def test_social_cost_log_matches_linear():
    net = build_parallel([Affine(0.0, 1.0), StepGeometric(2.0)])
    f = FlowProfile((3.0, 2.0), 5.0)
    assert social_cost_log(net, f).to_float() == pytest.approx(
        social_cost(net, f), rel=1e-12
    )


def test_parallel_path_count_matches_edges():
    for n in (1, 2, 5, 9):
        net = build_parallel([Constant(float(i + 1)) for i in range(n)])
        assert net.n_paths == n
        assert net.is_parallel()


def test_diamond_enumeration_and_cycle_rejection():
    net = Network(
        ("s", "a", "b", "t"),
        (
            Edge("sa", "s", "a"),
            Edge("sb", "s", "b"),
            Edge("ab", "a", "b"),
            Edge("ba", "b", "a"),  # would close a cycle
            Edge("at", "a", "t"),
            Edge("bt", "b", "t"),
        ),
        tuple(Constant(1.0) for _ in range(6)),
        "s",
        "t",
    )
    labels = {tuple(net.edges[e].id for e in p) for p in net.paths}
    assert labels == {
        ("sa", "at"),
        ("sa", "ab", "bt"),
        ("sb", "bt"),
        ("sb", "ba", "at"),
    }


def test_no_path_is_an_error():
    with pytest.raises(GameError):
        Network(("s", "t", "u"), (Edge("e", "s", "u"),), (Constant(1.0),), "s", "t")


def test_json_round_trip(tmp_path):
    net = build_parallel([Affine(1.0, 2.0), StepGeometric(2.0)])
    spec = network_to_spec(net)
    again = network_from_spec(json.loads(json.dumps(spec)))
    assert again.vertices == net.vertices
    assert again.costs == net.costs
    assert again.paths == net.paths

    path = tmp_path / "net.json"
    path.write_text(json.dumps(spec))
    assert load_network(str(path)).costs == net.costs


def test_json_missing_field():
    with pytest.raises(DomainError):
        network_from_spec({"vertices": ["s", "t"], "edges": [], "source": "s"})
