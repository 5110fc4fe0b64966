"""Scenario file schema: parsing, positioned errors, round-trips."""

import dataclasses

from hypothesis import given, settings
from hypothesis import strategies as st

from bpsim.control import ControllerConfig
from bpsim.dynamics import ArrivalProcess, RoutingSpec
from bpsim.engine import (
    Scenario,
    fixture_deadlock_ring,
    fixture_grid4x4_peak,
    fixture_theorem1,
    run,
)
from bpsim.scenario import (
    ParseIssue,
    canonical_fixtures,
    parse_scenario,
    serialize_scenario,
)
from bpsim.topology import JunctionSpec, LinkSpec, NetworkTopology, NodeSpec, PhaseSpec

MINIMAL = """
version: 1
name: minimal
topology:
  nodes:
    - {id: a, C: 10, boundary: true}
    - {id: b, C: 10}
  links:
    - {from: a, to: b, junction: J}
  junctions:
    - id: J
      inputs: [a]
      outputs: [b]
      phases:
        - {id: go, mu: {"a>b": 1}}
controllers:
  all: {kind: back-pressure, pressure: {kind: linear}}
run:
  horizon: 5
  seed: 0
"""


def test_minimal_document_parses():
    result = parse_scenario(MINIMAL)
    assert result.ok, [str(i) for i in result.issues]
    s = result.document.scenario
    assert s.name == "minimal"
    assert s.horizon == 5
    assert s.topology.capacity("a") == 10
    assert s.arrivals.rates == {}
    trace = run(s)
    assert len(trace.rows) == 5


def test_yaml_syntax_error_carries_position():
    result = parse_scenario("version: 1\ntopology: [unclosed\n  junk: {")
    assert result.document is None
    assert len(result.issues) == 1
    issue = result.issues[0]
    assert issue.line is not None and issue.column is not None
    assert "YAML" in issue.message
    assert "line" in str(issue)


def test_non_mapping_document_rejected():
    result = parse_scenario("- just\n- a\n- list\n")
    assert result.document is None
    assert "mapping" in result.issues[0].message


def test_routing_oversum_names_the_node():
    text = MINIMAL + "routing:\n  r: {\"a>b\": 1.2}\n"
    result = parse_scenario(text)
    assert result.document is None
    assert any("'a'" in i.message and "sum" in i.message for i in result.issues)
    assert any(i.path == "routing.r" for i in result.issues)


def test_unknown_fields_rejected():
    result = parse_scenario(MINIMAL + "extra_section: 1\n")
    assert result.document is None
    assert any(i.path == "extra_section" and "unknown field" in i.message for i in result.issues)

    bad_run = MINIMAL.replace("  seed: 0", "  seed: 0\n  frobnicate: 2")
    result = parse_scenario(bad_run)
    assert any(i.path == "run.frobnicate" for i in result.issues)


def test_version_checked():
    result = parse_scenario(MINIMAL.replace("version: 1", "version: 2"))
    assert result.document is None
    assert any(i.path == "version" for i in result.issues)


def test_node_id_with_separator_rejected():
    text = MINIMAL.replace("{id: a, C: 10, boundary: true}", "{id: \"a>x\", C: 10}")
    result = parse_scenario(text)
    assert result.document is None
    assert any(">" in i.message and i.path.startswith("topology.nodes") for i in result.issues)


def test_semantic_issue_for_arrivals_at_interior_node():
    text = MINIMAL + "arrivals:\n  lambda: {b: 1.0}\n"
    result = parse_scenario(text)
    assert result.document is None
    assert any(i.path == "arrivals.lambda" and "is_boundary" in i.message for i in result.issues)


def test_controllers_require_exactly_one_style():
    text = MINIMAL.replace(
        "controllers:\n  all: {kind: back-pressure, pressure: {kind: linear}}",
        "controllers: {}",
    )
    result = parse_scenario(text)
    assert any(i.path == "controllers" for i in result.issues)


def test_bad_cycle_entry_reports_its_index():
    text = MINIMAL.replace(
        "  all: {kind: back-pressure, pressure: {kind: linear}}",
        "  all: {kind: fixed-cycle, cycle: [[go, 1], [go]]}",
    )
    result = parse_scenario(text)
    assert result.document is None
    assert any("cycle[1]" in i.path for i in result.issues)


def test_unknown_pressure_kind_rejected():
    text = MINIMAL.replace("{kind: linear}", "{kind: cubic}")
    result = parse_scenario(text)
    assert any(i.path.endswith("pressure.kind") for i in result.issues)


def test_grid_directive_expands():
    text = """
version: 1
name: grid
topology:
  grid: {rows: 2, cols: 2, lane_pattern: [1], road_length_m: 150.0}
controllers:
  all: {kind: capacity-aware, pressure: {kind: normalized, m: 2, C_inf: 200}}
run: {horizon: 3, seed: 1}
"""
    result = parse_scenario(text)
    assert result.ok, [str(i) for i in result.issues]
    topo = result.document.scenario.topology
    assert len(topo.junctions) == 4
    assert all(topo.capacity(n.id) == 20 for n in topo.nodes)


def test_grid_directive_rejects_unknown_fields():
    text = """
version: 1
topology:
  grid: {rows: 2, cols: 2, diagonal: true}
controllers:
  all: {kind: back-pressure, pressure: {kind: linear}}
run: {horizon: 1, seed: 0}
"""
    result = parse_scenario(text)
    assert any(i.path == "topology.grid.diagonal" for i in result.issues)


def test_parse_issue_renders_path_first():
    issue = ParseIssue(path="run.horizon", message="boom")
    assert str(issue).startswith("run.horizon:")


def test_canonical_fixtures_match_builders():
    fixtures = canonical_fixtures()
    assert set(fixtures) == {"theorem1", "deadlock_ring", "grid4x4_peak"}
    builders = {
        "theorem1": fixture_theorem1,
        "deadlock_ring": fixture_deadlock_ring,
        "grid4x4_peak": fixture_grid4x4_peak,
    }
    for name, text in fixtures.items():
        assert text.startswith("#")  # provenance notes ride along as comments
        result = parse_scenario(text)
        assert result.ok, (name, [str(i) for i in result.issues])
        assert result.document.scenario == builders[name]()


def test_canonical_ring_is_a_fixed_point_for_50_slots():
    text = canonical_fixtures()["deadlock_ring"]
    s = parse_scenario(text).document.scenario
    trace = run(dataclasses.replace(s, horizon=50))
    assert all(r.served_flow == 0 for r in trace.rows)


def test_canonical_grid_runs_under_all_controllers():
    s = parse_scenario(canonical_fixtures()["grid4x4_peak"]).document.scenario
    for label in ("fc", "bp", "bpc"):
        trace = run(s.with_controller(label))
        assert len(trace.rows) == 720


def test_round_trip_fixtures():
    for text in canonical_fixtures().values():
        first = parse_scenario(text)
        again = parse_scenario(serialize_scenario(first.document))
        assert again.ok
        assert again.document == first.document


@st.composite
def small_scenarios(draw):
    mu = draw(st.integers(min_value=1, max_value=5))
    cap_a = draw(st.integers(min_value=5, max_value=50))
    cap_b = draw(st.integers(min_value=5, max_value=50))
    topology = NetworkTopology(
        nodes=(NodeSpec("a", cap_a, is_boundary=True), NodeSpec("b", cap_b)),
        links=(LinkSpec("a", "b", "J"),),
        junctions=(
            JunctionSpec("J", ("a",), ("b",), (PhaseSpec("go", {("a", "b"): mu}),)),
        ),
    )
    style = draw(st.sampled_from(["fc", "bp", "bpc", "per_junction"]))
    if style == "fc":
        controllers = ControllerConfig.fixed_cycle()
    elif style == "bp":
        controllers = ControllerConfig.back_pressure()
    elif style == "bpc":
        controllers = ControllerConfig.capacity_aware(
            m=draw(st.sampled_from([2.0, 4.0])), c_infinity=200.0
        )
    else:
        controllers = {"J": ControllerConfig.fixed_cycle((("go", 2),))}
    rate = draw(st.floats(min_value=0.0, max_value=2.0, allow_nan=False))
    profile = draw(st.none() | st.lists(st.sampled_from([0.5, 1.0, 1.5]), min_size=1, max_size=4))
    initial = draw(st.integers(min_value=0, max_value=4))
    return Scenario(
        name=draw(st.sampled_from(["s1", "fuzzed", "x"])),
        topology=topology,
        arrivals=ArrivalProcess(rates={"a": rate}, kind="poisson", profile=profile),
        routing=RoutingSpec({("a", "b"): draw(st.sampled_from([0.0, 0.5, 1.0]))}),
        controllers=controllers,
        horizon=draw(st.integers(min_value=1, max_value=50)),
        seed=draw(st.integers(min_value=0, max_value=9)),
        initial_counts={("a", "b"): initial} if initial else {},
    )


@settings(max_examples=60, deadline=None)
@given(small_scenarios())
def test_round_trip_fuzzed_documents(scenario):
    text = serialize_scenario(scenario)
    result = parse_scenario(text)
    assert result.ok, [str(i) for i in result.issues]
    assert result.document.scenario == scenario
    again = parse_scenario(serialize_scenario(result.document))
    assert again.document == result.document
