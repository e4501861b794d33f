import pytest

from archgen.errors import ArchgenError

from archgen.candidates import (
    ArchitectureCandidate,
    Component,
    DecisionRecord,
    Dependency,
    EVENT_BUS,
    MalformedRecord,
    RecordStatus,
    Style,
    UnmappedConcept,
    adr_filename,
    attach_traces,
    component_name,
    enumerate_candidates,
    merged_groups,
    parse_adr,
    trace_scenario,
    write_adr,
)
from archgen.context_cutter import cut_contexts
from archgen.requirements import parse_requirements

from conftest import make_model, make_scenario


def reqs_from(items):
    return parse_requirements([("doc.md", "".join(f"- [{i}] {t}\n" for i, t in items))])


SIMPLE_REQS = reqs_from([("FR-1", "functional thing"), ("NFR-1", "low latency always")])


def clustered_model():
    """Two clear clusters bridged by a single association."""
    return make_model(
        ["A1", "A2", "A3", "B1", "B2", "B3"],
        [
            ("A1", "A2", "association"),
            ("A2", "A3", "association"),
            ("A1", "A3", "association"),
            ("B1", "B2", "association"),
            ("B2", "B3", "association"),
            ("B1", "B3", "association"),
            ("A3", "B1", "association", "asks"),
        ],
    )


def make_candidates(model=None, reqs=SIMPLE_REQS, merge_threshold=3.0):
    model = model or clustered_model()
    cut = cut_contexts(model)
    return enumerate_candidates(cut, model, reqs, merge_threshold=merge_threshold), model, cut


class TestEnumeration:
    def test_three_candidates_without_merge(self):
        candidates, _, _ = make_candidates()
        assert [c.id for c in candidates] == ["c1", "c2", "c3"]
        assert [c.style for c in candidates] == [
            Style.MODULAR_MONOLITH,
            Style.MICROSERVICES_SYNC,
            Style.MICROSERVICES_EVENT,
        ]

    def test_component_named_for_smallest_concept(self):
        assert component_name({"Zulu", "Alpha"}) == "comp_Alpha"

    def test_components_partition_concepts(self):
        candidates, model, _ = make_candidates()
        universe = set(model.concepts)
        for candidate in candidates:
            owned = [c for comp in candidate.components for c in comp.owned_concepts]
            assert sorted(owned) == sorted(universe)

    def test_event_candidate_has_bus_owning_nothing(self):
        candidates, _, _ = make_candidates()
        c3 = candidates[2]
        bus = next(c for c in c3.components if c.name == EVENT_BUS)
        assert not bus.owned_concepts
        assert not bus.owned_contexts

    def test_merge_appears_at_threshold(self):
        # bridge weight is 1.0; with threshold 1.0 the merged variant appears
        candidates, _, _ = make_candidates(merge_threshold=1.0)
        assert [c.id for c in candidates] == ["c1", "c2", "c3", "c4"]
        c4 = candidates[3]
        assert c4.style is Style.MICROSERVICES_SYNC
        assert len(c4.components) == 1

    def test_merged_groups_none_below_threshold(self):
        model = clustered_model()
        cut = cut_contexts(model)
        assert merged_groups(cut, model, merge_threshold=3.0) is None

    def test_merged_groups_unions_contexts(self):
        model = clustered_model()
        cut = cut_contexts(model)
        groups = merged_groups(cut, model, merge_threshold=1.0)
        assert groups is not None
        assert len(groups) == 1
        assert len(groups[0]) == 2

    def test_each_candidate_has_three_adrs(self):
        candidates, _, _ = make_candidates()
        for candidate in candidates:
            assert [r.id for r in candidate.adrs] == [1, 2, 3]
            for record in candidate.adrs:
                assert record.status is RecordStatus.PROPOSED
                assert any(o.endswith("(chosen)") for o in record.considered_options)

    def test_adr_titles_follow_style(self):
        candidates, _, _ = make_candidates(merge_threshold=1.0)
        by_id = {c.id: c for c in candidates}
        assert by_id["c1"].adrs[0].title == "Adopt a modular monolith"
        assert by_id["c2"].adrs[0].title == "Adopt synchronous microservices"
        assert by_id["c3"].adrs[0].title == "Adopt event-driven microservices"
        assert by_id["c4"].adrs[1].title == "Merge tightly coupled contexts"
        assert by_id["c2"].adrs[1].title == "Cut components along bounded contexts"


class TestDependencies:
    def test_cross_component_relation_becomes_dependency(self):
        candidates, _, _ = make_candidates()
        c2 = candidates[1]
        assert any(
            d.source == "comp_A1" and d.target == "comp_B1" and d.via == "asks"
            for d in c2.dependencies
        )

    def test_internal_relations_produce_no_dependencies(self):
        model = make_model(["A", "B"], [("A", "B", "association")])
        candidates, _, _ = make_candidates(model=model)
        c1 = candidates[0]
        if len(c1.components) == 1:
            assert c1.dependencies == []

    def test_unlabeled_relation_uses_kind_as_via(self):
        model = make_model(
            ["A1", "A2", "B1", "B2"],
            [
                ("A1", "A2", "association"),
                ("B1", "B2", "association"),
                ("A1", "B1", "composition"),
            ],
        )
        candidates, _, _ = make_candidates(model=model)
        c2 = candidates[1]
        if len(c2.components) > 1:
            assert any(d.via == "composition" for d in c2.dependencies)

    def test_event_style_routes_through_bus(self):
        candidates, _, _ = make_candidates()
        c3 = candidates[2]
        assert all(d.source == EVENT_BUS or d.target == EVENT_BUS for d in c3.dependencies)
        assert any(d.via == "evt:asks" for d in c3.dependencies)

    def test_provided_interfaces_from_incoming_edges(self):
        candidates, _, _ = make_candidates()
        c2 = candidates[1]
        target = next(c for c in c2.components if c.name == "comp_B1")
        assert "i_asks" in target.provided_interfaces


class TestValidation:
    def base_component(self):
        return Component(
            name="comp_A",
            owned_contexts=frozenset({"ctx_A"}),
            owned_concepts=frozenset({"A"}),
        )

    def test_duplicate_component_names_rejected(self):
        candidate = ArchitectureCandidate(
            id="cX",
            style=Style.MODULAR_MONOLITH,
            components=[self.base_component(), self.base_component()],
        )
        with pytest.raises(ArchgenError, match="duplicate"):
            candidate.validate({"A"})

    def test_nonpartition_rejected(self):
        candidate = ArchitectureCandidate(
            id="cX", style=Style.MODULAR_MONOLITH, components=[self.base_component()]
        )
        with pytest.raises(ArchgenError, match="partition"):
            candidate.validate({"A", "Missing"})

    def test_dangling_dependency_rejected(self):
        candidate = ArchitectureCandidate(
            id="cX",
            style=Style.MODULAR_MONOLITH,
            components=[self.base_component()],
            dependencies=[Dependency("comp_A", "comp_Ghost", "x")],
        )
        with pytest.raises(ArchgenError, match="comp_Ghost"):
            candidate.validate({"A"})

    def test_round_trip_to_dict(self):
        candidates, _, _ = make_candidates()
        for candidate in candidates:
            clone = ArchitectureCandidate.from_dict(candidate.to_dict())
            assert clone.to_dict() == candidate.to_dict()


class TestTraces:
    def test_trace_collapses_consecutive_duplicates(self):
        candidates, _, _ = make_candidates()
        c2 = candidates[1]
        scenario = make_scenario("UC-1", [["A1", "A2"], ["A3", "B1"]])
        trace = trace_scenario(c2, scenario)
        assert trace.component_sequence == ("comp_A1", "comp_B1")
        assert trace.hops == 1

    def test_monolith_trace_within_one_component(self):
        model = make_model(["A", "B"], [("A", "B", "association")])
        candidates, _, _ = make_candidates(model=model)
        c1 = candidates[0]
        scenario = make_scenario("UC-1", [["A"], ["B"], ["A"]])
        trace = trace_scenario(c1, scenario)
        if len(c1.components) == 1:
            assert trace.hops == 0
            assert len(trace.component_sequence) == 1

    def test_event_style_doubles_hops_via_bus(self):
        candidates, _, _ = make_candidates()
        c2, c3 = candidates[1], candidates[2]
        scenario = make_scenario("UC-1", [["A1"], ["B1"], ["A2"]])
        sync_trace = trace_scenario(c2, scenario)
        event_trace = trace_scenario(c3, scenario)
        assert sync_trace.hops == 2
        assert event_trace.hops == 4
        assert EVENT_BUS in event_trace.component_sequence

    def test_unmapped_concept_raises(self):
        candidates, _, _ = make_candidates()
        scenario = make_scenario("UC-1", [["Nowhere"]])
        with pytest.raises(UnmappedConcept) as exc:
            trace_scenario(candidates[0], scenario)
        assert exc.value.name == "Nowhere"

    def test_attach_traces_skips_unmapped_with_warning(self):
        candidates, _, _ = make_candidates()
        good = make_scenario("UC-1", [["A1"]])
        bad = make_scenario("UC-2", [["Nowhere"]])
        warnings = attach_traces(candidates[0], [good, bad])
        assert [t.scenario_id for t in candidates[0].traces] == ["UC-1"]
        assert len(warnings) == 1
        assert "trace skipped" in warnings[0]


class TestDecisionRecords:
    def record(self):
        return DecisionRecord(
            id=7,
            title="Choose the answer",
            status=RecordStatus.PROPOSED,
            context="Some context prose.",
            decision="We choose option one.",
            considered_options=("option one (chosen)", "option two"),
            consequences="It has consequences.",
        )

    def test_filename_slug(self):
        assert adr_filename(self.record()) == "0007-choose-the-answer.md"

    def test_write_parse_round_trip(self):
        record = self.record()
        assert parse_adr(write_adr(record), record.id) == record

    def test_parse_rejects_missing_section(self):
        text = write_adr(self.record()).replace("## Consequences", "## Conclusions")
        with pytest.raises(MalformedRecord):
            parse_adr(text, 7)

    def test_parse_rejects_bad_status(self):
        text = write_adr(self.record()).replace("proposed", "undecided")
        with pytest.raises(MalformedRecord):
            parse_adr(text, 7)

    def test_parse_rejects_missing_title(self):
        with pytest.raises(MalformedRecord):
            parse_adr("## Status\n\nproposed\n", 7)

    def test_multiline_sections_survive(self):
        record = DecisionRecord(
            id=1,
            title="T",
            status=RecordStatus.ACCEPTED,
            context="Line one.\n\nLine two.",
            decision="d",
            considered_options=("a (chosen)", "b"),
            consequences="c",
        )
        assert parse_adr(write_adr(record), 1) == record
