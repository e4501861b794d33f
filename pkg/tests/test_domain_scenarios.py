import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archgen.domain_scenarios import (
    Concept,
    DomainModel,
    InvalidModel,
    MissingDelimiters,
    ModelSyntaxError,
    Relation,
    RelationKind,
    emit_plantuml,
    model_diff,
    parse_domain_model,
    scenarios_from_payload,
    scenarios_to_json,
    validate,
)
from archgen.requirements import parse_requirements

from conftest import make_model, make_scenario


class TestParsing:
    def test_minimal_model(self):
        result = parse_domain_model("@startuml\nclass Order\n@enduml\n")
        assert result.model.concept_names() == ["Order"]
        assert result.warnings == []

    def test_all_relation_kinds(self):
        text = (
            "@startuml\n"
            "class A\nclass B\nclass C\nclass D\nclass E\n"
            "A --> B : uses\n"
            "A o-- C\n"
            "A *-- D\n"
            "A <|-- E\n"
            "@enduml\n"
        )
        model = parse_domain_model(text).model
        kinds = {(r.source, r.target): r.kind for r in model.relations}
        assert kinds[("A", "B")] is RelationKind.ASSOCIATION
        assert kinds[("A", "C")] is RelationKind.AGGREGATION
        assert kinds[("A", "D")] is RelationKind.COMPOSITION
        # E specializes A: the relation runs from the child to the parent
        assert kinds[("E", "A")] is RelationKind.GENERALIZATION

    def test_label_captured(self):
        model = parse_domain_model(
            "@startuml\nclass A\nclass B\nA --> B : places order\n@enduml\n"
        ).model
        assert model.relations[0].label == "places order"

    def test_attribute_body_discarded_with_warning(self):
        result = parse_domain_model(
            "@startuml\nclass A {\n  +name: str\n  +rename()\n}\nclass B\nA --> B\n@enduml\n"
        )
        assert result.model.concept_names() == ["A", "B"]
        assert any("body" in w for w in result.warnings)

    def test_inline_empty_braces_accepted(self):
        result = parse_domain_model("@startuml\nclass A {}\n@enduml\n")
        assert result.model.concept_names() == ["A"]

    def test_undeclared_endpoint_auto_declared_with_warning(self):
        result = parse_domain_model("@startuml\nclass A\nA --> Ghost\n@enduml\n")
        assert "Ghost" in result.model.concept_names()
        assert any("Ghost" in w and "auto-declared" in w for w in result.warnings)

    def test_duplicate_class_warned_and_ignored(self):
        result = parse_domain_model("@startuml\nclass A\nclass A\n@enduml\n")
        assert result.model.concept_names() == ["A"]
        assert any("duplicate" in w.lower() for w in result.warnings)

    def test_missing_delimiters(self):
        with pytest.raises(MissingDelimiters):
            parse_domain_model("class A\n")

    def test_unparseable_line_reports_location(self):
        with pytest.raises(ModelSyntaxError) as exc:
            parse_domain_model("@startuml\nclass A\nA ~~> B\n@enduml\n")
        assert exc.value.line == 3

    def test_self_generalization_rejected_by_parser(self):
        with pytest.raises(ModelSyntaxError):
            parse_domain_model("@startuml\nclass A\nA <|-- A\n@enduml\n")

    def test_self_generalization_rejected_on_construction(self):
        with pytest.raises(InvalidModel):
            Relation("A", "A", RelationKind.GENERALIZATION)


class TestEmit:
    def test_canonical_layout(self):
        model = make_model(
            ["Zeta", "Alpha"],
            [("Zeta", "Alpha", "association", "uses")],
        )
        assert emit_plantuml(model) == (
            "@startuml\n"
            "class Alpha\n"
            "class Zeta\n"
            "\n"
            "Zeta --> Alpha : uses\n"
            "@enduml\n"
        )

    def test_no_blank_line_without_relations(self):
        model = make_model(["Solo"])
        assert emit_plantuml(model) == "@startuml\nclass Solo\n@enduml\n"

    def test_generalization_emitted_parent_first(self):
        model = make_model(["Child", "Parent"], [("Child", "Parent", "generalization")])
        assert "Parent <|-- Child" in emit_plantuml(model)

    def test_round_trip_fixed_point(self):
        text = (
            "@startuml\n"
            "class Car\nclass Engine\nclass Wheel\n"
            "Car *-- Engine\nCar o-- Wheel\nEngine --> Wheel : drives\n"
            "@enduml\n"
        )
        model = parse_domain_model(text).model
        emitted = emit_plantuml(model)
        assert parse_domain_model(emitted).model == model
        assert emit_plantuml(parse_domain_model(emitted).model) == emitted


names = st.sampled_from(
    ["Alpha", "Beta", "Gamma", "Delta", "Epsilon", "Zeta", "Eta", "Theta"]
)


@st.composite
def models(draw):
    concept_names = draw(st.lists(names, min_size=1, max_size=8, unique=True))
    model = DomainModel()
    for name in concept_names:
        model.add_concept(Concept(name))
    pairs = [(a, b) for a in concept_names for b in concept_names if a != b]
    if pairs:
        count = draw(st.integers(0, min(6, len(pairs))))
        for index in draw(st.lists(st.integers(0, len(pairs) - 1), min_size=count, max_size=count, unique=True)):
            source, target = pairs[index]
            kind = draw(st.sampled_from(list(RelationKind)))
            label = draw(st.none() | st.sampled_from(["uses", "has a part"]))
            relation = Relation(source, target, kind, label)
            if relation not in model.relations:
                model.add_relation(relation)
    return model


@given(models())
@settings(max_examples=60, deadline=None)
def test_parse_emit_round_trip_property(model):
    assert parse_domain_model(emit_plantuml(model)).model == model


class TestScenarioPayload:
    def test_round_trip(self):
        scenario = make_scenario(
            "UC-1", [["A", "B"], ["B"]], tags=("Performance",), linked=("FR-1",)
        )
        payload = scenarios_to_json([scenario])
        assert scenarios_from_payload(payload) == [scenario]

    def test_missing_steps_rejected(self):
        with pytest.raises(ValueError, match="steps"):
            scenarios_from_payload(
                {"scenarios": [{"id": "U", "title": "t", "actor": "a", "steps": []}]}
            )

    def test_duplicate_ids_rejected(self):
        entry = {
            "id": "U",
            "title": "t",
            "actor": "a",
            "steps": [{"text": "s", "concept_refs": ["A"]}],
        }
        with pytest.raises(ValueError, match="duplicate"):
            scenarios_from_payload({"scenarios": [entry, dict(entry)]})

    def test_empty_concept_refs_rejected(self):
        with pytest.raises(ValueError, match="concept_refs"):
            scenarios_from_payload(
                {
                    "scenarios": [
                        {
                            "id": "U",
                            "title": "t",
                            "actor": "a",
                            "steps": [{"text": "s", "concept_refs": []}],
                        }
                    ]
                }
            )

    def test_unknown_quality_tag_rejected(self):
        with pytest.raises(ValueError, match="Speed"):
            scenarios_from_payload(
                {
                    "scenarios": [
                        {
                            "id": "U",
                            "title": "t",
                            "actor": "a",
                            "quality_tags": ["Speed"],
                            "steps": [{"text": "s", "concept_refs": ["A"]}],
                        }
                    ]
                }
            )


class TestValidation:
    def make_reqs(self, items):
        return parse_requirements([("doc.md", "".join(f"- [{i}] {t}\n" for i, t in items))])

    def test_isolated_concept_flagged(self):
        model = make_model(["Used", "Other", "Island"], [("Used", "Other", "association")])
        reqs = self.make_reqs([("FR-1", "do a thing")])
        scenario = make_scenario("UC-1", [["Used"]], linked=("FR-1",))
        report = validate(model, [scenario], reqs)
        assert "Island" in report.isolated_concepts

    def test_missing_concept_from_repeated_term(self):
        model = make_model(["Order"])
        reqs = self.make_reqs(
            [
                ("FR-1", "The system shall show the Invoice."),
                ("FR-2", "The system archives each Invoice monthly."),
            ]
        )
        report = validate(model, [], reqs)
        assert "Invoice" in report.missing_concepts

    def test_unresolved_step_ref_flagged(self):
        model = make_model(["Known"])
        scenario = make_scenario("UC-1", [["Known", "Unknown"]])
        report = validate(model, [scenario], self.make_reqs([("FR-1", "x")]))
        assert ("UC-1", 0, "Unknown") in report.unresolved_step_refs

    def test_uncovered_requirement_flagged(self):
        model = make_model(["A"])
        reqs = self.make_reqs([("FR-1", "covered thing"), ("FR-2", "uncovered thing")])
        scenario = make_scenario("UC-1", [["A"]], linked=("FR-1",))
        report = validate(model, [scenario], reqs)
        assert report.uncovered_requirements == ["FR-2"]

    def test_clean_inputs_produce_empty_report(self):
        model = make_model(["A", "B"], [("A", "B", "association")])
        reqs = self.make_reqs([("FR-1", "plain functional text")])
        scenario = make_scenario("UC-1", [["A", "B"]], linked=("FR-1",))
        report = validate(model, [scenario], reqs)
        assert report.messages() == []


class TestModelDiff:
    def test_empty_diff(self):
        model = make_model(["A", "B"], [("A", "B", "association")])
        same = make_model(["A", "B"], [("A", "B", "association")])
        diff = model_diff(model, same)
        assert diff == {
            "added_concepts": [],
            "removed_concepts": [],
            "added_relations": [],
            "removed_relations": [],
        }

    def test_additions_and_removals(self):
        old = make_model(["A", "B"], [("A", "B", "association")])
        new = make_model(["A", "C"], [("A", "C", "composition", "holds")])
        diff = model_diff(old, new)
        assert diff["added_concepts"] == ["C"]
        assert diff["removed_concepts"] == ["B"]
        assert diff["added_relations"] == [
            {"source": "A", "target": "C", "kind": "composition", "label": "holds"}
        ]
        assert diff["removed_relations"] == [
            {"source": "A", "target": "B", "kind": "association", "label": None}
        ]
