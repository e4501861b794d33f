"""Architecture diffing, change cost, and the blended iteration objective."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from archgen.candidates import ArchitectureCandidate, Component, Dependency, Style
from archgen.iteration import (
    DEFAULT_LAMBDA,
    CostTable,
    NegativeCostEntry,
    change_cost,
    combined_objective,
    diff_architectures,
    iteration_order,
    normalize_costs,
)


def comp(name: str, concepts: tuple[str, ...]) -> Component:
    return Component(
        name=name,
        owned_contexts=frozenset({name}),
        owned_concepts=frozenset(concepts),
    )


def candidate(
    cid: str,
    components: list[Component],
    deps: list[tuple[str, str, str]] = (),
    style: Style = Style.MODULAR_MONOLITH,
) -> ArchitectureCandidate:
    return ArchitectureCandidate(
        id=cid,
        style=style,
        components=components,
        dependencies=[Dependency(s, t, v) for s, t, v in deps],
    )


BASE = candidate(
    "base",
    [comp("comp_A", ("A1", "A2")), comp("comp_B", ("B1",))],
    [("comp_A", "comp_B", "call")],
)


class TestDiff:
    def test_identical_architectures_diff_empty(self):
        diff = diff_architectures(BASE, BASE)
        assert diff.is_empty()

    def test_added_component_detected(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1", "A2")), comp("comp_B", ("B1",)), comp("comp_C", ("C1",))],
            [("comp_A", "comp_B", "call")],
        )
        diff = diff_architectures(BASE, after)
        assert diff.added_components == ("comp_C",)
        assert diff.removed_components == ()

    def test_removed_component_detected(self):
        after = candidate("next", [comp("comp_A", ("A1", "A2"))])
        diff = diff_architectures(BASE, after)
        assert diff.removed_components == ("comp_B",)
        assert diff.removed_dependencies == (Dependency("comp_A", "comp_B", "call"),)

    def test_rename_requires_identical_concept_set(self):
        after = candidate(
            "next",
            [comp("comp_Alpha", ("A1", "A2")), comp("comp_B", ("B1",))],
            [("comp_Alpha", "comp_B", "call")],
        )
        diff = diff_architectures(BASE, after)
        assert diff.renamed_components == (("comp_A", "comp_Alpha"),)
        assert diff.added_components == ()
        assert diff.removed_components == ()
        # the dependency is unchanged once the rename map is applied
        assert diff.added_dependencies == ()
        assert diff.removed_dependencies == ()

    def test_changed_concept_set_is_not_a_rename(self):
        after = candidate(
            "next",
            [comp("comp_Alpha", ("A1",)), comp("comp_B", ("A2", "B1"))],
        )
        diff = diff_architectures(BASE, after)
        assert diff.renamed_components == ()
        assert diff.added_components == ("comp_Alpha",)
        assert diff.removed_components == ("comp_A",)

    def test_moved_concept_detected(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1",)), comp("comp_B", ("A2", "B1"))],
            [("comp_A", "comp_B", "call")],
        )
        diff = diff_architectures(BASE, after)
        assert diff.moved_concepts == (("A2", "comp_A", "comp_B"),)

    def test_move_into_renamed_component_not_double_counted(self):
        # comp_B renamed to comp_Beta; A2 moves into it
        after = candidate(
            "next",
            [comp("comp_A", ("A1",)), comp("comp_Store", ("B1",)), comp("comp_New", ("A2",))],
        )
        diff = diff_architectures(BASE, after)
        assert ("comp_B", "comp_Store") in diff.renamed_components
        assert ("A2", "comp_A", "comp_New") in diff.moved_concepts
        moved_names = [m[0] for m in diff.moved_concepts]
        assert "B1" not in moved_names

    def test_dependency_changes_tracked(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1", "A2")), comp("comp_B", ("B1",))],
            [("comp_B", "comp_A", "notify")],
        )
        diff = diff_architectures(BASE, after)
        assert diff.added_dependencies == (Dependency("comp_B", "comp_A", "notify"),)
        assert diff.removed_dependencies == (Dependency("comp_A", "comp_B", "call"),)

    def test_via_change_counts_as_remove_plus_add(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1", "A2")), comp("comp_B", ("B1",))],
            [("comp_A", "comp_B", "evt:call")],
        )
        diff = diff_architectures(BASE, after)
        assert len(diff.added_dependencies) == 1
        assert len(diff.removed_dependencies) == 1

    def test_style_change_flagged(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1", "A2")), comp("comp_B", ("B1",))],
            [("comp_A", "comp_B", "call")],
            style=Style.MICROSERVICES_SYNC,
        )
        diff = diff_architectures(BASE, after)
        assert diff.style_changed is True
        assert diff_architectures(BASE, BASE).style_changed is False

    def test_to_dict_shape(self):
        after = candidate("next", [comp("comp_A", ("A1", "A2")), comp("comp_C", ("B1",))])
        payload = diff_architectures(BASE, after).to_dict()
        assert set(payload) == {
            "added_components",
            "removed_components",
            "renamed_components",
            "moved_concepts",
            "dependency_changes",
            "style_changed",
        }
        assert payload["renamed_components"] == [["comp_B", "comp_C"]]
        assert set(payload["dependency_changes"]) == {"added", "removed"}


class TestChangeCost:
    def test_empty_diff_costs_zero(self):
        cost = change_cost(diff_architectures(BASE, BASE))
        assert cost.total == 0.0
        assert cost.breakdown == ()

    def test_default_table_values(self):
        table = CostTable()
        assert table.component_add == 1.0
        assert table.component_remove == 1.0
        assert table.component_rename == 0.25
        assert table.concept_move == 0.5
        assert table.dependency_change == 0.25
        assert table.style_change == 2.0

    def test_rename_only_costs_quarter_each(self):
        after = candidate(
            "next",
            [comp("comp_Alpha", ("A1", "A2")), comp("comp_Beta", ("B1",))],
            [("comp_Alpha", "comp_Beta", "call")],
        )
        cost = change_cost(diff_architectures(BASE, after))
        assert cost.total == pytest.approx(0.5)  # two renames at 0.25

    def test_hand_checked_mixed_total(self):
        # one add (1.0), one concept move (0.5), one dep add + one dep remove
        # (0.25 each), style change (2.0) => 4.0
        after = candidate(
            "next",
            [
                comp("comp_A", ("A1",)),
                comp("comp_B", ("A2", "B1")),
                comp("comp_C", ()),
            ],
            [("comp_B", "comp_A", "notify")],
            style=Style.MICROSERVICES_EVENT,
        )
        cost = change_cost(diff_architectures(BASE, after))
        assert cost.total == pytest.approx(4.0)

    def test_breakdown_sums_to_total(self):
        after = candidate(
            "next",
            [comp("comp_A", ("A1",)), comp("comp_D", ("A2", "B1"))],
            style=Style.MICROSERVICES_SYNC,
        )
        cost = change_cost(diff_architectures(BASE, after))
        assert cost.total == pytest.approx(sum(value for _, value in cost.breakdown))

    def test_custom_table_applied(self):
        after = candidate(
            "next",
            [comp("comp_Alpha", ("A1", "A2")), comp("comp_B", ("B1",))],
            [("comp_Alpha", "comp_B", "call")],
        )
        cost = change_cost(
            diff_architectures(BASE, after), CostTable(component_rename=3.0)
        )
        assert cost.total == pytest.approx(3.0)

    def test_negative_cost_entry_rejected(self):
        with pytest.raises(NegativeCostEntry):
            change_cost(diff_architectures(BASE, BASE), CostTable(concept_move=-1.0))


# ---------------------------------------------------------------------------
# Objective


class TestObjective:
    def test_lambda_zero_is_pure_utility(self):
        assert combined_objective(0.8, 0.9, 0.0) == pytest.approx(0.8)

    def test_lambda_one_is_pure_negated_cost(self):
        assert combined_objective(0.8, 0.9, 1.0) == pytest.approx(-0.9)

    def test_blend_hand_check(self):
        assert combined_objective(0.8, 0.4, DEFAULT_LAMBDA) == pytest.approx(
            0.7 * 0.8 - 0.3 * 0.4
        )

    def test_lambda_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            combined_objective(0.5, 0.5, 1.5)
        with pytest.raises(ValueError):
            combined_objective(0.5, 0.5, -0.1)

    def test_normalize_all_equal_gives_midpoint(self):
        assert normalize_costs({"c1": 2.0, "c2": 2.0}) == {"c1": 0.5, "c2": 0.5}

    def test_normalize_min_max(self):
        normalized = normalize_costs({"c1": 0.0, "c2": 5.0, "c3": 10.0})
        assert normalized == {"c1": 0.0, "c2": 0.5, "c3": 1.0}

    def test_lambda_zero_order_matches_utility_order(self):
        utilities = {"c1": 0.4, "c2": 0.9, "c3": 0.4}
        costs = {"c1": 0.0, "c2": 100.0, "c3": 50.0}
        objectives, order = iteration_order(utilities, costs, 0.0)
        assert order == ("c2", "c1", "c3")  # ties broken by id
        assert objectives == utilities

    def test_high_lambda_prefers_cheap_candidate(self):
        utilities = {"c_cheap": 0.5, "c_best": 0.9}
        costs = {"c_cheap": 0.0, "c_best": 10.0}
        _, order = iteration_order(utilities, costs, 0.9)
        assert order[0] == "c_cheap"

    @given(
        utilities=st.dictionaries(
            st.sampled_from(["c1", "c2", "c3", "c4"]),
            st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
            min_size=2,
            max_size=4,
        ),
        costs_values=st.lists(
            st.floats(min_value=0.0, max_value=20.0, allow_nan=False), min_size=4, max_size=4
        ),
    )
    @settings(max_examples=100, deadline=None)
    def test_order_is_permutation_of_ids(self, utilities, costs_values):
        costs = dict(zip(sorted(utilities), costs_values))
        _, order = iteration_order(utilities, costs, 0.5)
        assert sorted(order) == sorted(utilities)
