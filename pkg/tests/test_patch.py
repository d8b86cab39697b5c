import difflib
import json

import pytest

from whatif.model import to_standard_form
from whatif.parser import parse_model
from whatif.patch import (
    PatchError,
    QueryPatch,
    apply_patch,
    extract_patch,
    parse_patch,
    validate_patch,
)
from whatif.solver import solve_milp

FIG_PATCH = json.dumps(
    {"ADD CONSTRAINT": "  MaxTypeA: A <= 15\n  MaxTypeB: B <= 30"}
)


class TestParsePatch:
    def test_add_constraint_document(self):
        patch = parse_patch(FIG_PATCH)
        assert patch.add_constraint is not None
        assert patch.delete_constraint is None
        assert patch.raw == FIG_PATCH
        assert patch.keys() == ("ADD CONSTRAINT",)

    def test_unknown_key_rejected(self):
        with pytest.raises(PatchError) as err:
            parse_patch('{"UPDATE OBJECTIVE": "minimize: x"}')
        assert err.value.violation.kind == "unknown-key"

    def test_empty_document_rejected(self):
        with pytest.raises(PatchError) as err:
            parse_patch("{}")
        assert err.value.violation.kind == "malformed-document"

    def test_non_object_rejected(self):
        with pytest.raises(PatchError) as err:
            parse_patch('["ADD DATA"]')
        assert err.value.violation.kind == "malformed-document"

    def test_non_string_value_rejected(self):
        with pytest.raises(PatchError) as err:
            parse_patch('{"ADD DATA": 42}')
        assert err.value.violation.kind == "malformed-document"

    def test_all_three_keys(self):
        patch = parse_patch(
            json.dumps(
                {
                    "DELETE CONSTRAINT": "Operational: A + B <= maxFleet",
                    "ADD CONSTRAINT": "  Tight: A + B <= 40",
                    "ADD DATA": "param costA = 9000",
                }
            )
        )
        assert set(patch.keys()) == {"DELETE CONSTRAINT", "ADD CONSTRAINT", "ADD DATA"}


class TestExtractPatch:
    def test_bare_json(self):
        text = "Sure, here you go. " + FIG_PATCH + " Anything else?"
        assert extract_patch(text).add_constraint.startswith("  MaxTypeA")

    def test_fenced_json(self):
        text = f"```json\n{FIG_PATCH}\n```"
        assert extract_patch(text).keys() == ("ADD CONSTRAINT",)

    def test_prose_only_fails(self):
        with pytest.raises(PatchError) as err:
            extract_patch("I would add a constraint limiting Type A to 15.")
        assert err.value.violation.kind == "malformed-document"


class TestApplyPatch:
    def test_fig_patch_yields_truth_label(self, aircraft_source):
        updated = apply_patch(aircraft_source, parse_patch(FIG_PATCH))
        model = parse_model(updated)
        assert len(model.constraints) == 4
        assert round(solve_milp(model).objective) == 215000

    def test_add_data_shadows_param(self, aircraft_source):
        updated = apply_patch(
            aircraft_source, parse_patch('{"ADD DATA": "param costA = 8000"}')
        )
        assert round(solve_milp(parse_model(updated)).objective) == 160000

    def test_delete_scoped_to_editable_region(self, aircraft_source):
        # move both constraints out of the editable region, then try deleting
        lines = aircraft_source.splitlines()
        begin = lines.index("# EOR CONSTRAINT BEGIN")
        end = lines.index("# EOR CONSTRAINT END")
        body = lines[begin + 1 : end]
        rearranged = (
            lines[:begin]
            + body
            + ["# EOR CONSTRAINT BEGIN", "# EOR CONSTRAINT END"]
            + lines[end + 1 :]
        )
        fixed_source = "\n".join(rearranged) + "\n"
        with pytest.raises(PatchError) as err:
            apply_patch(
                fixed_source,
                parse_patch('{"DELETE CONSTRAINT": "Operational: A + B <= maxFleet"}'),
            )
        assert err.value.violation.kind == "delete-target-missing"

    def test_delete_whitespace_normalized(self, aircraft_source):
        updated = apply_patch(
            aircraft_source,
            parse_patch('{"DELETE CONSTRAINT": "Operational:   A+B   <= maxFleet"}'),
        )
        model = parse_model(updated)
        assert [c.name for c in model.constraints] == ["PassengerDemand"]
        assert round(solve_milp(model).objective) == 200000

    def test_missing_target(self, aircraft_source):
        with pytest.raises(PatchError) as err:
            apply_patch(
                aircraft_source, parse_patch('{"DELETE CONSTRAINT": "Ghost: A <= 1"}')
            )
        assert err.value.violation.kind == "delete-target-missing"

    def test_undeclared_variable_fails_at_apply(self, aircraft_source):
        with pytest.raises(PatchError) as err:
            apply_patch(
                aircraft_source, parse_patch('{"ADD CONSTRAINT": "  NewCap: C <= 3"}')
            )
        assert err.value.violation.kind == "snippet-parse-error"

    def test_snippet_with_marker_rejected(self, aircraft_source):
        with pytest.raises(PatchError) as err:
            apply_patch(
                aircraft_source,
                parse_patch('{"ADD CONSTRAINT": "# EOR CONSTRAINT END"}'),
            )
        assert err.value.violation.kind == "marker-corruption"

    def test_corrupt_source_markers(self, aircraft_source):
        broken = aircraft_source.replace("# EOR DATA END\n", "")
        with pytest.raises(PatchError) as err:
            apply_patch(broken, parse_patch('{"ADD DATA": "param costA = 1"}'))
        assert err.value.violation.kind == "marker-corruption"

    def test_delete_applied_before_add(self, aircraft_source):
        patch = parse_patch(
            json.dumps(
                {
                    "DELETE CONSTRAINT": "Operational: A + B <= maxFleet",
                    "ADD CONSTRAINT": "  Operational: A + B <= 40",
                }
            )
        )
        model = parse_model(apply_patch(aircraft_source, patch))
        assert [c.name for c in model.constraints] == ["PassengerDemand", "Operational"]
        assert model.constraints[1].upper == 40.0

    def test_comments_allowed_in_snippets(self, aircraft_source):
        patch = parse_patch(
            json.dumps({"ADD CONSTRAINT": "  # cap type A\n  MaxTypeA: A <= 15"})
        )
        model = parse_model(apply_patch(aircraft_source, patch))
        assert "MaxTypeA" in [c.name for c in model.constraints]


class TestTextualProperties:
    def test_diff_is_exactly_the_snippet(self, aircraft_source):
        updated = apply_patch(aircraft_source, parse_patch(FIG_PATCH))
        diff = list(
            difflib.unified_diff(
                aircraft_source.split("\n"), updated.split("\n"), lineterm=""
            )
        )
        added = [l[1:] for l in diff if l.startswith("+") and not l.startswith("+++")]
        removed = [l for l in diff if l.startswith("-") and not l.startswith("---")]
        assert added == ["  MaxTypeA: A <= 15", "  MaxTypeB: B <= 30"]
        assert removed == []

    def test_outside_regions_byte_identical(self, aircraft_source):
        patch = parse_patch(
            json.dumps(
                {
                    "ADD DATA": "param costA = 9000",
                    "ADD CONSTRAINT": "  MaxTypeA: A <= 15",
                }
            )
        )
        updated = apply_patch(aircraft_source, patch)
        original_lines = aircraft_source.split("\n")
        updated_lines = updated.split("\n")
        assert [l for l in updated_lines if l not in ("param costA = 9000", "  MaxTypeA: A <= 15")] == original_lines

    def test_add_then_delete_restores_semantics(self, aircraft_source):
        snippet = "  MaxTypeA: A <= 15\n  MaxTypeB: B <= 30"
        added = apply_patch(
            aircraft_source, parse_patch(json.dumps({"ADD CONSTRAINT": snippet}))
        )
        restored = apply_patch(
            added, parse_patch(json.dumps({"DELETE CONSTRAINT": snippet}))
        )
        assert to_standard_form(parse_model(restored)) == to_standard_form(
            parse_model(aircraft_source)
        )
        assert restored == aircraft_source


class TestValidatePatch:
    def test_same_variables_pass(self, aircraft_source, aircraft_q5_source):
        violations = validate_patch(
            parse_model(aircraft_source), parse_model(aircraft_q5_source)
        )
        assert violations == []

    def test_params_are_not_decision_variables(self, aircraft_source, aircraft_model):
        updated = apply_patch(
            aircraft_source, parse_patch('{"ADD DATA": "param brandNew = 7"}')
        )
        assert validate_patch(aircraft_model, parse_model(updated)) == []

    def test_variable_set_change_flagged(self, aircraft_model):
        other = parse_model(
            "# EOR DATA BEGIN\n# EOR DATA END\n"
            "minimize: A + B + C\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n# EOR CONSTRAINT END\n"
        )
        violations = validate_patch(aircraft_model, other)
        kinds = {v.kind for v in violations}
        assert kinds == {"new-variable-introduced"}
        assert any("'C' introduced" in v.detail for v in violations)

    def test_integrality_change_flagged(self, aircraft_source, aircraft_model):
        relaxed = parse_model(aircraft_source.replace("integers: A B\n", ""))
        violations = validate_patch(aircraft_model, relaxed)
        assert violations and all(
            "integrality" in v.detail for v in violations
        )
