import math
import random

import pytest

from whatif.model import (
    INF,
    ConstraintDef,
    LinearModel,
    Sense,
    VariableDef,
    to_standard_form,
)
from whatif.parser import parse_model
from whatif.patch import apply_patch, parse_patch
from whatif.solver import (
    FEASIBILITY_TOL,
    SolveStatus,
    solve_lp,
    solve_milp,
)

from oracles import enumerate_integer_box, random_integer_model


def tiny(sense=Sense.MINIMIZE, **var):
    return LinearModel(sense=sense, variables=(VariableDef(ordinal=0, **var),))


class TestSolveLp:
    def test_aircraft_relaxation(self, aircraft_model):
        relax = solve_lp(to_standard_form(aircraft_model))
        assert relax.status is SolveStatus.OPTIMAL
        assert relax.objective == pytest.approx(200000.0, abs=1e-6)
        assert relax.assignment["A"] == pytest.approx(20.0, abs=1e-7)
        assert relax.assignment["B"] == pytest.approx(0.0, abs=1e-7)

    def test_infeasible_box(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(VariableDef(name="x", objective_coeff=1.0),),
            constraints=(
                ConstraintDef(name="ge", terms={"x": 1.0}, lower=1.0, upper=INF),
                ConstraintDef(name="le", terms={"x": 1.0}, lower=-INF, upper=0.0),
            ),
        )
        assert solve_lp(to_standard_form(model)).status is SolveStatus.INFEASIBLE

    def test_unbounded(self):
        model = tiny(name="x", objective_coeff=-1.0)
        assert solve_lp(to_standard_form(model)).status is SolveStatus.UNBOUNDED

    def test_budget_limit(self, aircraft_model):
        limited = solve_lp(to_standard_form(aircraft_model), budget=0)
        assert limited.status is SolveStatus.LIMIT

    def test_equality_and_free_variable(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(
                VariableDef(name="x", lower=-INF, upper=INF, objective_coeff=1.0, ordinal=0),
                VariableDef(name="y", lower=0.0, upper=10.0, objective_coeff=2.0, ordinal=1),
            ),
            constraints=(
                ConstraintDef(name="eq", terms={"x": 1.0, "y": 1.0}, lower=4.0, upper=4.0),
                ConstraintDef(name="floor", terms={"x": 1.0}, lower=-2.0, upper=INF),
            ),
        )
        # x + y == 4 makes the objective 4 + y, so y stays at zero
        sol = solve_lp(to_standard_form(model))
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.objective == pytest.approx(4.0)
        assert sol.assignment["x"] == pytest.approx(4.0)

    def test_maximize_reports_original_sense(self):
        model = LinearModel(
            sense=Sense.MAXIMIZE,
            variables=(VariableDef(name="x", upper=7.0, objective_coeff=3.0),),
        )
        sol = solve_lp(to_standard_form(model))
        assert sol.objective == pytest.approx(21.0)

    def test_assignment_feasible_within_tolerance(self, aircraft_model):
        lp = to_standard_form(aircraft_model)
        sol = solve_lp(lp)
        for i in range(lp.m):
            value = sum(a * sol.assignment[lp.var_names[j]] for j, a in lp.rows[i].items())
            assert lp.l_s[i] - FEASIBILITY_TOL <= value <= lp.u_s[i] + FEASIBILITY_TOL


class TestDuality:
    def test_aircraft_duality(self, aircraft_model):
        sol = solve_lp(to_standard_form(aircraft_model))
        assert sol.dual_objective is not None
        assert abs(sol.objective - sol.dual_objective) <= 1e-7

    def test_duality_on_random_feasible_lps(self):
        rng = random.Random(424242)
        checked = 0
        for _ in range(60):
            model = random_integer_model(rng)
            sol = solve_lp(to_standard_form(model))
            if sol.status is not SolveStatus.OPTIMAL:
                continue
            checked += 1
            assert sol.dual_objective is not None
            scale = max(1.0, abs(sol.objective))
            assert abs(sol.objective - sol.dual_objective) <= 1e-7 * scale
        assert checked >= 20


class TestSolveMilp:
    def test_aircraft_base(self, aircraft_model):
        sol = solve_milp(aircraft_model)
        assert sol.status is SolveStatus.OPTIMAL
        assert round(sol.objective) == 200000

    def test_query_1_and_5_truth_labels(self, aircraft_source):
        cheaper = apply_patch(
            aircraft_source, parse_patch('{"ADD DATA": "param costA = 8000"}')
        )
        assert round(solve_milp(parse_model(cheaper)).objective) == 160000
        capped = apply_patch(
            aircraft_source,
            parse_patch('{"ADD CONSTRAINT": "  MaxTypeA: A <= 15\\n  MaxTypeB: B <= 30"}'),
        )
        assert round(solve_milp(parse_model(capped)).objective) == 215000

    def test_integer_rounding_matters(self):
        # LP relaxation sits at 10000/550 = 18.18 of the cheap variable;
        # the integer optimum mixes in one unit of the other
        model = parse_model(
            "# EOR DATA BEGIN\n# EOR DATA END\n"
            "minimize: 10000 A + 4000 B\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n"
            "  demand: 550 A + 200 B >= 10000\n"
            "  fleet: A + B <= 50\n"
            "# EOR CONSTRAINT END\n"
            "integers: A B\n"
        )
        sol = solve_milp(model)
        assert round(sol.objective) == 184000
        assert sol.assignment == {"A": 18.0, "B": 1.0}

    def test_node_budget_limit(self, aircraft_model):
        sol = solve_milp(aircraft_model, budget=0)
        assert sol.status is SolveStatus.LIMIT

    def test_unbounded_milp(self):
        model = LinearModel(
            sense=Sense.MAXIMIZE,
            variables=(VariableDef(name="x", objective_coeff=1.0, is_integer=True),),
        )
        assert solve_milp(model).status is SolveStatus.UNBOUNDED

    def test_infeasible_milp(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(VariableDef(name="x", upper=3.0, objective_coeff=1.0, is_integer=True),),
            constraints=(
                ConstraintDef(name="big", terms={"x": 1.0}, lower=5.0, upper=INF),
            ),
        )
        assert solve_milp(model).status is SolveStatus.INFEASIBLE

    def test_continuous_model_solves_at_root(self, aircraft_source):
        relaxed = aircraft_source.replace("integers: A B\n", "")
        sol = solve_milp(parse_model(relaxed))
        assert sol.status is SolveStatus.OPTIMAL
        assert sol.stats.nodes == 1


class TestEnumerationOracle:
    def test_agrees_on_random_models(self):
        rng = random.Random(20240817)
        optimal_seen = 0
        for _ in range(80):
            model = random_integer_model(rng)
            expected_status, expected_obj = enumerate_integer_box(model)
            got = solve_milp(model)
            assert got.status.value == expected_status, model
            if expected_status == "Optimal":
                optimal_seen += 1
                assert got.objective == pytest.approx(expected_obj, abs=1e-9)
        assert optimal_seen >= 30

    def test_monotonicity_under_added_constraints(
        self, aircraft_source, bundled_patches, truth_labels
    ):
        # adding constraints can only keep or worsen a minimization optimum
        base = round(solve_milp(parse_model(aircraft_source)).objective)
        for patch_doc, truth in zip(bundled_patches, truth_labels):
            if "ADD CONSTRAINT" not in patch_doc or len(patch_doc) > 1:
                continue
            patched = apply_patch(
                aircraft_source, parse_patch(__import__("json").dumps(patch_doc))
            )
            updated = solve_milp(parse_model(patched))
            assert updated.objective >= base - 1e-9
            assert round(updated.objective) == round(truth)
