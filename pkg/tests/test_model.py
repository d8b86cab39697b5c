import math

import pytest
from hypothesis import given, settings, strategies as st

from whatif.model import (
    INF,
    ConstraintDef,
    LinearModel,
    ModelError,
    ParamDef,
    Region,
    Sense,
    VariableDef,
    format_number,
    render_model,
    to_standard_form,
)
from whatif.parser import parse_model
from whatif.solver import SolveStatus, solve_lp


class TestStandardForm:
    def test_aircraft_vectors(self, aircraft_model):
        lp = to_standard_form(aircraft_model)
        assert lp.n == 2 and lp.m == 2
        assert lp.c == (10000.0, 5000.0)
        assert lp.rows == ({0: 500.0, 1: 200.0}, {0: 1.0, 1: 1.0})
        assert lp.l_s == (10000.0, -INF)
        assert lp.u_s == (INF, 50.0)
        assert lp.l_x == (0.0, 0.0)
        assert lp.u_x == (INF, INF)
        assert lp.negated_objective is False
        assert lp.is_integer == (True, True)

    def test_maximize_negates(self):
        model = LinearModel(
            sense=Sense.MAXIMIZE,
            variables=(VariableDef(name="x", objective_coeff=3.0),),
        )
        lp = to_standard_form(model)
        assert lp.c == (-3.0,)
        assert lp.negated_objective is True

    def test_sign_normalization(self):
        model = parse_model(
            "# EOR DATA BEGIN\n# EOR DATA END\n"
            "minimize: A + B\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n"
            "  r: -500 A - 200 B <= -10000\n"
            "# EOR CONSTRAINT END\n"
        )
        lp = to_standard_form(model)
        assert lp.rows[0] == {0: 500.0, 1: 200.0}
        assert lp.l_s[0] == 10000.0
        assert lp.u_s[0] == INF

    def test_sign_normalization_idempotent_and_equivalent(self, aircraft_model):
        lp = to_standard_form(aircraft_model)
        flipped = parse_model(
            aircraft_model.source_text.replace(
                "PassengerDemand: capA * A + capB * B >= demand",
                "PassengerDemand: 0 - capA * A - capB * B <= 0 - demand",
            )
        )
        lp_flipped = to_standard_form(flipped)
        assert lp_flipped.rows == lp.rows
        assert lp_flipped.l_s == lp.l_s and lp_flipped.u_s == lp.u_s
        a = solve_lp(lp)
        b = solve_lp(lp_flipped)
        assert a.status is b.status is SolveStatus.OPTIMAL
        assert abs(a.objective - b.objective) <= 1e-9


class TestRender:
    def test_roundtrip_aircraft(self, aircraft_model):
        again = parse_model(render_model(aircraft_model))
        assert to_standard_form(again) == to_standard_form(aircraft_model)
        assert again.description == aircraft_model.description

    def test_infinite_upper_bound_omitted(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(VariableDef(name="x", lower=0.0, upper=INF, objective_coeff=1.0),),
        )
        text = render_model(model)
        assert "bounds:" not in text

    def test_editable_constraints_inside_markers(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(VariableDef(name="x", objective_coeff=1.0),),
            constraints=(
                ConstraintDef(name="fix", terms={"x": 1.0}, lower=0.0, upper=9.0, ordinal=0),
                ConstraintDef(
                    name="edit",
                    terms={"x": 1.0},
                    lower=1.0,
                    upper=INF,
                    region=Region.EDITABLE,
                    ordinal=1,
                ),
            ),
        )
        lines = render_model(model).splitlines()
        begin = lines.index("# EOR CONSTRAINT BEGIN")
        end = lines.index("# EOR CONSTRAINT END")
        assert any("fix:" in l for l in lines[:begin])
        assert any("edit:" in l for l in lines[begin:end])
        again = parse_model(render_model(model))
        assert [c.region for c in again.constraints] == [Region.FIXED, Region.EDITABLE]

    def test_free_variable_roundtrip(self):
        model = LinearModel(
            sense=Sense.MINIMIZE,
            variables=(VariableDef(name="x", lower=-INF, upper=INF, objective_coeff=1.0),),
            constraints=(
                ConstraintDef(name="r", terms={"x": 1.0}, lower=-3.0, upper=INF),
            ),
        )
        again = parse_model(render_model(model))
        assert again.variables[0].lower == -INF
        assert to_standard_form(again) == to_standard_form(model)


names = st.sampled_from(["x", "y", "z", "w"])


@st.composite
def models(draw) -> LinearModel:
    n = draw(st.integers(1, 4))
    var_names = ["x", "y", "z", "w"][:n]
    variables = []
    for j, name in enumerate(var_names):
        lower = draw(st.sampled_from([0.0, -5.0, 2.5, -INF]))
        upper_extra = draw(st.sampled_from([INF, 0.0, 4.0, 10.5]))
        upper = INF if math.isinf(upper_extra) else max(lower, -6.0) + upper_extra + 6.0
        if math.isinf(lower) and not math.isinf(upper):
            pass  # legal: one-sided from below
        variables.append(
            VariableDef(
                name=name,
                lower=lower,
                upper=upper,
                objective_coeff=draw(
                    st.floats(-50, 50, allow_nan=False, allow_infinity=False)
                ),
                is_integer=draw(st.booleans()),
                ordinal=j,
            )
        )
    m = draw(st.integers(0, 4))
    constraints = []
    for i in range(m):
        terms = {}
        for name in var_names:
            coeff = draw(
                st.floats(-9, 9, allow_nan=False, allow_infinity=False).filter(
                    lambda v: abs(v) > 1e-6 or v == 0.0
                )
            )
            if coeff != 0.0:
                terms[name] = coeff
        if not terms:
            terms[draw(names.filter(lambda nm: nm in var_names))] = 1.0
        kind = draw(st.sampled_from(["le", "ge", "eq", "range"]))
        pivot = draw(st.floats(-40, 40, allow_nan=False, allow_infinity=False))
        if kind == "le":
            lower, upper = -INF, pivot
        elif kind == "ge":
            lower, upper = pivot, INF
        elif kind == "eq":
            lower = upper = pivot
        else:
            lower, upper = pivot, pivot + draw(st.floats(0, 20, allow_nan=False))
        constraints.append(
            ConstraintDef(
                name=f"c{i}",
                terms=terms,
                lower=lower,
                upper=upper,
                region=draw(st.sampled_from([Region.FIXED, Region.EDITABLE])),
                ordinal=i,
            )
        )
    params = tuple(
        ParamDef(name=f"p{k}", value=draw(st.floats(-99, 99, allow_nan=False)), ordinal=k)
        for k in range(draw(st.integers(0, 2)))
    )
    return LinearModel(
        sense=draw(st.sampled_from([Sense.MINIMIZE, Sense.MAXIMIZE])),
        description=draw(st.sampled_from(["", "two lines\nof text"])),
        params=params,
        variables=tuple(variables),
        constraints=tuple(constraints),
    )


@given(models())
@settings(max_examples=120, deadline=None)
def test_render_parse_roundtrip_standard_form(model):
    # editable regions rendered around a non-contiguous editable run widen
    # to cover fixed constraints in between; the standard form ignores
    # regions, so the semantic round trip must hold field for field
    again = parse_model(render_model(model))
    assert to_standard_form(again) == to_standard_form(model)


@given(st.floats(allow_nan=False))
def test_format_number_roundtrips(value):
    assert float(format_number(value)) == value


class TestInvariantEnforcement:
    def test_variable_bounds_checked(self):
        with pytest.raises(ModelError):
            VariableDef(name="x", lower=3.0, upper=1.0)

    def test_constraint_needs_a_finite_bound(self):
        with pytest.raises(ModelError):
            ConstraintDef(name="r", terms={"x": 1.0}, lower=-INF, upper=INF)

    def test_zero_coefficient_rejected(self):
        with pytest.raises(ModelError):
            ConstraintDef(name="r", terms={"x": 0.0}, lower=0.0, upper=1.0)

    def test_duplicate_variable_names(self):
        with pytest.raises(ModelError):
            LinearModel(
                sense=Sense.MINIMIZE,
                variables=(
                    VariableDef(name="x", ordinal=0),
                    VariableDef(name="x", ordinal=1),
                ),
            )

    def test_undeclared_term_rejected(self):
        with pytest.raises(ModelError):
            LinearModel(
                sense=Sense.MINIMIZE,
                variables=(VariableDef(name="x"),),
                constraints=(
                    ConstraintDef(name="r", terms={"ghost": 1.0}, lower=0.0, upper=1.0),
                ),
            )
