"""Core domain types for optimization models and their standard LP form.

A model is a collection of parameters, variables, and named linear
constraints together with an objective sense.  Models are immutable after
construction; every transformation returns a new value.  The standard form
is always minimization-oriented::

    min c.x   subject to   l_s <= A x <= u_s,   l_x <= x <= u_x

Maximization problems are converted by negating the cost vector, recorded
in ``negated_objective`` so solution objectives can be reported in the
original sense.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

INF = math.inf

# Marker lines delimiting the editable regions of model source text.
# These exact lines must each appear once, in this order.
DATA_BEGIN = "# EOR DATA BEGIN"
DATA_END = "# EOR DATA END"
CONSTRAINT_BEGIN = "# EOR CONSTRAINT BEGIN"
CONSTRAINT_END = "# EOR CONSTRAINT END"
MARKERS = (DATA_BEGIN, DATA_END, CONSTRAINT_BEGIN, CONSTRAINT_END)


class Sense(Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Region(Enum):
    """Whether a constraint sits inside the editable marker region."""

    FIXED = "fixed"
    EDITABLE = "editable"


class ModelError(ValueError):
    """Invariant violation in a model value."""


@dataclass(frozen=True)
class ParamDef:
    """A named scalar datum.  Duplicate names shadow: the definition with
    the greatest ordinal is the effective one."""

    name: str
    value: float
    ordinal: int = 0


@dataclass(frozen=True)
class VariableDef:
    """A decision variable with box bounds and its objective coefficient."""

    name: str
    lower: float = 0.0
    upper: float = INF
    objective_coeff: float = 0.0
    is_integer: bool = False
    ordinal: int = 0

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ModelError(
                f"variable {self.name!r}: lower bound {self.lower} exceeds "
                f"upper bound {self.upper}"
            )


@dataclass(frozen=True)
class ConstraintDef:
    """One linear constraint row: lower <= terms . x <= upper.

    ``terms`` maps variable name to a nonzero coefficient.  At least one
    bound must be finite.
    """

    name: str
    terms: Mapping[str, float]
    lower: float
    upper: float
    region: Region = Region.FIXED
    ordinal: int = 0

    def __post_init__(self) -> None:
        if self.lower > self.upper:
            raise ModelError(
                f"constraint {self.name!r}: lower bound {self.lower} exceeds "
                f"upper bound {self.upper}"
            )
        if math.isinf(self.lower) and math.isinf(self.upper):
            raise ModelError(f"constraint {self.name!r}: both bounds infinite")
        for var, coeff in self.terms.items():
            if coeff == 0.0:
                raise ModelError(
                    f"constraint {self.name!r}: zero coefficient stored for {var!r}"
                )


@dataclass(frozen=True)
class LinearModel:
    """A parsed optimization model plus the source text it came from.

    ``source_text`` keeps the original DSL text verbatim (marker lines
    included) so that textual patches can be applied to it; everything else
    is the evaluated semantic content.
    """

    sense: Sense
    description: str = ""
    params: tuple[ParamDef, ...] = ()
    variables: tuple[VariableDef, ...] = ()
    constraints: tuple[ConstraintDef, ...] = ()
    source_text: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for i, v in enumerate(self.variables):
            if v.name in seen:
                raise ModelError(f"duplicate variable name {v.name!r}")
            seen.add(v.name)
            if v.ordinal != i:
                raise ModelError(
                    f"variable {v.name!r}: ordinal {v.ordinal} != position {i}"
                )
        con_seen: set[str] = set()
        for i, con in enumerate(self.constraints):
            if con.name in con_seen:
                raise ModelError(f"duplicate constraint name {con.name!r}")
            con_seen.add(con.name)
            for var in con.terms:
                if var not in seen:
                    raise ModelError(
                        f"constraint {con.name!r} references undeclared "
                        f"variable {var!r}"
                    )

    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def effective_params(self) -> dict[str, float]:
        """Parameter values after shadowing (last definition wins)."""
        out: dict[str, float] = {}
        for p in self.params:
            out[p.name] = p.value
        return out


@dataclass(frozen=True)
class StandardFormLP:
    """Minimization-oriented LP data extracted from a model.

    ``rows`` holds the sparse constraint matrix, one ``{column: coeff}``
    mapping per row.  Integrality flags ride alongside for the MILP solver
    but are not part of the LP vectors.
    """

    n: int
    m: int
    c: tuple[float, ...]
    rows: tuple[Mapping[int, float], ...]
    l_s: tuple[float, ...]
    u_s: tuple[float, ...]
    l_x: tuple[float, ...]
    u_x: tuple[float, ...]
    negated_objective: bool
    var_names: tuple[str, ...]
    con_names: tuple[str, ...]
    is_integer: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        if len(self.c) != self.n or len(self.var_names) != self.n:
            raise ModelError("cost vector length inconsistent with n")
        if not (len(self.rows) == len(self.l_s) == len(self.u_s) == self.m):
            raise ModelError("row data length inconsistent with m")
        if len(self.l_x) != self.n or len(self.u_x) != self.n:
            raise ModelError("variable bound length inconsistent with n")
        if len(self.con_names) != self.m:
            raise ModelError("constraint name list inconsistent with m")
        if self.is_integer and len(self.is_integer) != self.n:
            raise ModelError("integrality flag length inconsistent with n")


def _normalize_row(
    terms: Mapping[int, float], lower: float, upper: float
) -> tuple[dict[int, float], float, float]:
    """Flip a row's sign so its first nonzero coefficient (by variable
    ordinal) is positive, swapping and negating the bounds to preserve the
    feasible set.  Idempotent."""
    if terms:
        lead = terms[min(terms)]
        if lead < 0:
            terms = {j: -a for j, a in terms.items()}
            lower, upper = -upper, -lower
    return dict(terms), lower, upper


def to_standard_form(model: LinearModel) -> StandardFormLP:
    """Convert a model to the minimization-oriented standard form.

    Maximization is handled by negating the cost vector; each row is
    sign-normalized so graph comparison is invariant to trivially
    rewritten constraints.
    """
    negate = model.sense is Sense.MAXIMIZE
    index = {v.name: v.ordinal for v in model.variables}
    c = tuple(
        -v.objective_coeff if negate else v.objective_coeff for v in model.variables
    )
    rows: list[Mapping[int, float]] = []
    l_s: list[float] = []
    u_s: list[float] = []
    for con in model.constraints:
        terms = {index[name]: coeff for name, coeff in con.terms.items()}
        terms, lo, up = _normalize_row(terms, con.lower, con.upper)
        rows.append(terms)
        l_s.append(lo)
        u_s.append(up)
    return StandardFormLP(
        n=len(model.variables),
        m=len(model.constraints),
        c=c,
        rows=tuple(rows),
        l_s=tuple(l_s),
        u_s=tuple(u_s),
        l_x=tuple(v.lower for v in model.variables),
        u_x=tuple(v.upper for v in model.variables),
        negated_objective=negate,
        var_names=model.variable_names(),
        con_names=tuple(con.name for con in model.constraints),
        is_integer=tuple(v.is_integer for v in model.variables),
    )


def format_number(value: float) -> str:
    """Render a float compactly while round-tripping exactly."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _expr_text(terms: Mapping[str, float], order: Mapping[str, int]) -> str:
    parts: list[str] = []
    for name in sorted(terms, key=lambda nm: order[nm]):
        coeff = terms[name]
        mag = abs(coeff)
        body = name if mag == 1.0 else f"{format_number(mag)} {name}"
        if not parts:
            parts.append(body if coeff >= 0 else f"-{body}")
        else:
            parts.append(f"{'+' if coeff >= 0 else '-'} {body}")
    return " ".join(parts) if parts else "0"


def _constraint_text(con: ConstraintDef, order: Mapping[str, int]) -> str:
    expr = _expr_text(con.terms, order)
    if con.lower == con.upper:
        return f"{con.name}: {expr} == {format_number(con.lower)}"
    if math.isinf(con.lower):
        return f"{con.name}: {expr} <= {format_number(con.upper)}"
    if math.isinf(con.upper):
        return f"{con.name}: {expr} >= {format_number(con.lower)}"
    return (
        f"{con.name}: {format_number(con.lower)} <= {expr} "
        f"<= {format_number(con.upper)}"
    )


def render_model(model: LinearModel) -> str:
    """Emit canonical DSL text for a model.

    The output re-parses to a semantically equal model.  Evaluated numbers
    are emitted (parameter references inside expressions are not
    reconstructed); parameter definitions are kept so the data section
    survives the round trip.  Constraints appear in ordinal order with the
    editable ones wrapped by the constraint markers.
    """
    lines: list[str] = []
    if model.description:
        lines.extend(f"# {ln}".rstrip() for ln in model.description.splitlines())
        lines.append("")
    for p in model.params:
        lines.append(f"param {p.name} = {format_number(p.value)}")
    if model.params:
        lines.append("")
    lines.append(DATA_BEGIN)
    lines.append(DATA_END)
    lines.append("")

    order = {v.name: v.ordinal for v in model.variables}
    objective = {v.name: v.objective_coeff for v in model.variables}
    lines.append(f"{model.sense.value}: {_expr_text(objective, order)}")
    lines.append("")

    lines.append("subject to:")
    editable = [c for c in model.constraints if c.region is Region.EDITABLE]
    first_edit = editable[0].ordinal if editable else None
    last_edit = editable[-1].ordinal if editable else None
    for con in model.constraints:
        if con.ordinal == first_edit:
            lines.append(CONSTRAINT_BEGIN)
        lines.append(f"  {_constraint_text(con, order)}")
        if con.ordinal == last_edit:
            lines.append(CONSTRAINT_END)
    if not editable:
        lines.append(CONSTRAINT_BEGIN)
        lines.append(CONSTRAINT_END)
    lines.append("")

    bound_lines: list[str] = []
    for v in model.variables:
        if v.lower == 0.0 and math.isinf(v.upper):
            continue
        if math.isinf(v.upper):
            bound_lines.append(f"  {v.name} >= {format_number(v.lower)}")
        elif v.lower == 0.0:
            bound_lines.append(f"  {v.name} <= {format_number(v.upper)}")
        else:
            bound_lines.append(
                f"  {format_number(v.lower)} <= {v.name} <= {format_number(v.upper)}"
            )
    if bound_lines:
        lines.append("bounds:")
        lines.extend(bound_lines)
        lines.append("")

    integer_names = [v.name for v in model.variables if v.is_integer]
    if integer_names:
        lines.append("integers: " + " ".join(integer_names))
        lines.append("")

    return "\n".join(lines).rstrip("\n") + "\n"
