"""Parser for the line-oriented model DSL.

Layout of a model file::

    # leading comments form the description
    param costA = 10000
    # EOR DATA BEGIN
    # EOR DATA END
    minimize: costA * A + 5000 B
    subject to:
      Demand: 500 A + 200 B >= 10000
      # EOR CONSTRAINT BEGIN
      # EOR CONSTRAINT END
    bounds:
      A <= 40
    integers: A B

Decision variables are declared by the objective line; a constraint that
mentions any other identifier is rejected.  Parameters may be defined more
than once: the definition with the greatest ordinal shadows the others, and
all references (even textually earlier ones) see the effective value, so a
model with duplicate definitions evaluates exactly like the model keeping
only the last one.  Coefficients and bounds may be arithmetic expressions
over parameters and literals; they are evaluated to scalars here.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .model import (
    CONSTRAINT_BEGIN,
    CONSTRAINT_END,
    DATA_BEGIN,
    DATA_END,
    MARKERS,
    INF,
    ConstraintDef,
    LinearModel,
    ParamDef,
    Region,
    Sense,
    VariableDef,
)


class ParseError(ValueError):
    """Syntax or semantic error in DSL text, with source position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column else "") + ")"
        super().__init__(message + where)


_NUM_RE = r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?"
_IDENT_RE = r"[A-Za-z_][A-Za-z0-9_]*"
_TOKEN_RE = re.compile(
    rf"(?P<num>{_NUM_RE})|(?P<ident>{_IDENT_RE})|(?P<rel><=|>=|==)|(?P<op>[+\-*/()])"
)
_PARAM_LINE = re.compile(rf"^param\s+(?P<name>{_IDENT_RE})\s*=\s*(?P<expr>.+)$")
_OBJECTIVE_LINE = re.compile(r"^(?P<sense>minimize|maximize)\s*:\s*(?P<expr>.*)$")
_SUBJECT_LINE = re.compile(r"^subject\s+to\s*:\s*$")
_BOUNDS_LINE = re.compile(r"^bounds\s*:\s*$")
_INTEGERS_LINE = re.compile(r"^integers\s*:\s*(?P<names>.*)$")
_CONSTRAINT_LINE = re.compile(rf"^(?P<name>{_IDENT_RE})\s*:\s*(?P<expr>.+)$")


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "ident" | "rel" | "op"
    text: str
    column: int


def _tokenize(segment: str, line_no: int, col_offset: int = 0) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(segment):
        if segment[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(segment, pos)
        if m is None:
            raise ParseError(
                f"unexpected character {segment[pos]!r}",
                line_no,
                col_offset + pos + 1,
            )
        kind = m.lastgroup or "op"
        tokens.append(_Token(kind, m.group(), col_offset + m.start() + 1))
        pos = m.end()
    return tokens


@dataclass
class _Affine:
    """A linear expression: const + sum(coeff * var)."""

    const: float = 0.0
    terms: dict[str, float] = field(default_factory=dict)

    def scaled(self, k: float) -> "_Affine":
        return _Affine(self.const * k, {v: a * k for v, a in self.terms.items()})

    def plus(self, other: "_Affine", sign: float = 1.0) -> "_Affine":
        terms = dict(self.terms)
        for v, a in other.terms.items():
            terms[v] = terms.get(v, 0.0) + sign * a
        return _Affine(self.const + sign * other.const, terms)


class _ExprParser:
    """Recursive-descent evaluation of (possibly linear) expressions.

    ``resolve_ident`` maps an identifier to either a scalar (parameters,
    the ``inf`` literal) or a variable reference; products of two
    variable-bearing expressions are rejected as nonlinear.
    """

    def __init__(self, tokens: list[_Token], line_no: int, env: "_Env"):
        self.tokens = tokens
        self.pos = 0
        self.line_no = line_no
        self.env = env

    def _peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            raise ParseError("unexpected end of expression", self.line_no)
        self.pos += 1
        return tok

    def parse(self) -> _Affine:
        value = self._expr()
        tok = self._peek()
        if tok is not None:
            raise ParseError(
                f"unexpected {tok.text!r} after expression", self.line_no, tok.column
            )
        return value

    def _expr(self) -> _Affine:
        value = self._term()
        while True:
            tok = self._peek()
            if tok is None or tok.kind != "op" or tok.text not in "+-":
                return value
            self._next()
            value = value.plus(self._term(), 1.0 if tok.text == "+" else -1.0)

    def _term(self) -> _Affine:
        value = self._factor()
        while True:
            tok = self._peek()
            if tok is None:
                return value
            if tok.kind == "op" and tok.text in "*/":
                self._next()
                rhs = self._factor()
                value = self._combine(value, rhs, tok)
            elif tok.kind in ("num", "ident") or (tok.kind == "op" and tok.text == "("):
                # juxtaposition, e.g. "500 A", is implicit multiplication
                rhs = self._factor()
                value = self._combine(value, rhs, _Token("op", "*", tok.column))
            else:
                return value

    def _combine(self, lhs: _Affine, rhs: _Affine, op: _Token) -> _Affine:
        if op.text == "*":
            if lhs.terms and rhs.terms:
                raise ParseError(
                    "nonlinear term (product of two variables)",
                    self.line_no,
                    op.column,
                )
            if rhs.terms:
                lhs, rhs = rhs, lhs
            return lhs.scaled(rhs.const)
        if rhs.terms:
            raise ParseError(
                "nonlinear term (division by a variable)", self.line_no, op.column
            )
        if rhs.const == 0.0:
            raise ParseError("division by zero in expression", self.line_no, op.column)
        return lhs.scaled(1.0 / rhs.const)

    def _factor(self) -> _Affine:
        tok = self._peek()
        sign = 1.0
        while tok is not None and tok.kind == "op" and tok.text in "+-":
            if tok.text == "-":
                sign = -sign
            self._next()
            tok = self._peek()
        return self._primary().scaled(sign)

    def _primary(self) -> _Affine:
        tok = self._next()
        if tok.kind == "num":
            return _Affine(float(tok.text))
        if tok.kind == "ident":
            return self.env.resolve(tok, self.line_no)
        if tok.kind == "op" and tok.text == "(":
            value = self._expr()
            closing = self._peek()
            if closing is None or closing.text != ")":
                raise ParseError("missing ')'", self.line_no, tok.column)
            self._next()
            return value
        raise ParseError(f"unexpected {tok.text!r}", self.line_no, tok.column)


class _Env:
    """Identifier resolution for one expression evaluation."""

    def __init__(
        self,
        params: "_ParamResolver",
        declared: dict[str, int] | None,
        declaring: bool = False,
    ):
        self.params = params
        self.declared = declared  # variable name -> ordinal; None forbids variables
        self.declaring = declaring

    def resolve(self, tok: _Token, line_no: int) -> _Affine:
        name = tok.text
        if name == "inf":
            return _Affine(INF)
        if self.params.defines(name):
            return _Affine(self.params.value_of(name, line_no))
        if self.declared is None:
            raise ParseError(
                f"unresolvable parameter reference {name!r}", line_no, tok.column
            )
        if self.declaring:
            if name not in self.declared:
                self.declared[name] = len(self.declared)
            return _Affine(0.0, {name: 1.0})
        if name not in self.declared:
            raise ParseError(
                f"undeclared variable {name!r} in constraint", line_no, tok.column
            )
        return _Affine(0.0, {name: 1.0})


class _ParamResolver:
    """Evaluates parameters under shadowing semantics.

    Every reference sees the *effective* definition (greatest ordinal), so
    evaluation order is independent of where a parameter is referenced.
    """

    def __init__(self) -> None:
        self.raw: list[tuple[str, list[_Token], int]] = []  # (name, tokens, line)
        self.effective: dict[str, int] = {}  # name -> index into raw
        self._cache: dict[str, float] = {}
        self._resolving: set[str] = set()

    def add(self, name: str, tokens: list[_Token], line_no: int) -> None:
        self.raw.append((name, tokens, line_no))
        self.effective[name] = len(self.raw) - 1

    def defines(self, name: str) -> bool:
        return name in self.effective

    def value_of(self, name: str, line_no: int) -> float:
        if name in self._cache:
            return self._cache[name]
        if name in self._resolving:
            raise ParseError(f"circular parameter definition {name!r}", line_no)
        self._resolving.add(name)
        try:
            _, tokens, def_line = self.raw[self.effective[name]]
            value = self._eval(tokens, def_line)
        finally:
            self._resolving.discard(name)
        self._cache[name] = value
        return value

    def _eval(self, tokens: list[_Token], line_no: int) -> float:
        env = _Env(self, declared=None)
        affine = _ExprParser(tokens, line_no, env).parse()
        return affine.const

    def definitions(self) -> list[ParamDef]:
        out = []
        for ordinal, (name, tokens, line_no) in enumerate(self.raw):
            out.append(ParamDef(name=name, value=self._eval(tokens, line_no), ordinal=ordinal))
        return out


def _split_relations(tokens: list[_Token]) -> list[int]:
    return [i for i, t in enumerate(tokens) if t.kind == "rel"]


def looks_like_param_line(line: str) -> bool:
    """Shallow grammar check for one data-region line (used by the local
    safety gate): 'param NAME = <tokenizable expression>'."""
    m = _PARAM_LINE.match(line.strip())
    if not m:
        return False
    try:
        return bool(_tokenize(m.group("expr"), 0))
    except ParseError:
        return False


def looks_like_constraint_line(line: str) -> bool:
    """Shallow grammar check for one constraint-region line: 'NAME: <expr>
    <relation> <expr>' with one or two relations, all tokens legal."""
    stripped = line.strip()
    if _PARAM_LINE.match(stripped) or _OBJECTIVE_LINE.match(stripped):
        return False
    m = _CONSTRAINT_LINE.match(stripped)
    if not m:
        return False
    try:
        tokens = _tokenize(m.group("expr"), 0)
    except ParseError:
        return False
    return len(_split_relations(tokens)) in (1, 2)


def parse_model(text: str) -> LinearModel:
    """Parse DSL text into a fully evaluated model.

    Raises :class:`ParseError` on syntax errors, undeclared variables,
    nonlinear terms, marker problems, or unresolvable parameters.
    """
    lines = text.splitlines()
    marker_lines: dict[str, list[int]] = {m: [] for m in MARKERS}
    description: list[str] = []
    in_description = True

    params = _ParamResolver()
    objective: tuple[Sense, list[_Token], int] | None = None
    raw_constraints: list[tuple[str, list[_Token], int]] = []
    raw_bounds: list[tuple[list[_Token], int]] = []
    integer_names: list[tuple[str, int]] = []
    section = "top"
    subject_seen = False

    for idx, raw_line in enumerate(lines):
        line_no = idx + 1
        stripped = raw_line.strip()
        if stripped in MARKERS:
            in_description = False
            marker_lines[stripped].append(line_no)
            continue
        if not stripped:
            in_description = False
            continue
        if stripped.startswith("#"):
            if in_description:
                description.append(stripped[1:].strip())
            continue
        in_description = False

        m = _SUBJECT_LINE.match(stripped)
        if m:
            if subject_seen:
                raise ParseError("duplicate 'subject to:' section", line_no)
            subject_seen = True
            section = "subject"
            continue
        m = _BOUNDS_LINE.match(stripped)
        if m:
            section = "bounds"
            continue
        m = _INTEGERS_LINE.match(stripped)
        if m:
            for name in m.group("names").replace(",", " ").split():
                if not re.fullmatch(_IDENT_RE, name):
                    raise ParseError(f"invalid variable name {name!r}", line_no)
                integer_names.append((name, line_no))
            continue
        m = _OBJECTIVE_LINE.match(stripped)
        if m:
            if objective is not None:
                raise ParseError("multiple objective lines", line_no)
            sense = Sense(m.group("sense"))
            objective = (sense, _tokenize(m.group("expr"), line_no), line_no)
            continue
        m = _PARAM_LINE.match(stripped)
        if m:
            if section == "subject":
                raise ParseError(
                    "param definition inside 'subject to:' section", line_no
                )
            params.add(m.group("name"), _tokenize(m.group("expr"), line_no), line_no)
            continue

        if section == "subject":
            m = _CONSTRAINT_LINE.match(stripped)
            if not m:
                raise ParseError(
                    "expected 'NAME: <expr> <relation> <expr>' constraint", line_no
                )
            raw_constraints.append(
                (m.group("name"), _tokenize(m.group("expr"), line_no), line_no)
            )
            continue
        if section == "bounds":
            raw_bounds.append((_tokenize(stripped, line_no), line_no))
            continue
        raise ParseError(f"unrecognized directive {stripped.split()[0]!r}", line_no)

    for marker in MARKERS:
        if not marker_lines[marker]:
            raise ParseError(f"missing marker line {marker!r}")
        if len(marker_lines[marker]) > 1:
            raise ParseError(
                f"duplicated marker line {marker!r}", marker_lines[marker][1]
            )
    positions = [marker_lines[m][0] for m in MARKERS]
    if positions != sorted(positions):
        raise ParseError("marker lines out of order")
    con_begin, con_end = positions[2], positions[3]

    if objective is None:
        raise ParseError("missing objective line ('minimize:' or 'maximize:')")
    sense, obj_tokens, obj_line = objective
    declared: dict[str, int] = {}
    obj_affine = _ExprParser(
        obj_tokens, obj_line, _Env(params, declared, declaring=True)
    ).parse()
    if obj_affine.const != 0.0:
        # parameters resolve before variables, so a parameter used bare in
        # the objective lands here rather than declaring a variable
        raise ParseError(
            f"objective has a constant term ({obj_affine.const})", obj_line
        )

    lower = {name: 0.0 for name in declared}
    upper = {name: INF for name in declared}
    is_integer = {name: False for name in declared}

    for tokens, line_no in raw_bounds:
        rels = _split_relations(tokens)
        if len(rels) == 1:
            i = rels[0]
            rel = tokens[i].text
            if rel not in ("<=", ">="):
                raise ParseError("bounds lines use '<=' or '>='", line_no)
            if i != 1 or tokens[0].kind != "ident":
                raise ParseError("expected 'NAME <= value' or 'NAME >= value'", line_no)
            name = tokens[0].text
            if name not in declared:
                raise ParseError(f"undeclared variable {name!r} in bounds", line_no)
            value = _ExprParser(tokens[i + 1 :], line_no, _Env(params, None)).parse().const
            if rel == ">=":
                lower[name] = value
            else:
                upper[name] = value
        elif len(rels) == 2:
            i, j = rels
            if tokens[i].text != "<=" or tokens[j].text != "<=":
                raise ParseError("two-sided bounds use 'lo <= NAME <= hi'", line_no)
            if j != i + 2 or tokens[i + 1].kind != "ident":
                raise ParseError("expected a single variable between bounds", line_no)
            name = tokens[i + 1].text
            if name not in declared:
                raise ParseError(f"undeclared variable {name!r} in bounds", line_no)
            lo = _ExprParser(tokens[:i], line_no, _Env(params, None)).parse().const
            hi = _ExprParser(tokens[j + 1 :], line_no, _Env(params, None)).parse().const
            lower[name] = lo
            upper[name] = hi
        else:
            raise ParseError("malformed bounds line", line_no)

    for name, line_no in integer_names:
        if name not in declared:
            raise ParseError(f"undeclared variable {name!r} in integers", line_no)
        is_integer[name] = True

    variables = tuple(
        VariableDef(
            name=name,
            lower=lower[name],
            upper=upper[name],
            objective_coeff=obj_affine.terms.get(name, 0.0),
            is_integer=is_integer[name],
            ordinal=ordinal,
        )
        for name, ordinal in declared.items()
    )

    constraints: list[ConstraintDef] = []
    seen_names: set[str] = set()
    for ordinal, (name, tokens, line_no) in enumerate(raw_constraints):
        if name in seen_names:
            raise ParseError(f"duplicate constraint name {name!r}", line_no)
        seen_names.add(name)
        rels = _split_relations(tokens)
        env = _Env(params, declared)
        if len(rels) == 1:
            i = rels[0]
            lhs = _ExprParser(tokens[:i], line_no, env).parse()
            rhs = _ExprParser(tokens[i + 1 :], line_no, _Env(params, None)).parse().const
            rel = tokens[i].text
            base = rhs - lhs.const
            if rel == ">=":
                lo, hi = base, INF
            elif rel == "<=":
                lo, hi = -INF, base
            else:
                lo = hi = base
        elif len(rels) == 2:
            i, j = rels
            if tokens[i].text != "<=" or tokens[j].text != "<=":
                raise ParseError(
                    "two-sided constraints use 'lo <= <expr> <= hi'", line_no
                )
            lo_const = _ExprParser(tokens[:i], line_no, _Env(params, None)).parse().const
            lhs = _ExprParser(tokens[i + 1 : j], line_no, env).parse()
            hi_const = _ExprParser(tokens[j + 1 :], line_no, _Env(params, None)).parse().const
            lo, hi = lo_const - lhs.const, hi_const - lhs.const
        else:
            raise ParseError("constraint needs exactly one or two relations", line_no)
        terms = {v: a for v, a in lhs.terms.items() if a != 0.0}
        region = Region.EDITABLE if con_begin < line_no < con_end else Region.FIXED
        constraints.append(
            ConstraintDef(
                name=name, terms=terms, lower=lo, upper=hi, region=region, ordinal=ordinal
            )
        )

    return LinearModel(
        sense=sense,
        description="\n".join(description),
        params=tuple(params.definitions()),
        variables=variables,
        constraints=tuple(constraints),
        source_text=text,
    )
