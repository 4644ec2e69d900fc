"""
Text format for switched-system models.

A model file looks like

    system example7 {
      kind state;
      var x1, x2;
      mode p { ode { x1' = -x1 + 10*x2; x2' = -100*x1 - x2 } domain x1*x2 >= 0 }
      lyapunov p : x1^2 - 33/20*x1*x2 + x2^2;
    }

Decimal literals are read as exact rationals. Comparisons use <, <=, ==,
>=, >; connectives are &, |, ! and ->. See docs/model_format.md.
"""

import logging
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from lark import Lark, Token, Transformer, Tree, v_args
from lark.exceptions import UnexpectedInput, VisitError

from src.core.errors import ModelError
from src.core.polynomial import Poly, VectorField
from src.model.model import TIMER, Diagnostics, Kind, Mode, SwitchedModel, Transition
from src.model.predicate import Predicate

logger = logging.getLogger(__name__)

GRAMMAR = r"""
start: "system" NAME "{" item* "}"

?item: const_decl
     | var_decl
     | aux_decl
     | kind_decl
     | mode_decl
     | transition_decl
     | lyapunov_decl
     | rate_decl
     | sigma_decl
     | region_decl
     | ghost_decl

const_decl: "const" NAME "=" expr ";"
var_decl: "var" NAME ("," NAME)* ";"
aux_decl: "aux" NAME ("," NAME)* ";"
kind_decl: "kind" NAME ";"
mode_decl: "mode" NAME "{" ode_block mode_clause* "}"
ode_block: "ode" "{" [ode_eq (";" ode_eq)* ";"?] "}"
ode_eq: NAME "'" "=" expr
?mode_clause: "domain" expr -> domain_clause
            | "maxdwell" expr -> maxdwell_clause
transition_decl: "transition" NAME "->" NAME trans_clause* ";"
?trans_clause: "when" expr -> guard_clause
             | "reset" assign ("," assign)* -> reset_clause
             | "mindwell" expr -> mindwell_clause
assign: NAME ":=" expr
lyapunov_decl: "lyapunov" NAME? ":" expr ";"
rate_decl: "rate" NAME ":" expr ";"
sigma_decl: "sigma" ":" expr ";"
region_decl: "region" expr ";"
ghost_decl: "ghost" NAME "by" expr ";"

?expr: implication
?implication: disjunction
            | disjunction "->" implication -> implies
?disjunction: conjunction
            | disjunction "|" conjunction -> or_
?conjunction: negation
            | conjunction "&" negation -> and_
?negation: comparison
         | "!" negation -> not_
?comparison: sum
           | sum CMP sum -> compare
?sum: product
    | sum "+" product -> add
    | sum "-" product -> sub
?product: unary
        | product "*" unary -> mul
        | product "/" unary -> div
?unary: power
      | "-" unary -> neg
?power: atom
      | atom "^" NUMBER -> pow
?atom: NUMBER -> number
     | "true" -> true
     | "false" -> false
     | NAME -> name
     | "(" expr ")"

CMP: "<=" | ">=" | "==" | "<" | ">"
NAME: /[A-Za-z_][A-Za-z0-9_]*/
NUMBER: /(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?/
COMMENT: /\/\/[^\n]*/ | /#[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""

_PARSER = Lark(GRAMMAR, parser="lalr", propagate_positions=True)


class _ExprError(Exception):
    def __init__(self, message: str, token: Optional[Token] = None):
        super().__init__(message)
        self.line = getattr(token, "line", None)
        self.column = getattr(token, "column", None)


@v_args(inline=True)
class ExpressionEvaluator(Transformer):
    """Turns expression subtrees into Poly or Predicate values"""

    def __init__(self, variables: Tuple[str, ...], constants: Dict[str, Fraction]):
        super().__init__()
        self.variables = variables
        self.constants = constants

    def _poly(self, value, what: str) -> Poly:
        if not isinstance(value, Poly):
            raise _ExprError(f"{what} needs a polynomial operand, got a predicate")
        return value

    def _pred(self, value, what: str) -> Predicate:
        if not isinstance(value, Predicate):
            raise _ExprError(f"{what} needs a predicate operand, got a polynomial")
        return value

    def number(self, token):
        return Poly.constant(self.variables, Fraction(str(token)))

    def name(self, token):
        name = str(token)
        if name in self.constants:
            return Poly.constant(self.variables, self.constants[name])
        if name in self.variables:
            return Poly.variable(self.variables, name)
        raise _ExprError(f"unknown variable '{name}'", token)

    def true(self):
        return Predicate.true()

    def false(self):
        return Predicate.false()

    def add(self, a, b):
        return self._poly(a, "+") + self._poly(b, "+")

    def sub(self, a, b):
        return self._poly(a, "-") - self._poly(b, "-")

    def mul(self, a, b):
        return self._poly(a, "*") * self._poly(b, "*")

    def div(self, a, b):
        b = self._poly(b, "/")
        if not b.is_constant() or b.is_zero():
            raise _ExprError("division is only allowed by a nonzero constant")
        return self._poly(a, "/") / b.constant_term()

    def neg(self, a):
        return -self._poly(a, "unary -")

    def pow(self, base, token):
        exponent = Fraction(str(token))
        if exponent.denominator != 1:
            raise _ExprError(f"exponent must be a nonnegative integer, got {token}", token)
        return self._poly(base, "^") ** int(exponent)

    def compare(self, a, op, b):
        return Predicate.atom(self._poly(a, str(op)) - self._poly(b, str(op)), str(op))

    def and_(self, a, b):
        return self._pred(a, "&") & self._pred(b, "&")

    def or_(self, a, b):
        return self._pred(a, "|") | self._pred(b, "|")

    def not_(self, a):
        return self._pred(a, "!").negate()

    def implies(self, a, b):
        return self._pred(a, "->").implies(self._pred(b, "->"))


def _line(tree: Union[Tree, Token]) -> Tuple[Optional[int], Optional[int]]:
    if isinstance(tree, Token):
        return tree.line, tree.column
    meta = getattr(tree, "meta", None)
    if meta is not None and not meta.empty:
        return meta.line, meta.column
    return None, None


class ModelBuilder:
    """Builds a SwitchedModel from a parse tree, collecting diagnostics"""

    def __init__(self):
        self.diagnostics = Diagnostics()
        self.constants: Dict[str, Fraction] = {}
        self.variables: Tuple[str, ...] = ()

    def _error(self, code: str, message: str, where=None):
        line, column = _line(where) if where is not None else (None, None)
        self.diagnostics.error(code, message, line, column)

    def _evaluate(self, tree, variables: Tuple[str, ...]):
        try:
            return ExpressionEvaluator(variables, self.constants).transform(tree)
        except VisitError as e:
            orig = e.orig_exc
            if isinstance(orig, _ExprError):
                line, column = (orig.line, orig.column) if orig.line is not None else _line(tree)
                self.diagnostics.error("expression", str(orig), line, column)
                return None
            if isinstance(orig, (ModelError, ValueError, ZeroDivisionError)):
                line, column = _line(tree)
                self.diagnostics.error("expression", str(orig), line, column)
                return None
            logger.debug("expression evaluation failed", exc_info=orig)
            line, column = _line(tree)
            self.diagnostics.error("expression", f"cannot evaluate expression: {orig}", line, column)
            return None

    def _poly(self, tree) -> Optional[Poly]:
        value = self._evaluate(tree, self.variables)
        if value is None:
            return None
        if not isinstance(value, Poly):
            self._error("type", "expected a polynomial, got a predicate", tree)
            return None
        return value

    def _predicate(self, tree) -> Optional[Predicate]:
        value = self._evaluate(tree, self.variables)
        if value is None:
            return None
        if not isinstance(value, Predicate):
            self._error("type", "expected a predicate, got a polynomial", tree)
            return None
        return value

    def _constant(self, tree, what: str) -> Optional[Fraction]:
        value = self._evaluate(tree, ())
        if value is None:
            return None
        if not isinstance(value, Poly) or not value.is_constant():
            self._error("type", f"{what} must be a constant expression", tree)
            return None
        return value.constant_term()

    def build(self, tree: Tree) -> Optional[SwitchedModel]:
        name = str(tree.children[0])
        items = tree.children[1:]
        kind = Kind.STATE
        state: List[str] = []
        aux: List[str] = []

        # declarations first so items may appear in any order
        for item in items:
            if item.data == "kind_decl":
                token = item.children[0]
                try:
                    kind = Kind(str(token))
                except ValueError:
                    self._error("kind", f"unknown kind '{token}'", token)
            elif item.data in ("var_decl", "aux_decl"):
                target = state if item.data == "var_decl" else aux
                for token in item.children:
                    if str(token) in state or str(token) in aux:
                        self._error("duplicate", f"variable '{token}' declared twice", token)
                    else:
                        target.append(str(token))
            elif item.data == "const_decl":
                token, expr = item.children
                if str(token) in self.constants:
                    self._error("duplicate", f"constant '{token}' defined twice", token)
                    continue
                value = self._constant(expr, f"constant '{token}'")
                if value is not None:
                    self.constants[str(token)] = value

        clashes = [v for v in state + aux if v in self.constants]
        for v in clashes:
            self._error("duplicate", f"'{v}' is both a constant and a variable")
        if kind == Kind.TIMED and TIMER in state + aux:
            self._error("duplicate", f"'{TIMER}' is reserved for the dwell timer of timed models")
        if not state:
            self._error("declaration", "at least one state variable is required")

        timer = (TIMER,) if kind == Kind.TIMED else ()
        self.variables = tuple(state) + tuple(aux) + timer

        modes: List[Mode] = []
        transitions: List[Transition] = []
        annotations: List[Tuple[Optional[Token], Tree]] = []
        rates: Dict[str, Fraction] = {}
        sigma: Optional[Fraction] = None
        region: Optional[Predicate] = None
        ghosts: List[Tuple[Token, Tree]] = []

        for item in items:
            if item.data == "mode_decl":
                mode = self._mode(item, state, aux, kind)
                if mode is not None:
                    if mode.id in [m.id for m in modes]:
                        self._error("duplicate", f"duplicate mode id '{mode.id}'", item.children[0])
                    else:
                        modes.append(mode)
            elif item.data == "transition_decl":
                transition = self._transition(item)
                if transition is not None:
                    transitions.append(transition)
            elif item.data == "lyapunov_decl":
                if len(item.children) == 2:
                    annotations.append((item.children[0], item.children[1]))
                else:
                    annotations.append((None, item.children[0]))
            elif item.data == "rate_decl":
                token, expr = item.children
                value = self._constant(expr, f"rate of '{token}'")
                if value is not None:
                    rates[str(token)] = value
            elif item.data == "sigma_decl":
                sigma = self._constant(item.children[0], "sigma")
            elif item.data == "region_decl":
                region = self._predicate(item.children[0])
            elif item.data == "ghost_decl":
                ghosts.append((item.children[0], item.children[1]))

        if not modes:
            self._error("declaration", "at least one mode is required")

        mode_ids = {m.id for m in modes}
        for t in transitions:
            for endpoint in (t.source, t.target):
                if endpoint not in mode_ids:
                    self._error("unknown-mode", f"transition {t.label} refers to unknown mode '{endpoint}'")

        if not self.diagnostics.accepted:
            return None

        model = SwitchedModel(
            name=name,
            kind=kind,
            state_vars=tuple(state),
            modes=tuple(modes),
            transitions=tuple(transitions),
            aux_vars=tuple(aux),
            constants=dict(self.constants),
            rates={},
            sigma=sigma,
            region=region,
        )

        for token, expr in ghosts:
            split = self._poly(expr)
            if split is None:
                continue
            from src.model.transforms import ghost_split

            try:
                model = ghost_split(model, str(token), split)
            except ModelError as e:
                self._error("ghost", str(e), token)

        lyapunov: Dict[str, Poly] = {}
        common: Optional[Poly] = None
        for token, expr in annotations:
            v = self._poly(expr)
            if v is None:
                continue
            if token is None:
                common = v
            elif str(token) not in model.mode_ids:
                self._error("unknown-mode", f"Lyapunov annotation for unknown mode '{token}'", token)
            else:
                lyapunov[str(token)] = v
        for mode_id in rates:
            if mode_id not in model.mode_ids:
                self._error("unknown-mode", f"rate annotation for unknown mode '{mode_id}'")

        if not self.diagnostics.accepted:
            return None
        return model.with_changes(lyapunov=lyapunov, common_lyapunov=common, rates=rates)

    def _mode(self, item: Tree, state: List[str], aux: List[str], kind: Kind) -> Optional[Mode]:
        token, ode_block, *clauses = item.children
        rhs: Dict[str, Poly] = {}
        ok = True
        for eq in ode_block.children:
            if eq is None:
                continue
            var, expr = eq.children
            if str(var) not in state + aux:
                self._error("unknown-variable", f"ODE for undeclared variable '{var}' in mode '{token}'", var)
                ok = False
                continue
            if str(var) in rhs:
                self._error("duplicate", f"two ODEs for '{var}' in mode '{token}'", var)
                ok = False
                continue
            p = self._poly(expr)
            if p is None:
                ok = False
                continue
            rhs[str(var)] = p
        for v in state:
            if v not in rhs and ok:
                self._error("missing-ode", f"mode '{token}' lacks an ODE for state variable '{v}'", token)
                ok = False
        for v in aux:
            rhs.setdefault(v, Poly.zero(self.variables))
        if kind == Kind.TIMED:
            rhs[TIMER] = Poly.constant(self.variables, 1)

        domain = Predicate.true()
        max_dwell = None
        for clause in clauses:
            if clause.data == "domain_clause":
                pred = self._predicate(clause.children[0])
                if pred is None:
                    ok = False
                else:
                    domain = domain & pred
            elif clause.data == "maxdwell_clause":
                max_dwell = self._constant(clause.children[0], f"max dwell of '{token}'")
                if max_dwell is not None and max_dwell <= 0:
                    self._error("dwell", f"max dwell of '{token}' must be positive", token)
                    ok = False
        if not ok:
            return None
        try:
            vector_field = VectorField(self.variables, rhs)
        except ModelError as e:
            self._error("field", str(e), token)
            return None
        return Mode(str(token), vector_field, domain, max_dwell)

    def _transition(self, item: Tree) -> Optional[Transition]:
        source, target, *clauses = item.children
        guard = Predicate.true()
        reset: List[Tuple[str, Poly]] = []
        min_dwell = None
        ok = True
        for clause in clauses:
            if clause.data == "guard_clause":
                pred = self._predicate(clause.children[0])
                if pred is None:
                    ok = False
                else:
                    guard = guard & pred
            elif clause.data == "reset_clause":
                for assign in clause.children:
                    var, expr = assign.children
                    if str(var) not in self.variables:
                        self._error("unknown-variable", f"reset of undeclared variable '{var}'", var)
                        ok = False
                        continue
                    value = self._poly(expr)
                    if value is None:
                        ok = False
                        continue
                    reset.append((str(var), value))
            elif clause.data == "mindwell_clause":
                min_dwell = self._constant(clause.children[0], f"min dwell of {source}->{target}")
                if min_dwell is not None and min_dwell < 0:
                    self._error("dwell", f"min dwell of {source}->{target} must be nonnegative", source)
                    ok = False
        if not ok:
            return None
        return Transition(str(source), str(target), guard, tuple(reset), min_dwell)


def parse_model(text: str) -> Union[SwitchedModel, Diagnostics]:
    """Parse model text into a SwitchedModel, or Diagnostics on any error"""
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        diagnostics = Diagnostics()
        diagnostics.error("syntax", f"unexpected input: {str(e).splitlines()[0]}", e.line, e.column)
        return diagnostics

    builder = ModelBuilder()
    model = builder.build(tree)
    if model is None:
        return builder.diagnostics
    return model


def parse_predicate(text: str, model: SwitchedModel) -> Predicate:
    """Parse a standalone predicate over the model's variables"""
    wrapped = f"system _p {{ var {', '.join(model.state_vars)}; region {text}; }}"
    try:
        tree = _PARSER.parse(wrapped)
    except UnexpectedInput as e:
        raise ModelError(f"Could not parse predicate '{text}'", e.line, e.column) from e
    builder = ModelBuilder()
    builder.constants = dict(model.constants)
    builder.variables = model.variables
    region_items = [c for c in tree.children[1:] if c.data == "region_decl"]
    pred = builder._predicate(region_items[0].children[0])
    if pred is None:
        raise ModelError("; ".join(str(d) for d in builder.diagnostics))
    return pred


def parse_annotations(text: str, model: SwitchedModel) -> Tuple[Dict[str, Poly], Optional[Poly]]:
    """Read 'lyapunov [mode] : expr;' lines against an existing model"""
    wrapped = f"system _a {{ var {', '.join(model.state_vars)}; {text} }}"
    try:
        tree = _PARSER.parse(wrapped)
    except UnexpectedInput as e:
        raise ModelError("Could not parse candidate file", e.line, e.column) from e
    builder = ModelBuilder()
    builder.constants = dict(model.constants)
    builder.variables = model.variables
    per_mode: Dict[str, Poly] = {}
    common: Optional[Poly] = None
    for item in tree.children[1:]:
        if item.data != "lyapunov_decl":
            continue
        token = item.children[0] if len(item.children) == 2 else None
        v = builder._poly(item.children[-1])
        if v is None:
            raise ModelError("; ".join(str(d) for d in builder.diagnostics))
        if token is None:
            common = v
        elif str(token) not in model.mode_ids:
            raise ModelError(f"Candidate for unknown mode '{token}'", token.line, token.column)
        else:
            per_mode[str(token)] = v
    return per_mode, common


def load_model(path: Union[str, Path], check: bool = True) -> SwitchedModel:
    """Read a model file; raises ModelError listing every diagnostic"""
    model_path = Path(path)
    if not model_path.exists():
        raise ModelError(f"Model file not found: {model_path}")
    result = parse_model(model_path.read_text(encoding="utf-8"))
    if isinstance(result, Diagnostics):
        raise ModelError(f"{model_path}: " + "; ".join(str(d) for d in result.entries))
    if check:
        from src.model.wellformed import well_formed

        diagnostics = well_formed(result)
        if not diagnostics.accepted:
            raise ModelError(f"{model_path}: " + "; ".join(str(d) for d in diagnostics.entries))
        for warning in diagnostics.warnings:
            logger.warning("%s: %s", model_path, warning)
    return result


def _fmt(value: Fraction) -> str:
    return str(value)


def format_model(model: SwitchedModel) -> str:
    """Canonical text form; parse_model(format_model(m)) equals m"""
    lines = [f"system {model.name} {{", f"  kind {model.kind.value};"]
    for name, value in model.constants.items():
        lines.append(f"  const {name} = {_fmt(value)};")
    lines.append(f"  var {', '.join(model.state_vars)};")
    if model.aux_vars:
        lines.append(f"  aux {', '.join(model.aux_vars)};")
    for mode in model.modes:
        equations = []
        for v in model.state_vars + model.aux_vars:
            p = mode.field[v]
            if v in model.aux_vars and p.is_zero():
                continue
            equations.append(f"{v}' = {p}")
        lines.append(f"  mode {mode.id} {{")
        lines.append(f"    ode {{ {'; '.join(equations)} }}")
        if not mode.domain.is_true() or mode.domain.disjuncts != ((),):
            lines.append(f"    domain {mode.domain}")
        if mode.max_dwell is not None:
            lines.append(f"    maxdwell {_fmt(mode.max_dwell)}")
        lines.append("  }")
    for t in model.transitions:
        parts = [f"  transition {t.source} -> {t.target}"]
        if t.guard.disjuncts != ((),):
            parts.append(f"when {t.guard}")
        if t.reset:
            parts.append("reset " + ", ".join(f"{v} := {p}" for v, p in t.reset))
        if t.min_dwell is not None:
            parts.append(f"mindwell {_fmt(t.min_dwell)}")
        lines.append(" ".join(parts) + ";")
    if model.common_lyapunov is not None:
        lines.append(f"  lyapunov : {model.common_lyapunov};")
    for mode_id, v in model.lyapunov.items():
        lines.append(f"  lyapunov {mode_id} : {v};")
    for mode_id, rate in model.rates.items():
        lines.append(f"  rate {mode_id} : {_fmt(rate)};")
    if model.sigma is not None:
        lines.append(f"  sigma : {_fmt(model.sigma)};")
    if model.region is not None:
        lines.append(f"  region {model.region};")
    lines.append("}")
    return "\n".join(lines) + "\n"
