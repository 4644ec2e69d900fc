"""
Exact multivariate polynomials over the rationals.

A Poly is a sparse map from exponent tuples to Fraction coefficients over an
ordered tuple of variable names. Arithmetic between polynomials over
different variable tuples aligns them on the union of their variables, so
callers never have to pre-embed operands.
"""

import logging
import math
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from src.core.errors import ModelError

logger = logging.getLogger(__name__)

Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]


def to_rational(value) -> Fraction:
    """Convert int, Fraction, decimal string or finite float to an exact Fraction"""
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Not a rational literal: {value!r}") from e
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"Non-finite value cannot be made exact: {value}")
        return Fraction(value)
    raise TypeError(f"Cannot convert {type(value).__name__} to a rational")


def format_rational(value: Fraction) -> str:
    return str(value)


def grlex_key(monomial: Monomial) -> Tuple[int, Monomial]:
    return (sum(monomial), monomial)


class Poly:
    """Sparse polynomial with Fraction coefficients"""

    __slots__ = ("variables", "_terms")

    def __init__(self, variables: Iterable[str], terms: Optional[Mapping[Monomial, Scalar]] = None):
        names = tuple(variables)
        if len(set(names)) != len(names):
            raise ModelError(f"Duplicate variable in {names}")
        clean: Dict[Monomial, Fraction] = {}
        for monomial, coefficient in (terms or {}).items():
            monomial = tuple(int(e) for e in monomial)
            if len(monomial) != len(names):
                raise ValueError(f"Monomial {monomial} does not match variables {names}")
            if any(e < 0 for e in monomial):
                raise ValueError(f"Negative exponent in {monomial}")
            c = to_rational(coefficient)
            if c != 0:
                clean[monomial] = clean.get(monomial, Fraction(0)) + c
                if clean[monomial] == 0:
                    del clean[monomial]
        self.variables: Tuple[str, ...] = names
        self._terms: Dict[Monomial, Fraction] = clean

    # construction

    @classmethod
    def zero(cls, variables: Iterable[str]) -> "Poly":
        return cls(variables)

    @classmethod
    def constant(cls, variables: Iterable[str], value: Scalar) -> "Poly":
        names = tuple(variables)
        return cls(names, {(0,) * len(names): value})

    @classmethod
    def variable(cls, variables: Iterable[str], name: str) -> "Poly":
        names = tuple(variables)
        if name not in names:
            raise ModelError(f"Unknown variable '{name}'")
        exps = tuple(1 if v == name else 0 for v in names)
        return cls(names, {exps: 1})

    @classmethod
    def from_sparse(cls, variables: Iterable[str], terms: Iterable[Tuple[Mapping[str, int], Scalar]]) -> "Poly":
        """Build from [({'x': 2}, c), ...] pairs"""
        names = tuple(variables)
        index = {v: i for i, v in enumerate(names)}
        result: Dict[Monomial, Fraction] = {}
        for powers, c in terms:
            exps = [0] * len(names)
            for var, e in powers.items():
                if var not in index:
                    raise ModelError(f"Unknown variable '{var}'")
                exps[index[var]] += e
            key = tuple(exps)
            result[key] = result.get(key, Fraction(0)) + to_rational(c)
        return cls(names, result)

    # inspection

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> List[Tuple[Monomial, Fraction]]:
        """Terms in descending graded-lexicographic order"""
        return sorted(self._terms.items(), key=lambda kv: grlex_key(kv[0]), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(sum(m) for m in self._terms)

    def min_degree(self) -> int:
        if not self._terms:
            return -1
        return min(sum(m) for m in self._terms)

    def is_constant(self) -> bool:
        return all(sum(m) == 0 for m in self._terms)

    def constant_term(self) -> Fraction:
        return self._terms.get((0,) * len(self.variables), Fraction(0))

    def used_variables(self) -> Tuple[str, ...]:
        used = set()
        for monomial in self._terms:
            for i, e in enumerate(monomial):
                if e:
                    used.add(i)
        return tuple(v for i, v in enumerate(self.variables) if i in used)

    def coefficient(self, powers: Union[Monomial, Mapping[str, int]]) -> Fraction:
        if isinstance(powers, Mapping):
            powers = tuple(powers.get(v, 0) for v in self.variables)
        return self._terms.get(tuple(powers), Fraction(0))

    def leading_term(self) -> Tuple[Monomial, Fraction]:
        if not self._terms:
            raise ValueError("Zero polynomial has no leading term")
        monomial = max(self._terms, key=grlex_key)
        return monomial, self._terms[monomial]

    def max_abs_coefficient(self) -> Fraction:
        return max((abs(c) for c in self._terms.values()), default=Fraction(0))

    def is_homogeneous(self, degree: Optional[int] = None) -> bool:
        degrees = {sum(m) for m in self._terms}
        if not degrees:
            return True
        if len(degrees) != 1:
            return False
        return degree is None or degrees == {degree}

    def homogeneous_part(self, degree: int) -> "Poly":
        return Poly(self.variables, {m: c for m, c in self._terms.items() if sum(m) == degree})

    def sparse(self) -> Tuple[Tuple[Tuple[Tuple[str, int], ...], Fraction], ...]:
        """Variable-order independent representation"""
        out = []
        for monomial, c in self._terms.items():
            powers = tuple(sorted((v, e) for v, e in zip(self.variables, monomial) if e))
            out.append((powers, c))
        return tuple(sorted(out))

    # alignment

    def extend(self, variables: Iterable[str]) -> "Poly":
        """Re-embed over a variable tuple containing every used variable"""
        names = tuple(variables)
        if names == self.variables:
            return self
        index = {v: i for i, v in enumerate(names)}
        for v in self.used_variables():
            if v not in index:
                raise ModelError(f"Variable '{v}' is not in {names}")
        mapping = [index.get(v) for v in self.variables]
        terms: Dict[Monomial, Fraction] = {}
        for monomial, c in self._terms.items():
            exps = [0] * len(names)
            for i, e in enumerate(monomial):
                if e:
                    exps[mapping[i]] = e
            terms[tuple(exps)] = c
        return Poly(names, terms)

    def _coerce(self, other) -> Tuple["Poly", "Poly"]:
        if isinstance(other, Poly):
            if other.variables == self.variables:
                return self, other
            names = self.variables + tuple(v for v in other.variables if v not in self.variables)
            return self.extend(names), other.extend(names)
        return self, Poly.constant(self.variables, to_rational(other))

    # arithmetic

    def __add__(self, other) -> "Poly":
        a, b = self._coerce(other)
        terms = dict(a._terms)
        for m, c in b._terms.items():
            terms[m] = terms.get(m, Fraction(0)) + c
        return Poly(a.variables, terms)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(self.variables, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        a, b = self._coerce(other)
        return a + (-b)

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            c = to_rational(other)
            return Poly(self.variables, {m: c * v for m, v in self._terms.items()})
        a, b = self._coerce(other)
        terms: Dict[Monomial, Fraction] = {}
        for m1, c1 in a._terms.items():
            for m2, c2 in b._terms.items():
                m = tuple(x + y for x, y in zip(m1, m2))
                terms[m] = terms.get(m, Fraction(0)) + c1 * c2
        return Poly(a.variables, terms)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Poly":
        if isinstance(other, Poly):
            if not other.is_constant() or other.is_zero():
                raise ModelError("Division is only defined by a nonzero constant")
            other = other.constant_term()
        c = to_rational(other)
        if c == 0:
            raise ZeroDivisionError("division of a polynomial by zero")
        return self * (1 / c)

    def __pow__(self, exponent: int) -> "Poly":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError(f"Exponent must be a nonnegative integer, got {exponent}")
        result = Poly.constant(self.variables, 1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.sparse() == other.sparse()
        try:
            c = to_rational(other)
        except (TypeError, ValueError):
            return NotImplemented
        return self.is_constant() and self.constant_term() == c

    def __hash__(self) -> int:
        return hash(self.sparse())

    # calculus and evaluation

    def derivative(self, name: str) -> "Poly":
        if name not in self.variables:
            return Poly.zero(self.variables)
        i = self.variables.index(name)
        terms: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            if m[i]:
                dm = m[:i] + (m[i] - 1,) + m[i + 1:]
                terms[dm] = c * m[i]
        return Poly(self.variables, terms)

    def evaluate(self, point: Mapping[str, Scalar]) -> Fraction:
        """Exact value; every used variable must be bound"""
        missing = [v for v in self.used_variables() if v not in point]
        if missing:
            raise ModelError(f"No value for variable '{missing[0]}'")
        values = []
        for v in self.variables:
            if v in point:
                values.append(to_rational(point[v]))
            else:
                values.append(None)
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for value, e in zip(values, m):
                if e:
                    term *= value ** e
            total += term
        return total

    def evaluate_float(self, point: Mapping[str, float]) -> float:
        total = 0.0
        for m, c in self._terms.items():
            term = float(c)
            for v, e in zip(self.variables, m):
                if e:
                    term *= float(point[v]) ** e
            total += term
        return total

    def at_origin(self) -> Fraction:
        return self.constant_term()

    def substitute(self, bindings: Mapping[str, "Poly"]) -> "Poly":
        """Replace variables by polynomials; unbound variables stay"""
        if not bindings:
            return self
        names = list(self.variables)
        for p in bindings.values():
            if isinstance(p, Poly):
                names.extend(v for v in p.variables if v not in names)
        base = tuple(names)
        result = Poly.zero(base)
        power_cache: Dict[Tuple[str, int], Poly] = {}
        for m, c in self._terms.items():
            term = Poly.constant(base, c)
            for v, e in zip(self.variables, m):
                if not e:
                    continue
                if v in bindings:
                    key = (v, e)
                    if key not in power_cache:
                        replacement = bindings[v]
                        if not isinstance(replacement, Poly):
                            replacement = Poly.constant(base, replacement)
                        power_cache[key] = replacement.extend(base) ** e
                    term = term * power_cache[key]
                else:
                    term = term * (Poly.variable(base, v) ** e)
            result = result + term
        return result.extend(base)

    def gradient(self, variables: Sequence[str]) -> List["Poly"]:
        return [self.derivative(v) for v in variables]

    # text

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        pieces: List[str] = []
        for monomial, c in self.items():
            factors = []
            for v, e in zip(self.variables, monomial):
                if e == 1:
                    factors.append(v)
                elif e > 1:
                    factors.append(f"{v}^{e}")
            mono = "*".join(factors)
            if not mono:
                text = format_rational(c)
            elif c == 1:
                text = mono
            elif c == -1:
                text = f"-{mono}"
            else:
                text = f"{format_rational(c)}*{mono}"
            if not pieces:
                pieces.append(text)
            elif text.startswith("-"):
                pieces.append(f" - {text[1:]}")
            else:
                pieces.append(f" + {text}")
        return "".join(pieces)

    def __repr__(self) -> str:
        return f"Poly({str(self)!r} over {self.variables})"

    def to_dict(self) -> Dict[str, object]:
        return {
            "variables": list(self.variables),
            "terms": [[list(m), format_rational(c)] for m, c in self.items()],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "Poly":
        variables = tuple(data["variables"])
        return cls(variables, {tuple(m): Fraction(c) for m, c in data["terms"]})

    def to_source(self, arg_names: Sequence[str]) -> str:
        """Python expression over arg_names (floats or numpy arrays)"""
        if not self._terms:
            return "0.0"
        rename = dict(zip(self.variables, arg_names))
        pieces = []
        for monomial, c in self.items():
            factors = [repr(float(c))]
            for v, e in zip(self.variables, monomial):
                if e == 1:
                    factors.append(rename[v])
                elif e > 1:
                    factors.append(f"{rename[v]}**{e}")
            pieces.append("*".join(factors))
        return "(" + " + ".join(pieces) + ")"


def compile_polys(polys: Sequence[Poly], variables: Sequence[str]) -> Callable[..., tuple]:
    """Compile polynomials into one float function f(*values) -> tuple"""
    args = [f"v{i}" for i in range(len(variables))]
    names = tuple(variables)
    bodies = [p.extend(names).to_source(args) if set(p.used_variables()) <= set(names) else None for p in polys]
    for p, body in zip(polys, bodies):
        if body is None:
            raise ModelError(f"Polynomial {p} uses variables outside {names}")
    source = f"def _compiled({', '.join(args)}):\n    return ({', '.join(bodies)},)\n"
    namespace: Dict[str, object] = {}
    exec(compile(source, "<compiled-polys>", "exec"), namespace)
    return namespace["_compiled"]


def monomials_up_to(n_vars: int, max_degree: int, min_degree: int = 0) -> List[Monomial]:
    """All exponent tuples of total degree in [min_degree, max_degree], grlex ascending"""
    result: List[Monomial] = []

    def rec(prefix: List[int], remaining: int, slots: int) -> Iterator[Monomial]:
        if slots == 1:
            yield tuple(prefix + [remaining])
            return
        for e in range(remaining, -1, -1):
            yield from rec(prefix + [e], remaining - e, slots - 1)

    for d in range(min_degree, max_degree + 1):
        if n_vars == 0:
            if d == 0:
                result.append(())
            continue
        result.extend(sorted(rec([], d, n_vars)))
    return result


def divide(p: Poly, divisors: Sequence[Poly]) -> Tuple[List[Poly], Poly]:
    """Multivariate division in grlex order: p = sum(q_i * g_i) + r"""
    names = p.variables
    for g in divisors:
        names = names + tuple(v for v in g.variables if v not in names)
    gs = [g.extend(names) for g in divisors]
    quotients = [Poly.zero(names) for _ in gs]
    remainder = Poly.zero(names)
    current = p.extend(names)
    leads = [g.leading_term() if not g.is_zero() else None for g in gs]
    while not current.is_zero():
        lm, lc = current.leading_term()
        for i, lead in enumerate(leads):
            if lead is None:
                continue
            gm, gc = lead
            if all(a >= b for a, b in zip(lm, gm)):
                factor = Poly(names, {tuple(a - b for a, b in zip(lm, gm)): lc / gc})
                quotients[i] = quotients[i] + factor
                current = current - factor * gs[i]
                break
        else:
            lead_poly = Poly(names, {lm: lc})
            remainder = remainder + lead_poly
            current = current - lead_poly
    return quotients, remainder


class VectorField:
    """Polynomial right-hand sides, one per variable"""

    def __init__(self, variables: Iterable[str], rhs: Mapping[str, Poly]):
        names = tuple(variables)
        missing = [v for v in names if v not in rhs]
        if missing:
            raise ModelError(f"Vector field lacks a right-hand side for {missing[0]}")
        extra = [v for v in rhs if v not in names]
        if extra:
            raise ModelError(f"Vector field defines undeclared variable {extra[0]}")
        aligned: Dict[str, Poly] = {}
        for v in names:
            p = rhs[v]
            unknown = [u for u in p.used_variables() if u not in names]
            if unknown:
                raise ModelError(f"Right-hand side of {v}' uses undeclared variable {unknown[0]}")
            aligned[v] = p.extend(names)
        self.variables: Tuple[str, ...] = names
        self._rhs = aligned

    def __getitem__(self, name: str) -> Poly:
        return self._rhs[name]

    def __contains__(self, name: str) -> bool:
        return name in self._rhs

    def items(self) -> List[Tuple[str, Poly]]:
        return [(v, self._rhs[v]) for v in self.variables]

    def __eq__(self, other) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.variables == other.variables and all(self._rhs[v] == other._rhs[v] for v in self.variables)

    def __hash__(self) -> int:
        return hash(tuple(self.items()))

    def __repr__(self) -> str:
        return "VectorField(" + ", ".join(f"{v}'={p}" for v, p in self.items()) + ")"

    def is_linear(self, state: Sequence[str]) -> bool:
        return all(self._rhs[v].is_homogeneous(1) or self._rhs[v].is_zero() for v in state)

    def linear_matrix(self, state: Sequence[str]) -> List[List[Fraction]]:
        """A with x' = A x for the state variables of a linear field"""
        if not self.is_linear(state):
            raise ValueError("Vector field is not linear in the state")
        rows = []
        for v in state:
            p = self._rhs[v]
            rows.append([p.coefficient({w: 1}) for w in state])
        return rows

    def to_dict(self) -> Dict[str, object]:
        return {"variables": list(self.variables), "rhs": {v: p.to_dict() for v, p in self.items()}}

    @classmethod
    def from_dict(cls, data: Mapping[str, object]) -> "VectorField":
        return cls(data["variables"], {v: Poly.from_dict(p) for v, p in data["rhs"].items()})


def lie_derivative(v: Poly, field: VectorField) -> Poly:
    """Sum over variables of dV/dx_i * f_i"""
    missing = [u for u in v.used_variables() if u not in field]
    if missing:
        raise ModelError(f"Variable '{missing[0]}' of the function is not declared by the vector field")
    result = Poly.zero(field.variables)
    for name in v.used_variables():
        result = result + v.derivative(name) * field[name]
    return result.extend(field.variables)


def evaluate(p: Poly, point: Mapping[str, Scalar]) -> Fraction:
    return p.evaluate(point)


def substitute(p: Poly, bindings: Mapping[str, Poly]) -> Poly:
    return p.substitute(bindings)
