"""Exact polynomials, exponential enclosures, LDL^T and settings."""

import json
import math
import random
from fractions import Fraction

import mpmath
import pytest
import sympy

from src.core.config import CheckerSettings, load_config
from src.core.errors import ConfigError, ModelError
from src.core.expbound import ExpPoly, exp_enclosure
from src.core.files import atomic_write_text, dumps_json, write_json
from src.core.linalg import gram_of_quadratic, ldl_decompose, quadratic_form
from src.core.polynomial import Poly, VectorField, lie_derivative, monomials_up_to, to_rational

XY = ("x", "y")
XYZ = ("x", "y", "z")


def var(name, variables=XY):
    return Poly.variable(variables, name)


class TestPoly:
    def test_arithmetic_is_exact(self):
        x, y = var("x"), var("y")
        p = (x + y) ** 2 - x * x - y * y
        assert p == x * y * 2
        assert (p / 3).coefficient({"x": 1, "y": 1}) == Fraction(2, 3)

    def test_zero_terms_vanish(self):
        x = var("x")
        assert (x - x).is_zero()
        assert str(Poly.zero(XY)) == "0"

    def test_decimal_literals_stay_exact(self):
        assert to_rational("1.65") == Fraction(33, 20)
        assert to_rational("6008302119812893/4611686018427387904") == Fraction(6008302119812893, 4611686018427387904)

    def test_rejects_non_finite_floats(self):
        with pytest.raises(ValueError):
            to_rational(float("nan"))

    def test_evaluate_at_tiny_rational(self):
        v = Poly(XY, {(2, 0): Fraction(6008302119812893, 4611686018427387904),
                      (1, 0): Fraction(5661677770976729, 39614081257132168796771975168)})
        value = v.evaluate({"x": Fraction(-1, 17179869184), "y": 0})
        assert value < 0
        assert float(value) == pytest.approx(-3.90488e-24, rel=1e-4)

    def test_missing_binding_is_named(self):
        p = var("x") * var("y") + 1
        with pytest.raises(ModelError, match="'y'"):
            p.evaluate({"x": 1})
        assert var("x").evaluate({"x": 3}) == 3

    def test_extend_and_used_variables(self):
        p = var("x").extend(XYZ)
        assert p.variables == XYZ
        assert p.used_variables() == ("x",)

    def test_duplicate_variables_rejected(self):
        with pytest.raises(ModelError):
            Poly(("x", "x"))

    def test_homogeneous_parts(self):
        x, y = var("x"), var("y")
        p = x ** 4 + x * y + 3
        assert p.degree() == 4
        assert p.homogeneous_part(4) == x ** 4
        assert not p.is_homogeneous()

    def test_monomials_are_distinct(self):
        assert monomials_up_to(1, 2) == [(0,), (1,), (2,)]
        assert monomials_up_to(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]
        assert len(set(monomials_up_to(3, 4))) == len(monomials_up_to(3, 4)) == 35

    def test_monomial_count(self):
        # quadratic and cubic monomials in two variables
        assert len(monomials_up_to(2, 3, min_degree=2)) == 3 + 4


class TestLieDerivative:
    def test_brockett_mode_a_lie_derivative(self):
        x, y, z = (Poly.variable(XYZ, n) for n in XYZ)
        field = VectorField(XYZ, {"x": -x + y, "y": -y - x, "z": -(x * x + y * y)})
        lie = lie_derivative(x * x + y * y + z * z, field)
        assert lie == (x * x + y * y) * (z + 1) * -2

    def test_brockett_region_boundary_is_conserved(self):
        x, y, z = (Poly.variable(XYZ, n) for n in XYZ)
        field = VectorField(XYZ, {"x": -x + y, "y": -y - x, "z": -(x * x + y * y)})
        p = (x * x + y * y) / 2 - z
        # the rotation terms cancel and the decay of x^2+y^2 matches z'
        assert lie_derivative(p, field).is_zero()

    def test_linearity_and_product_rule(self):
        rng = random.Random(5)
        monos = monomials_up_to(2, 3)

        def random_poly():
            return Poly(XY, {m: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for m in rng.sample(monos, 4)})

        for _ in range(50):
            a, b = random_poly(), random_poly()
            field = VectorField(XY, {"x": random_poly(), "y": random_poly()})
            c = Fraction(rng.randint(-5, 5), 7)
            assert lie_derivative(a * c + b, field) == lie_derivative(a, field) * c + lie_derivative(b, field)
            assert lie_derivative(a * b, field) == lie_derivative(a, field) * b + a * lie_derivative(b, field)

    def test_field_must_cover_variables(self):
        with pytest.raises(ModelError):
            VectorField(XY, {"x": var("y")})

    def test_agrees_with_sympy_on_random_pairs(self):
        rng = random.Random(7)
        sx, sy = sympy.symbols("x y")
        monos = monomials_up_to(2, 3)
        for _ in range(200):
            def random_poly():
                return Poly(XY, {m: rng.randint(-3, 3) for m in rng.sample(monos, 4)})

            v, f1, f2 = random_poly(), random_poly(), random_poly()
            lie = lie_derivative(v, VectorField(XY, {"x": f1, "y": f2}))

            def to_sympy(p):
                return sum(sympy.Rational(c.numerator, c.denominator) * sx ** m[0] * sy ** m[1] for m, c in p.items())

            expected = sympy.diff(to_sympy(v), sx) * to_sympy(f1) + sympy.diff(to_sympy(v), sy) * to_sympy(f2)
            for _ in range(10):
                point = {"x": Fraction(rng.randint(-20, 20), 7), "y": Fraction(rng.randint(-20, 20), 5)}
                exact = expected.subs({sx: sympy.Rational(point["x"].numerator, point["x"].denominator),
                                       sy: sympy.Rational(point["y"].numerator, point["y"].denominator)})
                assert lie.evaluate(point) == Fraction(int(sympy.numer(exact)), int(sympy.denom(exact)))

    def test_agrees_with_central_differences(self):
        rng = random.Random(11)
        monos = monomials_up_to(2, 3)
        for _ in range(50):
            v = Poly(XY, {m: rng.randint(-3, 3) for m in rng.sample(monos, 5)})
            f = {n: Poly(XY, {m: rng.randint(-3, 3) for m in rng.sample(monos, 3)}) for n in XY}
            lie = lie_derivative(v, VectorField(XY, f))
            for _ in range(10):
                p = {"x": rng.uniform(-2, 2), "y": rng.uniform(-2, 2)}
                direction = {n: f[n].evaluate_float(p) for n in XY}
                h = 1e-5
                ahead = v.evaluate_float({n: p[n] + h * direction[n] for n in XY})
                behind = v.evaluate_float({n: p[n] - h * direction[n] for n in XY})
                numeric = (ahead - behind) / (2 * h)
                exact = lie.evaluate_float(p)
                assert abs(numeric - exact) <= 1e-6 * max(1.0, abs(exact))


class TestExpEnclosure:
    def test_encloses_timed_demo_constant(self):
        bound = exp_enclosure(Fraction(-6, 5))
        mpmath.mp.dps = 40
        exact = mpmath.exp(mpmath.mpf(-6) / 5)
        assert mpmath.mpf(bound.lower.numerator) / bound.lower.denominator <= exact
        assert exact <= mpmath.mpf(bound.upper.numerator) / bound.upper.denominator
        assert bound.upper < 1
        assert bound.width <= Fraction(1, 10**12)

    def test_agrees_with_mpmath(self):
        mpmath.mp.dps = 50
        for r in (Fraction(-6, 5), Fraction(1, 3), Fraction(-17, 2), Fraction(9, 4)):
            bound = exp_enclosure(r)
            exact = mpmath.exp(mpmath.mpf(r.numerator) / r.denominator)
            assert mpmath.mpf(bound.lower.numerator) / bound.lower.denominator <= exact
            assert exact <= mpmath.mpf(bound.upper.numerator) / bound.upper.denominator

    def test_monotone_in_exponent(self):
        grid = [Fraction(k, 4) for k in range(-20, 21)]
        bounds = [exp_enclosure(r) for r in grid]
        for smaller, larger in zip(bounds, bounds[1:]):
            assert smaller.lower <= larger.lower
            assert smaller.upper <= larger.upper

    def test_larger_budget_nests(self):
        for r in (Fraction(-9, 2), Fraction(-6, 5), Fraction(1, 3), Fraction(7, 2)):
            previous = exp_enclosure(r, 1)
            for budget in (2, 5, 10, 20, 40):
                current = exp_enclosure(r, budget)
                assert previous.lower <= current.lower <= current.upper <= previous.upper
                previous = current

    def test_positive_exponent(self):
        bound = exp_enclosure(Fraction(3, 2))
        assert bound.contains(math.exp(1.5))
        assert bound.width <= Fraction(1, 10**12)

    def test_zero_is_exact(self):
        bound = exp_enclosure(0)
        assert bound.lower == bound.upper == 1

    def test_wider_budget_never_widens(self):
        for r in (Fraction(-7, 3), Fraction(5, 4), Fraction(40)):
            assert exp_enclosure(r, 60).width <= exp_enclosure(r, 10).width

    def test_budget_must_be_positive(self):
        with pytest.raises(ValueError):
            exp_enclosure(1, 0)

    def test_exp_poly_combines_like_exponents(self):
        x = var("x")
        e = ExpPoly({Fraction(0): x * x}) - ExpPoly.from_poly(x * x)
        assert e.is_zero()
        assert not ExpPoly({Fraction(-6, 5): x * x}).is_rational()


class TestLDL:
    def test_example7_pivots(self):
        x1, x2 = (Poly.variable(("x1", "x2"), n) for n in ("x1", "x2"))
        v_p = x1 * x1 - x1 * x2 * Fraction(33, 20) + x2 * x2
        result = ldl_decompose(gram_of_quadratic(v_p, ("x1", "x2")))
        assert result.definite
        assert result.pivots == [Fraction(1), Fraction(511, 1600)]

    def test_indefinite_witness(self):
        m = [[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]]
        result = ldl_decompose(m)
        assert not result.semidefinite
        assert result.witness == [Fraction(1), Fraction(-1)]
        assert quadratic_form(m, result.witness) == -2

    def test_semidefinite_not_definite(self):
        result = ldl_decompose([[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]])
        assert result.semidefinite and not result.definite

    def test_gram_rejects_non_quadratic(self):
        with pytest.raises(ValueError):
            gram_of_quadratic(var("x") ** 3, XY)


class TestSettings:
    def test_bundled_config_matches_defaults(self):
        assert load_config() == CheckerSettings()

    def test_overrides_by_dotted_key(self):
        settings = CheckerSettings().with_overrides({"sos.multiplier_degree": 4, "falsify.budget": None})
        assert settings.sos.multiplier_degree == 4
        assert settings.falsify.budget == CheckerSettings().falsify.budget

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            CheckerSettings().with_overrides({"sos.nonsense": 1})

    def test_invalid_value(self):
        with pytest.raises(ConfigError):
            CheckerSettings().with_overrides({"falsify.budget": -5})

    def test_missing_explicit_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.json")

    def test_degree_above_cap(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"sos": {"multiplier_degree": 6, "multiplier_degree_cap": 4}}), encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)


class TestFiles:
    def test_atomic_write_creates_parents(self, tmp_path):
        target = atomic_write_text(tmp_path / "a" / "b.txt", "hello")
        assert target.read_text(encoding="utf-8") == "hello"
        assert [p.name for p in target.parent.iterdir()] == ["b.txt"]

    def test_json_is_stable(self, tmp_path):
        data = {"b": "ü", "a": [1, 2]}
        assert dumps_json(data).endswith("\n")
        path = write_json(tmp_path / "out.json", data)
        assert json.loads(path.read_text(encoding="utf-8")) == data
        assert "ü" in path.read_text(encoding="utf-8")
