"""Expression language: grammar, evaluation, derivatives, antiderivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from helpers import composite_simpson, univariate
from poisson4d.exprlang import (
    AntiderivativeFn,
    Binary,
    Const,
    ExprDomainError,
    ExprSyntaxError,
    QuadratureError,
    Unary,
    UnivariateFn,
    Var,
    adaptive_simpson,
    antiderivative,
    differentiate,
    evaluate,
    parse,
    to_string,
)


class TestParse:
    def test_atomic_variable(self):
        assert parse("x1") == Var(1)

    def test_difference(self):
        assert parse("x4 - x3") == Binary("-", Var(4), Var(3))

    def test_precedence_pow_mul_add(self):
        # ^ binds tighter than *, which binds tighter than +
        expected = Binary(
            "+",
            Binary("*", Const(2.0), Binary("^", Unary("sin", Var(2)), Const(2.0))),
            Const(1.0),
        )
        assert parse("2*sin(x2)^2 + 1") == expected

    def test_unary_minus_binds_tighter_than_pow(self):
        # factor := unary ('^' unary)?  makes the base of '^' include a sign
        assert parse("-x1^2") == Binary("^", Unary("neg", Var(1)), Const(2.0))
        assert evaluate(parse("-x1^2"), [2.0, 0, 0, 0]) == 4.0

    def test_negative_exponent(self):
        tree = parse("x1^-2")
        assert isinstance(tree, Binary) and tree.op == "^"
        assert evaluate(tree, [2.0, 0, 0, 0]) == 0.25

    def test_number_with_exponent(self):
        assert parse("2.5e-2") == Const(0.025)

    def test_variable_out_of_range(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("x5")
        assert err.value.offset == 0

    def test_unknown_identifier(self):
        with pytest.raises(ExprSyntaxError, match="unknown identifier"):
            parse("2*foo(x1)")

    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            parse("x1 + *")
        assert err.value.offset == 5

    def test_variable_exponent_rejected(self):
        with pytest.raises(ExprSyntaxError, match="constant"):
            parse("x1^x2")

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError):
            parse("sin(x1")


class TestEvaluate:
    def test_constant(self):
        assert evaluate(Const(7.0), [1, 2, 3, 4]) == 7.0

    def test_difference(self):
        assert evaluate(parse("x4 - x3"), [0, 1, 2, 3]) == 1.0

    def test_inverse_pair(self):
        assert evaluate(parse("exp(ln(x1))"), [2.5, 0, 0, 0]) == pytest.approx(2.5, abs=1e-14)

    def test_batched(self):
        pts = np.array([[1.0, 2, 3, 4], [2.0, 3, 4, 5]])
        np.testing.assert_allclose(evaluate(parse("x1 + x2"), pts), [3.0, 5.0])

    def test_ln_domain_fault(self):
        with pytest.raises(ExprDomainError, match="ln"):
            evaluate(parse("ln(x1)"), [-1.0, 0, 0, 0])

    def test_division_by_zero(self):
        with pytest.raises(ExprDomainError, match="division"):
            evaluate(parse("1/x2"), [1.0, 0.0, 0, 0])

    def test_sqrt_domain_fault(self):
        with pytest.raises(ExprDomainError):
            evaluate(parse("sqrt(x1)"), [-4.0, 0, 0, 0])

    def test_noninteger_power_of_negative(self):
        with pytest.raises(ExprDomainError, match="non-integer"):
            evaluate(parse("x1^0.5"), [-1.0, 0, 0, 0])

    def test_zero_base_negative_exponent(self):
        with pytest.raises(ExprDomainError):
            evaluate(parse("x1^-2"), [0.0, 0, 0, 0])

    def test_fault_carries_subexpression(self):
        with pytest.raises(ExprDomainError) as err:
            evaluate(parse("x1 + ln(x2 - 3)"), [0.0, 1.0, 0, 0])
        assert "ln" in str(err.value)


class TestDifferentiate:
    def test_square(self):
        assert differentiate(parse("x1^2"), 1) == parse("2*x1")

    def test_sin(self):
        assert differentiate(parse("sin(x2)"), 2) == parse("cos(x2)")

    def test_product_plus_exp_value(self):
        d = differentiate(parse("x1*x3 + exp(x3)"), 3)
        assert evaluate(d, [1.0, 0.0, 0.0, 0.0]) == pytest.approx(2.0, abs=1e-12)

    def test_other_variable_is_zero(self):
        assert differentiate(parse("x1^2 + sin(x1)"), 2) == Const(0.0)

    @pytest.mark.parametrize("text", [
        "x1/x2", "sqrt(x1)", "ln(x3)", "tanh(x4)", "x2^3", "exp(2*x1)",
        "x1^-1", "cos(x1)*sin(x2)", "x1^0.5",
    ])
    def test_against_central_differences(self, text):
        tree = parse(text)
        x = np.array([0.7, 1.3, 2.1, 0.9])
        h = 1e-5
        for var in range(1, 5):
            sym = float(np.asarray(evaluate(differentiate(tree, var), x)))
            xp, xm = x.copy(), x.copy()
            xp[var - 1] += h
            xm[var - 1] -= h
            fd = (float(np.asarray(evaluate(tree, xp)))
                  - float(np.asarray(evaluate(tree, xm)))) / (2 * h)
            assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym))


# Strategy for parser-image trees over the safe operation table (no domain
# faults on positive sample boxes, no overflow-prone nesting).
_safe_leaves = st.one_of(
    st.builds(Var, st.integers(1, 4)),
    st.builds(Const, st.floats(0.2, 3.0, allow_nan=False)),
)


def _extend_safe(children):
    binary = st.builds(
        Binary, st.sampled_from(["+", "-", "*"]), children, children)
    unary = st.builds(Unary, st.sampled_from(["sin", "cos", "tanh", "neg"]), children)
    return st.one_of(binary, unary)


_safe_trees = st.recursive(_safe_leaves, _extend_safe, max_leaves=10)

_roundtrip_extend = lambda children: st.one_of(
    st.builds(Binary, st.sampled_from(["+", "-", "*", "/"]), children, children),
    st.builds(Unary, st.sampled_from(["sin", "cos", "exp", "ln", "sqrt", "tanh", "neg"]),
              children),
    st.builds(Binary, st.just("^"), children,
              st.sampled_from([Const(2.0), Const(3.0), Const(0.5)])),
)
_roundtrip_trees = st.recursive(_safe_leaves, _roundtrip_extend, max_leaves=12)


class TestPrintRoundTrip:
    @settings(max_examples=150, deadline=None)
    @given(_roundtrip_trees)
    def test_parse_print_identity(self, tree):
        assert parse(to_string(tree)) == tree

    def test_examples(self):
        for text in ["x1", "x4 - x3", "2*sin(x2)^2 + 1", "-x1^2",
                     "(x1 + x2)*x3", "1/(1 + 0.1*sin(x1))"]:
            tree = parse(text)
            assert parse(to_string(tree)) == tree


_DERIVATIVE_POINTS = np.random.default_rng(0).uniform(0.3, 1.2, size=(20, 4))


class TestDerivativeProperty:
    @settings(max_examples=100, deadline=None)
    @given(_safe_trees, st.integers(1, 4))
    def test_symbolic_matches_central_difference(self, tree, var):
        h = 1e-5
        d = differentiate(tree, var)
        for x in _DERIVATIVE_POINTS:
            sym = float(np.asarray(evaluate(d, x)))
            xp, xm = x.copy(), x.copy()
            xp[var - 1] += h
            xm[var - 1] -= h
            fd = (float(np.asarray(evaluate(tree, xp)))
                  - float(np.asarray(evaluate(tree, xm)))) / (2 * h)
            assert abs(sym - fd) <= 1e-6 * max(1.0, abs(sym))


class TestAntiderivative:
    def test_linear(self):
        F = antiderivative(univariate("x1", 1, (-1, 5)), 0.0)
        assert F(3.0) == pytest.approx(4.5, abs=1e-14)
        assert F.is_symbolic

    def test_constant_with_base(self):
        F = antiderivative(univariate("1", 1, (4, 8)), 5.0)
        assert F(7.0) == pytest.approx(2.0, abs=1e-14)

    def test_gaussian_by_quadrature(self):
        fn = univariate("exp(-1*x1^2)", 1, (-2, 2))
        F = antiderivative(fn, 0.0)
        assert not F.is_symbolic
        assert F(1.0) == pytest.approx(0.7468241328, abs=1e-9)
        oracle = composite_simpson(lambda t: math.exp(-t * t), 0.0, 1.0, 4000)
        assert F(1.0) == pytest.approx(oracle, abs=1e-11)

    def test_reciprocal_positive_interval(self):
        F = antiderivative(univariate("1/x1", 1, (1, 3)), 2.0)
        assert F(2.5) == pytest.approx(math.log(2.5) - math.log(2.0), abs=1e-13)

    def test_reciprocal_negative_interval(self):
        F = antiderivative(univariate("1/x1", 1, (-3, -1)), -2.0)
        assert F(-1.5) == pytest.approx(math.log(1.5) - math.log(2.0), abs=1e-13)

    def test_reciprocal_interval_through_zero(self):
        with pytest.raises(ExprDomainError):
            antiderivative(univariate("1/x1", 1, (-1, 1)), 0.5)

    def test_power_rule(self):
        F = antiderivative(univariate("x1^3", 1, (0, 2)), 0.0)
        assert F(2.0) == pytest.approx(4.0, abs=1e-13)

    def test_trig_and_exp_table(self):
        for text, value in [("sin(x1)", 1.0 - math.cos(1.0)),
                            ("cos(x1)", math.sin(1.0)),
                            ("exp(x1)", math.e - 1.0)]:
            F = antiderivative(univariate(text, 1, (-2, 2)), 0.0)
            assert F.is_symbolic
            assert F(1.0) == pytest.approx(value, abs=1e-13)

    def test_linearity_of_table(self):
        F = antiderivative(univariate("2*x1 - 3*sin(x1) + 0.5", 1, (-4, 4)), 0.0)
        assert F.is_symbolic
        expected = 1.0 - 3.0 * (1.0 - math.cos(1.0)) + 0.5
        assert F(1.0) == pytest.approx(expected, abs=1e-13)

    def test_base_outside_interval(self):
        with pytest.raises(ValueError):
            antiderivative(univariate("x1", 1, (0, 1)), 5.0)

    def test_base_point_is_zero(self):
        F = antiderivative(univariate("exp(-1*x1^2)", 1, (-2, 2)), 0.5)
        assert F(0.5) == 0.0

    def test_derivative_consistency(self):
        # Central difference of F reproduces f at interior points.
        fn = univariate("exp(-1*x1^2)", 1, (-2, 2))
        F = antiderivative(fn, 0.0)
        h = 1e-4
        for t in np.linspace(-1.5, 1.5, 20):
            fd = (F(t + h) - F(t - h)) / (2 * h)
            assert abs(fd - fn(t)) <= 1e-7

    def test_quadrature_depth_cap(self):
        fn = univariate("sin(1/x1)", 1, (0.001, 1.0))
        with pytest.raises(QuadratureError):
            AntiderivativeFn(fn, 0.5, max_depth=2)(0.002)


class TestAdaptiveSimpson:
    def test_polynomial_exact(self):
        assert adaptive_simpson(lambda t: t ** 3, 0, 2) == pytest.approx(4.0, abs=1e-12)

    def test_reversed_interval(self):
        forward = adaptive_simpson(math.sin, 0, 1)
        assert adaptive_simpson(math.sin, 1, 0) == pytest.approx(-forward, abs=1e-13)

    def test_empty_interval(self):
        assert adaptive_simpson(math.sin, 1.0, 1.0) == 0.0


class TestUnivariateFn:
    def test_rejects_foreign_variable(self):
        with pytest.raises(ValueError):
            UnivariateFn(parse("x1 + x2"), 1, (0, 1))

    def test_derivative(self):
        fn = univariate("x2^2", 2, (0, 1))
        assert fn.derivative()(0.5) == pytest.approx(1.0)
