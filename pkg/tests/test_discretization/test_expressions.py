import numpy as np
import pytest

from rte_tools.discretization.expressions import parse_expression
from rte_tools.exceptions import ExpressionError, MaterialError


def test_evaluates_vectorized():
    function = parse_expression("x^2 + 2*y - 1")
    values = function(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.0, 0.5]))
    assert np.allclose(values, [1.0, 0.0, 4.0])


def test_scalar_broadcasts_to_points():
    function = parse_expression("3")
    values = function(np.zeros(4), np.zeros(4))
    assert values.shape == (4,)
    assert np.all(values == 3.0)


def test_time_variable():
    function = parse_expression("t / (1 + t) * x", ("x", "y", "t"))
    assert function(2.0, 0.0, 1.0) == pytest.approx(1.0)
    assert function(x=1.0, y=0.0, t=3.0) == pytest.approx(0.75)


@pytest.mark.parametrize(
    "source",
    [
        "__import__('os')",
        "x.real",
        "z + 1",
        "1 +",
        "True",
        "'text'",
        "x if y else 1",
        "x % 2",
    ],
)
def test_rejected_expressions(source):
    with pytest.raises(ExpressionError):
        parse_expression(source)


def test_expression_error_is_a_material_error():
    with pytest.raises(MaterialError) as e:
        parse_expression("t", ("x", "y"))
    assert "t" in str(e)
