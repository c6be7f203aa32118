"""
Arithmetic expressions over named coordinates, parsed from configuration
strings. Only numbers, the allowed variable names, parentheses and the
operators + - * / ^ are accepted.
"""
import ast
from typing import Callable, Iterable, Tuple

import numpy as np

from rte_tools.exceptions import ExpressionError


_BINARY_OPERATORS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARY_OPERATORS = {ast.UAdd: np.positive, ast.USub: np.negative}


def _check(node: ast.AST, variables: Tuple[str, ...], source: str) -> None:
    if isinstance(node, ast.Expression):
        _check(node.body, variables, source)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINARY_OPERATORS:
            raise ExpressionError(f"Unsupported operator in '{source}'")
        _check(node.left, variables, source)
        _check(node.right, variables, source)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNARY_OPERATORS:
            raise ExpressionError(f"Unsupported operator in '{source}'")
        _check(node.operand, variables, source)
    elif isinstance(node, ast.Name):
        if node.id not in variables:
            raise ExpressionError(
                f"Unknown name '{node.id}' in '{source}', "
                f"allowed names are {', '.join(variables)}"
            )
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(
            node.value, (int, float)
        ):
            raise ExpressionError(f"Unsupported literal in '{source}'")
    else:
        raise ExpressionError(
            f"Unsupported syntax '{type(node).__name__}' in '{source}'"
        )


def _evaluate(node: ast.AST, scope: dict):
    if isinstance(node, ast.Expression):
        return _evaluate(node.body, scope)
    if isinstance(node, ast.BinOp):
        return _BINARY_OPERATORS[type(node.op)](
            _evaluate(node.left, scope), _evaluate(node.right, scope)
        )
    if isinstance(node, ast.UnaryOp):
        return _UNARY_OPERATORS[type(node.op)](
            _evaluate(node.operand, scope)
        )
    if isinstance(node, ast.Name):
        return scope[node.id]
    return float(node.value)


def parse_expression(
    source: str, variables: Iterable[str] = ("x", "y")
) -> Callable[..., np.ndarray]:
    """
    Returns a vectorized function of the given variables (keyword or
    positional, in order). '^' means exponentiation.
    """
    variables = tuple(variables)
    try:
        tree = ast.parse(source.replace("^", "**"), mode="eval")
    except SyntaxError as e:
        raise ExpressionError(f"Could not parse '{source}': {e.msg}") from e
    _check(tree, variables, source)

    def expression(*args, **kwargs) -> np.ndarray:
        scope = dict(zip(variables, args))
        scope.update(kwargs)
        shape = np.broadcast_shapes(
            *[np.shape(value) for value in scope.values()]
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            value = _evaluate(tree, scope)
        return np.broadcast_to(np.asarray(value, dtype=float), shape).copy()

    return expression
