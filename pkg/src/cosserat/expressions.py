"""Closed-form field expressions over the parameters ``rho1, rho2, rho3``.

The language is ordinary arithmetic: ``+ - * /``, powers with ``^`` or
``**``, parentheses, numbers, the constant ``pi`` and the functions
``sin``, ``cos`` and ``exp``.  ``ρ1`` is accepted as a spelling of
``rho1``.  Expressions are parsed with :mod:`ast` against a whitelist and
evaluated with numpy over whole grids.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass

import numpy as np

__all__ = ["ExpressionError", "Expression", "parse_expression", "evaluate_list"]

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
_CONSTANTS = {"pi": np.pi}
_VARIABLES = {"rho1": 0, "rho2": 1, "rho3": 2}
_BINOPS = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.divide,
    ast.Pow: np.power,
}
_UNARY = {ast.UAdd: np.positive, ast.USub: np.negative}


class ExpressionError(ValueError):
    """Malformed expression; ``path`` names the scenario field, ``column`` is 1-based."""

    def __init__(self, path: str, message: str, column: int | None = None):
        self.path = path
        self.column = column
        where = f" at column {column}" if column is not None else ""
        super().__init__(f"{path}: {message}{where}")


def _normalize(text: str) -> tuple[str, list[int]]:
    """Rewrite ``ρ`` and ``^``; also return the original column of each output character."""
    out = []
    cols = []
    for k, ch in enumerate(text):
        rep = {"ρ": "rho", "^": "**"}.get(ch, ch)
        out.append(rep)
        cols.extend([k + 1] * len(rep))
    cols.append(len(text) + 1)
    return "".join(out), cols


@dataclass(frozen=True)
class Expression:
    text: str
    path: str
    tree: ast.Expression

    @property
    def max_variable(self) -> int:
        """Highest parameter index used (0 when constant)."""
        used = [
            _VARIABLES[n.id] + 1
            for n in ast.walk(self.tree)
            if isinstance(n, ast.Name) and n.id in _VARIABLES
        ]
        return max(used, default=0)

    def evaluate(self, rho: np.ndarray) -> np.ndarray:
        """Evaluate on coordinates of shape ``(..., p)``; returns shape ``(...)``."""
        rho = np.asarray(rho, dtype=float)
        p = rho.shape[-1]
        if self.max_variable > p:
            raise ExpressionError(self.path, f"uses rho{self.max_variable} on a {p}-parameter grid")
        with np.errstate(all="ignore"):
            out = self._eval(self.tree.body, rho)
        out = np.broadcast_to(np.asarray(out, dtype=float), rho.shape[:-1])
        if not np.all(np.isfinite(out)):
            raise ExpressionError(self.path, "evaluates to a non-finite value on the grid")
        return out

    def _eval(self, node, rho):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            if node.id in _VARIABLES:
                return rho[..., _VARIABLES[node.id]]
            return _CONSTANTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, rho), self._eval(node.right, rho))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, rho))
        if isinstance(node, ast.Call):
            return _FUNCTIONS[node.func.id](self._eval(node.args[0], rho))
        raise AssertionError("unreachable: tree was validated")


def _validate(node, path: str, cols: list[int]) -> None:
    col = getattr(node, "col_offset", None)
    col = None if col is None else cols[min(col, len(cols) - 1)]
    if isinstance(node, ast.Expression):
        _validate(node.body, path, cols)
    elif isinstance(node, ast.Constant):
        if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
            raise ExpressionError(path, f"unsupported literal {node.value!r}", col)
    elif isinstance(node, ast.Name):
        if node.id not in _VARIABLES and node.id not in _CONSTANTS:
            raise ExpressionError(path, f"unknown name {node.id!r}", col)
    elif isinstance(node, ast.BinOp):
        if type(node.op) not in _BINOPS:
            raise ExpressionError(path, f"unsupported operator {type(node.op).__name__}", col)
        _validate(node.left, path, cols)
        _validate(node.right, path, cols)
    elif isinstance(node, ast.UnaryOp):
        if type(node.op) not in _UNARY:
            raise ExpressionError(path, f"unsupported operator {type(node.op).__name__}", col)
        _validate(node.operand, path, cols)
    elif isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            name = getattr(node.func, "id", "?")
            raise ExpressionError(path, f"unknown function {name!r}", col)
        if len(node.args) != 1 or node.keywords:
            raise ExpressionError(path, f"{node.func.id} takes exactly one argument", col)
        _validate(node.args[0], path, cols)
    else:
        raise ExpressionError(path, f"unsupported syntax {type(node).__name__}", col)


def parse_expression(text, path: str = "expression") -> Expression:
    """Parse ``text`` (a string or a plain number) into an :class:`Expression`."""
    if isinstance(text, bool):
        raise ExpressionError(path, "expected an expression string or a number")
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str):
        raise ExpressionError(path, f"expected an expression string, got {type(text).__name__}")
    if not text.strip():
        raise ExpressionError(path, "empty expression")
    src, cols = _normalize(text)
    lead = len(src) - len(src.lstrip())
    src, cols = src[lead:], cols[lead:]
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        col = None if exc.offset is None else cols[min(max(exc.offset - 1, 0), len(cols) - 1)]
        raise ExpressionError(path, f"syntax error: {exc.msg}", col) from None
    _validate(tree, path, cols)
    return Expression(text, path, tree)


def evaluate_list(items, path: str, rho: np.ndarray, length: int = 3) -> np.ndarray:
    """Evaluate a list of ``length`` expressions into shape ``(..., length)``."""
    if not isinstance(items, (list, tuple)) or len(items) != length:
        raise ExpressionError(path, f"expected a list of {length} expressions")
    cols = [parse_expression(t, f"{path}[{k}]").evaluate(rho) for k, t in enumerate(items)]
    return np.stack(cols, axis=-1)
