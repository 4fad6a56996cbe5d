"""
A small arithmetic expression language with exact symbolic derivatives.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom (('^' | '**') unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Names are variables (``I1``, ``q2``, ``t``...), the constants ``pi`` and
``e``, or the functions sin, cos, tan, exp, log, sqrt, tanh, atan. The
syntax tree is converted to a sympy expression; derivatives come from
``sympy.diff`` and evaluation from ``sympy.lambdify`` bound to the
functions of :mod:`tdcis.core.dual`, so floats and dual numbers both work.

Examples:
    >>> expr = parse_expression("I1^2 + 2*I2", variables=["I1", "I2"])
    >>> expr.evaluate({"I1": 3.0, "I2": 1.0})
    11.0
    >>> str(expr.derivative("I1"))
    '2*I1'
"""

import re
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import sympy as sp

from tdcis.core import dual
from tdcis.core.errors import ExpressionError

CONSTANTS: Dict[str, sp.Expr] = {"pi": sp.pi, "e": sp.E}

FUNCTIONS: Dict[str, Callable[[Any], Any]] = {
    "sin": dual.sin,
    "cos": dual.cos,
    "tan": dual.tan,
    "exp": dual.exp,
    "log": dual.log,
    "sqrt": dual.sqrt,
    "tanh": dual.tanh,
    "atan": dual.atan,
}

SYMPY_FUNCTIONS: Dict[str, Callable[[sp.Expr], sp.Expr]] = {
    "sin": sp.sin,
    "cos": sp.cos,
    "tan": sp.tan,
    "exp": sp.exp,
    "log": sp.log,
    "sqrt": sp.sqrt,
    "tanh": sp.tanh,
    "atan": sp.atan,
}

_LAMBDIFY_MODULES = [FUNCTIONS, "math"]

_UNDEFINED = (sp.zoo, sp.nan, sp.oo, -sp.oo)

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>\*\*|[-+*/^()]))"
)


@dataclass(frozen=True)
class Num:
    text: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Num, Const, Var, Neg, Bin, Call]


def _tokenize(text: str) -> List[Tuple[str, str]]:
    tokens: List[Tuple[str, str]] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None or match.end() == pos:
            raise ExpressionError(f"Unexpected character {text[pos]!r} at position {pos}")
        kind = match.lastgroup or ""
        tokens.append((kind, match.group(kind)))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> Optional[Tuple[str, str]]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> Tuple[str, str]:
        token = self.peek()
        if token is None:
            raise ExpressionError(f"Unexpected end of expression in {self.text!r}")
        self.pos += 1
        return token

    def expect(self, op: str) -> None:
        kind, value = self.take()
        if kind != "op" or value != op:
            raise ExpressionError(f"Expected {op!r} but found {value!r} in {self.text!r}")

    def parse(self) -> Node:
        if not self.tokens:
            raise ExpressionError("Empty expression")
        node = self.expr()
        token = self.peek()
        if token is not None:
            raise ExpressionError(f"Unexpected token {token[1]!r} in {self.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while (token := self.peek()) is not None and token in (("op", "+"), ("op", "-")):
            self.take()
            node = Bin(token[1], node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while (token := self.peek()) is not None and token in (("op", "*"), ("op", "/")):
            self.take()
            node = Bin(token[1], node, self.unary())
        return node

    def unary(self) -> Node:
        token = self.peek()
        if token == ("op", "-"):
            self.take()
            return Neg(self.unary())
        if token == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        token = self.peek()
        if token is not None and token[0] == "op" and token[1] in ("^", "**"):
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self) -> Node:
        kind, value = self.take()
        if kind == "num":
            return Num(value)
        if kind == "name":
            if self.peek() == ("op", "("):
                if value not in FUNCTIONS:
                    raise ExpressionError(f"Unknown function {value!r}")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in CONSTANTS:
                return Const(value)
            return Var(value)
        if value == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExpressionError(f"Unexpected token {value!r} in {self.text!r}")


def _to_sympy(node: Node) -> sp.Expr:
    if isinstance(node, Num):
        # Rational keeps decimal literals such as 0.1 exact until evaluation
        return sp.Rational(node.text)
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Var):
        return sp.Symbol(node.name)
    if isinstance(node, Neg):
        return -_to_sympy(node.arg)
    if isinstance(node, Call):
        return SYMPY_FUNCTIONS[node.fn](_to_sympy(node.arg))
    left, right = _to_sympy(node.left), _to_sympy(node.right)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    return left**right


class Expression:
    """
    Parsed expression with evaluation and exact symbolic derivatives.

    Attributes:
        source: Original text
        expr: The sympy expression
    """

    def __init__(self, source: str, expr: sp.Expr):
        self.source = source
        self.expr = expr
        self._names = sorted(str(s) for s in expr.free_symbols)
        self._compiled: Optional[Callable[..., Any]] = None

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def __str__(self) -> str:
        return str(self.expr)

    @property
    def variables(self) -> List[str]:
        """Variables referenced by the expression, sorted."""
        return list(self._names)

    def _function(self) -> Callable[..., Any]:
        if self._compiled is None:
            if self.expr.has(*_UNDEFINED):
                raise ExpressionError(f"Cannot evaluate {self.source!r}: undefined value")
            self._compiled = sp.lambdify(
                [sp.Symbol(n) for n in self._names], self.expr, modules=_LAMBDIFY_MODULES
            )
        return self._compiled

    def evaluate(self, env: Optional[Mapping[str, Any]] = None) -> Any:
        """
        Evaluate with the given variable values (floats or duals).

        Raises:
            ExpressionError: Missing variable or arithmetic failure
        """
        env = env or {}
        missing = [n for n in self._names if n not in env]
        if missing:
            raise ExpressionError(f"No value for variable {missing[0]!r} in {self.source!r}")
        fn = self._function()
        try:
            result = fn(*(env[n] for n in self._names))
        except (ZeroDivisionError, OverflowError, ValueError) as e:
            raise ExpressionError(f"Cannot evaluate {self.source!r}: {e}") from e
        if isinstance(result, complex):
            raise ExpressionError(f"Cannot evaluate {self.source!r}: complex result {result}")
        return result

    def derivative(self, var: str) -> "Expression":
        """Exact derivative with respect to ``var``."""
        return Expression(f"d({self.source})/d{var}", sp.diff(self.expr, sp.Symbol(var)))


def parse_expression(text: str, variables: Optional[Iterable[str]] = None) -> Expression:
    """
    Parse an expression.

    Args:
        text: Expression source
        variables: Allowed variable names (any name accepted when omitted)

    Returns:
        Parsed expression

    Raises:
        ExpressionError: On syntax errors or unknown variables
    """
    if not isinstance(text, str):
        raise ExpressionError(f"Expression must be text, got {type(text).__name__}")
    expression = Expression(text, _to_sympy(_Parser(text).parse()))
    if variables is not None:
        allowed = set(variables)
        unknown = [v for v in expression.variables if v not in allowed]
        if unknown:
            raise ExpressionError(
                f"Unknown variable(s) {', '.join(unknown)} in {text!r}; "
                f"allowed: {', '.join(sorted(allowed))}"
            )
    return expression


def evaluate_constant(text: str) -> float:
    """
    Evaluate a constant expression such as ``2*pi``.

    Examples:
        >>> evaluate_constant("2*pi")
        6.283185307179586
    """
    return float(parse_expression(text, variables=[]).evaluate())
