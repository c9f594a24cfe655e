"""Small expression language for Hamiltonians and scalar fields.

Expressions combine numbers, ``pi``, the operators + - * / ^ and the
functions sin, cos and exp of the coordinates (x1..xn, y1..yn for
Hamiltonians, x1..xm for scalar fields) and of the time t.

    >>> function = compile_expression('x^2 + 3*y', ['x', 'y'])
    >>> float(function.value(2.0, 1.0))
    7.0
"""


import logging
import tokenize


import numpy as np
import sympy
from sympy.core.function import AppliedUndef
from sympy.parsing import sympy_parser


from conley_lab.errors import ExpressionError


log = logging.getLogger(__name__)


allowed_functions = {
    'sin': sympy.sin,
    'cos': sympy.cos,
    'exp': sympy.exp,
    }

transformations = sympy_parser.standard_transformations + (sympy_parser.convert_xor, )


def hamiltonian_variable_names(n):
    return ['x{}'.format(i + 1) for i in range(n)] + ['y{}'.format(i + 1) for i in range(n)]


def hamiltonian_aliases(n):
    return {'x': 'x1', 'y': 'y1'} if n == 1 else dict()


def field_variable_names(m):
    return ['x{}'.format(i + 1) for i in range(m)]


def field_aliases(m):
    return {alias: 'x{}'.format(i + 1) for i, alias in enumerate(['x', 'y', 'z'][:m])}


def parse_expression(text, variable_names, aliases = None, time = False):
    """Parse text into a sympy expression over the given variables.

    Raises ExpressionError for syntax errors, unknown names and unsupported functions.
    """
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("Expected a non-empty expression string, got {!r}".format(text))
    symbols = {name: sympy.Symbol(name, real = True) for name in variable_names}
    local_dict = dict(symbols)
    for alias, target in (aliases or dict()).items():
        local_dict[alias] = symbols[target]
    if time:
        local_dict['t'] = sympy.Symbol('t', real = True)
    local_dict['pi'] = sympy.pi
    local_dict.update(allowed_functions)
    global_dict = {
        '__builtins__': dict(),
        'Float': sympy.Float,
        'Function': sympy.Function,
        'Integer': sympy.Integer,
        'Rational': sympy.Rational,
        'Symbol': sympy.Symbol,
        }
    try:
        expression = sympy_parser.parse_expr(
            text,
            local_dict = local_dict,
            global_dict = global_dict,
            transformations = transformations,
            evaluate = True,
            )
    except (SyntaxError, TypeError, NameError, AttributeError, tokenize.TokenError) as error:
        raise ExpressionError("Cannot parse expression {!r}: {}".format(text, error))

    if not isinstance(expression, sympy.Expr):
        raise ExpressionError("Expression {!r} is not a scalar expression".format(text))
    unknown_functions = sorted(str(function.func) for function in expression.atoms(AppliedUndef))
    if unknown_functions:
        raise ExpressionError("Unsupported functions {} in {!r}".format(unknown_functions, text))
    allowed_symbols = set(local_dict[name] for name in local_dict if isinstance(local_dict[name], sympy.Symbol))
    unknown_symbols = sorted(str(symbol) for symbol in expression.free_symbols - allowed_symbols)
    if unknown_symbols:
        raise ExpressionError("Unknown variables {} in {!r}".format(unknown_symbols, text))
    log.debug("Parsed {!r} into {}".format(text, expression))
    return expression


def _vectorize(expression, arguments):
    function = sympy.lambdify(arguments, expression, modules = 'numpy')

    def vectorized(*values):
        result = function(*values)
        shape = np.broadcast(*values).shape if values else ()
        return np.broadcast_to(np.asarray(result, dtype = float), shape)

    return vectorized


class CompiledExpression(object):
    """Value, gradient and Hessian of a parsed expression as numpy callables.

    Callables take the arguments positionally (time first when present).
    Gradient and Hessian are taken with respect to the coordinates only.
    """

    def __init__(self, expression, coordinates, time_symbol = None):
        self.expression = expression
        self.coordinates = list(coordinates)
        self.time_symbol = time_symbol
        arguments = ([time_symbol] if time_symbol is not None else []) + self.coordinates
        self._value = _vectorize(expression, arguments)
        derivatives = [sympy.diff(expression, symbol) for symbol in self.coordinates]
        self._gradient = [_vectorize(derivative, arguments) for derivative in derivatives]
        self._hessian = [
            [_vectorize(sympy.diff(derivative, symbol), arguments) for symbol in self.coordinates]
            for derivative in derivatives
            ]
        self.is_autonomous = time_symbol is None or time_symbol not in expression.free_symbols

    def __repr__(self):
        return "CompiledExpression({})".format(self.expression)

    def value(self, *arguments):
        return self._value(*arguments)

    def gradient(self, *arguments):
        return np.stack([component(*arguments) for component in self._gradient], axis = -1)

    def hessian(self, *arguments):
        return np.stack(
            [np.stack([entry(*arguments) for entry in row], axis = -1) for row in self._hessian],
            axis = -2,
            )


def compile_expression(text, variable_names, aliases = None, time = False):
    expression = parse_expression(text, variable_names, aliases = aliases, time = time)
    coordinates = [sympy.Symbol(name, real = True) for name in variable_names]
    time_symbol = sympy.Symbol('t', real = True) if time else None
    return CompiledExpression(expression, coordinates, time_symbol = time_symbol)
