import numpy as np
import pytest


from conley_lab.errors import ExpressionError
from conley_lab.expressions import compile_expression, field_aliases, hamiltonian_variable_names, parse_expression


def test_variable_names():
    assert hamiltonian_variable_names(2) == ['x1', 'x2', 'y1', 'y2']
    assert field_aliases(3) == {'x': 'x1', 'y': 'x2', 'z': 'x3'}


def test_derivatives_are_symbolic():
    compiled = compile_expression('x1^3*y1 + sin(y1)', ['x1', 'y1'])
    assert float(compiled.value(2.0, 0.0)) == 0.0
    assert compiled.gradient(np.array(1.0), np.array(0.0)).tolist() == [0.0, 2.0]
    assert compiled.hessian(np.array(1.0), np.array(0.0)).tolist() == [[0.0, 3.0], [3.0, 0.0]]


def test_constants_broadcast_over_points():
    compiled = compile_expression('pi', ['x1', 'y1'])
    values = compiled.value(np.zeros(4), np.zeros(4))
    assert values.shape == (4, )
    assert np.allclose(values, np.pi)


def test_time_dependence():
    compiled = compile_expression('cos(2*pi*t)*x1', ['x1', 'y1'], time = True)
    assert not compiled.is_autonomous
    assert float(compiled.value(0.5, 2.0, 0.0)) == pytest.approx(-2.0)
    assert compile_expression('x1', ['x1', 'y1'], time = True).is_autonomous


@pytest.mark.parametrize("text", [
    'x1 +',
    'x1 + w',
    'log(x1)',
    'foo(x1)',
    'exp(x1, y1)',
    '',
    'x1 = 2',
    ])
def test_bad_expressions(text):
    with pytest.raises(ExpressionError):
        parse_expression(text, ['x1', 'y1'])


def test_time_is_unknown_without_time():
    with pytest.raises(ExpressionError):
        parse_expression('t*x1', ['x1', 'y1'])
