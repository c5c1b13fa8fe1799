from math import factorial

import numpy as np
import pytest

from spmhd.fem.quadrature import simplex_rule


def exact_monomial(powers):
    """Integral of prod(lambda_i ** a_i) over the simplex divided by its volume."""
    d = len(powers) - 1
    numerator = factorial(d) * np.prod([factorial(a) for a in powers])
    return numerator / factorial(d + sum(powers))


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_weights_sum_to_one(dim):
    rule = simplex_rule(dim, 4)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-15)
    assert np.all(rule.weights > 0)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_points_inside(dim):
    rule = simplex_rule(dim, 8)
    assert rule.barycentric.shape == (rule.num_points, dim + 1)
    assert np.all(rule.barycentric > 0)
    np.testing.assert_allclose(rule.barycentric.sum(axis=1), 1.0, atol=1e-14)


@pytest.mark.parametrize("dim, powers", [
    (1, (3, 1)),
    (2, (2, 1, 1)),
    (2, (0, 4, 0)),
    (3, (1, 1, 1, 1)),
    (3, (2, 0, 2, 0)),
])
def test_exact_for_degree_four(dim, powers):
    rule = simplex_rule(dim, 4)
    values = np.prod(rule.barycentric ** np.array(powers), axis=1)
    assert values @ rule.weights == pytest.approx(exact_monomial(powers), rel=1e-13)


def test_degree_is_at_least_requested():
    for degree in range(0, 10):
        assert simplex_rule(2, degree).degree >= degree
