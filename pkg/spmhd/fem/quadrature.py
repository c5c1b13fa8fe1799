"""
Quadrature rules on simplices.

Rules are collapsed (Duffy) products of Gauss-Jacobi rules, so they have positive
weights and interior points for every degree. Points are returned in barycentric
coordinates and weights are normalized to sum to one, so that

    integral over K of f  ==  |K| * sum_q weights[q] * f(x_q).
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


class QuadratureRule:
    """
    Quadrature rule on the reference simplex of a given dimension.

    :param dim: dimension of the simplex (1, 2 or 3)
    :param degree: polynomial degree integrated exactly
    :param barycentric: points as barycentric coordinates, shape (nq, dim + 1)
    :param weights: weights summing to one, shape (nq,)
    """

    def __init__(self, dim: int, degree: int, barycentric: np.ndarray, weights: np.ndarray):
        self.dim = dim
        self.degree = degree
        self.barycentric = barycentric
        self.weights = weights

    @property
    def num_points(self) -> int:
        return len(self.weights)

    def __repr__(self):
        return "QuadratureRule(dim={d}, degree={p}, points={n})".format(
            d=self.dim, p=self.degree, n=self.num_points)


def _gauss_jacobi_unit(n: int, alpha: int):
    """
    Gauss-Jacobi rule for the weight (1 - a)^alpha on [0, 1].
    """
    if alpha == 0:
        x, w = np.polynomial.legendre.leggauss(n)
    else:
        x, w = roots_jacobi(n, alpha, 0)
    return (1.0 + x) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def _collapsed_rule(dim: int, n: int):
    a, wa = _gauss_jacobi_unit(n, dim - 1)
    if dim == 1:
        points = a[:, None]
        weights = wa
    elif dim == 2:
        b, wb = _gauss_jacobi_unit(n, 0)
        aa, bb = np.meshgrid(a, b, indexing='ij')
        points = np.stack([aa.ravel(), (bb * (1.0 - aa)).ravel()], axis=1)
        weights = np.outer(wa, wb).ravel()
    elif dim == 3:
        b, wb = _gauss_jacobi_unit(n, 1)
        c, wc = _gauss_jacobi_unit(n, 0)
        aa, bb, cc = np.meshgrid(a, b, c, indexing='ij')
        points = np.stack([aa.ravel(),
                           (bb * (1.0 - aa)).ravel(),
                           (cc * (1.0 - aa) * (1.0 - bb)).ravel()], axis=1)
        weights = np.einsum('i,j,k->ijk', wa, wb, wc).ravel()
    else:
        raise ValueError("Simplex dimension must be 1, 2 or 3, got {d}".format(d=dim))

    barycentric = np.hstack([1.0 - points.sum(axis=1, keepdims=True), points])
    weights = weights / weights.sum()
    barycentric.setflags(write=False)
    weights.setflags(write=False)
    return barycentric, weights


def simplex_rule(dim: int, degree: int = 4) -> QuadratureRule:
    """
    Returns a rule on the dim-simplex that is exact for polynomials up to ``degree``.

    :param dim: simplex dimension
    :param degree: required polynomial exactness
    """
    n = max(1, (degree + 2) // 2)
    barycentric, weights = _collapsed_rule(dim, n)
    return QuadratureRule(dim, 2 * n - 1, barycentric, weights)
