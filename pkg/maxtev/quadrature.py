"""Collapsed Gauss-Jacobi quadrature on the reference simplices.

The reference tetrahedron is `{x >= 0, x1 + x2 + x3 <= 1}` with vertices
`0, e1, e2, e3`; the reference triangle is its face in the `(x1, x2)` plane.
Rules are conical products (Duffy collapse) of Gauss-Jacobi rules, which have
positive weights and are exact to any requested degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.special import roots_jacobi

from maxtev.errors import UnsupportedDegree

FloatArray = NDArray[np.float64]

MIN_DEGREE = 1
MAX_DEGREE = 10


@dataclass(frozen=True)
class QuadratureRule:
    points: FloatArray
    weights: FloatArray
    degree: int

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def barycentric(self) -> FloatArray:
        """Points as barycentric coordinates `(l0, l1, ..)`, `l0 = 1 - sum(x)`."""
        rest = 1.0 - self.points.sum(axis=1, keepdims=True)
        return np.concatenate([rest, self.points], axis=1)


def _gauss_jacobi_01(m: int, alpha: float) -> tuple[FloatArray, FloatArray]:
    """Nodes/weights on [0, 1] for the weight `(1 - s)**alpha`."""
    t, w = roots_jacobi(m, alpha, 0.0)
    return (1.0 + t) / 2.0, w / 2.0 ** (alpha + 1.0)


def _check_degree(degree: int) -> None:
    if not MIN_DEGREE <= degree <= MAX_DEGREE:
        raise UnsupportedDegree(degree, low=MIN_DEGREE, high=MAX_DEGREE)


@lru_cache(maxsize=None)
def quadrature_rule(degree: int) -> QuadratureRule:
    """Tetrahedron rule exact for polynomials of total degree `degree`.

    Raises:
        UnsupportedDegree: outside `[1, 10]`.
    """
    _check_degree(degree)
    m = (degree + 2) // 2
    s1, w1 = _gauss_jacobi_01(m, 2.0)
    s2, w2 = _gauss_jacobi_01(m, 1.0)
    s3, w3 = _gauss_jacobi_01(m, 0.0)

    a, b, c = np.meshgrid(s1, s2, s3, indexing="ij")
    x1 = a
    x2 = (1.0 - a) * b
    x3 = (1.0 - a) * (1.0 - b) * c
    points = np.stack([x1.ravel(), x2.ravel(), x3.ravel()], axis=1)
    weights = np.einsum("i,j,k->ijk", w1, w2, w3).ravel()

    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> QuadratureRule:
    """Rule on the reference triangle (area 1/2), points in `(s, r)`."""
    _check_degree(degree)
    m = (degree + 2) // 2
    s1, w1 = _gauss_jacobi_01(m, 1.0)
    s2, w2 = _gauss_jacobi_01(m, 0.0)

    a, b = np.meshgrid(s1, s2, indexing="ij")
    points = np.stack([a.ravel(), ((1.0 - a) * b).ravel()], axis=1)
    weights = np.outer(w1, w2).ravel()

    points.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(points=points, weights=weights, degree=degree)


@lru_cache(maxsize=None)
def line_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on [0, 1], points with shape `(m, 1)`."""
    _check_degree(degree)
    s, w = _gauss_jacobi_01((degree + 2) // 2, 0.0)
    points = s[:, None]
    points.setflags(write=False)
    w.setflags(write=False)
    return QuadratureRule(points=points, weights=w, degree=degree)
