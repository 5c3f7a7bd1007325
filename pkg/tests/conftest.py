import numpy as np
import pytest

from anovadistill.data import Dataset, unit_specs
from anovadistill.predictor import CallablePredictor


def poly_predictor(coeffs_per_feature, p, cross_terms=()):
    """Sum of per-feature polynomials plus optional product terms.

    coeffs_per_feature: list of coefficient lists (highest degree first);
    cross_terms: list of (coef, (a, b, ...)) product terms.
    """

    def fn(X):
        out = np.zeros(X.shape[0])
        for k, coeffs in enumerate(coeffs_per_feature):
            out += np.polyval(coeffs, X[:, k])
        for coef, dims in cross_terms:
            term = np.full(X.shape[0], coef)
            for d in dims:
                term = term * X[:, d]
            out += term
        return out

    return CallablePredictor(fn, p)


def random_additive(rng, p, degree=4):
    coeffs = [rng.uniform(-2.0, 2.0, size=degree + 1) for _ in range(p)]
    return poly_predictor(coeffs, p)


def random_planted(rng, p, pair, degree=4):
    coeffs = [rng.uniform(-2.0, 2.0, size=degree + 1) for _ in range(p)]
    return poly_predictor(coeffs, p, cross_terms=[(1.0, pair)])


@pytest.fixture
def uniform6():
    rng = np.random.default_rng(7)
    return Dataset(unit_specs(6), rng.random((400, 6)))
