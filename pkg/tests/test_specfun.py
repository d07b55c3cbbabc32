from fractions import Fraction

import numpy as np
import pytest
from numpy.polynomial.hermite import hermgauss

from phasespace.errors import DimensionMismatchError, HermiteOrderError
from phasespace.specfun import (
    MultiIndex,
    as_multi_index,
    binomial_identity_check,
    expansion_coefficients,
    hermite_function,
    hermite_polynomial_factors,
    laguerre,
    laguerre_explicit,
    laguerre_product,
    laplace_laguerre,
    level_multiplicity,
    multi_indices,
)


@pytest.mark.parametrize(
    "N, expected",
    [
        (1, [Fraction(1)]),
        (2, [Fraction(3, 2), Fraction(-1, 2)]),
        (3, [Fraction(7, 4), Fraction(-1), Fraction(1, 4)]),
        (4, [Fraction(15, 8), Fraction(-11, 8), Fraction(5, 8), Fraction(-1, 8)]),
    ],
)
def test_one_dimensional_coefficients(N, expected):
    assert expansion_coefficients(1, N).signed() == expected


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_second_order_coefficients_in_any_dimension(d):
    assert expansion_coefficients(d, 2).signed() == [1 + Fraction(d, 2), Fraction(-1, 2)]


@pytest.mark.parametrize("d", [1, 2, 3, 4])
@pytest.mark.parametrize("N", range(1, 9))
def test_signed_mass_is_one(d, N):
    assert expansion_coefficients(d, N).signed_mass() == 1


def test_coefficients_reject_bad_arguments():
    with pytest.raises(ValueError):
        expansion_coefficients(0, 2)
    with pytest.raises(ValueError):
        expansion_coefficients(1, 0)


@pytest.mark.parametrize("N", range(0, 21))
def test_binomial_identity(N):
    assert all(binomial_identity_check(N, m, k) for m in range(N + 1) for k in range(6))


def test_identity_check_is_exported():
    import phasespace

    assert phasespace.binomial_identity_check is binomial_identity_check
    assert "binomial_identity_check" in phasespace.__all__


def test_laguerre_recurrence_matches_defining_sum():
    xs = np.linspace(0.0, 12.0, 25)
    for n in range(11):
        recurrence = laguerre(n, xs)
        explicit = np.array([laguerre_explicit(n, x) for x in xs])
        np.testing.assert_allclose(recurrence, explicit, rtol=1e-9, atol=1e-9)
    assert laguerre(5, 0.0) == pytest.approx(1.0)
    assert isinstance(laguerre(3, 1.5), float)


def test_laguerre_solves_its_differential_equation():
    # x L'' + (1 - x) L' + n L = 0
    h = 1e-4
    xs = np.linspace(0.5, 4.0, 15)
    for n in range(1, 9):
        value = laguerre(n, xs)
        first = (laguerre(n, xs + h) - laguerre(n, xs - h)) / (2 * h)
        second = (laguerre(n, xs + h) - 2 * value + laguerre(n, xs - h)) / h ** 2
        residual = xs * second + (1 - xs) * first + n * value
        scale = 1.0 + np.max(np.abs(value))
        assert np.max(np.abs(residual)) < 1e-4 * scale


def test_laguerre_product_multiplies_axes():
    k = MultiIndex((2, 1))
    rho = np.array([0.7, 1.9])
    assert laguerre_product(k, rho) == pytest.approx(laguerre(2, 0.7) * laguerre(1, 1.9))
    with pytest.raises(DimensionMismatchError):
        laguerre_product(k, np.array([1.0, 2.0, 3.0]))


def test_hermite_polynomial_factors_are_orthonormal():
    t, w = hermgauss(80)
    basis = np.array([hermite_polynomial_factors(MultiIndex((n,)), t[:, None]) for n in range(12)])
    gram = (basis * w) @ basis.T
    np.testing.assert_allclose(gram, np.eye(12), atol=1e-12)


def test_hermite_functions_are_orthonormal_in_two_dimensions():
    eps = 0.2
    t, w = hermgauss(40)
    T1, T2 = np.meshgrid(t, t, indexing="ij")
    x = np.sqrt(eps) * np.column_stack([T1.ravel(), T2.ravel()])
    # dx = eps dt, and exp(|t|^2) undoes the Gauss-Hermite weight
    weights = eps * np.outer(w, w).ravel() * np.exp(T1.ravel() ** 2 + T2.ravel() ** 2)
    ks = [k for j in range(4) for k in multi_indices(2, j)]
    basis = np.array([hermite_function(k, eps, x) for k in ks])
    gram = (basis * weights) @ basis.T
    np.testing.assert_allclose(gram, np.eye(len(ks)), atol=1e-12)


def test_hermite_function_ground_state_is_gaussian():
    eps = 0.05
    x = np.linspace(-1, 1, 11)[:, None]
    expected = (np.pi * eps) ** -0.25 * np.exp(-x[:, 0] ** 2 / (2 * eps))
    np.testing.assert_allclose(hermite_function((0,), eps, x), expected, rtol=1e-13)


def test_hermite_function_is_separable():
    eps = 0.3
    x = np.array([0.2, -0.4])
    value = hermite_function((2, 1), eps, x)
    assert value == pytest.approx(hermite_function((2,), eps, x[:1]) * hermite_function((1,), eps, x[1:]))


def test_hermite_order_cap(monkeypatch):
    with pytest.raises(HermiteOrderError):
        hermite_function((61,), 1.0, np.array([0.0]))
    monkeypatch.setenv("SPECTRO_HERMITE_CAP", "5")
    with pytest.raises(HermiteOrderError):
        hermite_function((6,), 1.0, np.array([0.0]))
    hermite_function((5,), 1.0, np.array([0.0]))


def test_multi_indices_are_lexicographic():
    assert [k.entries for k in multi_indices(2, 2)] == [(0, 2), (1, 1), (2, 0)]
    assert len(multi_indices(3, 2)) == level_multiplicity(3, 2) == 6
    assert [k.entries for k in multi_indices(1, 4)] == [(4,)]


def test_as_multi_index():
    assert as_multi_index(3).entries == (3,)
    assert as_multi_index([1, 2], 2).order() == 3
    with pytest.raises(DimensionMismatchError):
        as_multi_index(2, 2)
    with pytest.raises(DimensionMismatchError):
        as_multi_index((1, 2), 3)
    with pytest.raises(ValueError):
        MultiIndex((1, -1))


def _fourth_order_laplacian(f, h):
    stencil = [(-1.0, 2), (16.0, 1), (16.0, -1), (-1.0, -2)]

    def lap(z):
        total = -30.0 * z.shape[-1] * f(z)
        for axis in range(z.shape[-1]):
            for coeff, shift in stencil:
                zz = z.copy()
                zz[:, axis] += shift * h
                total = total + coeff * f(zz)
        return total / (12.0 * h * h)

    return lap


@pytest.mark.parametrize("eps", [1.0, 0.1])
@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_laplace_laguerre_matches_finite_differences(d, N, eps, rng):

    def wigner_ground(z):
        return (np.pi * eps) ** (-d) * np.exp(-np.sum(z * z, axis=-1) / eps)

    f = wigner_ground
    for _ in range(N):
        f = _fourth_order_laplacian(f, 0.05 * np.sqrt(eps))
    z = 0.7 * np.sqrt(eps) * rng.standard_normal((20, 2 * d))
    numeric = (-eps / 2) ** N * f(z)
    rho = 2.0 * (z[:, :d] ** 2 + z[:, d:] ** 2) / eps
    expansion = wigner_ground(z) * laplace_laguerre(d, N).evaluate(rho)
    np.testing.assert_allclose(numeric, expansion, rtol=1e-4, atol=1e-5 * np.max(np.abs(expansion)))


def test_laplace_laguerre_levels():
    table = laplace_laguerre(1, 1)
    assert table.levels == {0: 1, 1: 1}
    assert laplace_laguerre(2, 1).levels == {0: 2, 1: 1}
    assert laplace_laguerre(2, 2).coefficient(MultiIndex((1, 0))) == 2 * 3
    assert laplace_laguerre(2, 2).coefficient(MultiIndex((1, 1))) == 2
