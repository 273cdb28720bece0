import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from bornfield.fock_space import (
    FockSpaceError,
    FockVector,
    ModeOperator,
    apply_operator,
    build_operator,
    coherent_coefficients,
    coherent_state,
    default_n_max,
    eigen_residual,
    expectation,
    fock_state,
    vacuum,
)

from oracles import coherent_coefficient

amplitudes = st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False)


def fp_floor(alpha):
    return 1e-12 * max(1.0, abs(alpha) ** 2)


def test_vacuum_coefficients():
    s = coherent_coefficients(0, 8)
    assert s.coeffs[0] == 1
    assert np.all(s.coeffs[1:] == 0)
    assert s.truncation_deficit == 0


def test_first_coefficient_alpha_one():
    s = coherent_coefficients(1, 30)
    assert s.coeffs[0] == pytest.approx(0.6065306597126334, abs=1e-15)


@pytest.mark.parametrize("alpha", [1, 0.3 - 0.7j, 2j, 1.5 + 1.5j])
def test_coefficients_match_factorial_formula(alpha):
    s = coherent_state(alpha, 20)
    expected = [coherent_coefficient(alpha, n) for n in range(21)]
    np.testing.assert_allclose(s.coeffs, expected, rtol=1e-12, atol=1e-15)


def test_imaginary_alpha_matches_poisson():
    s = coherent_coefficients(2j, 60)
    np.testing.assert_allclose(np.abs(s.coeffs) ** 2, poisson.pmf(np.arange(61), 4.0), rtol=0, atol=1e-12)


def test_large_amplitude_stays_finite():
    # exp(-|alpha|^2 / 2) alone underflows here
    s = coherent_state(40.0)
    assert np.all(np.isfinite(s.coeffs))
    assert s.norm_sq == pytest.approx(1.0, abs=1e-9)


def test_truncation_flag():
    s = coherent_state(3.0, 5)
    assert not s.truncation_ok
    assert s.truncation_deficit == pytest.approx(poisson.sf(5, 9.0), rel=1e-10)
    assert coherent_state(3.0).truncation_ok


def test_default_truncation():
    assert default_n_max(0) == 20
    assert default_n_max(2) == 44
    assert default_n_max(3j) == 59


@pytest.mark.parametrize("bad", [float("nan"), complex(1, float("inf")), "x"])
def test_rejects_bad_amplitude(bad):
    with pytest.raises(FockSpaceError):
        coherent_state(bad)


def test_annihilation_matrix():
    a = build_operator("annihilation", 2).matrix
    expected = np.zeros((3, 3))
    expected[0, 1] = 1
    expected[1, 2] = math.sqrt(2)
    np.testing.assert_array_equal(a, expected)


def test_number_matrix():
    np.testing.assert_array_equal(build_operator("number", 3).matrix, np.diag([0, 1, 2, 3]))


def test_quadrature_matrix():
    np.testing.assert_array_equal(build_operator("quadrature", 1).matrix, [[0, 1], [1, 0]])


@pytest.mark.parametrize("n_max", [0, 1, 5, 30])
def test_operator_identities(n_max):
    a = build_operator("annihilation", n_max)
    ad = build_operator("creation", n_max)
    num = build_operator("number", n_max)
    x = build_operator("quadrature", n_max)
    np.testing.assert_array_equal(ad.matrix, a.matrix.conj().T)
    np.testing.assert_array_equal(np.diag(num.matrix), np.arange(n_max + 1))
    np.testing.assert_allclose(num.matrix, ad.matrix @ a.matrix, atol=1e-12)
    assert num.is_hermitian() and x.is_hermitian()


def test_unknown_operator_kind():
    with pytest.raises(FockSpaceError):
        build_operator("displacement", 3)
    with pytest.raises(FockSpaceError):
        build_operator("number", -1)


def test_custom_operator():
    op = ModeOperator(np.eye(3))
    assert op.kind.value == "custom"
    assert expectation(fock_state(1, 2), op) == 1


def test_quadrature_expectation_known_value():
    s = coherent_state(1 + 1j)
    assert expectation(s, build_operator("quadrature", s.n_max)).real == pytest.approx(2.0, abs=1e-12)


def test_number_expectation_known_value():
    s = coherent_state(2)
    assert expectation(s, build_operator("number", s.n_max)).real == pytest.approx(4.0, abs=1e-12)


def test_fock_state_has_zero_quadrature():
    assert expectation(fock_state(3, 10), build_operator("quadrature", 10)) == 0


def test_expectation_rejects_mismatch_and_unnormalized():
    with pytest.raises(FockSpaceError):
        expectation(vacuum(3), build_operator("number", 4))
    with pytest.raises(FockSpaceError):
        expectation(FockVector([1.0, 1.0]), build_operator("number", 1))


def test_apply_to_vacuum_and_fock():
    assert np.all(apply_operator(build_operator("annihilation", 5), vacuum(5)).coeffs == 0)
    out = apply_operator(build_operator("number", 6), fock_state(2, 6))
    np.testing.assert_array_equal(out.coeffs, 2 * fock_state(2, 6).coeffs)
    with pytest.raises(FockSpaceError):
        apply_operator(build_operator("number", 6), vacuum(5))


def test_coherent_is_annihilation_eigenvector():
    s = coherent_state(1, 40)
    assert eigen_residual(1, s) <= 1e-8


def test_states_are_immutable():
    s = coherent_state(1)
    with pytest.raises(ValueError):
        s.coeffs[0] = 0


@settings(max_examples=60, deadline=None)
@given(amplitudes)
def test_normalization_property(alpha):
    s = coherent_state(alpha)
    assert s.truncation_ok
    assert abs(s.norm_sq - 1) <= max(s.trunc_tol, 1e-13)


@settings(max_examples=60, deadline=None)
@given(amplitudes)
def test_eigenrelation_property(alpha):
    s = coherent_state(alpha)
    assert eigen_residual(alpha, s) <= 10 * math.sqrt(s.truncation_deficit) + fp_floor(alpha)


@settings(max_examples=60, deadline=None)
@given(amplitudes)
def test_quadrature_and_number_properties(alpha):
    s = coherent_state(alpha)
    tol = 10 * s.truncation_deficit + fp_floor(alpha)
    x = expectation(s, build_operator("quadrature", s.n_max))
    n = expectation(s, build_operator("number", s.n_max))
    assert abs(x.real - 2 * alpha.real) <= tol
    assert abs(n.real - abs(alpha) ** 2) <= tol
    assert abs(x.imag) <= 1e-10 and abs(n.imag) <= 1e-10
