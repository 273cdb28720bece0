import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from bornfield.fock_space import FockVector, coherent_state, fock_state, vacuum
from bornfield.probability_rules import (
    CountPMF,
    DegenerateRuleError,
    ProbabilityRule,
    RuleError,
    _renormalize,
    apply_rule,
    born_pmf,
    linear_shape,
    pmf_moments,
    poisson_pmf_oracle,
    sign_shape,
)

from oracles import KAPPA_ADDITIVE_ALPHA2, KAPPA_POWER_ALPHA2, power_kappa

amplitudes = st.complex_numbers(max_magnitude=5.0, allow_nan=False, allow_infinity=False)


def test_born_pmf_alpha_one():
    assert born_pmf(coherent_state(1)).probs[0] == pytest.approx(math.exp(-1), abs=1e-15)


def test_born_pmf_vacuum_and_fock():
    assert born_pmf(vacuum(6)).probs[0] == 1
    p = born_pmf(fock_state(5, 9)).probs
    assert p[5] == 1 and p.sum() == 1


def test_born_pmf_rejects_unnormalized():
    with pytest.raises(RuleError):
        born_pmf(FockVector([1.0, 1.0]))


def test_poisson_oracle_basic():
    assert poisson_pmf_oracle(0, 5).probs[0] == 1
    np.testing.assert_allclose(poisson_pmf_oracle(4, 60).probs, poisson.pmf(np.arange(61), 4), atol=1e-15)
    with pytest.raises(RuleError):
        poisson_pmf_oracle(-1, 5)


def test_poisson_oracle_matches_born():
    np.testing.assert_allclose(
        born_pmf(coherent_state(2, 60)).probs, poisson_pmf_oracle(4, 60).probs, rtol=0, atol=1e-12
    )


def test_poisson_mean_equals_variance():
    mean, var = pmf_moments(poisson_pmf_oracle(4, 60))
    assert mean == pytest.approx(4, abs=1e-12)
    assert var == pytest.approx(4, abs=1e-12)


def test_moments_known_values():
    assert pmf_moments(born_pmf(coherent_state(2)))[0] == pytest.approx(4, abs=1e-12)
    assert pmf_moments(born_pmf(coherent_state(1 + 1j)))[0] == pytest.approx(2, abs=1e-12)
    assert pmf_moments(born_pmf(fock_state(3, 10))) == (3.0, 0.0)


def test_rule_validation():
    with pytest.raises(RuleError):
        ProbabilityRule("born", epsilon=0.1)
    with pytest.raises(RuleError):
        ProbabilityRule.power(-1.0)
    with pytest.raises(RuleError):
        ProbabilityRule("quantum_magic")
    with pytest.raises(RuleError):
        ProbabilityRule.additive(0.1, shape="triangle")
    with pytest.raises(RuleError):
        ProbabilityRule.power(float("nan"))


def test_countpmf_validation():
    with pytest.raises(RuleError):
        CountPMF([0.5, 0.6])
    with pytest.raises(RuleError):
        CountPMF([-0.1, 1.1])


def test_power_zero_is_born():
    s = coherent_state(2)
    np.testing.assert_allclose(apply_rule(s, ProbabilityRule.power(0)).probs, born_pmf(s).probs, atol=1e-12, rtol=0)


@pytest.mark.parametrize("eps", sorted(KAPPA_POWER_ALPHA2))
def test_power_mean_matches_oracle(eps):
    mean, _ = pmf_moments(apply_rule(coherent_state(2), ProbabilityRule.power(eps)))
    assert mean / 4 == pytest.approx(KAPPA_POWER_ALPHA2[eps], abs=1e-12)


def test_frozen_power_oracle_is_reproducible():
    assert power_kappa(4.0, 0.1) == pytest.approx(KAPPA_POWER_ALPHA2[0.1], abs=1e-15)


def test_additive_zero_is_born():
    s = coherent_state(2)
    for shape in ("sign", "linear"):
        np.testing.assert_allclose(
            apply_rule(s, ProbabilityRule.additive(0, shape)).probs, born_pmf(s).probs, atol=1e-12, rtol=0
        )


@pytest.mark.parametrize("delta", sorted(KAPPA_ADDITIVE_ALPHA2))
def test_additive_mean_matches_oracle(delta):
    mean, _ = pmf_moments(apply_rule(coherent_state(2), ProbabilityRule.additive(delta)))
    assert mean / 4 == pytest.approx(KAPPA_ADDITIVE_ALPHA2[delta], abs=1e-12)


@pytest.mark.parametrize("shape", [sign_shape, linear_shape])
@pytest.mark.parametrize("mean", [0.5, 4.0, 7.3])
def test_shapes_are_zero_sum_and_unit_mass(shape, mean):
    f = shape(np.arange(40, dtype=float), mean)
    assert abs(f.sum()) <= 1e-15
    assert np.abs(f).sum() == pytest.approx(1.0, abs=1e-15)


def test_shape_without_two_sides_is_zero():
    assert np.all(sign_shape(np.arange(5, dtype=float), 0.0) == 0)


def test_additive_clamps_and_renormalizes():
    p = apply_rule(coherent_state(2), ProbabilityRule.additive(-0.5)).probs
    assert np.all(p >= 0)
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


def test_degenerate_weights_rejected():
    with pytest.raises(DegenerateRuleError):
        _renormalize(np.zeros(4), "additive")


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=-50.0, max_value=50.0))
def test_additive_never_degenerate(r, delta):
    # sum(p + delta f) = 1 before clamping, so clamping can only add mass
    p = apply_rule(coherent_state(r), ProbabilityRule.additive(delta)).probs
    assert p.sum() == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(amplitudes)
def test_rule_reduction_property(alpha):
    s = coherent_state(alpha)
    born = born_pmf(s).probs
    for rule in (ProbabilityRule.power(0.0), ProbabilityRule.additive(0.0)):
        assert np.max(np.abs(apply_rule(s, rule).probs - born)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0))
def test_born_poisson_equivalence_property(r):
    s = coherent_state(r)
    assert np.max(np.abs(born_pmf(s).probs - poisson_pmf_oracle(r * r, s.n_max).probs)) <= 1e-12


@settings(max_examples=60, deadline=None)
@given(amplitudes)
def test_mean_square_law_property(alpha):
    s = coherent_state(alpha)
    mean, _ = pmf_moments(born_pmf(s))
    assert abs(mean - abs(alpha) ** 2) <= 10 * s.truncation_deficit + 1e-12 * max(1, abs(alpha) ** 2)


@settings(max_examples=60, deadline=None)
@given(
    amplitudes,
    st.sampled_from([ProbabilityRule.power(0.3), ProbabilityRule.power(-0.4), ProbabilityRule.additive(0.05),
                     ProbabilityRule.additive(-0.02, "linear")]),
)
def test_normalization_preserved(alpha, rule):
    p = apply_rule(coherent_state(alpha), rule).probs
    assert abs(math.fsum(p) - 1) <= 1e-9
    assert np.all((p >= 0) & (p <= 1))


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=-0.9, max_value=1.0))
def test_power_continuity(r, eps):
    s = coherent_state(r)
    p0 = apply_rule(s, ProbabilityRule.power(eps)).probs
    p1 = apply_rule(s, ProbabilityRule.power(eps + 1e-6)).probs
    assert np.max(np.abs(p1 - p0)) <= 1e-3
