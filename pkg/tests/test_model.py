"""Portfolio model: scenario returns, outcome enumeration, growth derivatives."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import kellyalloc as ka
from kellyalloc.errors import DomainViolation, OutcomeExplosion, ValidationError
from helpers import fd_gradient, fd_jacobian, random_feasible_fractions, rel_err


def test_scenario_return_signs(coinflip):
    assert ka.scenario_return(coinflip, 0) == -0.5
    assert ka.scenario_return(coinflip, 1) == 1.0
    at_par = ka.Company(
        "par", 100.0,
        (ka.Scenario("down", 50.0, 0.5), ka.Scenario("par", 100.0, 0.5)),
    )
    assert ka.scenario_return(at_par, 1) == 0.0


def test_scenario_validation():
    with pytest.raises(ValidationError):
        ka.Scenario("bad", -1.0, 0.5)
    with pytest.raises(ValidationError):
        ka.Scenario("bad", 1.0, 0.0)
    with pytest.raises(ValidationError):
        ka.Scenario("bad", 1.0, 1.5)
    with pytest.raises(ValidationError):
        ka.Scenario("bad", float("nan"), 0.5)


def test_company_probabilities_must_sum_to_one():
    scenarios = (ka.Scenario("a", 50.0, 0.5), ka.Scenario("b", 200.0, 0.4))
    with pytest.raises(ValidationError, match="sum"):
        ka.Company("x", 100.0, scenarios)


def test_company_market_cap_positive():
    scenarios = (ka.Scenario("a", 50.0, 0.5), ka.Scenario("b", 200.0, 0.5))
    with pytest.raises(ValidationError):
        ka.Company("x", 0.0, scenarios)
    with pytest.raises(ValidationError):
        ka.Company("x", -5.0, scenarios)


def test_company_requires_a_downside_scenario():
    up_only = (ka.Scenario("up", 150.0, 0.5), ka.Scenario("way up", 200.0, 0.5))
    with pytest.raises(ValidationError, match="downside"):
        ka.Company("moon", 100.0, up_only)
    # The documented override accepts it.
    c = ka.Company("moon", 100.0, up_only, require_downside=False)
    assert c.scenario_returns().min() == 0.5


def test_enumerate_outcomes_products(coinflip):
    space = ka.enumerate_outcomes([coinflip, coinflip])
    assert space.num_outcomes == 4
    assert space.probabilities.tolist() == [0.25, 0.25, 0.25, 0.25]
    # Company 0 varies slowest.
    assert space.returns.tolist() == [
        [-0.5, -0.5], [-0.5, 1.0], [1.0, -0.5], [1.0, 1.0],
    ]


def test_enumerate_outcomes_mixed_counts(mixed, mixed_space):
    assert mixed_space.num_outcomes == 3 * 3 * 3 * 2 * 3
    assert math.fsum(mixed_space.probabilities.tolist()) == pytest.approx(1.0, abs=1e-12)
    # Returns columns line up with each company's own scenario grid.
    for j, company in enumerate(mixed):
        assert set(np.unique(mixed_space.returns[:, j])) == set(company.scenario_returns())


def test_enumerate_outcomes_probability_alignment(mixed, mixed_space):
    # Spot-check one outcome: every company in its first scenario.
    first = mixed_space.probabilities[0]
    expected = math.prod(c.scenarios[0].probability for c in mixed)
    assert first == pytest.approx(expected, rel=1e-15)
    assert mixed_space.returns[0].tolist() == [
        ka.scenario_return(c, 0) for c in mixed
    ]


def test_enumerate_outcomes_cap():
    c = ka.Company(
        "many", 1.0,
        tuple(ka.Scenario(f"s{i}", 0.5 + i * 0.25, 0.25) for i in range(4)),
    )
    with pytest.raises(OutcomeExplosion):
        ka.enumerate_outcomes([c, c], max_outcomes=15)
    assert ka.enumerate_outcomes([c, c], max_outcomes=16).num_outcomes == 16


def test_enumerate_outcomes_rejects_empty():
    with pytest.raises(ValidationError):
        ka.enumerate_outcomes([])


def test_outcome_space_immutable(coinflip_space):
    with pytest.raises(ValueError):
        coinflip_space.probabilities[0] = 0.9
    with pytest.raises(ValueError):
        coinflip_space.returns[0, 0] = 0.0


def test_growth_zero_fractions(mixed_space):
    assert ka.growth(np.zeros(5), mixed_space) == 0.0


def test_growth_single_company_hand_value(coinflip_single_space):
    # 0.5*ln(0.75) + 0.5*ln(1.5), evaluated directly.
    expected = 0.5 * math.log(0.75) + 0.5 * math.log(1.5)
    assert ka.growth([0.5], coinflip_single_space) == pytest.approx(expected, abs=1e-15)


def test_growth_domain_violation(coinflip_single_space):
    with pytest.raises(DomainViolation):
        ka.growth([2.2], coinflip_single_space)  # 1 + 2.2 * (-0.5) < 0
    with pytest.raises(DomainViolation):
        ka.growth([2.0], coinflip_single_space)  # exactly zero wealth is out too


def test_growth_input_validation(coinflip_space):
    with pytest.raises(ValueError):
        ka.growth([0.1, 0.2], coinflip_space)
    with pytest.raises(ValueError):
        ka.growth([np.nan] * 5, coinflip_space)


def test_wealth_factors(coinflip_single_space):
    w = ka.wealth_factors([0.5], coinflip_single_space)
    assert w.tolist() == [0.75, 1.5]


def test_gradient_zero_fractions_is_mean_return(mixed_space):
    grad = ka.growth_gradient(np.zeros(5), mixed_space)
    expected = mixed_space.probabilities @ mixed_space.returns
    np.testing.assert_allclose(grad, expected, atol=1e-14)


def test_gradient_vanishes_at_single_asset_optimum(coinflip_single_space):
    # f* = 0.5 solves 0.5*(-0.5)/(1-0.5f) + 0.5*1/(1+f) = 0 exactly.
    grad = ka.growth_gradient([0.5], coinflip_single_space)
    assert abs(grad[0]) < 1e-15


def test_gradient_matches_finite_differences(mixed_space):
    rng = np.random.default_rng(7)
    for _ in range(20):
        f = random_feasible_fractions(rng, mixed_space)
        fd = fd_gradient(lambda x: ka.growth(x, mixed_space), f, h=1e-6)
        assert rel_err(ka.growth_gradient(f, mixed_space), fd) < 1e-7


def test_hessian_single_company_at_zero(coinflip_single_space):
    h = ka.growth_hessian([0.0], coinflip_single_space)
    # -sum p k^2 = -(0.5*0.25 + 0.5*1.0)
    assert h.shape == (1, 1)
    assert h[0, 0] == pytest.approx(-0.625, abs=1e-15)


def test_hessian_exactly_symmetric(mixed_space):
    rng = np.random.default_rng(11)
    for _ in range(10):
        f = random_feasible_fractions(rng, mixed_space)
        h = ka.growth_hessian(f, mixed_space)
        assert np.array_equal(h, h.T)


def test_hessian_negative_semidefinite(mixed_space):
    rng = np.random.default_rng(13)
    for _ in range(100):
        f = random_feasible_fractions(rng, mixed_space)
        h = ka.growth_hessian(f, mixed_space)
        x = rng.normal(size=5)
        assert float(x @ h @ x) <= 1e-10


def test_hessian_matches_finite_differences(mixed_space):
    rng = np.random.default_rng(17)
    for _ in range(10):
        f = random_feasible_fractions(rng, mixed_space)
        fd = fd_jacobian(lambda x: ka.growth_gradient(x, mixed_space), f, h=1e-5)
        assert rel_err(ka.growth_hessian(f, mixed_space), fd) < 1e-6


def test_growth_invariant_under_currency_rescaling(mixed):
    rescaled = [
        ka.Company(
            c.name,
            c.market_cap * 1e3,
            tuple(
                ka.Scenario(s.label, s.intrinsic_value * 1e3, s.probability)
                for s in c.scenarios
            ),
            currency="XXX",
        )
        for c in mixed
    ]
    a = ka.enumerate_outcomes(mixed)
    b = ka.enumerate_outcomes(rescaled)
    f = np.array([0.1, 0.05, 0.2, 0.02, 0.15])
    assert abs(ka.growth(f, a) - ka.growth(f, b)) <= 1e-12


def test_growth_permutation_equivariance(mixed):
    order = [3, 0, 4, 1, 2]
    permuted = [mixed[j] for j in order]
    a = ka.enumerate_outcomes(mixed)
    b = ka.enumerate_outcomes(permuted)
    f = np.array([0.1, 0.05, 0.2, 0.02, 0.15])
    f_perm = f[order]
    assert ka.growth(f, a) == pytest.approx(ka.growth(f_perm, b), abs=1e-12)
    g = ka.growth_gradient(f, a)
    g_perm = ka.growth_gradient(f_perm, b)
    np.testing.assert_allclose(g[order], g_perm, atol=1e-12)


@st.composite
def portfolios(draw):
    n_companies = draw(st.integers(min_value=1, max_value=3))
    companies = []
    for i in range(n_companies):
        n_scen = draw(st.integers(min_value=2, max_value=4))
        weights = [draw(st.floats(min_value=0.05, max_value=1.0)) for _ in range(n_scen)]
        total = math.fsum(weights)
        probs = [w / total for w in weights]
        values = [draw(st.floats(min_value=0.0, max_value=5.0)) for _ in range(n_scen)]
        values[0] = draw(st.floats(min_value=0.0, max_value=0.9))  # guaranteed downside
        scenarios = tuple(
            ka.Scenario(f"s{k}", v, p) for k, (v, p) in enumerate(zip(values, probs))
        )
        companies.append(ka.Company(f"c{i}", 1.0, scenarios))
    return companies


@settings(max_examples=60, deadline=None)
@given(portfolios())
def test_enumeration_invariants(companies):
    space = ka.enumerate_outcomes(companies)
    assert abs(math.fsum(space.probabilities.tolist()) - 1.0) <= 1e-9
    assert float(space.returns.min()) >= -1.0
    assert ka.growth(np.zeros(space.num_companies), space) == 0.0
    expected_outcomes = math.prod(len(c.scenarios) for c in companies)
    assert space.num_outcomes == expected_outcomes
