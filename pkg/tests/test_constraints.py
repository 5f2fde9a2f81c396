"""Constraint values, gradients, policy expansion, and set validation."""

import numpy as np
import pytest

import kellyalloc as ka
from kellyalloc.constraints import constraint_matrix
from kellyalloc.errors import InvalidPolicy
from helpers import fd_gradient


def test_long_only_value_and_gradient(coinflip_space):
    spec = ka.long_only(2)
    f = np.array([0.0, 0.1, 0.02, 0.0, 0.0])
    assert ka.constraint_value(spec, f, coinflip_space) == -0.02
    np.testing.assert_array_equal(
        ka.constraint_gradient(spec, coinflip_space), [0, 0, -1, 0, 0]
    )
    assert ka.constraint_offset(spec, coinflip_space) == 0.0


def test_long_only_boundary(coinflip_space):
    f = np.zeros(5)
    assert ka.constraint_value(ka.long_only(0), f, coinflip_space) == 0.0


def test_max_leverage_value(coinflip_space):
    spec = ka.max_leverage(0.75)
    f = np.full(5, 0.35)
    assert ka.constraint_value(spec, f, coinflip_space) == pytest.approx(0.0, abs=1e-12)
    f2 = np.full(5, 0.2)
    assert ka.constraint_value(spec, f2, coinflip_space) == pytest.approx(-0.75, abs=1e-12)
    np.testing.assert_array_equal(ka.constraint_gradient(spec, coinflip_space), np.ones(5))


def test_max_allocation_value(coinflip_space):
    spec = ka.max_allocation(1, 0.3)
    f = np.array([0.0, 0.25, 0.0, 0.0, 0.0])
    assert ka.constraint_value(spec, f, coinflip_space) == pytest.approx(-0.05)
    grad = ka.constraint_gradient(spec, coinflip_space)
    np.testing.assert_array_equal(grad, [0, 1, 0, 0, 0])


def test_worst_scenario_weight_coinflip(coinflip_space):
    # min(0.5 * -0.5, 0.5 * 1.0) = -0.25
    for j in range(5):
        assert ka.worst_scenario_weight(coinflip_space, j) == -0.25


def test_worst_scenario_weight_mixed(mixed, mixed_space):
    # Independent recomputation straight from the company data.
    for j, company in enumerate(mixed):
        expected = min(
            s.probability * ka.scenario_return(company, i)
            for i, s in enumerate(company.scenarios)
        )
        assert ka.worst_scenario_weight(mixed_space, j) == pytest.approx(expected, rel=1e-15)


def test_max_loss_boundary(coinflip_space):
    spec = ka.max_loss(0.05, -0.5)
    f = np.full(5, 0.02)
    # sum f_j w_j = 5 * 0.02 * (-0.25) = -0.025 = P*K exactly on the boundary
    assert ka.constraint_value(spec, f, coinflip_space) == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(
        ka.constraint_gradient(spec, coinflip_space), np.full(5, 0.25), atol=1e-15
    )
    assert ka.constraint_offset(spec, coinflip_space) == pytest.approx(-0.025)


def test_constraint_value_is_affine(mixed_space):
    rng = np.random.default_rng(3)
    specs = [ka.long_only(1), ka.max_leverage(0.5), ka.max_allocation(4, 0.4),
             ka.max_loss(0.1, -0.3)]
    for spec in specs:
        grad = ka.constraint_gradient(spec, mixed_space)
        off = ka.constraint_offset(spec, mixed_space)
        for _ in range(5):
            f = rng.uniform(0.0, 0.2, size=5)
            value = ka.constraint_value(spec, f, mixed_space)
            assert value == pytest.approx(float(grad @ f + off), abs=1e-15)
            fd = fd_gradient(lambda x: ka.constraint_value(spec, x, mixed_space), f)
            np.testing.assert_allclose(fd, grad, atol=1e-8)


def test_spec_parameter_ranges():
    with pytest.raises(InvalidPolicy):
        ka.max_leverage(-0.1)
    with pytest.raises(InvalidPolicy):
        ka.max_allocation(0, 0.0)
    with pytest.raises(InvalidPolicy):
        ka.max_allocation(0, 1.2)
    with pytest.raises(InvalidPolicy):
        ka.max_loss(0.0, -0.5)
    with pytest.raises(InvalidPolicy):
        ka.max_loss(0.05, 0.5)  # K must be negative
    with pytest.raises(InvalidPolicy):
        ka.max_loss(0.05, -1.0)  # and strictly above -1
    with pytest.raises(InvalidPolicy):
        ka.long_only(-1)


def test_constraint_set_validation():
    with pytest.raises(InvalidPolicy, match="duplicate"):
        ka.ConstraintSet((ka.long_only(0), ka.long_only(0)), num_companies=2)
    with pytest.raises(InvalidPolicy, match="one max_leverage"):
        ka.ConstraintSet((ka.max_leverage(0.0), ka.max_leverage(1.0)), num_companies=2)
    with pytest.raises(InvalidPolicy, match="refers to company"):
        ka.ConstraintSet((ka.long_only(5),), num_companies=2)
    with pytest.raises(InvalidPolicy, match="long_only"):
        # max_loss without long-only everywhere
        ka.ConstraintSet((ka.long_only(0), ka.max_loss(0.05, -0.5)), num_companies=2)


def test_build_constraint_set_ordering(coinflip_five):
    policy = ka.AllocationPolicy(
        long_only=True, max_leverage=0.0, max_allocation=0.3, max_loss=(0.05, -0.5)
    )
    cset = ka.build_constraint_set(policy, coinflip_five)
    assert len(cset) == 12
    assert cset.labels() == (
        "long_only[0]", "long_only[1]", "long_only[2]", "long_only[3]", "long_only[4]",
        "max_allocation[0]", "max_allocation[1]", "max_allocation[2]",
        "max_allocation[3]", "max_allocation[4]",
        "max_leverage", "max_loss",
    )


def test_build_constraint_set_unconstrained(coinflip_five):
    cset = ka.build_constraint_set(ka.AllocationPolicy(long_only=False), coinflip_five)
    assert len(cset) == 0


def test_build_constraint_set_loss_needs_long_only(coinflip_five):
    policy = ka.AllocationPolicy(long_only=False, max_loss=(0.05, -0.5))
    with pytest.raises(InvalidPolicy):
        ka.build_constraint_set(policy, coinflip_five)


def test_constraint_matrix_round_trip(coinflip_five, coinflip_space):
    policy = ka.AllocationPolicy(max_leverage=0.5, max_allocation=0.4)
    cset = ka.build_constraint_set(policy, coinflip_five)
    grads, offs = constraint_matrix(cset, coinflip_space)
    assert grads.shape == (11, 5)
    rng = np.random.default_rng(5)
    f = rng.uniform(0, 0.3, size=5)
    stacked = grads @ f + offs
    for l, spec in enumerate(cset):
        assert stacked[l] == pytest.approx(
            ka.constraint_value(spec, f, coinflip_space), abs=1e-15
        )


def test_max_violation(coinflip_five, coinflip_space):
    cset = ka.build_constraint_set(ka.AllocationPolicy(max_leverage=0.0), coinflip_five)
    # Long-only rows sit at -0.1, closer to binding than the leverage row's -0.5.
    assert ka.max_violation(cset, np.full(5, 0.1), coinflip_space) == pytest.approx(-0.1)
    assert ka.max_violation(cset, np.full(5, 0.3), coinflip_space) == pytest.approx(0.5)
    empty = ka.ConstraintSet((), num_companies=5)
    assert ka.max_violation(empty, np.full(5, 9.0), coinflip_space) == float("-inf")
