import numpy as np
import pytest

from heteroclinic.coefficients import ClassViolation, build_coefficient, class_check


def test_constant_class1_valid():
    A = build_coefficient(1, "constant")
    assert class_check(A).passed
    assert A(0.3, 0.2) == 1.0


def test_builtins_pass_their_class():
    fields = [build_coefficient(1, "separable-periodic"), build_coefficient(1, "trig"),
              build_coefficient(2, "gaussian-dip", {"Ap": 2.0}),
              build_coefficient(3, "rabinowitz-well", {"Ainf": 2.0, "Acenter": 0.5}),
              build_coefficient(4, "vanishing-core", {"K": 1.0})]
    for A in fields:
        rep = class_check(A)
        assert rep.passed, (A.name, rep.entries)


def test_class4_vanishes_at_origin():
    A = build_coefficient(4, "vanishing-core", {"K": 1.0})
    assert np.all(A(np.zeros(5), np.linspace(0, 1, 5)) == 0.0)
    assert class_check(A)["exterior_positive"]["pass"]


def test_class3_rejects_non_well():
    with pytest.raises(ClassViolation):
        build_coefficient(3, "rabinowitz-well", {"Ainf": 1.0, "Acenter": 1.0})
    with pytest.raises(ClassViolation):
        build_coefficient(3, "constant")


def test_eps_only_for_class3():
    with pytest.raises(ValueError):
        build_coefficient(1, "constant", eps=0.5)


def test_eps_scaling_consistency():
    A = build_coefficient(3, "rabinowitz-well", {"Ainf": 2.0, "Acenter": 0.5})
    Ae = A.with_eps(0.2)
    x = np.linspace(-10, 10, 101)
    y = np.linspace(0, 1, 101)
    assert np.array_equal(Ae(x, y), A(0.2 * x, y))


def test_class2_gap_and_decay():
    # A_p = 2, A = 2 - exp(-x^2) with no y-dependence
    A = build_coefficient(2, "gaussian-dip", {"Ap": 2.0, "depth": 1.0})
    rep = class_check(A)
    assert rep["below_periodic_limit"]["pass"]
    assert rep["gap_decay"]["pass"]
    x = np.array([0.0, 1.0, 2.0])
    assert np.allclose(2.0 - A(x, 0.3 * np.ones(3)), np.exp(-x * x), rtol=0, atol=1e-15)


def test_custom_violating_field_flagged():
    A = build_coefficient(1, "custom", {"A0": 0.5},
                          func=lambda x, y: 1.0 + 0.5 * np.sin(2 * np.pi * y) + 0 * x)
    rep = class_check(A)
    assert not rep["A2_y_even"]["pass"]


def test_radial_example_is_not_y_periodic():
    # 2 - exp(-(x^2 + y^2)) is not 1-periodic in y, so the class check must flag it
    A = build_coefficient(2, "custom", {"A0": 1.0},
                          func=lambda x, y: 2.0 - np.exp(-(x ** 2 + y ** 2)),
                          periodic_limit=lambda x, y: np.full(np.broadcast(x, y).shape, 2.0))
    assert not class_check(A)["A3_y_periodic"]["pass"]


def test_sampled_minimum_bounds():
    rng = np.random.default_rng(5)
    x, y = rng.uniform(-30, 30, 100_000), rng.uniform(0, 1, 100_000)
    for A in (build_coefficient(1, "trig"), build_coefficient(4, "vanishing-core"),
              build_coefficient(3, "rabinowitz-well", {"Ainf": 2.0, "Acenter": 0.5})):
        v = A(x, y)
        assert v.min() >= 0.0
        if A.class_tag < 4:
            assert v.min() >= A.A0 - 1e-12


def test_unknown_name():
    with pytest.raises(ValueError):
        build_coefficient(1, "wavy")
