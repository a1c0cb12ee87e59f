import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nehari_forge import scaling_map as sm
from nehari_forge.errors import NoZero
from nehari_forge.scaling_map import (
    ScalingCoeffs,
    bracket,
    continuity_probe,
    degree_sign_check,
    eval_M,
    jacobian_M,
    random_coeffs,
    solve_scaling,
)


@pytest.fixture
def symmetric():
    # 2s^2 - s - 1 = 0 along the diagonal, root s = 1
    return ScalingCoeffs(a=[1, 1], b=[2, 2], d=[[0, 1], [1, 0]], alpha=1, beta=1, p=3)


def decoupled(a, b, p=3.0):
    ell = len(a)
    return ScalingCoeffs(a=a, b=b, d=np.zeros((ell, ell)), alpha=1, beta=1, p=p)


def test_eval_hand_values(symmetric):
    assert np.allclose(eval_M(symmetric, [1, 1]), [0, 0], atol=1e-15)
    assert np.allclose(eval_M(symmetric, [2, 2]), [-10, -10], atol=1e-13)


def test_decoupled_root_is_zero():
    c = decoupled([1.0, 4.0, 0.5], [2.0, 1.0, 3.0], p=2.5)
    s = (c.a / c.b) ** (1 / (c.p - 1))
    assert np.max(np.abs(eval_M(c, s))) < 1e-14


def test_jacobian_decoupled():
    assert np.allclose(jacobian_M(decoupled([1, 1], [1, 1]), [1, 1]), np.diag([-2, -2]))


def test_jacobian_offdiagonal_formula():
    c = ScalingCoeffs(a=[1, 2], b=[1, 1], d=[[0, 0.7], [0.3, 0]], alpha=[[1, 1.3], [0.4, 1]], beta=1, p=3)
    s = np.array([0.8, 1.7])
    assert jacobian_M(c, s)[0, 1] == 0.7 * 0.8**1.3


@pytest.mark.parametrize("seed", range(10))
def test_jacobian_finite_differences(seed):
    rng = np.random.default_rng(seed)
    c = random_coeffs(rng, 1 + seed % 4)
    s = rng.uniform(0.3, 2.0, c.ell)
    jac = jacobian_M(c, s)
    h = 1e-6
    for k in range(c.ell):
        e = np.zeros(c.ell)
        e[k] = h
        fd = (eval_M(c, s + e) - eval_M(c, s - e)) / (2 * h)
        assert np.allclose(fd, jac[:, k], rtol=1e-6, atol=1e-6 * np.abs(jac).max())


def test_bracket_signs_and_containment(symmetric):
    c = decoupled([1, 1], [1, 1])
    r, R = bracket(c)
    assert r == pytest.approx(0.5)
    assert np.all(eval_M(c, [r, r]) > 0)
    assert eval_M(c, [R, r])[0] < 0
    r, R = bracket(symmetric)
    assert r < 1 < R


def test_bracket_invariant_under_common_scaling():
    c = random_coeffs(np.random.default_rng(3), 3)
    scaled = ScalingCoeffs(a=5 * c.a, b=5 * c.b, d=c.d, alpha=c.alpha, beta=c.beta, p=c.p)
    assert bracket(scaled)[0] == pytest.approx(bracket(c)[0], rel=1e-14)


def test_solve_symmetric(symmetric):
    assert np.allclose(solve_scaling(symmetric), [1, 1], atol=1e-12)


def test_solve_decoupled_closed_form():
    c = decoupled([2.0, 0.3], [0.5, 1.7], p=4.0)
    assert np.allclose(solve_scaling(c), (c.a / c.b) ** (1 / 3), rtol=0, atol=1e-12)


def test_no_zero_when_b_vanishes():
    with pytest.raises(NoZero):
        solve_scaling(decoupled([1, 1], [0, 1]))


def test_degree_sign_decoupled():
    assert degree_sign_check(decoupled([1, 1], [1, 1]), [1, 1]) == 1
    assert degree_sign_check(decoupled([1, 1, 1], [1, 1, 1]), [1, 1, 1]) == -1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_random_sets_solve_with_expected_degree(seed, ell):
    c = random_coeffs(np.random.default_rng(seed), ell)
    s = solve_scaling(c)
    assert np.max(np.abs(eval_M(c, s))) <= 1e-12 * c.a.max()
    assert degree_sign_check(c, s) in (0, (-1) ** ell)


def test_continuity_probe(symmetric):
    assert continuity_probe(symmetric, symmetric) == 0
    bumped = ScalingCoeffs(a=[1 + 1e-8, 1], b=[2, 2], d=[[0, 1], [1, 0]], alpha=1, beta=1, p=3)
    assert continuity_probe(symmetric, bumped) <= 1e-4
    probes = []
    for eps in (0.1, 0.01, 0.001, 1e-4):
        other = ScalingCoeffs(a=[1 + eps, 1], b=[2, 2], d=[[0, 1], [1, 0]], alpha=1, beta=1, p=3)
        probes.append(continuity_probe(symmetric, other))
    assert all(x > y for x, y in zip(probes, probes[1:]))


def test_fixed_point_fallback(monkeypatch):
    c = random_coeffs(np.random.default_rng(11), 3)
    expected = solve_scaling(c)

    calls = []

    def broken(*args, **kwargs):
        calls.append(1)
        raise np.linalg.LinAlgError("forced")

    monkeypatch.setattr(sm.np.linalg, "solve", broken)
    s = solve_scaling(c)
    assert calls, "Newton was never attempted"
    assert np.allclose(s, expected, atol=1e-10)
    assert np.max(np.abs(eval_M(c, s))) <= 1e-12 * c.a.max()


def test_small_alpha_exponents_converge():
    # alpha < 1 makes the Jacobian blow up as a component goes to zero
    c = ScalingCoeffs(a=[0.01, 5], b=[5, 0.2], d=[[0, 3], [3, 0]], alpha=0.1, beta=0.1, p=2)
    s = solve_scaling(c, s0=[1e-6, 50])
    assert np.max(np.abs(eval_M(c, s))) <= 1e-12 * 5


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(a=[1, -1], b=[1, 1], d=0, alpha=1, beta=1, p=3),
        dict(a=[1, 1], b=[1, 1], d=-1, alpha=1, beta=1, p=3),
        dict(a=[1, 1], b=[1, 1], d=0, alpha=2, beta=1, p=3),
        dict(a=[1, 1], b=[1, 1], d=0, alpha=1, beta=1, p=1),
    ],
)
def test_invalid_coefficients(kwargs):
    with pytest.raises(ValueError):
        ScalingCoeffs(**kwargs)
