import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import positive_state
from nehari_forge.errors import NotInU, ZeroComponent
from nehari_forge.grid import Domain
from nehari_forge.nehari import (
    K_apply,
    S_map,
    SystemParams,
    coeffs_from_state,
    energy_J,
    fully_nontrivial_check,
    nehari_residual,
    nonlinearity,
    normalize_to_sphere,
    project_to_nehari,
    psi,
    s_zero,
)
from nehari_forge.scaling_map import eval_M


@pytest.fixture(scope="module")
def dom():
    return Domain.unit_square(24)


@pytest.fixture(scope="module")
def params3():
    lam = [[0, -0.4, -1.2], [-0.7, 0, -0.3], [-0.5, -0.9, 0]]
    alpha = [[1, 0.6, 1.2], [0.8, 1, 0.5], [1.1, 0.7, 1]]
    return SystemParams(3.5, [1, 2, 0.5], lam, alpha, 1.0)


def test_params_validation_messages():
    with pytest.raises(ValueError, match=r"alpha_ij \+ beta_ij < p violated at \(i, j\) = \(1, 2\)"):
        SystemParams(3, [1, 1], -1, [[1, 2], [1, 1]], 1)
    with pytest.raises(ValueError, match="ell >= 2"):
        SystemParams(3, [1], 0, 1, 1)
    with pytest.raises(ValueError, match="nonpositive"):
        SystemParams(3, [1, 1], 0.5, 1, 1)
    with pytest.raises(ValueError, match="p must exceed 1"):
        SystemParams(1, [1, 1], -1, 0.2, 0.2)
    with pytest.warns(UserWarning, match="decoupled"):
        SystemParams(3, [1, 1], 0, 1, 1)


def test_params_diagonal_ignored():
    a = SystemParams(3, [1, 1], [[7, -1], [-1, 9]], [[5, 1], [1, 5]], 1)
    assert a.lam[0, 0] == 0 and a.alpha[0, 0] == 1
    assert np.array_equal(a.scaled(3).lam, 3 * a.lam)


def test_coeffs_at_t0_have_no_coupling(lotka, dom, rng):
    c = coeffs_from_state(lotka, dom, positive_state(rng, dom, 2), 0.0)
    assert np.all(c.d == 0)


def test_coeffs_vanish_for_nonpositive_component(lotka, dom, rng):
    u = positive_state(rng, dom, 2)
    u[1] = -np.abs(u[1])
    c = coeffs_from_state(lotka, dom, u, 1.0)
    assert c.b[1] == 0 and c.d[1, 0] == 0 and c.d[0, 1] == 0


def test_coeffs_analytic(lotka):
    d = Domain.unit_square(64)
    f = d.sample(lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    c = coeffs_from_state(lotka, d, np.stack([f, f]), 1.0)
    assert np.allclose(c.a, np.pi**2 / 2, rtol=1e-3)
    assert np.allclose(c.b, d.lp_integral(f, 4), rtol=1e-14)
    # int sin^4 sin^4 = (3/8)^2
    assert np.allclose(c.b, (3 / 8) ** 2, rtol=1e-12)


def test_K_apply_zero_and_single_mode(lotka, dom):
    assert np.all(K_apply(lotka, dom, np.zeros((2, *dom.shape)), 1.0) == 0)
    phi = dom.sine_mode((1, 1))
    c = 1.7
    k = K_apply(lotka, dom, np.stack([c * phi, c * phi]), 0.0)
    expected = c**3 * dom.lp_integral(phi, 4)
    assert dom.h1_inner(k[0], phi) == pytest.approx(expected, rel=1e-12)


def test_K_apply_weak_form_duality(params3, dom, rng):
    u = positive_state(rng, dom, 3, 3.0)
    v = rng.standard_normal(dom.shape)
    k = K_apply(params3, dom, u, 0.6)
    f = nonlinearity(params3, u, 0.6)
    for i in range(3):
        assert dom.h1_inner(k[i], v) == pytest.approx(dom.integral(f[i] * v), rel=1e-10)


def test_nehari_residual_on_projection(params3, dom, rng):
    u = normalize_to_sphere(dom, positive_state(rng, dom, 3))
    s, su = project_to_nehari(params3, dom, u, 1.0)
    c = coeffs_from_state(params3, dom, su, 1.0)
    assert np.max(np.abs(nehari_residual(params3, dom, su, 1.0))) <= 1e-9 * c.a.max()
    assert np.all(nehari_residual(params3, dom, np.zeros_like(u), 1.0) == 0)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0.2, 5.0), min_size=3, max_size=3), st.floats(0, 1))
def test_nehari_residual_scaling_identity(params3, dom, s, t):
    u = positive_state(np.random.default_rng(5), dom, 3)
    s = np.array(s)
    lhs = nehari_residual(params3, dom, s[:, None, None] * u, t)
    rhs = s * eval_M(coeffs_from_state(params3, dom, u, t), s)
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10 * np.abs(rhs).max())


def test_normalize(dom, rng):
    u = positive_state(rng, dom, 2)
    unit = normalize_to_sphere(dom, u)
    assert np.allclose(normalize_to_sphere(dom, unit), unit, atol=1e-14)
    assert np.allclose(normalize_to_sphere(dom, 7 * u), unit, atol=1e-14)
    u[1] = 0
    with pytest.raises(ZeroComponent):
        normalize_to_sphere(dom, u)


def test_projection_closed_form_at_t0(params3, dom, rng):
    u = normalize_to_sphere(dom, positive_state(rng, dom, 3))
    s, _ = project_to_nehari(params3, dom, u, 0.0)
    b = np.array([params3.mu[i] * dom.lp_integral(u[i], params3.p + 1) for i in range(3)])
    assert np.allclose(s, b ** (-1 / (params3.p - 1)), rtol=0, atol=1e-12)
    assert np.allclose(s_zero(params3, dom, u), s, atol=1e-12)


def test_projection_outside_U(lotka, dom, rng):
    u = positive_state(rng, dom, 2)
    u[0] = -u[0]
    with pytest.raises(NotInU):
        project_to_nehari(lotka, dom, u, 1.0)


def test_projection_monotone_in_t(params3, dom, rng):
    u = normalize_to_sphere(dom, positive_state(rng, dom, 3))
    s = [project_to_nehari(params3, dom, u, t)[0] for t in np.linspace(0, 1, 6)]
    assert all(np.all(a <= b * (1 + 1e-14)) for a, b in zip(s, s[1:]))


def test_S_map_tangent(params3, dom, rng):
    for _ in range(3):
        u = normalize_to_sphere(dom, positive_state(rng, dom, 3))
        S = S_map(params3, dom, u, 0.8)
        assert max(abs(dom.h1_inner(S[i], u[i])) for i in range(3)) <= 1e-9


def test_S_map_decoupled_at_t0(lotka, dom, rng):
    u = normalize_to_sphere(dom, positive_state(rng, dom, 2))
    v = u.copy()
    v[1] = normalize_to_sphere(dom, positive_state(rng, dom, 2))[1]
    assert np.allclose(S_map(lotka, dom, u, 0.0)[0], S_map(lotka, dom, v, 0.0)[0], atol=1e-13)


def test_S_map_vanishes_at_solution(lotka, square64, lotka_solution):
    u, _ = lotka_solution
    S = S_map(lotka, square64, normalize_to_sphere(square64, u), 1.0)
    assert max(square64.h1_norm(Si) for Si in S) <= 1e-8 * max(square64.h1_norm(ui) for ui in u)


def test_energy_on_uncoupled_manifold(lotka, dom, rng):
    u = normalize_to_sphere(dom, positive_state(rng, dom, 2))
    _, su = project_to_nehari(lotka, dom, u, 0.0)
    norm2 = sum(dom.h1_inner(x, x) for x in su)
    assert energy_J(lotka, dom, su) == pytest.approx(0.25 * norm2, rel=1e-12)
    assert energy_J(lotka, dom, np.zeros_like(u)) == 0
    assert psi(lotka, dom, u) == pytest.approx(energy_J(lotka, dom, su), rel=1e-10)


def test_psi_substitution(lotka, dom, rng):
    u = positive_state(rng, dom, 2)
    u = np.stack([ui * (4.0 / dom.lp_integral(ui, 4)) ** 0.25 for ui in u])
    assert psi(lotka, dom, u) == pytest.approx(0.125, rel=1e-12)


def test_nontrivial_check_cases(lotka, square64, lotka_solution):
    u, _ = lotka_solution
    rep = fully_nontrivial_check(lotka, square64, u)
    assert rep.fully_nontrivial and rep.on_manifold and rep.chain.all()
    assert np.all(rep.norms > 0)
    semi = u.copy()
    semi[1] = 0
    assert not fully_nontrivial_check(lotka, square64, semi).fully_nontrivial
    doubled = fully_nontrivial_check(lotka, square64, 2 * u)
    assert doubled.chain.all() and not doubled.on_manifold
    halved = fully_nontrivial_check(lotka, square64, 0.5 * u)
    assert not halved.chain.any() and not halved.on_manifold


def test_s_blows_up_towards_boundary_of_U(lotka):
    d = Domain.interval(4000)
    phi = d.sine_mode((1,))
    s1 = []
    for eps in (1.4, 1.2, 1.0, 0.8, 0.6):
        u = np.stack([eps * phi - phi**2, phi])
        s, _ = project_to_nehari(lotka, d, normalize_to_sphere(d, u), 1.0)
        s1.append(s[0])
    assert all(a < b for a, b in zip(s1, s1[1:]))
    assert s1[-1] > 10 * s1[0]
