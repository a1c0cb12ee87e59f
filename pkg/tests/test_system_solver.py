import json

import numpy as np
import pytest

from conftest import positive_state
from nehari_forge import system_solver as ss
from nehari_forge.errors import BoundGuardTripped, NonConvergence, StepFloorReached
from nehari_forge.grid import Domain
from nehari_forge.nehari import K_apply, SystemParams, normalize_to_sphere, project_to_nehari
from nehari_forge.system_solver import (
    ContinuationConfig,
    continue_in_t,
    galerkin_solve,
    jacobian_F,
    lambda_sweep,
    newton_solve,
    product_ground_state,
    relative_residual,
    residual_F,
    verify_solution,
    write_trace_csv,
)


@pytest.fixture(scope="module")
def dom():
    return Domain.unit_square(16)


@pytest.fixture(scope="module")
def small_solution(lotka, dom):
    return continue_in_t(lotka, dom)


def test_residual_of_zero(lotka, dom):
    assert np.all(residual_F(lotka, dom, np.zeros((2, *dom.shape)), 1.0) == 0)


def test_product_state_solves_uncoupled(lotka, dom):
    u = product_ground_state(lotka, dom)
    assert relative_residual(lotka, dom, u, 0.0) <= 1e-8


def test_strong_and_weak_forms_agree(lotka, dom, rng):
    u = positive_state(rng, dom, 2, 4.0)
    lhs = u - K_apply(lotka, dom, u, 0.7)
    rhs = np.stack([dom.poisson_solve(r) for r in residual_F(lotka, dom, u, 0.7)])
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * np.max(np.abs(u))


@pytest.mark.parametrize(
    "params",
    [
        SystemParams(3, [1, 1], [[0, -0.5], [-0.5, 0]], 1, 1),
        SystemParams(2.5, [1, 2, 0.5], -0.8, [[1, 0.5, 0.3], [0.7, 1, 1.2], [0.4, 0.6, 1]], 0.9),
    ],
)
def test_jacobian_matches_finite_differences(params, dom, rng):
    u = positive_state(rng, dom, params.ell, 5.0)
    v = rng.standard_normal(u.shape)
    h = 1e-6
    fd = (residual_F(params, dom, u + h * v, 1.0) - residual_F(params, dom, u - h * v, 1.0)) / (2 * h)
    an = (jacobian_F(params, dom, u, 1.0) @ v.ravel()).reshape(u.shape)
    assert np.linalg.norm(fd - an) <= 1e-5 * np.linalg.norm(an)


def test_newton_fixed_point(lotka, dom, small_solution):
    u, _ = small_solution
    out = newton_solve(lotka, dom, u, 1.0)
    assert out.iterations <= 1
    assert np.allclose(out.u, u, atol=1e-12 * np.max(u))


def test_newton_at_t0(lotka, dom):
    out = newton_solve(lotka, dom, 1.3 * product_ground_state(lotka, dom), 0.0)
    assert out.residual <= 1e-8


def test_continuation_trace(lotka, dom, small_solution, tmp_path):
    u, trace = small_solution
    assert trace[0]["t"] == 0 and trace[-1]["t"] == 1.0
    base = product_ground_state(lotka, dom)
    assert np.allclose(trace[0]["norms"], [dom.h1_norm(b) for b in base], rtol=1e-10)
    assert trace[0]["residual"] <= 1e-8
    assert all(row["residual"] <= 1e-8 for row in trace)
    guard = 1e3 * np.sqrt(sum(n**2 for n in trace[0]["norms"]))
    assert all(np.sqrt(sum(n**2 for n in row["norms"])) < guard for row in trace)
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,norm_u1,norm_u2,min_u1,min_u2,residual"
    assert len(lines) == len(trace) + 1


def test_guard_trips(lotka, dom):
    cfg = ContinuationConfig(r_guard=1.0)
    with pytest.raises(BoundGuardTripped) as info:
        newton_solve(lotka, dom, 3 * product_ground_state(lotka, dom), 0.0, cfg)
    assert info.value.guard == 1.0


def test_step_floor(lotka, dom):
    cfg = ContinuationConfig(dt=0.5, min_dt=0.3, max_iter=1, tol=1e-12)
    with pytest.raises(StepFloorReached) as info:
        continue_in_t(lotka, dom, cfg, u0=product_ground_state(lotka, dom))
    assert info.value.last_t == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        ContinuationConfig(dt=0.01, min_dt=0.1)
    with pytest.raises(ValueError):
        ContinuationConfig(tol=0)


def test_galerkin_single_mode_closed_form(lotka, dom):
    u = galerkin_solve(lotka, dom, 1, 0.0)
    phi = dom.sine_mode((1, 1))
    lam1 = dom.eigenvalues[0, 0]
    c = np.sqrt(lam1 / dom.lp_integral(phi, 4))
    assert np.allclose(u, c * phi, rtol=0, atol=1e-10 * c)


def test_galerkin_full_basis_matches_newton(lotka, dom, small_solution):
    u, _ = small_solution
    g = galerkin_solve(lotka, dom, dom.size, 1.0)
    assert np.max(np.abs(g - u)) <= 1e-9 * np.max(u)


def test_galerkin_converges_with_modes(lotka, dom, small_solution):
    u, _ = small_solution
    dist = [np.max(np.abs(galerkin_solve(lotka, dom, k, 1.0) - u)) for k in (4, 16, 64)]
    assert dist[0] > dist[1] > dist[2]


def test_galerkin_mode_count_checked(lotka, dom):
    with pytest.raises(ValueError):
        galerkin_solve(lotka, dom, 0, 1.0)


def test_verify_solution(lotka, dom, small_solution):
    u, _ = small_solution
    rep = verify_solution(lotka, dom, u)
    assert rep.certified and rep.strictly_positive and rep.residual_ok and rep.nehari_ok
    s, _ = project_to_nehari(lotka, dom, normalize_to_sphere(dom, u), 1.0)
    assert np.allclose(rep.s, rep.norms, rtol=1e-8)
    assert np.allclose(s, rep.norms, rtol=1e-8)
    payload = json.loads(rep.to_json(timestamp="x"))
    assert list(payload) == sorted(payload)
    semi = u.copy()
    semi[1] = 0
    bad = verify_solution(lotka, dom, semi)
    assert not bad.fully_nontrivial and not bad.certified


def test_sweep_unit_multiplier_reproduces_base(lotka, dom, small_solution):
    u, _ = small_solution
    (rep,) = lambda_sweep(lotka, dom, [1.0], base=u)
    assert rep.certified and rep.kappa == 1.0
    assert np.allclose(rep.norms, [dom.h1_norm(x) for x in u], rtol=1e-12)


def test_sweep_keeps_synchronized_ratio(sync_params, dom):
    reports = lambda_sweep(sync_params, dom, [1, 3, 10, 30])
    ratios = [r.norms[1] / r.norms[0] for r in reports]
    assert all(r.certified for r in reports)
    assert np.ptp(ratios) <= 1e-6


def test_sweep_generic_overlap_shrinks(generic_params, dom):
    reports = lambda_sweep(generic_params, dom, [1, 10, 100])
    assert all(r.certified for r in reports)
    assert reports[-1].overlaps["1-2"] < reports[0].overlaps["1-2"]


def test_sweep_failed_point_is_flagged(lotka, dom, small_solution, monkeypatch):
    u, _ = small_solution
    real = ss.newton_solve

    def flaky(params, domain, u0, t, cfg=None):
        if abs(params.lam[0, 1]) > 2:
            raise NonConvergence("forced failure")
        return real(params, domain, u0, t, cfg)

    monkeypatch.setattr(ss, "newton_solve", flaky)
    reports = lambda_sweep(lotka, dom, [1, 2, 10], base=u, max_refine=1)
    assert [r.certified for r in reports] == [True, True, False]
    assert "forced failure" in reports[-1].error


def test_sweep_rejects_bad_schedule(lotka, dom, small_solution):
    with pytest.raises(ValueError):
        lambda_sweep(lotka, dom, [2, 1], base=small_solution[0])
