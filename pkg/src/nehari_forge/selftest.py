"""Invariant suite run by ``nehari-forge selftest``.

Each check returns a measured value that is compared with a named
tolerance; tolerances can be overridden from a config ``[tolerances]``
section. The summary is deterministic for a fixed seed and grid size.
"""
import warnings
from dataclasses import dataclass
from functools import cache

import numpy as np

from .grid import Domain
from .nehari import (
    S_map,
    SystemParams,
    energy_J,
    normalize_to_sphere,
    project_to_nehari,
    psi,
    s_zero,
)
from .scaling_map import bracket, degree_sign_check, random_coeffs, solve_scaling
from .scalar_solver import least_energy_scalar
from .sync import nodal_ratio, sync_solve, unboundedness_experiment
from .system_solver import (
    ContinuationConfig,
    continue_in_t,
    jacobian_F,
    relative_residual,
    residual_F,
)

DEFAULT_TOLERANCES = {
    "scaling_uniqueness": 1e-9,
    "scaling_degree_sign": 0.0,
    "eigenpair": 1e-10,
    "poisson_inverse": 1e-10,
    "scalar_mu_scaling": 1e-8,
    "scalar_nehari": 1e-9,
    "nehari_inverse": 1e-9,
    "s_monotone_in_t": 0.0,
    "psi_closed_form": 1e-10,
    "tangency": 1e-9,
    "continuation_residual": 1e-8,
    "continuation_positivity": 0.0,
    "jacobian_fd": 1e-5,
    "sync_residual": 1e-7,
    "sync_ratio": 1e-10,
    "unbounded_monotone": 0.0,
}


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.3e} tol={self.tol:.3e}"


def _random_positive_state(rng, domain, ell):
    phi = domain.sine_mode((1,) * domain.dimension)
    return np.stack([phi * (1.0 + 0.3 * rng.random(domain.shape)) for _ in range(ell)])


def _checks(domain, rng):
    lotka = SystemParams(3, [1, 1], [[0, -0.5], [-0.5, 0]], 1, 1)

    def scaling_uniqueness():
        worst = 0.0
        for k in range(15):
            c = random_coeffs(rng, 2 + k % 3)
            box = bracket(c)
            s = solve_scaling(c, box=box)
            for _ in range(10):
                s2 = solve_scaling(c, s0=rng.uniform(*box, c.ell), box=box)
                worst = max(worst, float(np.max(np.abs(s2 - s))))
        return worst

    def scaling_degree_sign():
        bad = 0
        for k in range(30):
            c = random_coeffs(rng, 1 + k % 3)
            sign = degree_sign_check(c, solve_scaling(c))
            bad += sign not in (0, (-1) ** c.ell)
        return float(bad)

    def eigenpair():
        phi = domain.sine_mode((2, 1))
        lam = domain.eigenvalues[1, 0]
        return float(np.max(np.abs(domain.laplacian_apply(phi) - lam * phi)) / (lam * np.max(np.abs(phi))))

    def poisson_inverse():
        f = rng.standard_normal(domain.shape)
        back = domain.poisson_solve(domain.laplacian_apply(f))
        return float(np.linalg.norm(back - f) / np.linalg.norm(f))

    @cache
    def ground():
        return least_energy_scalar(1.0, 3.0, domain)

    def scalar_mu_scaling():
        u4 = least_energy_scalar(4.0, 3.0, domain)
        return float(np.max(np.abs(u4 - 0.5 * ground())) / np.max(np.abs(0.5 * ground())))

    def scalar_nehari():
        u1 = ground()
        return abs(domain.h1_inner(u1, u1) / domain.lp_integral(u1, 4) - 1.0)

    unit = normalize_to_sphere(domain, _random_positive_state(rng, domain, 2))

    def nehari_inverse():
        _, su = project_to_nehari(lotka, domain, unit, 1.0)
        return float(np.max(np.abs(normalize_to_sphere(domain, su) - unit)))

    def s_monotone_in_t():
        values = [project_to_nehari(lotka, domain, unit, t)[0] for t in (0, 0.25, 0.5, 0.75, 1.0)]
        drops = [np.max(values[k] - values[k + 1]) for k in range(4)]
        return float(max(0.0, max(drops)))

    def psi_closed_form():
        s0 = s_zero(lotka, domain, unit)
        return abs(psi(lotka, domain, unit) - energy_J(lotka, domain, s0[:, None, None] * unit))

    def tangency():
        S = S_map(lotka, domain, unit, 1.0)
        return max(abs(domain.h1_inner(S[i], unit[i])) for i in range(2))

    @cache
    def continued():
        return continue_in_t(lotka, domain, ContinuationConfig())[0]

    def continuation_residual():
        return relative_residual(lotka, domain, continued(), 1.0)

    def continuation_positivity():
        return 0.0 if np.min(continued()) > 0 else 1.0

    def jacobian_fd():
        u = _random_positive_state(rng, domain, 2) * 5.0
        v = rng.standard_normal(u.shape)
        h = 1e-6
        fd = (residual_F(lotka, domain, u + h * v, 1.0) - residual_F(lotka, domain, u - h * v, 1.0)) / (2 * h)
        an = (jacobian_F(lotka, domain, u, 1.0) @ v.ravel()).reshape(u.shape)
        return float(np.linalg.norm(fd - an) / np.linalg.norm(an))

    sync_params = SystemParams(3, [1, 4], [[0, -2], [-1, 0]], 1, 1)

    @cache
    def pair():
        return sync_solve(sync_params, domain)

    def sync_residual():
        return relative_residual(sync_params, domain, pair(), 1.0)

    def sync_ratio():
        return float(np.max(np.abs(nodal_ratio(pair()) - 0.5)))

    def unbounded_monotone():
        table = unboundedness_experiment(1.0, 3.0, 2.0, [1.0, 10.0, 100.0], domain)
        return 0.0 if table.increasing and table.stable_from == 0 and table.lower_bound_ok else 1.0

    return [
        ("scaling_uniqueness", scaling_uniqueness),
        ("scaling_degree_sign", scaling_degree_sign),
        ("eigenpair", eigenpair),
        ("poisson_inverse", poisson_inverse),
        ("scalar_mu_scaling", scalar_mu_scaling),
        ("scalar_nehari", scalar_nehari),
        ("nehari_inverse", nehari_inverse),
        ("s_monotone_in_t", s_monotone_in_t),
        ("psi_closed_form", psi_closed_form),
        ("tangency", tangency),
        ("continuation_residual", continuation_residual),
        ("continuation_positivity", continuation_positivity),
        ("jacobian_fd", jacobian_fd),
        ("sync_residual", sync_residual),
        ("sync_ratio", sync_ratio),
        ("unbounded_monotone", unbounded_monotone),
    ]


def run_selftest(nodes=32, seed=0, tolerances=None):
    """Run every invariant; returns a list of :class:`CheckResult`."""
    tols = dict(DEFAULT_TOLERANCES)
    unknown = set(tolerances or {}) - set(tols)
    if unknown:
        raise KeyError(f"unknown tolerance names: {sorted(unknown)}")
    tols.update(tolerances or {})
    rng = np.random.default_rng(seed)
    domain = Domain.unit_square(nodes)
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name, check in _checks(domain, rng):
            try:
                value = float(check())
            except Exception as exc:  # a crashing check is a failed check
                results.append(CheckResult(f"{name} ({type(exc).__name__})", float("nan"), tols[name], False))
                continue
            results.append(CheckResult(name, value, tols[name], bool(value <= tols[name])))
    return results
