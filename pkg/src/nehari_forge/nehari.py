"""Nehari-type manifold machinery for the competitive system

    -Delta u_i = mu_i (u_i^+)^p + t sum_{j != i} lambda_ij (u_i^+)^alpha_ij (u_j^+)^beta_ij.

A state is an array of shape ``(ell, *domain.shape)``; component ``i`` is
``u[i]``. Every function takes the homotopy parameter ``t`` explicitly.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotInU, ZeroComponent
from .scaling_map import ScalingCoeffs, solve_scaling

#: b_{u,i} below this is treated as membership in the boundary of U
B_FLOOR = 1e-14


@dataclass(frozen=True)
class SystemParams:
    p: float
    mu: np.ndarray
    lam: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    ell: int = field(init=False)

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mu, dtype=float))
        ell = mu.size
        if ell < 2:
            raise ValueError("the system needs at least two species (ell >= 2)")
        off = ~np.eye(ell, dtype=bool)
        mats = {}
        for name in ("lam", "alpha", "beta"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim == 0:
                m = np.full((ell, ell), float(m))
            if m.shape != (ell, ell):
                raise ValueError(f"{name} must be an {ell}x{ell} matrix, got shape {m.shape}")
            mats[name] = m.copy()
        lam = np.where(off, mats["lam"], 0.0)
        alpha = np.where(off, mats["alpha"], 1.0)
        beta = np.where(off, mats["beta"], 1.0)
        p = float(self.p)
        if not p > 1:
            raise ValueError(f"p must exceed 1, got {p}")
        if np.any(mu <= 0):
            raise ValueError("mu_i must be positive")
        if np.any(lam[off] > 0):
            raise ValueError("lambda_ij must be nonpositive (competitive coupling)")
        if np.any(alpha[off] <= 0) or np.any(beta[off] <= 0):
            raise ValueError("alpha_ij and beta_ij must be positive")
        bad = off & (alpha + beta >= p)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise ValueError(
                f"alpha_ij + beta_ij < p violated at (i, j) = ({i + 1}, {j + 1}): "
                f"{alpha[i, j]} + {beta[i, j]} >= {p}"
            )
        if np.any(lam[off] == 0):
            warnings.warn("some lambda_ij = 0: those species are decoupled", stacklevel=3)
        for name, val in (("mu", mu), ("lam", lam), ("alpha", alpha), ("beta", beta)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "ell", ell)

    def pairs(self):
        return [(i, j) for i in range(self.ell) for j in range(self.ell) if i != j]

    def scaled(self, kappa):
        """Same system with every ``lambda_ij`` multiplied by ``kappa``."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return SystemParams(self.p, self.mu, kappa * self.lam, self.alpha, self.beta)


def _pos(u):
    return np.maximum(u, 0.0)


def coupling_terms(params, u):
    """``C[i] = sum_{j != i} lambda_ij (u_i^+)^alpha_ij (u_j^+)^beta_ij`` nodewise."""
    up = _pos(u)
    out = np.zeros_like(up)
    for i, j in params.pairs():
        if params.lam[i, j] != 0:
            out[i] += params.lam[i, j] * up[i] ** params.alpha[i, j] * up[j] ** params.beta[i, j]
    return out


def nonlinearity(params, u, t):
    """Right-hand side ``mu_i (u_i^+)^p + t * coupling`` for each component."""
    up = _pos(u)
    return params.mu.reshape((-1,) + (1,) * (u.ndim - 1)) * up**params.p + t * coupling_terms(params, u)


def coeffs_from_state(params, domain, u, t):
    a = np.array([domain.h1_inner(ui, ui) for ui in u])
    b = np.array([params.mu[i] * domain.lp_integral(u[i], params.p + 1) for i in range(params.ell)])
    up = _pos(u)
    d = np.zeros((params.ell, params.ell))
    if t != 0:
        for i, j in params.pairs():
            integrand = up[i] ** (params.alpha[i, j] + 1.0) * up[j] ** params.beta[i, j]
            d[i, j] = t * (-params.lam[i, j]) * domain.integral(integrand)
    return ScalingCoeffs(a=a, b=b, d=d, alpha=params.alpha, beta=params.beta, p=params.p)


def K_apply(params, domain, u, t):
    rhs = nonlinearity(params, u, t)
    return np.stack([domain.poisson_solve(r) for r in rhs])


def nehari_residual(params, domain, u, t):
    """``<I_i(u), u_i>`` for every ``i``; vanishes on the Nehari set."""
    k = K_apply(params, domain, u, t)
    return np.array([domain.h1_inner(u[i], u[i]) - domain.h1_inner(k[i], u[i]) for i in range(len(u))])


def normalize_to_sphere(domain, u):
    norms = np.array([domain.h1_norm(ui) for ui in u])
    if np.any(norms == 0):
        raise ZeroComponent(f"components {np.flatnonzero(norms == 0) + 1} vanish")
    return u / norms.reshape((-1,) + (1,) * (u.ndim - 1))


def _scale(s, u):
    return np.asarray(s).reshape((-1,) + (1,) * (u.ndim - 1)) * u


def project_to_nehari(params, domain, u, t):
    """Return ``(s_u, s_u * u)`` with ``s_u * u`` on the Nehari set for parameter ``t``."""
    c = coeffs_from_state(params, domain, u, t)
    if np.any(c.b <= B_FLOOR):
        idx = np.flatnonzero(c.b <= B_FLOOR) + 1
        raise NotInU(f"positive part of component(s) {list(idx)} vanishes (b = {c.b})")
    s = solve_scaling(c)
    return s, _scale(s, u)


def S_map(params, domain, u, t):
    """``s_u u - K_t(s_u u)``; tangent to the product of spheres at ``u``."""
    _, su = project_to_nehari(params, domain, u, t)
    return su - K_apply(params, domain, su, t)


def energy_J(params, domain, u):
    quad = sum(domain.h1_inner(ui, ui) for ui in u)
    pot = sum(params.mu[i] * domain.lp_integral(u[i], params.p + 1) for i in range(len(u)))
    return 0.5 * quad - pot / (params.p + 1.0)


def s_zero(params, domain, u):
    """Closed-form uncoupled scaling ``(int mu_i (u_i^+)^{p+1})^{-1/(p-1)}`` (for unit components)."""
    b = np.array([params.mu[i] * domain.lp_integral(u[i], params.p + 1) for i in range(len(u))])
    if np.any(b <= B_FLOOR):
        raise NotInU(f"positive part vanishes (b = {b})")
    return b ** (-1.0 / (params.p - 1.0))


def psi(params, domain, u):
    """Closed form of ``J(s0_u u)`` for ``u`` on the product of unit spheres."""
    s0 = s_zero(params, domain, u)
    return (0.5 - 1.0 / (params.p + 1.0)) * float(np.sum(s0**2))


@dataclass
class NontrivialReport:
    norms: np.ndarray
    potential: np.ndarray
    chain: np.ndarray
    nehari_relative: np.ndarray
    min_values: np.ndarray
    max_values: np.ndarray
    sobolev_quotient: np.ndarray
    fully_nontrivial: bool
    on_manifold: bool


def fully_nontrivial_check(params, domain, u, t=1.0, tol=1e-8):
    """Per-component norms, the chain ``||u_i||^2 <= mu_i int (u_i^+)^{p+1}`` and Nehari membership.

    ``sobolev_quotient`` is ``||u_i||^{p+1} / int mu_i (u_i^+)^{p+1}``, a measured
    stand-in for the lower-bound constant of Nehari members.
    """
    norms = np.array([domain.h1_norm(ui) for ui in u])
    pot = np.array([params.mu[i] * domain.lp_integral(u[i], params.p + 1) for i in range(len(u))])
    chain = norms**2 <= pot * (1.0 + tol)
    scale = max(float(np.max(norms**2)), np.finfo(float).tiny)
    rel = np.abs(nehari_residual(params, domain, u, t)) / scale
    with np.errstate(divide="ignore"):
        quotient = np.where(pot > 0, norms ** (params.p + 1.0) / np.where(pot > 0, pot, 1.0), np.inf)
    nontrivial = bool(np.all(norms > 0) and np.all(pot > 0))
    axes = tuple(range(1, u.ndim))
    return NontrivialReport(
        norms=norms,
        potential=pot,
        chain=chain,
        nehari_relative=rel,
        min_values=u.min(axis=axes),
        max_values=u.max(axis=axes),
        sobolev_quotient=quotient,
        fully_nontrivial=nontrivial,
        on_manifold=bool(nontrivial and np.all(rel <= tol) and np.all(chain)),
    )
