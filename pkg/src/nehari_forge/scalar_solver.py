"""Positive ground states of the scalar problems

    -Delta u = mu (u^+)^p                       (uncoupled base point)
    -Delta w + a (w^+)^q = mu (w^+)^p           (synchronized profile)

Both are computed on the discrete Nehari manifold: the first by damped
Newton with re-scaling onto the manifold after every step, the second by a
Sobolev-gradient descent of the energy along the manifold followed by a
Newton polish.
"""
import warnings

import numpy as np
import scipy.optimize
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NonConvergence


def unique_scaling_root(norm2, aA, muB, p, q):
    """Unique ``t > 0`` with ``t norm2 + aA t^q = muB t^p``.

    Dividing by ``t`` leaves ``norm2 + aA t^(q-1) - muB t^(p-1)``, positive at
    0 with a single sign change, so a bracketing root finder is safe.
    """
    if not (norm2 > 0 and muB > 0 and aA >= 0):
        raise ValueError("need norm2 > 0, muB > 0, aA >= 0")
    base = (norm2 / muB) ** (1.0 / (p - 1.0))
    if aA == 0:
        return base

    def f(t):
        return norm2 + aA * t ** (q - 1.0) - muB * t ** (p - 1.0)

    lo = base * 1e-3
    hi = base
    while f(hi) > 0:
        lo, hi = hi, 2.0 * hi
    return scipy.optimize.brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def _pos(u):
    return np.maximum(u, 0.0)


def _first_mode(domain):
    return domain.sine_mode((1,) * domain.dimension)


def _newton(domain, u, residual, jac_diag, tol, max_iter, rescale=None):
    """Damped Newton for ``-Delta_h u + g(u) = 0`` with Jacobian ``L + diag(jac_diag(u))``.

    Returns the iterate and its relative residual ``||F||_L2 / ||u||_H1``. Stops
    at the round-off floor once ``tol`` is met.
    """
    lap = domain.laplacian_matrix
    shape = domain.shape

    def rel(v, r):
        return domain.l2_norm(r) / max(domain.h1_norm(v), np.finfo(float).tiny)

    res = residual(u)
    err = rel(u, res)
    for _ in range(max_iter):
        if err <= 1e-14:
            break
        jac = (lap + sp.diags(jac_diag(u).ravel())).tocsc()
        try:
            step = spla.splu(jac).solve(-res.ravel()).reshape(shape)
        except RuntimeError as exc:
            raise NonConvergence(f"singular Jacobian in scalar Newton: {exc}") from exc
        lam = 1.0
        accepted = False
        for _ in range(30):
            trial = u + lam * step
            if rescale is not None:
                trial = rescale(trial)
            t_res = residual(trial)
            t_err = rel(trial, t_res)
            if t_err < err:
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
        u, res, err = trial, t_res, t_err
    return u, err


def least_energy_scalar(mu, p, domain, tol=1e-8, max_iter=60):
    """Positive least-energy solution of ``-Delta u = mu (u^+)^p`` on the grid.

    Starts from the first sine mode scaled onto the Nehari manifold
    ``||u||^2 = mu int (u^+)^{p+1}``.
    """
    if mu <= 0 or p <= 1:
        raise ValueError("need mu > 0 and p > 1")

    def to_nehari(v):
        pot = mu * domain.lp_integral(v, p + 1)
        if pot <= 0:
            return v
        return (domain.h1_inner(v, v) / pot) ** (1.0 / (p - 1.0)) * v

    def residual(v):
        return domain.laplacian_apply(v) - mu * _pos(v) ** p

    def jac_diag(v):
        return -p * mu * _pos(v) ** (p - 1.0)

    u = to_nehari(_first_mode(domain))
    u, err = _newton(domain, u, residual, jac_diag, tol, max_iter, rescale=to_nehari)
    if err > tol:
        raise NonConvergence(f"scalar ground state: relative residual {err:.3e} > {tol:.1e}")
    if u.min() < -1e-10:
        warnings.warn(f"negative nodal value {u.min():.3e} in scalar ground state", stacklevel=2)
    return u


def phi_energy(domain, w, mu, p, a, q):
    """``1/2 ||w||^2 + a/(q+1) int (w^+)^{q+1} - mu/(p+1) int (w^+)^{p+1}``."""
    return (
        0.5 * domain.h1_inner(w, w)
        + a / (q + 1.0) * domain.lp_integral(w, q + 1)
        - mu / (p + 1.0) * domain.lp_integral(w, p + 1)
    )


def two_term_scalar(mu, p, a, q, domain, tol=1e-8, descent_iter=400, descent_tol=1e-4, w0=None):
    """Nonnegative nontrivial solution of ``-Delta w + a (w^+)^q = mu (w^+)^p``.

    Minimizes the energy over the Nehari manifold
    ``||w||^2 + a int (w^+)^{q+1} = mu int (w^+)^{p+1}``: each descent step moves
    along the H^1 gradient ``w - (-Delta)^{-1}(mu (w^+)^p - a (w^+)^q)`` and is
    pulled back onto the manifold by the unique radial scaling. A Newton
    polish on the strong form finishes the solve.
    """
    if mu <= 0 or a < 0 or not 1 < q < p:
        raise ValueError("need mu > 0, a >= 0 and 1 < q < p")

    def to_nehari(v):
        pot = mu * domain.lp_integral(v, p + 1)
        if pot <= 0:
            return None
        t = unique_scaling_root(domain.h1_inner(v, v), a * domain.lp_integral(v, q + 1), pot, p, q)
        return t * v

    def energy(v):
        # trial states whose positive part vanished cannot be projected; reject them
        return np.inf if v is None else phi_energy(domain, v, mu, p, a, q)

    w = to_nehari(_first_mode(domain) if w0 is None else np.asarray(w0, dtype=float))
    if w is None:
        raise ValueError("starting profile has no positive part")
    phi = energy(w)
    step = 1.0
    for _ in range(descent_iter):
        grad = w - domain.poisson_solve(mu * _pos(w) ** p - a * _pos(w) ** q)
        gnorm = domain.h1_norm(grad)
        if gnorm <= descent_tol * domain.h1_norm(w):
            break
        moved = False
        for _ in range(40):
            trial = to_nehari(w - step * grad)
            t_phi = energy(trial)
            if t_phi < phi:
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        w, phi = trial, t_phi
        step = min(2.0 * step, 1.0)

    def residual(v):
        return domain.laplacian_apply(v) + a * _pos(v) ** q - mu * _pos(v) ** p

    def jac_diag(v):
        vp = _pos(v)
        return a * q * vp ** (q - 1.0) - p * mu * vp ** (p - 1.0)

    w, err = _newton(domain, w, residual, jac_diag, tol, 60)
    if err > tol:
        raise NonConvergence(f"two-term ground state: relative residual {err:.3e} > {tol:.1e}")
    return w
