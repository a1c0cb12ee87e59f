"""Solvers for the coupled system at a fixed homotopy parameter ``t``.

``continue_in_t`` walks from the uncoupled product of scalar ground states
(t = 0) to the coupled system (t = 1) with warm-started semismooth Newton;
``galerkin_solve`` solves the same equations restricted to the span of the
k lowest sine modes of every species.
"""
import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BoundGuardTripped,
    Divergence,
    NehariError,
    NonConvergence,
    SingularJacobian,
    StepFloorReached,
)
from .nehari import (
    energy_J,
    fully_nontrivial_check,
    nonlinearity,
    normalize_to_sphere,
    project_to_nehari,
    psi,
)
from .scalar_solver import least_energy_scalar

log = logging.getLogger(__name__)

#: nodal bases raised to exponents below 1 are clamped here before differentiating
EPS_CLAMP = 1e-12


@dataclass
class ContinuationConfig:
    dt: float = 0.1
    min_dt: float = 1e-4
    tol: float = 1e-8
    max_iter: int = 50
    guard_factor: float = 1e3
    r_guard: Optional[float] = None
    max_halvings: int = 10

    def __post_init__(self):
        if not 0 < self.min_dt <= self.dt <= 1:
            raise ValueError(f"need 0 < min_dt <= dt <= 1, got dt={self.dt}, min_dt={self.min_dt}")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tolerance must be positive and max_iter >= 1")


def total_norm(domain, u):
    return float(np.sqrt(sum(domain.h1_inner(ui, ui) for ui in u)))


def residual_F(params, domain, u, t):
    """Strong-form residual ``-Delta_h u_i - mu_i (u_i^+)^p - t * coupling_i``."""
    lap = np.stack([domain.laplacian_apply(ui) for ui in u])
    return lap - nonlinearity(params, u, t)


def relative_residual(params, domain, u, t):
    """``||F(u)||_L2 / ||u||_H1`` over all components together."""
    res = residual_F(params, domain, u, t)
    num = np.sqrt(sum(domain.l2_inner(r, r) for r in res))
    return float(num / max(total_norm(domain, u), np.finfo(float).tiny))


def _dpow(x, e):
    """Semismooth derivative of ``(x^+)^e``: zero at nonpositive nodes, clamped base for ``e < 1``."""
    xp = np.maximum(x, 0.0)
    if e < 1:
        base = np.where(xp > 0, np.maximum(xp, EPS_CLAMP), 1.0)
        return np.where(xp > 0, e * base ** (e - 1.0), 0.0)
    return e * xp ** (e - 1.0)


def nonlinearity_derivative(params, u, t):
    """``D[i][j]`` = nodal derivative of component ``i`` of the nonlinearity w.r.t. ``u_j``."""
    ell = params.ell
    up = np.maximum(u, 0.0)
    deriv = [[np.zeros(u.shape[1:]) for _ in range(ell)] for _ in range(ell)]
    for i in range(ell):
        deriv[i][i] = params.mu[i] * _dpow(u[i], params.p)
    if t != 0:
        for i, j in params.pairs():
            lam, al, be = params.lam[i, j], params.alpha[i, j], params.beta[i, j]
            if lam == 0:
                continue
            deriv[i][i] = deriv[i][i] + t * lam * _dpow(u[i], al) * up[j] ** be
            deriv[i][j] = deriv[i][j] + t * lam * up[i] ** al * _dpow(u[j], be)
    return deriv


def jacobian_F(params, domain, u, t):
    """Sparse block Jacobian of ``residual_F`` (semismooth selection)."""
    lap = domain.laplacian_matrix
    deriv = nonlinearity_derivative(params, u, t)
    blocks = []
    for i in range(params.ell):
        row = []
        for j in range(params.ell):
            block = -sp.diags(deriv[i][j].ravel())
            if i == j:
                block = lap + block
            row.append(block)
        blocks.append(row)
    return sp.bmat(blocks, format="csc")


@dataclass
class NewtonResult:
    u: np.ndarray
    iterations: int
    residual: float


def newton_solve(params, domain, u0, t, cfg=None):
    """Semismooth Newton with step halving for ``residual_F(u, t) = 0``.

    Converges when the relative residual is at most ``cfg.tol``; a few extra
    iterations then polish towards the round-off floor.
    """
    cfg = cfg or ContinuationConfig()
    u = np.array(u0, dtype=float)
    shape = u.shape
    res = residual_F(params, domain, u, t)

    def measure(v, r):
        num = np.sqrt(sum(domain.l2_inner(x, x) for x in r))
        return float(num / max(total_norm(domain, v), np.finfo(float).tiny))

    err = measure(u, res)
    polish = 0
    for it in range(cfg.max_iter + 1):
        if err <= cfg.tol:
            polish += 1
            if polish > 3 or err <= 1e-14:
                return NewtonResult(u, it, err)
        elif it == cfg.max_iter:
            break
        try:
            lu = spla.splu(jacobian_F(params, domain, u, t))
            step = lu.solve(-res.ravel()).reshape(shape)
        except RuntimeError as exc:
            if err <= cfg.tol:
                return NewtonResult(u, it, err)
            raise SingularJacobian(f"Jacobian factorization failed at t={t}: {exc}") from exc
        if not np.all(np.isfinite(step)):
            if err <= cfg.tol:
                return NewtonResult(u, it, err)
            raise SingularJacobian(f"non-finite Newton step at t={t}")
        lam = 1.0
        for _ in range(cfg.max_halvings + 1):
            trial = u + lam * step
            t_res = residual_F(params, domain, trial, t)
            t_err = measure(trial, t_res)
            if t_err < err:
                break
            lam *= 0.5
        else:
            if err <= cfg.tol:
                return NewtonResult(u, it, err)
            raise Divergence(f"residual did not decrease after {cfg.max_halvings} halvings at t={t}")
        u, res, err = trial, t_res, t_err
        if cfg.r_guard is not None:
            norm = total_norm(domain, u)
            if norm > cfg.r_guard:
                raise BoundGuardTripped(
                    f"||u|| = {norm:.3e} exceeds guard {cfg.r_guard:.3e} at t={t}", norm, cfg.r_guard
                )
    if err <= cfg.tol:
        return NewtonResult(u, cfg.max_iter, err)
    raise NonConvergence(f"Newton stopped at relative residual {err:.3e} after {cfg.max_iter} iterations")


def product_ground_state(params, domain):
    """Uncoupled base point: component ``i`` is the scalar ground state for ``mu_i``."""
    return np.stack([least_energy_scalar(mu, params.p, domain) for mu in params.mu])


def _trace_row(params, domain, u, t):
    s = np.full(params.ell, np.nan)
    try:
        s, _ = project_to_nehari(params, domain, normalize_to_sphere(domain, u), t)
    except NehariError:
        pass
    axes = tuple(range(1, u.ndim))
    return {
        "t": float(t),
        "norms": [float(domain.h1_norm(ui)) for ui in u],
        "mins": u.min(axis=axes).tolist(),
        "linf": float(np.abs(u).max()),
        "s": np.asarray(s).tolist(),
        "residual": relative_residual(params, domain, u, t),
    }


def continue_in_t(params, domain, cfg=None, t_end=1.0, u0=None):
    """Homotopy from the uncoupled system (t = 0) to ``t_end``.

    Each step predicts by projecting the normalized previous state onto the
    Nehari set of the new ``t``, then corrects with Newton. Failed steps halve
    ``dt`` down to ``cfg.min_dt``. Returns ``(u, trace)``.
    """
    cfg = cfg or ContinuationConfig()
    u = product_ground_state(params, domain) if u0 is None else np.array(u0, dtype=float)
    guard = cfg.r_guard if cfg.r_guard is not None else cfg.guard_factor * total_norm(domain, u)
    cfg = ContinuationConfig(**{**asdict(cfg), "r_guard": guard})
    t = 0.0
    u = newton_solve(params, domain, u, t, cfg).u
    trace = [_trace_row(params, domain, u, t)]
    dt = cfg.dt
    while t < t_end:
        t_new = t + dt
        if t_new > t_end - 1e-12:
            t_new = t_end
        try:
            pred = project_to_nehari(params, domain, normalize_to_sphere(domain, u), t_new)[1]
        except NehariError:
            pred = u
        try:
            u_new = newton_solve(params, domain, pred, t_new, cfg).u
        except BoundGuardTripped:
            raise
        except (NonConvergence, Divergence, SingularJacobian) as exc:
            dt *= 0.5
            log.info("step to t=%.5g failed (%s); dt -> %.3g", t_new, exc, dt)
            if dt < cfg.min_dt:
                raise StepFloorReached(f"continuation stalled at t={t}", last_t=t) from exc
            continue
        t, u = t_new, u_new
        trace.append(_trace_row(params, domain, u, t))
        dt = min(cfg.dt, 2.0 * dt)
    check = fully_nontrivial_check(params, domain, u, t, tol=max(cfg.tol, 1e-8))
    if not check.fully_nontrivial:
        raise NonConvergence(f"continuation ended on a semitrivial state at t={t}")
    return u, trace


def write_trace_csv(trace, path):
    ell = len(trace[0]["norms"])
    header = ["t"] + [f"norm_u{i + 1}" for i in range(ell)] + [f"min_u{i + 1}" for i in range(ell)] + ["residual"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in trace:
            values = [row["t"], *row["norms"], *row["mins"], row["residual"]]
            writer.writerow([f"{v:.17g}" for v in values])


def galerkin_solve(params, domain, k, t, cfg=None, u0=None):
    """Solve the projected equations ``P_k(u - K_t(u)) = 0`` with ``u`` in the k-mode space.

    Unknowns are the sine coefficients ``c[i, m]``; the equations are
    ``lambda_m c[i, m] = <f_i(u), phi_m>`` with grid quadrature. Without ``u0``
    the start is the truncated product ground state, continued in ``t`` with
    steps ``cfg.dt``.
    """
    cfg = cfg or ContinuationConfig()
    if not 1 <= k <= domain.size:
        raise ValueError(f"mode count must lie in [1, {domain.size}], got {k}")
    basis, eig = domain.mode_basis(k)
    cv = domain.cell_volume
    ell = params.ell
    shape = (ell,) + domain.shape

    def to_grid(c):
        return (c @ basis).reshape(shape)

    def to_coeffs(u):
        return cv * u.reshape(ell, -1) @ basis.T

    def equations(c, tt):
        u = to_grid(c)
        return eig * c - cv * nonlinearity(params, u, tt).reshape(ell, -1) @ basis.T

    def measure(c, r):
        # coefficient norms equal L2_h / H1 norms because the basis is orthonormal
        denom = np.sqrt(np.sum(eig * c**2))
        return float(np.linalg.norm(r) / max(denom, np.finfo(float).tiny))

    def solve_at(c, tt):
        r = equations(c, tt)
        err = measure(c, r)
        polish = 0
        for it in range(cfg.max_iter + 1):
            if err <= cfg.tol:
                polish += 1
                if polish > 3 or err <= 1e-14:
                    return c, err
            elif it == cfg.max_iter:
                break
            deriv = nonlinearity_derivative(params, to_grid(c), tt)
            jac = np.zeros((ell * k, ell * k))
            for i in range(ell):
                for j in range(ell):
                    block = -cv * (basis * deriv[i][j].ravel()) @ basis.T
                    if i == j:
                        block[np.diag_indices(k)] += eig
                    jac[i * k:(i + 1) * k, j * k:(j + 1) * k] = block
            try:
                step = np.linalg.solve(jac, -r.ravel()).reshape(ell, k)
            except np.linalg.LinAlgError as exc:
                if err <= cfg.tol:
                    return c, err
                raise SingularJacobian(f"Galerkin Jacobian singular at t={tt}") from exc
            lam = 1.0
            for _ in range(cfg.max_halvings + 1):
                trial = c + lam * step
                t_r = equations(trial, tt)
                t_err = measure(trial, t_r)
                if t_err < err:
                    break
                lam *= 0.5
            else:
                if err <= cfg.tol:
                    return c, err
                raise Divergence(f"Galerkin residual did not decrease at t={tt}")
            c, r, err = trial, t_r, t_err
        if err <= cfg.tol:
            return c, err
        raise NonConvergence(f"Galerkin Newton stopped at relative residual {err:.3e}")

    if u0 is not None:
        c, _ = solve_at(to_coeffs(np.asarray(u0, dtype=float)), t)
        return to_grid(c)
    c = to_coeffs(product_ground_state(params, domain))
    tt = 0.0
    c, _ = solve_at(c, tt)
    while tt < t:
        tt = tt + cfg.dt
        if tt > t - 1e-12:
            tt = t
        c, _ = solve_at(c, tt)
    return to_grid(c)


@dataclass
class SolveReport:
    t: float
    residual_norms: list
    residual_relative: float
    nehari_residuals: list
    s: list
    norms: list
    min_values: list
    max_values: list
    energy_J: float
    psi: Optional[float]
    overlaps: dict
    fully_nontrivial: bool
    strictly_positive: bool
    residual_ok: bool
    nehari_ok: bool
    certified: bool
    iterations: Optional[int] = None
    kappa: Optional[float] = None
    error: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **extra):
        payload = {**self.to_dict(), **extra}
        return json.dumps(payload, sort_keys=True, indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def verify_solution(params, domain, u, t=1.0, tol=1e-8):
    """Certificate for a candidate solution: residuals, Nehari data, positivity, overlaps."""
    res = residual_F(params, domain, u, t)
    norms = np.array([domain.h1_norm(ui) for ui in u])
    total = float(np.sqrt(np.sum(norms**2)))
    res_norms = [float(domain.l2_norm(r)) for r in res]
    rel = float(np.sqrt(np.sum(np.square(res_norms))) / max(total, np.finfo(float).tiny))
    check = fully_nontrivial_check(params, domain, u, t, tol=tol)
    s = [float("nan")] * params.ell
    psi_val = None
    if check.fully_nontrivial:
        try:
            unit = normalize_to_sphere(domain, u)
            s = project_to_nehari(params, domain, unit, t)[0].tolist()
            psi_val = psi(params, domain, unit)
        except NehariError:
            pass
    up = np.maximum(u, 0.0)
    overlaps = {
        f"{i + 1}-{j + 1}": domain.integral(up[i] * up[j])
        for i in range(params.ell)
        for j in range(i + 1, params.ell)
    }
    nehari_ok = bool(check.fully_nontrivial and np.all(check.nehari_relative <= tol))
    residual_ok = rel <= tol
    positive = bool(np.all(check.min_values > 0))
    return SolveReport(
        t=float(t),
        residual_norms=[float(x) for x in res_norms],
        residual_relative=rel,
        nehari_residuals=check.nehari_relative.tolist(),
        s=[float(x) for x in s],
        norms=norms.tolist(),
        min_values=check.min_values.tolist(),
        max_values=check.max_values.tolist(),
        energy_J=float(energy_J(params, domain, u)),
        psi=psi_val,
        overlaps=overlaps,
        fully_nontrivial=check.fully_nontrivial,
        strictly_positive=positive,
        residual_ok=residual_ok,
        nehari_ok=nehari_ok,
        certified=bool(residual_ok and nehari_ok and check.fully_nontrivial),
    )


def lambda_sweep(params, domain, multipliers, cfg=None, base=None, max_refine=6):
    """Re-solve with ``lambda_ij <- kappa * lambda_ij`` along an ascending schedule.

    Each point is warm-started from the previous one; when Newton fails the
    interval is subdivided geometrically (up to ``2**max_refine`` substeps).
    A point that still fails is recorded with ``certified=False`` and its
    error, and the sweep carries on from the last good state.
    """
    cfg = cfg or ContinuationConfig()
    multipliers = [float(k) for k in multipliers]
    if any(k < 1 for k in multipliers) or multipliers != sorted(multipliers):
        raise ValueError("multipliers must be ascending and >= 1")
    if base is None:
        base, _ = continue_in_t(params, domain, cfg)
    u, kappa_prev = np.array(base, dtype=float), 1.0
    reports = []
    for kappa in multipliers:
        try:
            u_k = _walk_kappa(params, domain, u, kappa_prev, kappa, cfg, max_refine)
        except NehariError as exc:
            rep = verify_solution(params.scaled(kappa), domain, u, 1.0, tol=cfg.tol)
            rep.certified = False
            rep.error = f"{type(exc).__name__}: {exc}"
            rep.kappa = kappa
            reports.append(rep)
            continue
        u, kappa_prev = u_k, kappa
        rep = verify_solution(params.scaled(kappa), domain, u, 1.0, tol=cfg.tol)
        rep.kappa = kappa
        if not rep.certified and rep.error is None:
            rep.error = "solution not certified (residual, Nehari or positivity check failed)"
        reports.append(rep)
    return reports


def _branch_jump(u_old, u_new, domain, shrink=0.5):
    """True when some component lost most of its norm or its positivity in one step."""
    for a, b in zip(u_old, u_new):
        if np.min(b) <= 0 or domain.h1_norm(b) < shrink * domain.h1_norm(a):
            return True
    return False


def _walk_kappa(params, domain, u, k0, k1, cfg, max_refine):
    if k1 == k0:
        return newton_solve(params.scaled(k1), domain, u, 1.0, cfg).u
    last = None
    for level in range(max_refine + 1):
        nodes = np.geomspace(k0, k1, 2**level + 1)[1:]
        try:
            v = u
            for kappa in nodes:
                w = newton_solve(params.scaled(kappa), domain, v, 1.0, cfg).u
                if _branch_jump(v, w, domain):
                    raise NonConvergence(f"branch jump at kappa={kappa:.6g}: a component collapsed")
                v = w
            return v
        except (NonConvergence, Divergence, SingularJacobian) as exc:
            last = exc
    raise last
