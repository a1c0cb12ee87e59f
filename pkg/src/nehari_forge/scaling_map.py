"""The finite-dimensional scaling map

    M_i(s) = a_i s_i - b_i s_i^p + sum_{j != i} d_ij s_i^alpha_ij s_j^beta_ij

on the open positive orthant, its Jacobian, a bracketing box, and the solver
for its unique zero.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import NonConvergence, NoZero


@dataclass(frozen=True)
class ScalingCoeffs:
    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    p: float
    ell: int = field(init=False)

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=float))
        ell = a.size
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        d = _square(self.d, ell, "d")
        alpha = _square(self.alpha, ell, "alpha")
        beta = _square(self.beta, ell, "beta")
        off = ~np.eye(ell, dtype=bool)
        # diagonal entries carry no meaning; normalize them so vectorized formulas stay finite
        d = np.where(off, d, 0.0)
        alpha = np.where(off, alpha, 1.0)
        beta = np.where(off, beta, 1.0)
        if b.size != ell:
            raise ValueError("a and b must have the same length")
        if self.p <= 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if np.any(a <= 0):
            raise ValueError("all a_i must be positive")
        if np.any(b < 0):
            raise ValueError("all b_i must be nonnegative")
        if np.any(d < 0):
            raise ValueError("all d_ij must be nonnegative")
        if np.any(alpha[off] <= 0) or np.any(beta[off] <= 0):
            raise ValueError("exponents alpha_ij, beta_ij must be positive")
        if np.any(alpha[off] + beta[off] >= self.p):
            raise ValueError("alpha_ij + beta_ij < p violated")
        for name, val in (("a", a), ("b", b), ("d", d), ("alpha", alpha), ("beta", beta)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "ell", ell)

    def rescaled(self, s0):
        """Coefficients whose zero is ``s*/s0`` when ``s*`` is the zero of ``self``."""
        s0 = np.asarray(s0, dtype=float)
        return ScalingCoeffs(
            a=self.a * s0,
            b=self.b * s0**self.p,
            d=self.d * s0[:, None] ** self.alpha * s0[None, :] ** self.beta,
            alpha=self.alpha,
            beta=self.beta,
            p=self.p,
        )


def _square(m, ell, name):
    m = np.asarray(m, dtype=float)
    if m.ndim == 0:
        m = np.full((ell, ell), float(m))
    if m.shape != (ell, ell):
        raise ValueError(f"{name} must be {ell}x{ell}, got shape {m.shape}")
    return m.copy()


def _positive(s, ell):
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.size != ell:
        raise ValueError(f"expected {ell} components, got {s.size}")
    if not (s > 0).all():
        raise ValueError("scaling vector must have strictly positive components")
    return s


def _cross_terms(c, s):
    # T[i, j] = d_ij s_i^alpha_ij s_j^beta_ij (zero on the diagonal)
    return c.d * s[:, None] ** c.alpha * s[None, :] ** c.beta


def eval_M(c, s):
    return _eval(c, _positive(s, c.ell))


def jacobian_M(c, s):
    return _jacobian(c, _positive(s, c.ell))


def _eval(c, s):
    return c.a * s - c.b * s**c.p + _cross_terms(c, s).sum(axis=1)


def _jacobian(c, s):
    si = s[:, None]
    sj = s[None, :]
    off_diag = c.d * c.beta * si**c.alpha * sj ** (c.beta - 1.0)
    own = c.d * c.alpha * si ** (c.alpha - 1.0) * sj**c.beta
    jac = off_diag.copy()
    np.fill_diagonal(jac, c.a - c.p * c.b * s ** (c.p - 1.0) + own.sum(axis=1))
    return jac


def bracket(c):
    """Return ``(r, R)`` with ``M_i > 0`` when ``s_i <= r`` and ``M_i < 0`` when ``s_i = max s >= R``."""
    if np.any(c.b <= 0):
        raise NoZero("some b_i = 0: M has no zero and no bracket exists")
    a_lo, a_hi = c.a.min(), c.a.max()
    b_lo, b_hi = c.b.min(), c.b.max()
    d_hi = c.d.max() if c.ell > 1 else 0.0
    p = c.p
    r = 0.5 * (a_lo / b_hi) ** (1.0 / (p - 1.0))
    off = ~np.eye(c.ell, dtype=bool)
    gammas = [(c.alpha + c.beta)[i][off[i]] for i in range(c.ell)]

    def upper(t):
        # f(t)/t^p is strictly decreasing, so one negative value settles all larger t
        return max(a_hi * t - b_lo * t**p + np.sum(d_hi * t**g) for g in gammas)

    R = max(2.0 * r, (a_hi / b_lo) ** (1.0 / (p - 1.0)))
    while not upper(R) < 0:
        R *= 2.0
    return float(r), float(R)


def _log_system(c, x):
    # G_i = M_i / s_i in the variables x = log s, and its Jacobian dG/dx
    s = np.exp(x)
    cross = c.d * s[:, None] ** (c.alpha - 1.0) * s[None, :] ** c.beta
    own = c.b * s ** (c.p - 1.0)
    g = c.a - own + cross.sum(axis=1)
    jac = cross * c.beta
    np.fill_diagonal(jac, -(c.p - 1.0) * own + (cross * (c.alpha - 1.0)).sum(axis=1))
    return s, g, jac


def _at_roundoff(c, s, size):
    # residual no larger than what cancellation among the terms of M can leave
    scale = (c.a * s + c.b * s**c.p + _cross_terms(c, s).sum(axis=1)).max()
    return size <= 64 * np.finfo(float).eps * scale


def solve_scaling(c, s0=None, tol=1e-12, max_iter=200, box=None):
    """The unique positive zero of ``M``.

    Damped Newton on ``M_i(s)/s_i`` in logarithmic variables, started from the
    bracket midpoint (or ``s0``) with iterates clipped to ``[r/2, 2R]``. Up to
    three steps past ``max|M| <= tol * max(a)`` polish towards round-off. When
    the line search stalls, the monotone fixed-point sequence
    ``s_i <- ((a_i s_i + sum_j d_ij s_i^alpha_ij s_j^beta_ij) / b_i)^(1/p)``
    started at ``r`` is advanced and Newton resumes from it.
    """
    r, R = bracket(c) if box is None else box
    lo, hi = np.log(0.5 * r), np.log(2.0 * R)
    target = tol * c.a.max()
    if s0 is None:
        x = np.full(c.ell, np.log(0.5 * (r + R)))
    else:
        x = np.clip(np.log(_positive(s0, c.ell)), lo, hi)
    fixed = np.full(c.ell, r)

    s, g, jac = _log_system(c, x)
    size = abs(s * g).max()
    stalls = 0
    polish = 0
    for _ in range(max_iter):
        if size <= target:
            # a few extra steps take the zero down to round-off
            polish += 1
            if polish > 3 or size == 0:
                return s
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError:
            step = None
        accepted = False
        if step is not None and np.isfinite(step).all():
            lam = 1.0
            for _ in range(40 if polish == 0 else 1):
                trial = np.clip(x + lam * step, lo, hi)
                t_s, t_g, t_jac = _log_system(c, trial)
                t_size = abs(t_s * t_g).max()
                if t_size < size:
                    accepted = True
                    break
                lam *= 0.5
        if accepted:
            if abs(trial - x).max() <= 4 * np.finfo(float).eps and _at_roundoff(c, t_s, t_size):
                return t_s
            x, s, g, jac, size = trial, t_s, t_g, t_jac, t_size
            continue
        if size <= target or _at_roundoff(c, s, size):
            return s
        stalls += 1
        if stalls > 20:
            break
        for _ in range(50):
            fixed = ((c.a * fixed + _cross_terms(c, fixed).sum(axis=1)) / c.b) ** (1.0 / c.p)
        x = np.log(fixed)
        s, g, jac = _log_system(c, x)
        size = abs(s * g).max()
    if size <= target:
        return s
    raise NonConvergence(f"scaling solve stalled with max|M| = {size:.3e}")


def degree_sign_check(c, s_star, threshold=1e-10):
    """Sign of ``det DM(s*)``; 0 flags a numerically degenerate zero."""
    jac = jacobian_M(c, s_star)
    det = np.linalg.det(jac)
    scale = np.prod(np.linalg.norm(jac, axis=1))
    if scale == 0 or abs(det) < threshold * scale:
        return 0
    return int(np.sign(det))


def continuity_probe(c, c_other, s_star=None):
    """Max-norm distance between the zeros of two coefficient sets."""
    if s_star is None:
        s_star = solve_scaling(c)
    return float(np.max(np.abs(np.asarray(s_star) - solve_scaling(c_other))))


def random_coeffs(rng, ell, p=None):
    """Draw an admissible coefficient set with all ``b_i > 0`` (used by tests and selftest)."""
    if p is None:
        p = rng.uniform(1.5, 5.0)
    gamma = rng.uniform(0.05, 0.95, size=(ell, ell)) * p
    split = rng.uniform(0.1, 0.9, size=(ell, ell))
    alpha = gamma * split
    beta = gamma - alpha
    return ScalingCoeffs(
        a=rng.uniform(0.2, 5.0, ell),
        b=rng.uniform(0.2, 5.0, ell),
        d=rng.uniform(0.0, 3.0, (ell, ell)),
        alpha=alpha,
        beta=beta,
        p=p,
    )
