"""Synchronized solutions ``(w, rho w)`` of the two-species system.

A synchronized pair exists exactly when both interaction exponent sums agree
(``q = alpha_12 + beta_12 = alpha_21 + beta_21``) and

    lambda_12 / lambda_21 = (mu_1 / mu_2)^((alpha_21 - beta_12 - 1) / (p - 1)).

The profile ``w`` then solves ``-Delta w = mu_1 w^p - a w^q`` with
``a = -lambda_12 (mu_1/mu_2)^(beta_12/(p-1))`` and ``rho = (mu_1/mu_2)^(1/(p-1))``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CriterionFails, NehariError
from .scalar_solver import least_energy_scalar, two_term_scalar
from .system_solver import residual_F

EXPONENT_TOL = 1e-12
RATIO_TOL = 1e-10


@dataclass
class SyncVerdict:
    holds: bool
    q: Optional[float]
    a: Optional[float]
    rho: Optional[float]
    required_ratio: Optional[float]
    reason: Optional[str] = None

    def to_dict(self):
        return {
            "holds": self.holds,
            "q": self.q,
            "a": self.a,
            "rho": self.rho,
            "required_ratio": self.required_ratio,
            "reason": self.reason,
        }


def sync_criterion(params):
    if params.ell != 2:
        raise ValueError(f"synchronized solutions are defined for two species, got ell={params.ell}")
    lam12, lam21 = params.lam[0, 1], params.lam[1, 0]
    if not (lam12 < 0 and lam21 < 0):
        raise ValueError("the criterion needs strictly negative lambda_12, lambda_21")
    a12, b12 = params.alpha[0, 1], params.beta[0, 1]
    a21, b21 = params.alpha[1, 0], params.beta[1, 0]
    p = params.p
    ratio_mu = params.mu[0] / params.mu[1]
    rho = ratio_mu ** (1.0 / (p - 1.0))
    a = -lam12 * ratio_mu ** (b12 / (p - 1.0))
    required = ratio_mu ** ((a21 - b12 - 1.0) / (p - 1.0))
    a, rho, required = float(a), float(rho), float(required)
    if abs((a12 + b12) - (a21 + b21)) > EXPONENT_TOL:
        return SyncVerdict(False, None, a, rho, required, "exponent mismatch")
    q = float(a12 + b12)
    actual = lam12 / lam21
    if abs(actual - required) > RATIO_TOL * abs(actual):
        return SyncVerdict(False, q, a, rho, required, "ratio mismatch")
    return SyncVerdict(True, q, a, rho, required)


def sync_solve(params, domain, tol=1e-8):
    """Build ``(w, rho w)`` from the two-term scalar profile."""
    verdict = sync_criterion(params)
    if not verdict.holds:
        raise CriterionFails(f"no synchronized solution: {verdict.reason}")
    w = two_term_scalar(params.mu[0], params.p, verdict.a, verdict.q, domain, tol=tol)
    return np.stack([w, verdict.rho * w])


def nodal_ratio(u, floor=1e-8):
    """``u_2 / u_1`` at interior nodes where both exceed ``floor`` times their maxima."""
    mask = (u[0] > floor * u[0].max()) & (u[1] > floor * u[1].max())
    return u[1][mask] / u[0][mask]


def synchronized_ansatz_gap(params, domain, u, t=1.0):
    """Relative strong residual of the best rank-one fit ``(t1 w, t2 w)`` to ``u``.

    The fit is the leading singular pair of the 2 x N matrix of nodal values,
    i.e. the least-squares optimum over a common profile and two amplitudes.
    """
    flat = u.reshape(2, -1)
    left, sing, right = np.linalg.svd(flat, full_matrices=False)
    amps = left[:, 0] * sing[0]
    profile = right[0]
    if profile.sum() < 0:
        amps, profile = -amps, -profile
    ansatz = (amps[:, None] * profile[None, :]).reshape(u.shape)
    res = residual_F(params, domain, ansatz, t)
    num = np.sqrt(sum(domain.l2_inner(r, r) for r in res))
    den = np.sqrt(sum(domain.h1_inner(x, x) for x in ansatz))
    return float(num / den)


@dataclass
class UnboundedRow:
    a: float
    norm_w: float
    int_wq1: float
    int_wp1: float
    residual: float
    nehari_error: float
    lower_bound_ok: bool
    error: Optional[str] = None


@dataclass
class UnboundednessTable:
    rows: list
    stable_from: Optional[int]
    increasing: bool
    lower_bound_ok: bool

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("a,norm_w,int_wq1,int_wp1,residual\n")
            for r in self.rows:
                vals = [r.a, r.norm_w, r.int_wq1, r.int_wp1, r.residual]
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def _failed_row(a, message):
    nan = float("nan")
    return UnboundedRow(float(a), nan, nan, nan, nan, nan, False, message)


def _unbounded_row(mu, p, q, a, domain):
    try:
        if a == 0:
            w = least_energy_scalar(mu, p, domain)
        else:
            w = two_term_scalar(mu, p, a, q, domain)
    except NehariError as exc:
        return _failed_row(a, f"{type(exc).__name__}: {exc}")
    n2 = domain.h1_inner(w, w)
    iq = domain.lp_integral(w, q + 1)
    ip = domain.lp_integral(w, p + 1)
    if ip <= 0:
        return _failed_row(a, "profile collapsed to the trivial solution")
    res = domain.laplacian_apply(w) + a * np.maximum(w, 0) ** q - mu * np.maximum(w, 0) ** p
    rel_res = domain.l2_norm(res) / np.sqrt(n2)
    nehari = abs(n2 + a * iq - mu * ip) / (mu * ip)
    return UnboundedRow(
        a=float(a),
        norm_w=float(np.sqrt(n2)),
        int_wq1=float(iq),
        int_wp1=float(ip),
        residual=float(rel_res),
        nehari_error=float(nehari),
        lower_bound_ok=bool(n2 <= mu * ip * (1 + 1e-12)),
    )


def unboundedness_experiment(mu, p, q, a_list, domain, workers=1):
    """Solve the profile equation for each ``a`` and tabulate norms and integrals.

    ``stable_from`` is the first row index after which ``norm_w`` increases
    strictly through the end of the table; ``increasing`` is true when such an
    index exists and every row solved.
    """
    a_list = [float(a) for a in a_list]
    if any(a < 0 for a in a_list) or a_list != sorted(a_list):
        raise ValueError("a_list must be ascending and nonnegative")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda a: _unbounded_row(mu, p, q, a, domain), a_list))
    else:
        rows = [_unbounded_row(mu, p, q, a, domain) for a in a_list]
    norms = [r.norm_w for r in rows]
    stable_from = None
    if all(r.error is None for r in rows):
        stable_from = len(rows) - 1
        while stable_from > 0 and norms[stable_from - 1] < norms[stable_from]:
            stable_from -= 1
        if len(rows) > 1 and stable_from == len(rows) - 1:
            stable_from = None
    return UnboundednessTable(
        rows=rows,
        stable_from=stable_from,
        increasing=stable_from is not None,
        lower_bound_ok=all(r.lower_bound_ok for r in rows),
    )
