#!/usr/bin/env python3
"""
Post-hoc checks on recorded trajectories.

Consensus limit by quadrature, residual structure of the undamped error
system, constant-point recovery, formations, control boundedness and
compliance with the ultimate bound of the damped controller.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from scipy.integrate import trapezoid

from controller import Mode
from errors import (
    AssumptionInfeasibleError,
    DimensionMismatchError,
    NonFiniteStateError,
    NotConstantDisturbanceError,
    ValidationError,
)
from sim_engine import spread

logger = logging.getLogger(__name__)

SETTLE_TOL = 1e-3
DISSIPATION_RTOL = 1e-2


def _zeta(zeta, n):
    if zeta is None:
        return np.zeros(n)
    zeta = np.asarray(zeta, dtype=float)
    if zeta.shape != (n,):
        raise DimensionMismatchError('zeta', n, zeta.size)
    return zeta


def consensus_limit_quadrature(traj, d, zeta=None):
    """
    Predicted common value (1^T (x0 - zeta) - int 1^T w~ dsigma) / n.

    1^T L = 0, so 1^T x' = 1^T (u + w) = -1^T w~ for every mode; the
    integrand is taken from the recorded u and w, trapezoidal in time and
    truncated at the last sample.
    """
    if not d.is_constant:
        raise NotConstantDisturbanceError(d.kind)
    n = traj.n
    offset = traj.x[0] - _zeta(zeta, n)
    integrand = np.sum(traj.u + traj.w_true, axis=1)
    return float((np.sum(offset) + trapezoid(integrand, traj.times)) / n)


def formation_check(traj, zeta):
    """max_ij |(x_i(T) - x_j(T)) - (zeta_i - zeta_j)|."""
    return spread(traj.x[-1] - _zeta(zeta, traj.n))


def boundedness_check(traj):
    """(sup_t ||u(t)||_2, per-channel sup_t |u_i(t)|) over retained samples."""
    finite = np.all(np.isfinite(traj.u), axis=1) & np.all(np.isfinite(traj.x), axis=1)
    if not np.all(finite):
        raise NonFiniteStateError(float(traj.times[np.argmin(finite)]))
    u_sup = float(np.max(np.linalg.norm(traj.u, axis=1)))
    per_channel = np.max(np.abs(traj.u), axis=0)
    return u_sup, per_channel


def _k_inverse(k_diag, n):
    k = np.asarray(k_diag, dtype=float).reshape(-1)
    if k.size == 1:
        k = np.full(n, float(k[0]))
    if k.size != n:
        raise DimensionMismatchError('K diagonal', n, k.size)
    return 1.0 / k


def lyapunov_series(traj, d, k_diag):
    """V(t) = x~^T x~ + w~^T K^-1 w~ at every sample."""
    x_err = traj.x - traj.xhat
    w_err = traj.what - traj.w_true
    k_inv = _k_inverse(k_diag, traj.n)
    return np.sum(x_err ** 2, axis=1) + np.sum(k_inv * w_err ** 2, axis=1)


def error_norm_series(traj, d, k_diag):
    return np.sqrt(lyapunov_series(traj, d, k_diag))


def _require_complete(bound):
    if bound is None:
        raise ValidationError('bound', "a BoundReport is required")
    if not bound.assumption_feasible:
        raise AssumptionInfeasibleError(bound.r_min_eig, bound.rbar_min_eig)
    if bound.c is None:
        raise ValidationError('bound', "pass the report through spectral.ultimate_bound first")


def dissipation_check(traj, d, k_diag, bound):
    """
    Fraction of samples where V' <= -lmin(R)|x~|^2 - lmin(Rbar)|w~|^2 + c.

    V' is a central difference of the sampled V; each sample gets a slack
    of 1e-2 * max(1, |V'|).
    """
    _require_complete(bound)
    v = lyapunov_series(traj, d, k_diag)
    v_dot = np.gradient(v, traj.times)
    x_sq = np.sum((traj.x - traj.xhat) ** 2, axis=1)
    w_sq = np.sum((traj.what - traj.w_true) ** 2, axis=1)
    rhs = -bound.r_min_eig * x_sq - bound.rbar_min_eig * w_sq + bound.c
    slack = DISSIPATION_RTOL * np.maximum(1.0, np.abs(v_dot))
    return float(np.mean(v_dot <= rhs + slack))


def ultimate_bound_compliance(traj, d, k_diag, bound, t_from=None):
    """Number of samples with t >= t_from (default T/2) where ||e(t)|| >= epsilon_bound."""
    _require_complete(bound)
    t_from = traj.horizon / 2 if t_from is None else t_from
    start = traj.index_at(t_from)
    norms = error_norm_series(traj, d, k_diag)[start:]
    return int(np.sum(norms >= bound.epsilon_bound))


def settled(traj, tol=SETTLE_TOL):
    mid = traj.index_at(traj.horizon / 2)
    return bool(np.max(np.abs(traj.x[-1] - traj.x[mid])) < tol)


def null_mode_residuals(traj, d, m):
    """
    Final-sample structure of the undamped error: x~ -> eps 1, w~ -> -m eps 1.

    Returns (eps estimated as mean x~(T), max_i |w~_i + m x~_i|, stdev x~(T)).
    """
    x_err = traj.x[-1] - traj.xhat[-1]
    w_err = traj.what[-1] - traj.w_true[-1]
    return (
        float(np.mean(x_err)),
        float(np.max(np.abs(w_err + m * x_err))),
        float(np.std(x_err)),
    )


@dataclass(frozen=True)
class ConvergenceReport:
    mode: str
    horizon: float
    spread_final: float
    consensus_value: float
    settled: bool
    predicted_limit: float
    limit_residual: float
    what_error: float
    u_sup: float
    epsilon_consensus: float
    null_mode_residual: float
    xerr_stdev: float
    formation_deviation: float = None
    ebound_violations: int = None
    dissipation_fraction: float = None
    epsilon_bound: float = None

    def to_dict(self):
        return asdict(self)


def convergence_report(traj, cfg, d, bound=None):
    zeta = cfg.target
    final = traj.x[-1]
    u_sup, _ = boundedness_check(traj)

    predicted = residual = None
    if d.is_constant:
        predicted = consensus_limit_quadrature(traj, d, zeta)
        centred = final - _zeta(zeta, traj.n)
        residual = abs(float(np.mean(centred)) - predicted)

    eps, nm_residual, stdev = null_mode_residuals(traj, d, cfg.m)
    is_settled = settled(traj)
    if cfg.mode is Mode.CONSTANT_POINT and not is_settled:
        logger.warning("constant-point run has not settled by t = %.3g s", traj.horizon)

    violations = fraction = eps_bound = None
    if cfg.mode is Mode.DAMPED and bound is not None:
        if bound.assumption_feasible and bound.c is not None:
            violations = ultimate_bound_compliance(traj, d, cfg.k, bound)
            fraction = dissipation_check(traj, d, cfg.k, bound)
            eps_bound = bound.epsilon_bound
        else:
            logger.warning("dissipation assumption infeasible at mu=%g; ultimate bound not checked", bound.mu)

    return ConvergenceReport(
        mode=cfg.mode.value,
        horizon=traj.horizon,
        spread_final=spread(final),
        consensus_value=float(np.mean(final)),
        settled=is_settled,
        predicted_limit=predicted,
        limit_residual=residual,
        what_error=float(np.max(np.abs(traj.what[-1] - traj.w_true[-1]))),
        u_sup=u_sup,
        epsilon_consensus=eps,
        null_mode_residual=nm_residual,
        xerr_stdev=stdev,
        formation_deviation=None if zeta is None else formation_check(traj, zeta),
        ebound_violations=violations,
        dissipation_fraction=fraction,
        epsilon_bound=eps_bound,
    )


def _fmt(value):
    if value is None:
        return 'n/a'
    if isinstance(value, bool):
        return 'yes' if value else 'no'
    if isinstance(value, float):
        return f'{value:.6g}'
    return str(value)


def format_report(report, title=None):
    lines = ["=" * 60, (title or "CONVERGENCE REPORT").upper(), "=" * 60]
    rows = [
        ('Mode', report.mode),
        ('Horizon (s)', report.horizon),
        ('Spread x(T)', report.spread_final),
        ('Consensus value', report.consensus_value),
        ('Settled', report.settled),
        ('Predicted limit', report.predicted_limit),
        ('Limit residual', report.limit_residual),
        ('max |w^ - w| at T', report.what_error),
        ('sup ||u||', report.u_sup),
        ('epsilon (mean x~)', report.epsilon_consensus),
        ('max |w~ + m x~|', report.null_mode_residual),
        ('stdev x~', report.xerr_stdev),
    ]
    if report.formation_deviation is not None:
        rows.append(('Formation deviation', report.formation_deviation))
    if report.epsilon_bound is not None:
        rows += [
            ('Ultimate bound', report.epsilon_bound),
            ('Bound violations', report.ebound_violations),
            ('Dissipation holds', report.dissipation_fraction),
        ]
    width = max(len(label) for label, _ in rows)
    lines += [f"  {label:<{width}}: {_fmt(value)}" for label, value in rows]
    lines.append("=" * 60)
    return "\n".join(lines)
