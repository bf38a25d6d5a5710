#!/usr/bin/env python3
"""
Eigenstructure and inertia checks for the closed loop.

Counts positive / negative / zero eigenvalues of K Q(G) and of the 2n x 2n
error-system matrices, certifies that A~ = -L - m I is Hurwitz, checks the
dissipation assumption behind the time-varying bound, and computes that
ultimate bound.
"""

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np
import scipy.linalg

from errors import (
    AssumptionInfeasibleError,
    DimensionMismatchError,
    EigenFailureError,
    NonPositiveGainError,
    NotSymmetricError,
    ValidationError,
)

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10
ZERO_TOL = 1e-9
MU_GRID = tuple(10.0 ** k for k in range(-3, 2))
EPSILON_MARGIN = 1.001


@dataclass(frozen=True)
class InertiaReport:
    n_positive: int
    n_negative: int
    n_zero: int
    eigenvalues: tuple

    @property
    def dimension(self):
        return self.n_positive + self.n_negative + self.n_zero

    @property
    def is_hurwitz(self):
        return self.n_negative == self.dimension

    def counts(self):
        return (self.n_positive, self.n_negative, self.n_zero)

    def to_dict(self):
        return {
            'n_positive': self.n_positive,
            'n_negative': self.n_negative,
            'n_zero': self.n_zero,
            'eigenvalues_real': [float(np.real(v)) for v in self.eigenvalues],
            'eigenvalues_imag': [float(np.imag(v)) for v in self.eigenvalues],
        }


def zero_tolerance(eigenvalues):
    """Absolute threshold below which |Re lambda| counts as zero."""
    radius = float(np.max(np.abs(eigenvalues))) if len(eigenvalues) else 0.0
    return ZERO_TOL * max(1.0, radius)


def classify_eigenvalues(eigenvalues):
    """InertiaReport from a list of (possibly complex) eigenvalues."""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    tol = zero_tolerance(eigenvalues)
    real = eigenvalues.real
    order = np.lexsort((eigenvalues.imag, real))
    return InertiaReport(
        n_positive=int(np.sum(real >= tol)),
        n_negative=int(np.sum(real <= -tol)),
        n_zero=int(np.sum(np.abs(real) < tol)),
        eigenvalues=tuple(complex(v) for v in eigenvalues[order]),
    )


def symmetric_eigen(mat):
    """Ascending eigenvalues and orthonormal eigenvectors of a symmetric matrix."""
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatchError('symmetric_eigen input', 'square', mat.shape)
    asymmetry = float(np.max(np.abs(mat - mat.T))) if mat.size else 0.0
    if asymmetry > SYMMETRY_TOL:
        raise NotSymmetricError(asymmetry)
    try:
        return scipy.linalg.eigh(mat)
    except np.linalg.LinAlgError as e:
        raise EigenFailureError(f"symmetric eigensolver failed: {e}") from e


def _gain_vector(k_diag, n):
    k = np.asarray(k_diag, dtype=float).reshape(-1)
    if k.size == 1 and n > 1:
        k = np.full(n, float(k[0]))
    if k.size != n:
        raise DimensionMismatchError('K diagonal', n, k.size)
    for i, value in enumerate(k):
        if not value > 0:
            raise NonPositiveGainError(i, float(value))
    return k


def inertia_of_KQ(k_diag, gm):
    """
    Inertia of K Q(G) through the symmetric similarity C L C, C = (K S)^1/2.

    K S is diagonal, so C is the entrywise square root of its diagonal.
    """
    k = _gain_vector(k_diag, gm.n)
    c = np.sqrt(k * np.diag(gm.scaling))
    similar = c[:, None] * gm.laplacian * c[None, :]
    eigenvalues, _ = symmetric_eigen(0.5 * (similar + similar.T))
    return classify_eigenvalues(eigenvalues)


def error_system_matrix(gm, k_diag, m, q=0.0):
    """[[A~, -I], [K(Q + qI), 0]] with A~ = -L - m I."""
    if not m > 0:
        raise ValidationError('m', f"predictor gain must be positive, got {m}")
    if q < 0:
        raise ValidationError('q', f"constant-point gain must be >= 0, got {q}")
    n = gm.n
    k = _gain_vector(k_diag, n)
    identity = np.eye(n)
    a_tilde = -gm.laplacian - m * identity
    lower = k[:, None] * (gm.localized_projection + q * identity)
    return np.block([[a_tilde, -identity], [lower, np.zeros((n, n))]])


def companion_error_matrix(gm, k_diag, m, q=0.0):
    """Second-order form [[0, I], [-K(Q + qI), A~]] of the same error dynamics."""
    if not m > 0:
        raise ValidationError('m', f"predictor gain must be positive, got {m}")
    n = gm.n
    k = _gain_vector(k_diag, n)
    identity = np.eye(n)
    a_tilde = -gm.laplacian - m * identity
    lower = k[:, None] * (gm.localized_projection + q * identity)
    return np.block([[np.zeros((n, n)), identity], [-lower, a_tilde]])


def classify_error_system(mat):
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] % 2:
        raise DimensionMismatchError('error system matrix', 'square, even dimension', mat.shape)
    try:
        eigenvalues = scipy.linalg.eigvals(mat)
    except np.linalg.LinAlgError as e:
        raise EigenFailureError(f"eigenvalue iteration did not converge: {e}") from e
    if not np.all(np.isfinite(eigenvalues)):
        raise EigenFailureError("eigenvalue computation returned non-finite values")
    return classify_eigenvalues(eigenvalues)


def polynomial_inertia_prediction(gm, k_diag, m, q=0.0):
    """
    Predicted (pi+, pi-, pi0) of the error matrix from the quadratic pencil
    Z(lambda) = lambda^2 I - lambda A~ + K(Q + qI), valid because -A~ > 0.
    """
    n = gm.n
    k = _gain_vector(k_diag, n)
    stiffness = k[:, None] * (gm.localized_projection + q * np.eye(n))
    inner = classify_eigenvalues(scipy.linalg.eigvals(stiffness))
    # leading coefficient is I: no negative and n positive eigenvalues
    return (inner.n_negative, n + inner.n_positive, inner.n_zero)


def check_hurwitz_Atilde(gm, m):
    if not m > 0:
        raise ValidationError('m', f"predictor gain must be positive, got {m}")
    a_tilde = -gm.laplacian - m * np.eye(gm.n)
    eigenvalues, _ = symmetric_eigen(a_tilde)
    return classify_eigenvalues(eigenvalues)


def lyapunov_certificate(gm, m):
    """lambda_min(P) for A~^T P + P A~ = -I; positive iff A~ is Hurwitz."""
    a_tilde = -gm.laplacian - m * np.eye(gm.n)
    p = scipy.linalg.solve_continuous_lyapunov(a_tilde.T, -np.eye(gm.n))
    eigenvalues, _ = symmetric_eigen(0.5 * (p + p.T))
    return float(eigenvalues[0])


@dataclass(frozen=True)
class BoundReport:
    mu: float
    r_min_eig: float
    rbar_min_eig: float
    assumption_feasible: bool
    kappa: float = 0.0
    c: float = None
    nu_x: float = None
    nu_w: float = None
    epsilon_floor: float = None
    epsilon_bound: float = None
    k_inv_max: float = None

    def to_dict(self):
        return asdict(self)


def _positive_definite(min_eig, mat):
    return min_eig > ZERO_TOL * max(1.0, float(np.max(np.abs(mat))))


def check_assumption1(gm, k_diag, m, kappa, mu):
    """
    Minimum eigenvalues of R = 2L + (2m - 1/mu) I and
    Rbar = kappa I - K^-1 - mu Qbar^T Qbar, Qbar = S(I + A).
    """
    if not m > 0:
        raise ValidationError('m', f"predictor gain must be positive, got {m}")
    if not mu > 0:
        raise ValidationError('mu', f"must be positive, got {mu}")
    if kappa < 0:
        raise ValidationError('kappa', f"must be >= 0, got {kappa}")
    n = gm.n
    k = _gain_vector(k_diag, n)
    identity = np.eye(n)

    r = 2.0 * gm.laplacian + (2.0 * m - 1.0 / mu) * identity
    qbar = gm.local_average
    rbar = kappa * identity - np.diag(1.0 / k) - mu * (qbar.T @ qbar)

    r_min = float(symmetric_eigen(r)[0][0])
    rbar_min = float(symmetric_eigen(0.5 * (rbar + rbar.T))[0][0])
    feasible = _positive_definite(r_min, r) and _positive_definite(rbar_min, rbar)
    logger.debug("mu=%g: lambda_min(R)=%.6g lambda_min(Rbar)=%.6g feasible=%s",
                 mu, r_min, rbar_min, feasible)
    return BoundReport(
        mu=float(mu),
        r_min_eig=r_min,
        rbar_min_eig=rbar_min,
        assumption_feasible=bool(feasible),
        kappa=float(kappa),
        k_inv_max=float(np.max(1.0 / k)),
    )


def search_mu(gm, k_diag, m, kappa, grid=MU_GRID):
    """Best grid point: feasible first, then largest lambda_min(Rbar)."""
    reports = [check_assumption1(gm, k_diag, m, kappa, mu) for mu in grid]
    return max(reports, key=lambda rep: (rep.assumption_feasible, rep.r_min_eig > 0, rep.rbar_min_eig))


def ultimate_bound(partial, w_star, wdot_star):
    """Complete a feasible BoundReport with c, nu_x, nu_w and the ultimate bound."""
    if not partial.assumption_feasible:
        raise AssumptionInfeasibleError(partial.r_min_eig, partial.rbar_min_eig)
    if w_star < 0 or wdot_star < 0:
        raise ValidationError('w_star', "disturbance bounds must be non-negative")

    k_inv_max = partial.k_inv_max
    c = partial.kappa * w_star ** 2 + k_inv_max * wdot_star ** 2
    nu_x = float(np.sqrt(c / partial.r_min_eig))
    nu_w = float(np.sqrt(c / partial.rbar_min_eig))
    floor = float(np.sqrt(nu_x ** 2 + k_inv_max * nu_w ** 2))
    return replace(
        partial,
        c=float(c),
        nu_x=nu_x,
        nu_w=nu_w,
        epsilon_floor=floor,
        epsilon_bound=EPSILON_MARGIN * floor,
    )
