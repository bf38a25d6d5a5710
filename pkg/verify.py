#!/usr/bin/env python3
"""
Seeded property suite behind `main.py verify`.

Every check draws its graphs, gains and states from one numpy Generator,
so a given seed always produces the same cases and the same verdicts.
"""

import logging
import os
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from dotenv import load_dotenv

from controller import ControllerConfig, LoopState, Mode, control_input, control_input_local, loop_derivative
from graph_core import build_matrices, random_connected_graph
from sim_engine import rk4_advance
from spectral import (
    check_hurwitz_Atilde,
    classify_error_system,
    companion_error_matrix,
    error_system_matrix,
    inertia_of_KQ,
    lyapunov_certificate,
    polynomial_inertia_prediction,
)

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
VERIFY_SEED = int(os.getenv('VERIFY_SEED', '7'))

GRAPH_CASES = 50
LOCALITY_CASES = 100
LOCALITY_TOL = 1e-12
GAIN_RANGE = (0.1, 100.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''


def _random_case(rng, n_min=2, n_max=10):
    n = int(rng.integers(n_min, n_max + 1))
    g = random_connected_graph(n, rng)
    return g, build_matrices(g)


def check_graph_identities(rng):
    worst = 0.0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        ones = np.ones(g.n)
        worst = max(
            worst,
            float(np.max(np.abs(gm.laplacian @ ones))),
            float(np.max(np.abs(gm.localized_projection - gm.scaling @ gm.laplacian))),
            float(np.max(np.abs(gm.local_average @ ones - ones))),
            float(np.max(np.abs(gm.laplacian - gm.laplacian.T))),
            float(np.max(np.abs(np.eye(g.n) + gm.adjacency - (np.linalg.inv(gm.scaling) - gm.laplacian)))),
        )
    return CheckResult('graph identities (L1 = 0, Q = SL, Qbar 1 = 1, I + A = S^-1 - L)', worst < 1e-12, f'max residual {worst:.2e}')


def check_projectors(rng):
    worst = 0.0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        n = g.n
        centering = np.eye(n) - np.ones((n, n)) / n
        oracle = gm.laplacian @ scipy.linalg.pinv(gm.laplacian)
        worst = max(
            worst,
            float(np.max(np.abs(gm.proj_col @ gm.proj_col - gm.proj_col))),
            float(np.max(np.abs(gm.proj_col + gm.proj_null - np.eye(n)))),
            float(np.max(np.abs(gm.proj_null @ gm.proj_null - gm.proj_null))),
            float(np.max(np.abs(gm.proj_col @ gm.proj_null))),
            float(np.max(np.abs(gm.proj_col @ gm.laplacian - gm.laplacian))),
            float(np.max(np.abs(gm.laplacian @ gm.proj_col - gm.laplacian))),
            float(np.max(np.abs(gm.proj_col - centering))),
            float(np.max(np.abs(gm.proj_col - oracle))),
        )
    return CheckResult('projectors (idempotent, complementary, pinv oracle)', worst < 1e-9, f'max residual {worst:.2e}')


def check_kq_inertia(rng):
    failures = 0
    worst_gap = 0.0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        k = rng.uniform(*GAIN_RANGE, g.n)
        report = inertia_of_KQ(k, gm)
        if report.counts() != (g.n - 1, 0, 1):
            failures += 1
        direct = np.sort(scipy.linalg.eigvals(k[:, None] * gm.localized_projection).real)
        similar = np.sort(np.real(report.eigenvalues))
        worst_gap = max(worst_gap, float(np.max(np.abs(direct - similar))) / max(1.0, float(np.max(np.abs(direct)))))
    passed = failures == 0 and worst_gap < 1e-8
    return CheckResult('inertia of KQ is (n-1, 0, 1)', passed,
                       f'{failures} wrong counts, similarity gap {worst_gap:.2e}')


def check_error_inertia(rng):
    failures = 0
    worst_null = 0.0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        n = g.n
        k = rng.uniform(*GAIN_RANGE, n)
        m = float(rng.uniform(0.5, 10.0))
        mat = error_system_matrix(gm, k, m)
        report = classify_error_system(mat)
        predicted = polynomial_inertia_prediction(gm, k, m)
        if report.counts() != (0, 2 * n - 1, 1) or predicted != report.counts():
            failures += 1
        null = np.concatenate([np.ones(n), -m * np.ones(n)])
        worst_null = max(worst_null, float(np.max(np.abs(mat @ null))))
    passed = failures == 0 and worst_null < 1e-10
    return CheckResult('error matrix has one zero and 2n-1 stable eigenvalues', passed,
                       f'{failures} wrong counts, null residual {worst_null:.2e}')


def check_constant_point_inertia(rng):
    failures = 0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        n = g.n
        k = rng.uniform(*GAIN_RANGE, n)
        m = float(rng.uniform(0.5, 10.0))
        q = float(10.0 ** rng.uniform(-3, 0))
        report = classify_error_system(error_system_matrix(gm, k, m, q))
        if report.counts() != (0, 2 * n, 0):
            failures += 1
    return CheckResult('error matrix with q > 0 is Hurwitz', failures == 0, f'{failures} failures')


def check_companion_spectrum(rng):
    worst = 0.0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        k = rng.uniform(*GAIN_RANGE, g.n)
        m = float(rng.uniform(0.5, 10.0))
        a = scipy.linalg.eigvals(error_system_matrix(gm, k, m))
        b = scipy.linalg.eigvals(companion_error_matrix(gm, k, m))
        # nearest-neighbour match in both directions
        gaps = np.abs(a[:, None] - b[None, :])
        gap = max(float(np.max(gaps.min(axis=1))), float(np.max(gaps.min(axis=0))))
        worst = max(worst, gap / max(1.0, float(np.max(np.abs(a)))))
    return CheckResult('companion form shares the error spectrum', worst < 1e-6, f'max gap {worst:.2e}')


def check_atilde_hurwitz(rng):
    failures = 0
    for _ in range(GRAPH_CASES):
        g, gm = _random_case(rng)
        m = float(rng.uniform(0.01, 10.0))
        report = check_hurwitz_Atilde(gm, m)
        # spectrum of A~ is -spec(L) - m
        bounded = np.max(np.real(report.eigenvalues)) <= -m + 1e-10
        if not (bounded and report.is_hurwitz and lyapunov_certificate(gm, m) > 0):
            failures += 1
    return CheckResult('A~ = -L - mI has Re lambda <= -m and a Lyapunov certificate',
                       failures == 0, f'{failures} failures')


def check_locality(rng):
    modes = list(Mode)
    worst = 0.0
    for _ in range(LOCALITY_CASES):
        g, gm = _random_case(rng)
        n = g.n
        mode = modes[int(rng.integers(len(modes)))]
        zeta = rng.normal(size=n) if rng.random() < 0.5 else None
        cfg = ControllerConfig.from_gains(
            mode, n, rng.uniform(*GAIN_RANGE, n), float(rng.uniform(0.5, 10.0)),
            q=float(rng.uniform(0.001, 1.0)) if mode is Mode.CONSTANT_POINT else 0.0,
            kappa=float(rng.uniform(0.001, 1.0)) if mode is Mode.DAMPED else 0.0,
            zeta=zeta,
        )
        s = LoopState(rng.normal(size=n), rng.normal(size=n), rng.normal(size=n))
        u = control_input(cfg, gm, s)
        deriv = loop_derivative(cfg, gm, s, np.zeros(n))
        for i in range(n):
            u_i, what_dot_i, xhat_dot_i = control_input_local(cfg, g, s, i)
            scale = max(1.0, abs(u[i]), abs(deriv.what[i]), abs(deriv.xhat[i]))
            worst = max(worst, abs(u_i - u[i]) / scale, abs(what_dot_i - deriv.what[i]) / scale,
                        abs(xhat_dot_i - deriv.xhat[i]) / scale)
    return CheckResult('per-agent laws match the matrix form', worst < LOCALITY_TOL, f'max gap {worst:.2e}')


def check_rk4_order(rng):
    f = lambda t, y: -y
    one_step = float(rk4_advance(f, 0.0, np.array([1.0]), 0.1)[0])

    def global_error(h):
        y = np.array([1.0])
        steps = int(round(1.0 / h))
        for k in range(steps):
            y = rk4_advance(f, k * h, y, h)
        return abs(float(y[0]) - np.exp(-1.0))

    ratio = global_error(0.1) / global_error(0.05)
    passed = abs(one_step - np.exp(-0.1)) < 1e-7 and 12.0 <= ratio <= 20.0
    return CheckResult('RK4 local accuracy and fourth-order convergence', passed,
                       f'one step {one_step:.9f}, halving ratio {ratio:.2f}')


CHECKS = (
    check_graph_identities,
    check_projectors,
    check_kq_inertia,
    check_error_inertia,
    check_constant_point_inertia,
    check_companion_spectrum,
    check_atilde_hurwitz,
    check_locality,
    check_rk4_order,
)


def run_suite(seed=None):
    """Run every check with one Generator seeded by `seed` (default VERIFY_SEED)."""
    seed = VERIFY_SEED if seed is None else int(seed)
    rng = np.random.default_rng(seed)
    results = []
    for check in CHECKS:
        result = check(rng)
        logger.debug("%s: %s (%s)", result.name, result.passed, result.detail)
        results.append(result)
    return results


def print_results(results, seed):
    print("\n" + "=" * 60)
    print(f"PROPERTY SUITE (seed {seed})")
    print("=" * 60)
    for r in results:
        mark = "✓" if r.passed else "✗"
        print(f"  {mark} {r.name}: {r.detail}")
    passed = sum(r.passed for r in results)
    print("=" * 60)
    print(f"{passed}/{len(results)} checks passed")
