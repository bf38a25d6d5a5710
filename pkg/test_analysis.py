#!/usr/bin/env python3
"""Convergence checks on the built-in example runs."""

import json
from dataclasses import replace

import numpy as np
import pytest

from analysis import (
    boundedness_check,
    consensus_limit_quadrature,
    convergence_report,
    dissipation_check,
    error_norm_series,
    format_report,
    formation_check,
    lyapunov_series,
    null_mode_residuals,
    settled,
    ultimate_bound_compliance,
)
from controller import ControllerConfig, Mode
from errors import NotConstantDisturbanceError
from scenarios import builtin_example, run_scenario
from sim_engine import DisturbanceSignal, Trajectory, simulate, spread

X0 = np.array([-0.4, -0.2, 0.0, 0.4, 0.6, 0.8])


def window_spread(traj, start):
    i = traj.index_at(start)
    return float(np.max(traj.x[i:].max(axis=1) - traj.x[i:].min(axis=1)))


# Example 1: constant disturbance

def test_example1_reject_consensus(example1_reject):
    report = example1_reject.report
    assert report.spread_final < 1e-3
    assert report.limit_residual < 1e-3
    assert 0 < report.u_sup < 100


def test_example1_residual_structure(example1_reject):
    traj = example1_reject.trajectory
    eps, residual, stdev = null_mode_residuals(traj, example1_reject.scenario.disturbance, 5.0)
    assert residual < 1e-3
    assert stdev < 1e-4
    # the common estimate offset is -m * eps; sum(w) = 1.5 leaves mean(w~) at -0.25
    w_err = traj.what[-1] - traj.w_true[-1]
    assert np.mean(w_err) == pytest.approx(-0.25, abs=1e-6)
    assert eps == pytest.approx(0.05, abs=1e-4)
    assert np.std(w_err) < 1e-3


def test_example1_quadrature_limit(example1_reject):
    traj = example1_reject.trajectory
    limit = consensus_limit_quadrature(traj, example1_reject.scenario.disturbance)
    assert abs(np.mean(traj.x[-1]) - limit) < 1e-3


def test_example1_baseline_keeps_disagreement(example1_baseline):
    assert example1_baseline.report.spread_final > 0.1


def test_example1_constant_point_recovers_disturbance(example1_constant_point):
    report = example1_constant_point.report
    assert example1_constant_point.trajectory.horizon == pytest.approx(40.0)
    assert report.settled
    assert report.what_error < 0.05
    assert report.limit_residual < 1e-3


# Example 2: sinusoid bank

def test_example2_damped_stays_bounded(example2_damped, example2_baseline):
    traj = example2_damped.trajectory
    assert np.all(np.isfinite(traj.x))
    damped = window_spread(traj, 30.0)
    assert damped < 0.25
    assert damped <= 0.3 * window_spread(example2_baseline.trajectory, 30.0)
    u_sup, per_channel = boundedness_check(traj)
    assert 0 < u_sup < 100
    assert per_channel.shape == (6,)


def test_example2_default_gains_are_reported_infeasible(example2_damped):
    assert example2_damped.bound is not None
    assert not example2_damped.bound.assumption_feasible
    assert example2_damped.report.ebound_violations is None


def test_damped_feasible_gains_respect_ultimate_bound():
    base = builtin_example(2)
    s = replace(base, controller=replace(base.controller, kappa=2.0),
                sim=replace(base.sim, T=40.0))
    result = run_scenario(s)
    bound = result.bound
    assert bound.assumption_feasible
    k = result.scenario.controller.k
    norms = error_norm_series(result.trajectory, s.disturbance, k)
    late = norms[result.trajectory.index_at(30.0):]
    assert np.all(late < bound.epsilon_bound)
    assert ultimate_bound_compliance(result.trajectory, s.disturbance, k, bound, t_from=30.0) == 0
    assert dissipation_check(result.trajectory, s.disturbance, k, bound) >= 0.99
    assert result.report.dissipation_fraction >= 0.99


# Example 3: formation

def test_example3_formation(example3_formation):
    zeta = example3_formation.scenario.controller.zeta
    assert formation_check(example3_formation.trajectory, zeta) < 1e-3
    assert example3_formation.report.formation_deviation < 1e-3
    assert example3_formation.report.limit_residual < 1e-3


def test_example3_baseline_breaks_formation(example3_baseline):
    assert example3_baseline.report.formation_deviation > 0.1


# Small direct cases

def test_quadrature_without_disturbance(c6_matrices):
    cfg = ControllerConfig.from_gains(Mode.REJECT, 6, 100.0, 5.0)
    traj = simulate(cfg, c6_matrices, DisturbanceSignal.zero(6), X0, T=1.0)
    assert consensus_limit_quadrature(traj, DisturbanceSignal.zero(6)) == pytest.approx(np.mean(X0), abs=1e-12)


def test_quadrature_needs_constant_disturbance(example2_damped):
    with pytest.raises(NotConstantDisturbanceError):
        consensus_limit_quadrature(example2_damped.trajectory, example2_damped.scenario.disturbance)


def test_formation_with_zero_target_is_spread(example1_reject):
    traj = example1_reject.trajectory
    assert formation_check(traj, np.zeros(6)) == pytest.approx(spread(traj.x[-1]))


def test_error_norm_weighting():
    times = np.array([0.0, 1.0])
    x = np.array([[1.0, 2.0], [1.0, 2.0]])
    w = np.array([[3.0, 4.0], [3.0, 4.0]])
    exact = Trajectory(times, x, x.copy(), w.copy(), np.zeros((2, 2)), w.copy())
    np.testing.assert_array_equal(error_norm_series(exact, None, [1.0, 1.0]), [0.0, 0.0])

    offset = Trajectory(times, x, np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), w)
    np.testing.assert_allclose(error_norm_series(offset, None, 1.0), np.sqrt(1 + 4 + 9 + 16))
    np.testing.assert_allclose(error_norm_series(offset, None, [9.0, 16.0]), np.sqrt(1 + 4 + 1 + 1))


def test_baseline_from_consensus_has_no_input(c6_matrices):
    cfg = ControllerConfig.from_gains(Mode.BASELINE, 6, 1.0, 1.0)
    traj = simulate(cfg, c6_matrices, DisturbanceSignal.zero(6), np.full(6, 0.5), T=1.0)
    u_sup, _ = boundedness_check(traj)
    assert u_sup == 0.0
    assert settled(traj)


def test_report_formats(example1_reject):
    report = example1_reject.report
    text = format_report(report, title='example1')
    assert 'EXAMPLE1' in text
    assert 'Spread x(T)' in text
    payload = json.loads(json.dumps(report.to_dict()))
    assert payload['mode'] == 'Reject'
    assert payload['formation_deviation'] is None


def test_report_for_zero_target_formation(c6_matrices):
    cfg = ControllerConfig.from_gains(Mode.REJECT, 6, 100.0, 5.0, zeta=[0.0] * 6)
    d = DisturbanceSignal.constant([1.0] * 6)
    traj = simulate(cfg, c6_matrices, d, X0, T=2.0)
    report = convergence_report(traj, cfg, d)
    assert report.formation_deviation == pytest.approx(report.spread_final)


def test_lyapunov_function_settles_on_null_mode(example1_reject):
    traj = example1_reject.trajectory
    v = lyapunov_series(traj, example1_reject.scenario.disturbance, 100.0)
    # settles on the null mode: x~ = 0.05, w~ = -0.25 on every agent
    assert v[-1] == pytest.approx(6 * 0.05 ** 2 + 6 * 0.25 ** 2 / 100, rel=1e-3)
    assert v[-1] < v[0]
