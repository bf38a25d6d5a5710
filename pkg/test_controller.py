#!/usr/bin/env python3
"""Tests for controller configs and the matrix / per-agent control laws."""

import numpy as np
import pytest

from controller import (
    ControllerConfig,
    LoopState,
    Mode,
    NeighborView,
    Projection,
    control_input,
    control_input_local,
    loop_derivative,
)
from errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NonPositiveGainError,
    NotLocalizableError,
    ValidationError,
)

ZETA = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)


def config(mode, n=2, k=1.0, m=1.0, **kw):
    return ControllerConfig.from_gains(mode, n, k, m, **kw)


def test_mode_invariants():
    with pytest.raises(ValidationError):
        config(Mode.DAMPED)
    with pytest.raises(ValidationError):
        config(Mode.REJECT, q=0.1)
    with pytest.raises(ValidationError):
        config(Mode.CONSTANT_POINT)
    with pytest.raises(ValidationError):
        config(Mode.CONSTANT_POINT, q=0.1, kappa=0.1)
    with pytest.raises(NonPositiveGainError):
        config(Mode.REJECT, k=[1.0, -1.0])
    with pytest.raises(DimensionMismatchError):
        config(Mode.REJECT, zeta=[0.0, 1.0, 2.0])
    with pytest.raises(ValidationError):
        config(Mode.REJECT, m=0.0)
    with pytest.raises(ValueError):
        config('Aggressive')


def test_from_gains_broadcasts_scalar():
    cfg = config(Mode.REJECT, n=6, k=100.0)
    assert cfg.k == (100.0,) * 6
    assert cfg.mode is Mode.REJECT
    assert ControllerConfig.from_gains('Reject', 6, 100, 5) == ControllerConfig(
        mode=Mode.REJECT, k=(100.0,) * 6, m=5.0)


def test_with_variant_defaults():
    base = config(Mode.REJECT, n=6, k=100.0, m=5.0, zeta=ZETA)
    cp = base.with_variant('constant-point')
    assert cp.mode is Mode.CONSTANT_POINT and cp.q == 0.025 and cp.kappa == 0.0
    damped = base.with_variant('damped')
    assert damped.mode is Mode.DAMPED and damped.kappa == 0.0025 and damped.q == 0.0
    baseline = cp.with_variant('baseline')
    assert baseline.mode is Mode.BASELINE and baseline.q == 0.0
    assert baseline.zeta == ZETA


def test_loop_derivative_reject_on_p2(p2_matrices):
    cfg = config(Mode.REJECT)
    s = LoopState(np.array([1.0, 0.0]), np.zeros(2), np.zeros(2))
    deriv = loop_derivative(cfg, p2_matrices, s, np.zeros(2))
    np.testing.assert_allclose(deriv.x, [-1.0, 1.0])
    np.testing.assert_allclose(deriv.xhat, [1.0, 0.0])
    np.testing.assert_allclose(deriv.what, [0.5, -0.5])


def test_loop_derivative_variants_on_p2(p2_matrices):
    s = LoopState(np.array([1.0, 0.0]), np.zeros(2), np.array([2.0, 0.0]))
    cp = loop_derivative(config(Mode.CONSTANT_POINT, k=2.0, q=0.5), p2_matrices, s, np.zeros(2))
    np.testing.assert_allclose(cp.what, 2.0 * np.array([0.5 + 0.5, -0.5]))
    damped = loop_derivative(config(Mode.DAMPED, k=2.0, kappa=0.25), p2_matrices, s, np.zeros(2))
    np.testing.assert_allclose(damped.what, 2.0 * np.array([0.5 - 0.5, -0.5]))
    baseline = loop_derivative(config(Mode.BASELINE), p2_matrices, s, np.array([0.3, 0.3]))
    np.testing.assert_array_equal(baseline.what, [0.0, 0.0])
    np.testing.assert_allclose(baseline.x, [-1.0 + 0.3, 1.0 + 0.3])


def test_baseline_ignores_estimate(c6_matrices):
    s = LoopState(np.zeros(6), np.zeros(6), np.ones(6))
    np.testing.assert_array_equal(control_input(config(Mode.BASELINE, n=6), c6_matrices, s), np.zeros(6))
    np.testing.assert_array_equal(control_input(config(Mode.REJECT, n=6), c6_matrices, s), -np.ones(6))


def test_formation_input_vanishes_on_target(c6_matrices):
    cfg = config(Mode.CONSTANT_POINT, n=6, k=100.0, m=5.0, q=0.025, zeta=ZETA)
    s = LoopState(np.array(ZETA), np.zeros(6), np.zeros(6))
    np.testing.assert_allclose(control_input(cfg, c6_matrices, s), 0.0, atol=1e-15)
    shifted = LoopState(np.array(ZETA) + 3.0, np.zeros(6), np.zeros(6))
    np.testing.assert_allclose(control_input(cfg, c6_matrices, shifted), 0.0, atol=1e-14)


def test_exact_projection_uses_centering(c6_matrices):
    cfg = config(Mode.REJECT, n=6, projection=Projection.EXACT)
    x_err = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    s = LoopState(x_err, np.zeros(6), np.zeros(6))
    deriv = loop_derivative(cfg, c6_matrices, s, np.zeros(6))
    np.testing.assert_allclose(deriv.what, x_err - 1 / 6, atol=1e-12)


def test_dimension_checks(c6_matrices):
    cfg = config(Mode.REJECT, n=6)
    with pytest.raises(DimensionMismatchError):
        loop_derivative(cfg, c6_matrices, LoopState.zeros(6), np.zeros(5))
    with pytest.raises(DimensionMismatchError):
        control_input(config(Mode.REJECT, n=5), c6_matrices, LoopState.zeros(6))


def test_local_law_matches_matrix_form(c6, c6_matrices):
    rng = np.random.default_rng(3)
    for mode, extra in [(Mode.BASELINE, {}), (Mode.REJECT, {}), (Mode.CONSTANT_POINT, {'q': 0.025}),
                        (Mode.DAMPED, {'kappa': 0.3})]:
        cfg = config(mode, n=6, k=rng.uniform(1, 10, 6), m=5.0, zeta=ZETA, **extra)
        s = LoopState(rng.normal(size=6), rng.normal(size=6), rng.normal(size=6))
        u = control_input(cfg, c6_matrices, s)
        deriv = loop_derivative(cfg, c6_matrices, s, np.zeros(6))
        for i in range(6):
            u_i, what_dot_i, xhat_dot_i = control_input_local(cfg, c6, s, i)
            assert u_i == pytest.approx(u[i], abs=1e-12)
            assert what_dot_i == pytest.approx(deriv.what[i], abs=1e-12)
            assert xhat_dot_i == pytest.approx(deriv.xhat[i], abs=1e-12)


def test_neighbor_view_holds_differences_only(c6):
    cfg = config(Mode.REJECT, n=6)
    s = LoopState(np.arange(6, dtype=float), np.zeros(6), np.zeros(6))
    view = NeighborView.for_agent(c6, s, cfg, 0)
    assert view.x == 0.0
    assert view.dx == (-1.0, -5.0)
    assert view.degree == 2
    with pytest.raises(IndexOutOfRangeError):
        NeighborView.for_agent(c6, s, cfg, 6)


def test_exact_projection_is_not_localizable(c6):
    cfg = config(Mode.REJECT, n=6, projection='exact')
    with pytest.raises(NotLocalizableError):
        control_input_local(cfg, c6, LoopState.zeros(6), 0)


def test_reject_estimator_keeps_weighted_sum(c6_matrices):
    rng = np.random.default_rng(3)
    k = rng.uniform(0.1, 100.0, 6)
    cfg = ControllerConfig.from_gains(Mode.REJECT, 6, k, 5.0)
    scaling = np.diag(c6_matrices.scaling)
    for _ in range(10):
        s = LoopState(rng.normal(size=6), rng.normal(size=6), rng.normal(size=6))
        what_dot = loop_derivative(cfg, c6_matrices, s, rng.normal(size=6)).what
        weighted = what_dot / (k * scaling)
        assert abs(weighted.sum()) <= 1e-12 * max(1.0, np.max(np.abs(weighted)))


@pytest.mark.parametrize('mode, extra', [
    (Mode.BASELINE, {}),
    (Mode.REJECT, {}),
    (Mode.CONSTANT_POINT, {'q': 0.025}),
    (Mode.DAMPED, {'kappa': 0.0025}),
])
@pytest.mark.parametrize('zeta', [None, ZETA])
def test_control_input_ignores_common_shift(c6_matrices, mode, extra, zeta):
    rng = np.random.default_rng(5)
    cfg = config(mode, n=6, k=100.0, m=5.0, zeta=zeta, **extra)
    s = LoopState(rng.normal(size=6), rng.normal(size=6), rng.normal(size=6))
    shifted = LoopState(s.x + 2.5, s.xhat, s.what)
    np.testing.assert_allclose(control_input(cfg, c6_matrices, shifted),
                               control_input(cfg, c6_matrices, s), atol=1e-12)
