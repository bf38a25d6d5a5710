#!/usr/bin/env python3
"""
Disturbance models and the fixed-step RK4 integrator for the closed loop.

simulate() integrates the stacked (x, x^, w^) system of dimension 3n with
the classical four-stage Runge-Kutta scheme and keeps every k-th sample.
Defaults for step, horizon and stride come from the environment (.env).
"""

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from controller import LoopState, control_input, loop_derivative
from errors import DimensionMismatchError, NonFiniteStateError, ValidationError

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
SIM_STEP = float(os.getenv('SIM_STEP', '0.001'))
SIM_HORIZON = float(os.getenv('SIM_HORIZON', '20'))
SAMPLE_EVERY = int(os.getenv('SAMPLE_EVERY', '10'))

DISTURBANCE_KINDS = ('zero', 'constant', 'sinusoid')


def _vector(values, name):
    arr = np.asarray(values, dtype=float).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(name, "entries must be finite")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class DisturbanceSignal:
    """
    Disturbance acting on the agents.

    kind 'zero' carries only n; 'constant' carries w; 'sinusoid' carries
    amplitude, omega (rad/s) and phase (rad) with
    w_i(t) = amplitude_i * sin(omega_i * t + phase_i).
    """
    kind: str
    n: int
    w: tuple = None
    amplitude: tuple = None
    omega: tuple = None
    phase: tuple = None

    @classmethod
    def zero(cls, n):
        return cls(kind='zero', n=int(n))

    @classmethod
    def constant(cls, w):
        w = _vector(w, 'w')
        return cls(kind='constant', n=len(w), w=w)

    @classmethod
    def sinusoid_bank(cls, amplitude, omega, phase, degrees=False):
        amplitude = _vector(amplitude, 'amplitude')
        omega = _vector(omega, 'omega')
        phase = np.deg2rad(phase) if degrees else phase
        phase = _vector(phase, 'phase')
        n = len(amplitude)
        for name, vec in (('omega', omega), ('phase', phase)):
            if len(vec) != n:
                raise DimensionMismatchError(name, n, len(vec))
        return cls(kind='sinusoid', n=n, amplitude=amplitude, omega=omega, phase=phase)

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValidationError('type', f"unknown disturbance type '{self.kind}'")

    @property
    def is_constant(self):
        return self.kind in ('zero', 'constant')

    def bounds(self):
        """(w*, w_dot*): bounds on the 2-norms of w(t) and its derivative."""
        if self.kind == 'zero':
            return 0.0, 0.0
        if self.kind == 'constant':
            return float(np.linalg.norm(self.w)), 0.0
        a = np.array(self.amplitude)
        return float(np.linalg.norm(a)), float(np.linalg.norm(a * np.array(self.omega)))


def evaluate_disturbance(d, t):
    if t < 0:
        raise ValidationError('t', f"time must be >= 0, got {t}")
    if d.kind == 'zero':
        return np.zeros(d.n)
    if d.kind == 'constant':
        return np.array(d.w)
    return np.array(d.amplitude) * np.sin(np.array(d.omega) * t + np.array(d.phase))


def rk4_advance(f, t, y, h):
    """One classical Runge-Kutta step of y' = f(t, y)."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _vector_field(cfg, gm, d):
    if d.is_constant:
        w_const = evaluate_disturbance(d, 0.0)
        disturbance = lambda t: w_const
    else:
        disturbance = lambda t: evaluate_disturbance(d, t)

    def f(t, y):
        return loop_derivative(cfg, gm, LoopState.from_vector(y), disturbance(t)).as_vector()

    return f


def rk4_step(cfg, gm, s, d, t, h):
    if not h > 0:
        raise ValidationError('h', f"step must be positive, got {h}")
    y = rk4_advance(_vector_field(cfg, gm, d), t, s.as_vector(), h)
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError(t + h)
    return LoopState.from_vector(y)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Retained samples; every array has one row per sample time."""
    times: np.ndarray
    x: np.ndarray
    xhat: np.ndarray
    what: np.ndarray
    u: np.ndarray
    w_true: np.ndarray

    @property
    def n(self):
        return self.x.shape[1]

    @property
    def horizon(self):
        return float(self.times[-1])

    def state_at(self, index):
        return LoopState(self.x[index], self.xhat[index], self.what[index])

    def index_at(self, t):
        """First sample index with time >= t."""
        return int(np.searchsorted(self.times, t - 1e-12))

    def to_frame(self):
        n = self.n
        columns = {'t': self.times}
        for prefix, block in (('x', self.x), ('xhat', self.xhat), ('what', self.what),
                              ('u', self.u), ('w', self.w_true)):
            for i in range(n):
                columns[f'{prefix}_{i + 1}'] = block[:, i]
        return pd.DataFrame(columns)

    @classmethod
    def from_frame(cls, df):
        n = sum(1 for c in df.columns if c.startswith('x_'))
        block = lambda prefix: df[[f'{prefix}_{i + 1}' for i in range(n)]].to_numpy(dtype=float)
        return cls(
            times=df['t'].to_numpy(dtype=float),
            x=block('x'),
            xhat=block('xhat'),
            what=block('what'),
            u=block('u'),
            w_true=block('w'),
        )


def spread(v):
    v = np.asarray(v, dtype=float)
    return float(np.max(v) - np.min(v))


def step_count(T, h):
    """Steps so the final time is >= T; exact multiples are not rounded up."""
    ratio = T / h
    nearest = round(ratio)
    if abs(ratio - nearest) < 1e-9:
        return max(int(nearest), 1)
    return int(math.ceil(ratio))


def _initial(vec, n, name):
    if vec is None:
        return np.zeros(n)
    arr = np.asarray(vec, dtype=float).reshape(-1)
    if arr.size != n:
        raise DimensionMismatchError(name, n, arr.size)
    return arr.copy()


def simulate(cfg, gm, d, x0, xhat0=None, what0=None, T=None, h=None, sample_every=None):
    """
    Integrate the closed loop from t = 0 to at least T.

    Samples are kept at step 0, every sample_every steps and at the last
    step; u is recomputed from the state at each kept sample.
    """
    T = SIM_HORIZON if T is None else float(T)
    h = SIM_STEP if h is None else float(h)
    sample_every = SAMPLE_EVERY if sample_every is None else int(sample_every)
    if not 0 < T < math.inf:
        raise ValidationError('T', f"horizon must be positive and finite, got {T}")
    if not 0 < h < math.inf:
        raise ValidationError('h', f"step must be positive and finite, got {h}")
    if sample_every < 1:
        raise ValidationError('sample_every', f"must be >= 1, got {sample_every}")

    n = gm.n
    if d.n != n:
        raise DimensionMismatchError('disturbance', n, d.n)
    state = LoopState(_initial(x0, n, 'x0'), _initial(xhat0, n, 'xhat0'), _initial(what0, n, 'what0'))
    if not state.is_finite():
        raise NonFiniteStateError(0.0)

    steps = step_count(T, h)
    f = _vector_field(cfg, gm, d)
    logger.debug("simulate: n=%d mode=%s steps=%d h=%g stride=%d",
                 n, cfg.mode.value, steps, h, sample_every)

    rows = {'times': [], 'x': [], 'xhat': [], 'what': [], 'u': [], 'w_true': []}

    def keep(k, s):
        t = k * h
        rows['times'].append(t)
        rows['x'].append(s.x.copy())
        rows['xhat'].append(s.xhat.copy())
        rows['what'].append(s.what.copy())
        rows['u'].append(control_input(cfg, gm, s))
        rows['w_true'].append(evaluate_disturbance(d, t))

    keep(0, state)
    y = state.as_vector()
    for k in range(steps):
        y = rk4_advance(f, k * h, y, h)
        if not np.all(np.isfinite(y)):
            raise NonFiniteStateError((k + 1) * h)
        if (k + 1) % sample_every == 0 or k + 1 == steps:
            keep(k + 1, LoopState.from_vector(y))

    return Trajectory(**{key: np.array(value) for key, value in rows.items()})
