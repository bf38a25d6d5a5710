#!/usr/bin/env python3
"""
Closed-loop vector fields for the disturbance-rejecting consensus controller.

Four modes share one structure:
    u      = -L x - w^  (+ L zeta for formations; Baseline drops -w^)
    x^'    = -L x^ + m (x - x^)  (+ L zeta)
    w^'    = K Q (x - x^)                    Reject
             K (Q + q I)(x - x^)             ConstantPoint
             K [Q (x - x^) - kappa w^]       Damped
             0                               Baseline

Every law is available in matrix form and in the per-agent form an agent
can evaluate from its own values and relative neighbour values.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property

import numpy as np

from errors import (
    DimensionMismatchError,
    IndexOutOfRangeError,
    NonPositiveGainError,
    NotLocalizableError,
    ValidationError,
)

DEFAULT_Q = 0.025
DEFAULT_KAPPA = 0.0025


class Mode(str, Enum):
    BASELINE = 'Baseline'
    REJECT = 'Reject'
    CONSTANT_POINT = 'ConstantPoint'
    DAMPED = 'Damped'


class Projection(str, Enum):
    LOCALIZED = 'localized'
    EXACT = 'exact'


VARIANTS = {
    'baseline': Mode.BASELINE,
    'reject': Mode.REJECT,
    'constant-point': Mode.CONSTANT_POINT,
    'damped': Mode.DAMPED,
}


def _as_tuple(values, name):
    try:
        return tuple(float(v) for v in values)
    except TypeError:
        raise ValidationError(name, "expected a list of numbers")


@dataclass(frozen=True)
class ControllerConfig:
    """Gains and mode of the controller; vectors are stored as float tuples."""
    mode: Mode
    k: tuple
    m: float
    q: float = 0.0
    kappa: float = 0.0
    zeta: tuple = None
    projection: Projection = Projection.LOCALIZED

    def __post_init__(self):
        object.__setattr__(self, 'mode', Mode(self.mode))
        object.__setattr__(self, 'projection', Projection(self.projection))
        object.__setattr__(self, 'k', _as_tuple(self.k, 'k'))
        if self.zeta is not None:
            object.__setattr__(self, 'zeta', _as_tuple(self.zeta, 'zeta'))

        for i, value in enumerate(self.k):
            if not value > 0:
                raise NonPositiveGainError(i, value)
        if not self.m > 0:
            raise ValidationError('m', f"predictor gain must be positive, got {self.m}")
        if self.q < 0:
            raise ValidationError('q', f"must be >= 0, got {self.q}")
        if self.kappa < 0:
            raise ValidationError('kappa', f"must be >= 0, got {self.kappa}")
        if self.zeta is not None and len(self.zeta) != len(self.k):
            raise DimensionMismatchError('zeta', len(self.k), len(self.zeta))

        if self.mode in (Mode.BASELINE, Mode.REJECT):
            if self.q != 0 or self.kappa != 0:
                raise ValidationError('mode', f"{self.mode.value} requires q = 0 and kappa = 0")
        elif self.mode is Mode.CONSTANT_POINT:
            if not self.q > 0:
                raise ValidationError('q', "ConstantPoint requires q > 0")
            if self.kappa != 0:
                raise ValidationError('kappa', "ConstantPoint requires kappa = 0")
        elif self.mode is Mode.DAMPED:
            if not self.kappa > 0:
                raise ValidationError('kappa', "Damped requires kappa > 0")
            if self.q != 0:
                raise ValidationError('q', "Damped requires q = 0")

    @classmethod
    def from_gains(cls, mode, n, k, m, q=0.0, kappa=0.0, zeta=None, projection=Projection.LOCALIZED):
        """Build a config, broadcasting a scalar k to all n agents."""
        if np.isscalar(k):
            k = (float(k),) * n
        elif len(k) != n:
            raise DimensionMismatchError('k', n, len(k))
        return cls(mode=mode, k=k, m=float(m), q=float(q), kappa=float(kappa),
                   zeta=zeta, projection=projection)

    @property
    def n(self):
        return len(self.k)

    @cached_property
    def gain(self):
        return np.array(self.k)

    @cached_property
    def target(self):
        return None if self.zeta is None else np.array(self.zeta)

    def with_variant(self, variant):
        """Sibling config in another mode, keeping gains and formation target."""
        mode = VARIANTS[variant] if variant in VARIANTS else Mode(variant)
        q = kappa = 0.0
        if mode is Mode.CONSTANT_POINT:
            q = self.q if self.q > 0 else DEFAULT_Q
        elif mode is Mode.DAMPED:
            kappa = self.kappa if self.kappa > 0 else DEFAULT_KAPPA
        return replace(self, mode=mode, q=q, kappa=kappa)


@dataclass(frozen=True, eq=False)
class LoopState:
    x: np.ndarray
    xhat: np.ndarray
    what: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, y):
        n = y.shape[0] // 3
        return cls(y[:n], y[n:2 * n], y[2 * n:])

    def as_vector(self):
        return np.concatenate([self.x, self.xhat, self.what])

    def is_finite(self):
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.xhat))
                    and np.all(np.isfinite(self.what)))


def _check_dims(cfg, gm, s, w_now=None):
    n = gm.n
    if cfg.n != n:
        raise DimensionMismatchError('controller gains', n, cfg.n)
    for name, vec in (('x', s.x), ('xhat', s.xhat), ('what', s.what)):
        if vec.shape != (n,):
            raise DimensionMismatchError(name, n, vec.shape[0] if vec.ndim else 0)
    if w_now is not None and np.shape(w_now) != (n,):
        raise DimensionMismatchError('disturbance', n, np.size(w_now))


def _projection(cfg, gm):
    if cfg.projection is Projection.EXACT:
        return gm.proj_col
    return gm.localized_projection


def _formation_input(cfg, gm):
    if cfg.target is None:
        return 0.0
    return gm.laplacian @ cfg.target


def control_input(cfg, gm, s):
    """u = -L x - w^ (+ L zeta); Baseline leaves out -w^."""
    _check_dims(cfg, gm, s)
    u = -(gm.laplacian @ s.x)
    if cfg.mode is not Mode.BASELINE:
        u = u - s.what
    return u + _formation_input(cfg, gm)


def loop_derivative(cfg, gm, s, w_now):
    """Time derivative of (x, x^, w^) given the true disturbance value."""
    _check_dims(cfg, gm, s, w_now)
    u_f = _formation_input(cfg, gm)
    x_dot = control_input(cfg, gm, s) + w_now
    x_err = s.x - s.xhat
    xhat_dot = -(gm.laplacian @ s.xhat) + cfg.m * x_err + u_f

    if cfg.mode is Mode.BASELINE:
        what_dot = np.zeros(gm.n)
    else:
        projected = _projection(cfg, gm) @ x_err
        if cfg.mode is Mode.CONSTANT_POINT:
            projected = projected + cfg.q * x_err
        elif cfg.mode is Mode.DAMPED:
            projected = projected - cfg.kappa * s.what
        what_dot = cfg.gain * projected

    return LoopState(x_dot, xhat_dot, what_dot)


@dataclass(frozen=True)
class NeighborView:
    """
    What agent i may read: its own values and differences to its neighbours.

    Nothing in here indexes another agent's absolute state.
    """
    agent: int
    x: float
    xhat: float
    what: float
    k: float
    zeta: float = None
    dx: tuple = field(default=())
    dxhat: tuple = field(default=())
    dzeta: tuple = field(default=())

    @property
    def degree(self):
        return len(self.dx)

    @classmethod
    def for_agent(cls, g, s, cfg, i):
        if not 0 <= i < g.n:
            raise IndexOutOfRangeError(i, g.n)
        nbrs = g.neighbors(i)
        x, xhat = s.x, s.xhat
        zeta = cfg.target
        return cls(
            agent=i,
            x=float(x[i]),
            xhat=float(xhat[i]),
            what=float(s.what[i]),
            k=cfg.k[i],
            zeta=None if zeta is None else float(zeta[i]),
            dx=tuple(float(x[i] - x[j]) for j in nbrs),
            dxhat=tuple(float(xhat[i] - xhat[j]) for j in nbrs),
            dzeta=() if zeta is None else tuple(float(zeta[i] - zeta[j]) for j in nbrs),
        )


@dataclass(frozen=True)
class LocalOutput:
    u: float
    what_dot: float
    xhat_dot: float


def local_law(cfg, view):
    """Per-agent controller evaluated from a NeighborView only."""
    if cfg.projection is Projection.EXACT:
        raise NotLocalizableError("the exact projection needs every agent's state; use 'localized'")

    sum_dx = sum(view.dx)
    sum_dxhat = sum(view.dxhat)
    sum_dzeta = sum(view.dzeta)
    x_err = view.x - view.xhat
    # sum over neighbours of (x~_i - x~_j)
    sum_dxerr = sum(a - b for a, b in zip(view.dx, view.dxhat))

    u = -sum_dx + sum_dzeta
    if cfg.mode is not Mode.BASELINE:
        u -= view.what

    xhat_dot = -sum_dxhat + cfg.m * x_err + sum_dzeta

    ks = view.k / (view.degree + 1)
    if cfg.mode is Mode.BASELINE:
        what_dot = 0.0
    else:
        # [KQ x~]_i = [KS]_ii * sum_j (x~_i - x~_j)
        what_dot = ks * sum_dxerr
        if cfg.mode is Mode.CONSTANT_POINT:
            what_dot += cfg.q * view.k * x_err
        elif cfg.mode is Mode.DAMPED:
            what_dot -= cfg.kappa * view.k * view.what

    return LocalOutput(u=u, what_dot=what_dot, xhat_dot=xhat_dot)


def control_input_local(cfg, g, s, agent):
    """(u_i, w^'_i, x^'_i) for one agent, through its neighbour view."""
    if cfg.n != g.n:
        raise DimensionMismatchError('controller gains', g.n, cfg.n)
    view = NeighborView.for_agent(g, s, cfg, agent)
    out = local_law(cfg, view)
    return out.u, out.what_dot, out.xhat_dot
