#!/usr/bin/env python3
"""
Scenario files, built-in examples, batch runs and output files.

Scenario grammar (one statement per line, `#` starts a comment):

    name = "example1"
    [graph]        topology = "cycle" | "path" | "complete", n = 6
                   or edges = [[0, 1], [1, 2], ...], n = 3
    [controller]   mode, k (number or list), m, q, kappa, zeta, projection
    [disturbance]  type = "zero" | "constant" | "sinusoid"
                   w | amplitude, omega, phase_deg (degrees) or phase (rad)
    [init]         x0, xhat0, what0
    [sim]          T, h, sample_every
    [output]       csv, report

Values are JSON literals: numbers, "strings" and [lists].
"""

import concurrent.futures
import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd
from dotenv import load_dotenv

import sim_engine
from analysis import convergence_report, format_report
from controller import ControllerConfig, Mode
from errors import (
    NotConnectedError,
    ParseError,
    UnknownExampleError,
    ValidationError,
)
from graph_core import build_graph, build_matrices, graph_from_topology, is_connected
from sim_engine import DisturbanceSignal, Trajectory, simulate
from spectral import search_mu, ultimate_bound

load_dotenv()

logger = logging.getLogger(__name__)

# Configuration
OUTPUT_DIR = Path(os.getenv('OUTPUT_DIR', './data'))

SECTIONS = {
    '': {'name'},
    'graph': {'topology', 'n', 'edges'},
    'controller': {'mode', 'k', 'm', 'q', 'kappa', 'zeta', 'projection'},
    'disturbance': {'type', 'w', 'amplitude', 'omega', 'phase_deg', 'phase'},
    'init': {'x0', 'xhat0', 'what0'},
    'sim': {'T', 'h', 'sample_every'},
    'output': {'csv', 'report'},
}

_KEY = re.compile(r'^[A-Za-z_][A-Za-z0-9_]*$')

# Setup shared by the three built-in examples
EXAMPLE_X0 = (-0.4, -0.2, 0.0, 0.4, 0.6, 0.8)
EXAMPLE_W = (-4.75, -2.75, -0.75, 1.25, 3.25, 5.25)
EXAMPLE_OMEGA = (0.2, 0.4, 0.6, 0.8, 1.0, 1.2)
EXAMPLE_PHASE_DEG = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0)
EXAMPLE_ZETA = (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)
EXAMPLE_K = 100.0
EXAMPLE_M = 5.0
EXAMPLE_HORIZONS = {1: 20.0, 2: 60.0, 3: 40.0}
CONSTANT_POINT_HORIZON = 40.0


@dataclass(frozen=True)
class SimSettings:
    T: float = field(default_factory=lambda: sim_engine.SIM_HORIZON)
    h: float = field(default_factory=lambda: sim_engine.SIM_STEP)
    sample_every: int = field(default_factory=lambda: sim_engine.SAMPLE_EVERY)


@dataclass(frozen=True)
class OutputPaths:
    csv: str = None
    report: str = None


@dataclass(frozen=True)
class Scenario:
    name: str
    graph: object
    controller: ControllerConfig
    disturbance: DisturbanceSignal
    x0: tuple
    xhat0: tuple
    what0: tuple
    sim: SimSettings = field(default_factory=SimSettings)
    output: OutputPaths = field(default_factory=OutputPaths)
    topology: str = None

    @property
    def n(self):
        return self.graph.n


# Parsing

def _strip_comment(line):
    in_string = False
    for pos, char in enumerate(line):
        if char == '"':
            in_string = not in_string
        elif char == '#' and not in_string:
            return line[:pos]
    return line


def _non_finite(lineno, key):
    def reject(constant):
        raise ParseError(lineno, f"non-finite value {constant} for '{key}'")
    return reject


def _tokenize(text):
    """{section: {key: (value, line)}} with every syntax error reported by line."""
    raw = {name: {} for name in SECTIONS}
    section = ''
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(line).strip()
        if not line:
            continue
        if line.startswith('[') and line.endswith(']') and '=' not in line:
            section = line[1:-1].strip()
            if section not in SECTIONS or not section:
                raise ParseError(lineno, f"unknown section [{section}]")
            continue
        if '=' not in line:
            raise ParseError(lineno, "expected 'key = value'")
        key, value = (part.strip() for part in line.split('=', 1))
        if not _KEY.match(key):
            raise ParseError(lineno, f"invalid key '{key}'")
        if key not in SECTIONS[section]:
            where = f"[{section}]" if section else "top level"
            raise ParseError(lineno, f"unknown key '{key}' at {where}")
        if key in raw[section]:
            raise ParseError(lineno, f"duplicate key '{key}'")
        try:
            raw[section][key] = (json.loads(value, parse_constant=_non_finite(lineno, key)), lineno)
        except json.JSONDecodeError as e:
            raise ParseError(lineno, f"bad value for '{key}': {e.msg}")
    return raw


class _Block:
    """Typed access to one section's values."""

    def __init__(self, section, values):
        self.section = section
        self.values = values

    def has(self, key):
        return key in self.values

    def _field(self, key):
        return f"{self.section}.{key}" if self.section else key

    def raw(self, key, default=None, required=False):
        if key not in self.values:
            if required:
                raise ValidationError(self._field(key), "missing")
            return default
        return self.values[key][0]

    def number(self, key, default=None, required=False):
        if key not in self.values:
            return self.raw(key, default, required)
        value = self.raw(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(self._field(key), f"expected a number, got {value!r}")
        if not np.isfinite(value):
            raise ValidationError(self._field(key), f"must be finite, got {value!r}")
        return float(value)

    def integer(self, key, default=None, required=False):
        if key not in self.values:
            return self.raw(key, default, required)
        value = self.raw(key)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValidationError(self._field(key), f"expected an integer, got {value!r}")
        return value

    def string(self, key, default=None, required=False):
        if key not in self.values:
            return self.raw(key, default, required)
        value = self.raw(key)
        if not isinstance(value, str):
            raise ValidationError(self._field(key), f"expected a string, got {value!r}")
        return value

    def vector(self, key, n, default=None, required=False):
        if key not in self.values:
            return self.raw(key, default, required)
        value = self.raw(key)
        if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise ValidationError(self._field(key), "expected a list of numbers")
        if len(value) != n:
            raise ValidationError(self._field(key), f"expected length {n}, got {len(value)}")
        if not np.all(np.isfinite(value)):
            raise ValidationError(self._field(key), "entries must be finite")
        return tuple(float(v) for v in value)


def _parse_graph(block):
    n = block.integer('n', required=True)
    topology = block.string('topology')
    if topology is not None and block.has('edges'):
        raise ValidationError('graph', "give either topology or edges, not both")
    if topology is not None:
        return graph_from_topology(topology, n), topology
    edges = block.raw('edges', required=True)
    if not isinstance(edges, list) or not all(
            isinstance(e, list) and len(e) == 2 and all(isinstance(v, int) for v in e) for e in edges):
        raise ValidationError('graph.edges', "expected a list of [i, j] integer pairs")
    g = build_graph(n, edges)
    if not is_connected(g):
        raise NotConnectedError(f"graph with {n} nodes and {len(edges)} edges is not connected")
    return g, None


def _parse_controller(block, n):
    k = block.raw('k', required=True)
    if isinstance(k, list):
        k = block.vector('k', n)
    else:
        k = block.number('k')
    try:
        return ControllerConfig.from_gains(
            mode=block.string('mode', required=True),
            n=n,
            k=k,
            m=block.number('m', required=True),
            q=block.number('q', 0.0),
            kappa=block.number('kappa', 0.0),
            zeta=block.vector('zeta', n),
            projection=block.string('projection', 'localized'),
        )
    except ValueError as e:
        # unknown enum values
        raise ValidationError('controller', str(e))


def _parse_disturbance(block, n):
    kind = block.string('type', 'zero')
    if kind == 'zero':
        return DisturbanceSignal.zero(n)
    if kind == 'constant':
        return DisturbanceSignal.constant(block.vector('w', n, required=True))
    if kind == 'sinusoid':
        if block.has('phase_deg') and block.has('phase'):
            raise ValidationError('disturbance', "give either phase_deg or phase, not both")
        degrees = not block.has('phase')
        phase = block.vector('phase_deg' if degrees else 'phase', n, required=True)
        return DisturbanceSignal.sinusoid_bank(
            block.vector('amplitude', n, required=True),
            block.vector('omega', n, required=True),
            phase,
            degrees=degrees,
        )
    raise ValidationError('disturbance.type', f"unknown disturbance type '{kind}'")


def parse_scenario(text):
    """Parse and validate scenario text; errors carry a line number or field name."""
    raw = _tokenize(text)
    blocks = {name: _Block(name, values) for name, values in raw.items()}

    graph, topology = _parse_graph(blocks['graph'])
    n = graph.n
    controller = _parse_controller(blocks['controller'], n)
    disturbance = _parse_disturbance(blocks['disturbance'], n)

    init = blocks['init']
    zeros = (0.0,) * n
    sim = blocks['sim']
    defaults = SimSettings()
    settings = SimSettings(
        T=sim.number('T', defaults.T),
        h=sim.number('h', defaults.h),
        sample_every=sim.integer('sample_every', defaults.sample_every),
    )
    if not settings.T > 0:
        raise ValidationError('sim.T', "must be positive")
    if not settings.h > 0:
        raise ValidationError('sim.h', "must be positive")
    if settings.sample_every < 1:
        raise ValidationError('sim.sample_every', "must be >= 1")

    out = blocks['output']
    return Scenario(
        name=blocks[''].string('name', 'scenario'),
        graph=graph,
        controller=controller,
        disturbance=disturbance,
        x0=init.vector('x0', n, required=True),
        xhat0=init.vector('xhat0', n, zeros),
        what0=init.vector('what0', n, zeros),
        sim=settings,
        output=OutputPaths(csv=out.string('csv'), report=out.string('report')),
        topology=topology,
    )


def load_scenario(path):
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ValidationError('file', f"cannot read {path}: {e.strerror}")
    try:
        text = data.decode('utf-8')
    except UnicodeDecodeError as e:
        raise ParseError(data.count(b'\n', 0, e.start) + 1, f"not valid UTF-8 ({e.reason})")
    logger.debug("loaded scenario file %s", path)
    return parse_scenario(text)


# Rendering

def _dump(value):
    if isinstance(value, tuple):
        value = list(value)
    return json.dumps(value)


def _phase_in_degrees(phase):
    degrees = np.round(np.rad2deg(np.array(phase)), 12)
    if np.array_equal(np.deg2rad(degrees), np.array(phase)):
        return tuple(float(v) for v in degrees)
    return None


def render_scenario(s):
    """Scenario text that parse_scenario turns back into an equal Scenario."""
    lines = [f"name = {_dump(s.name)}", "", "[graph]"]
    if s.topology is not None:
        lines.append(f"topology = {_dump(s.topology)}")
        lines.append(f"n = {s.n}")
    else:
        lines.append(f"n = {s.n}")
        lines.append(f"edges = {_dump([list(e) for e in s.graph.sorted_edges()])}")

    c = s.controller
    k = c.k[0] if len(set(c.k)) == 1 else c.k
    lines += ["", "[controller]",
              f"mode = {_dump(c.mode.value)}",
              f"k = {_dump(k)}",
              f"m = {_dump(c.m)}",
              f"q = {_dump(c.q)}",
              f"kappa = {_dump(c.kappa)}",
              f"projection = {_dump(c.projection.value)}"]
    if c.zeta is not None:
        lines.append(f"zeta = {_dump(c.zeta)}")

    d = s.disturbance
    lines += ["", "[disturbance]", f"type = {_dump(d.kind)}"]
    if d.kind == 'constant':
        lines.append(f"w = {_dump(d.w)}")
    elif d.kind == 'sinusoid':
        lines.append(f"amplitude = {_dump(d.amplitude)}")
        lines.append(f"omega = {_dump(d.omega)}")
        degrees = _phase_in_degrees(d.phase)
        if degrees is not None:
            lines.append(f"phase_deg = {_dump(degrees)}")
        else:
            lines.append(f"phase = {_dump(d.phase)}")

    lines += ["", "[init]",
              f"x0 = {_dump(s.x0)}",
              f"xhat0 = {_dump(s.xhat0)}",
              f"what0 = {_dump(s.what0)}",
              "", "[sim]",
              f"T = {_dump(s.sim.T)}",
              f"h = {_dump(s.sim.h)}",
              f"sample_every = {s.sim.sample_every}"]

    if s.output.csv is not None or s.output.report is not None:
        lines += ["", "[output]"]
        if s.output.csv is not None:
            lines.append(f"csv = {_dump(s.output.csv)}")
        if s.output.report is not None:
            lines.append(f"report = {_dump(s.output.report)}")
    return "\n".join(lines) + "\n"


# Built-in examples

def builtin_example(example_id, variant=None):
    """
    The three six-agent cycle setups.

    1: constant disturbance, Reject.  2: sinusoid bank, Damped.
    3: constant disturbance with a formation target, ConstantPoint.
    variant: baseline | reject | constant-point | damped.
    """
    try:
        example_id = int(example_id)
    except (TypeError, ValueError):
        raise UnknownExampleError(example_id)
    if example_id not in EXAMPLE_HORIZONS:
        raise UnknownExampleError(example_id)

    n = len(EXAMPLE_X0)
    if example_id == 1:
        controller = ControllerConfig.from_gains(Mode.REJECT, n, EXAMPLE_K, EXAMPLE_M)
        disturbance = DisturbanceSignal.constant(EXAMPLE_W)
    elif example_id == 2:
        controller = ControllerConfig.from_gains(Mode.DAMPED, n, EXAMPLE_K, EXAMPLE_M, kappa=0.0025)
        disturbance = DisturbanceSignal.sinusoid_bank((1.0,) * n, EXAMPLE_OMEGA, EXAMPLE_PHASE_DEG, degrees=True)
    else:
        controller = ControllerConfig.from_gains(Mode.CONSTANT_POINT, n, EXAMPLE_K, EXAMPLE_M,
                                                 q=0.025, zeta=EXAMPLE_ZETA)
        disturbance = DisturbanceSignal.constant(EXAMPLE_W)

    horizon = EXAMPLE_HORIZONS[example_id]
    name = f"example{example_id}"
    if variant is not None:
        try:
            controller = controller.with_variant(variant)
        except (KeyError, ValueError):
            raise ValidationError('variant', f"unknown variant '{variant}'")
        if controller.mode is Mode.CONSTANT_POINT:
            horizon = max(horizon, CONSTANT_POINT_HORIZON)
        name = f"{name}-{variant}"

    return Scenario(
        name=name,
        graph=graph_from_topology('cycle', n),
        controller=controller,
        disturbance=disturbance,
        x0=EXAMPLE_X0,
        xhat0=(0.0,) * n,
        what0=(0.0,) * n,
        sim=SimSettings(T=horizon, h=0.001, sample_every=10),
        topology='cycle',
    )


def apply_variant(s, variant):
    try:
        controller = s.controller.with_variant(variant)
    except (KeyError, ValueError):
        raise ValidationError('variant', f"unknown variant '{variant}'")
    return replace(s, controller=controller, name=f"{s.name}-{variant}")


# Running

@dataclass(frozen=True, eq=False)
class ScenarioResult:
    scenario: Scenario
    trajectory: Trajectory
    report: object
    bound: object = None


def damped_bound(gm, controller, disturbance):
    """Best-mu BoundReport, completed with the ultimate bound when feasible."""
    partial = search_mu(gm, controller.k, controller.m, controller.kappa)
    if not partial.assumption_feasible:
        logger.warning("dissipation assumption infeasible for k=%g, m=%g, kappa=%g (best mu=%g)",
                       controller.gain.min(), controller.m, controller.kappa, partial.mu)
        return partial
    return ultimate_bound(partial, *disturbance.bounds())


def run_scenario(s):
    """Simulate one scenario and analyse the result."""
    logger.info("running scenario %s", s.name)
    gm = build_matrices(s.graph)
    traj = simulate(
        s.controller, gm, s.disturbance, s.x0, s.xhat0, s.what0,
        T=s.sim.T, h=s.sim.h, sample_every=s.sim.sample_every,
    )
    bound = None
    if s.controller.mode is Mode.DAMPED:
        bound = damped_bound(gm, s.controller, s.disturbance)
    report = convergence_report(traj, s.controller, s.disturbance, bound)
    logger.info("finished scenario %s: spread %.3g", s.name, report.spread_final)
    return ScenarioResult(scenario=s, trajectory=traj, report=report, bound=bound)


def run_batch(scenarios, jobs=1):
    """Run scenarios, concurrently when jobs > 1; results keep the input order."""
    scenarios = list(scenarios)
    if jobs <= 1 or len(scenarios) <= 1:
        return [run_scenario(s) for s in scenarios]
    with concurrent.futures.ThreadPoolExecutor(max_workers=min(jobs, len(scenarios))) as executor:
        futures = [executor.submit(run_scenario, s) for s in scenarios]
        return [fut.result() for fut in futures]


# Output files

def resolve_output(path):
    """Bare file names go to OUTPUT_DIR; anything with a directory is kept."""
    path = Path(path)
    if path.parent == Path('.') and not path.is_absolute():
        return OUTPUT_DIR / path
    return path


def _atomic(path, write):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    os.close(fd)
    try:
        write(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def atomic_write_text(path, text):
    def write(tmp):
        with open(tmp, 'w', encoding='utf-8') as f:
            f.write(text)
    _atomic(path, write)


def write_trajectory_csv(traj, path):
    _atomic(path, lambda tmp: traj.to_frame().to_csv(tmp, index=False, float_format='%.17g'))


def read_trajectory_csv(path):
    return Trajectory.from_frame(pd.read_csv(path, float_precision='round_trip'))


def report_payload(result):
    payload = {'scenario': result.scenario.name, **result.report.to_dict()}
    if result.bound is not None:
        payload['bound'] = result.bound.to_dict()
    return payload


def write_outputs(result, csv=None, report=None, as_json=False):
    """Write the trajectory CSV and report named by flags or by the scenario."""
    written = []
    csv = csv or result.scenario.output.csv
    report = report or result.scenario.output.report
    if csv:
        path = resolve_output(csv)
        write_trajectory_csv(result.trajectory, path)
        written.append(path)
    if report:
        path = resolve_output(report)
        if as_json:
            text = json.dumps(report_payload(result), indent=2, default=str)
        else:
            text = format_report(result.report, title=result.scenario.name)
        atomic_write_text(path, text + "\n")
        written.append(path)
    return written
