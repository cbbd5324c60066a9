"""

Experiment runner
=================

Configuration-driven runs of the tracking experiments, with sweeps,
ensembles and CSV/JSON output.

A configuration is a JSON key tree mirroring `ExperimentConfig`; every
key is optional and unknown keys are errors. Presets for the standard
experiments ship in ``eigtrack/presets``. From the shell::

    $ eigtrack preset open_rect --out results
    $ eigtrack sweep my.json --param bath.memory_rate --values 0.5,1,2
    $ eigtrack preset rotating_free --override control.kind=rect --override control.chi=0.01

Every run writes one CSV per sweep value with the columns
``sweep_value, time, fidelity_exact, fidelity_tcl, stderr, flags``, a
JSON sidecar echoing the configuration, and an index JSON.

"""

import argparse
from collections.abc import Mapping
import csv
from dataclasses import asdict, dataclass, field, fields, is_dataclass, replace
from functools import partial
import io
import json
import math
from pathlib import Path
import pkgutil
import sys
from typing import Optional, Tuple, Union, get_args, get_origin, get_type_hints

import numpy as np
from logbook import Logger, StreamHandler

from . import __version__
from .bath import (BathSpec, DecayFunctions, exact_qubit_me,
                   open_qubit_dissipator, solve_c_plus)
from .controls import ChaoticTrain, ControlSignal, ImpulseNoise, RectTrain
from .densemath import TimeGrid
from .errors import ConfigError, OutputError
from .frame import build_adiabatic_ops
from .models import (OpenQubitModel, RotatingFieldQubit,
                     TwoQubitEffectiveModel, open_qubit_kernels,
                     rotating_kernels, twoqubit_kernels)
from .partition import block_propagators, partition
from .tcl import kernel_table, propagate_closed, propagate_projected, sigma_norm
from .tools import gather, jsonable

logger = Logger('expcli')

MODELS = ('open_qubit', 'rotating', 'two_qubit')
CONTROL_KINDS = ('none', 'rect', 'chaotic', 'noise')
METHODS = ('exact', 'tcl')
KERNELS = ('exact', 'constant_gap')
CLOSED_KERNELS = ('frame', 'model')
PRESETS = ('open_rect', 'open_noise', 'rotating_free', 'rotating_chaotic',
           'rotating_noise', 'two_qubit_free', 'two_qubit_rect')
PRESET_ALIASES = {'fig2a': 'open_rect', 'fig2b': 'open_noise',
                  'fig3': 'rotating_free', 'fig4': 'two_qubit_free'}
COLUMNS = ('sweep_value', 'time', 'fidelity_exact', 'fidelity_tcl', 'stderr',
           'flags')


@dataclass(frozen=True)
class ModelSpec:

    name: str = 'open_qubit'
    t_end: float = 1.0
    sweep_angle: float = math.pi / 2
    omega_field: float = 5.0
    omega_z: float = 5.0
    noise_b: float = 0.0


@dataclass(frozen=True)
class BathConfig:

    coupling: float = 1.0
    memory_rate: float = 0.5


@dataclass(frozen=True)
class ControlSpec:
    """Pulse train on top of ``j0``; the pulse width is ``delta_ratio * chi``."""

    kind: str = 'none'
    j0: float = 1.0
    psi: float = 0.0
    chi: float = 0.02
    delta_ratio: float = 0.4
    mu: float = 3.9
    l0: float = 0.5
    k_min: int = 6
    k_max: int = 16
    mean_amplitude: float = 1.0


@dataclass(frozen=True)
class GridSpec:
    """`steps` per run, raised so that ``dt <= max_dt`` when that is set.

    With `t_values`, one run per final time is made and only final
    fidelities are reported.

    """

    steps: int = 2000
    t_values: Tuple[float, ...] = ()
    max_dt: Optional[float] = None


@dataclass(frozen=True)
class SolverSpec:

    methods: Tuple[str, ...] = ('exact', 'tcl')
    kernels: str = 'exact'
    closed_kernel: str = 'frame'


@dataclass(frozen=True)
class SweepSpec:

    path: str = ''
    values: Tuple[float, ...] = ()


@dataclass(frozen=True)
class OutputSpec:

    path: str = 'results'
    stride: int = 1


@dataclass(frozen=True)
class ExperimentConfig:

    id: str = 'experiment'
    model: ModelSpec = field(default_factory=ModelSpec)
    bath: Optional[BathConfig] = None
    control: ControlSpec = field(default_factory=ControlSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    ensemble: int = 1
    seed: int = 0
    solver: SolverSpec = field(default_factory=SolverSpec)
    sweep: Optional[SweepSpec] = None
    output: OutputSpec = field(default_factory=OutputSpec)


def _join(prefix, name):
    return '{0}.{1}'.format(prefix, name) if prefix else name


def _convert(hint, value, path):
    if is_dataclass(hint):
        if not isinstance(value, Mapping):
            raise ConfigError(path, 'expected a table')
        return _from_tree(hint, value, path)
    origin = get_origin(hint)
    if origin is Union:
        if value is None:
            return None
        inner = [a for a in get_args(hint) if a is not type(None)][0]
        return _convert(inner, value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, 'expected a list')
        item = get_args(hint)[0]
        return tuple(_convert(item, v, '{0}[{1}]'.format(path, i))
                     for i, v in enumerate(value))
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, 'expected a number, got {0!r}'.format(value))
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, 'expected an integer, got {0!r}'.format(value))
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(path, 'expected a string, got {0!r}'.format(value))
        return value
    raise ConfigError(path, 'unsupported field type')


def _from_tree(cls, tree, path=''):
    hints = get_type_hints(cls)
    unknown = sorted(set(tree) - {f.name for f in fields(cls)})
    if unknown:
        raise ConfigError(_join(path, unknown[0]), 'unknown key')
    return cls(**{name: _convert(hints[name], value, _join(path, name))
                  for name, value in tree.items()})


def config_from_tree(tree):
    if not isinstance(tree, Mapping):
        raise ConfigError('', 'expected a table')
    return _from_tree(ExperimentConfig, tree)


def config_to_tree(config):
    return jsonable(asdict(config))


def load_config(path):
    try:
        with open(path, encoding='utf-8') as fh:
            tree = json.load(fh)
    except OSError as exc:
        raise ConfigError('', 'cannot read {0}: {1}'.format(path, exc))
    except ValueError as exc:
        raise ConfigError('', 'invalid JSON in {0}: {1}'.format(path, exc))
    return config_from_tree(tree)


def preset(name):
    """Shipped configuration `name`, e.g. ``preset('open_rect')``.

    The short names of `PRESET_ALIASES` are accepted too.

    """
    name = PRESET_ALIASES.get(name, name)
    if name not in PRESETS:
        raise ConfigError('', 'unknown preset {0!r}'.format(name))
    data = pkgutil.get_data('eigtrack', 'presets/{0}.json'.format(name))
    return config_from_tree(json.loads(data.decode('utf-8')))


def parse_value(text):
    """Command-line value: JSON when it parses, a plain string otherwise."""
    try:
        return json.loads(text)
    except ValueError:
        return text


def _replace_path(node, names, value, prefix):
    name = names[0]
    where = _join(prefix, name)
    if not is_dataclass(node) or name not in {f.name for f in fields(node)}:
        raise ConfigError(where, 'no such field')
    hint = get_type_hints(type(node))[name]
    if len(names) > 1:
        child = getattr(node, name)
        if child is None:
            child = [a for a in get_args(hint) if a is not type(None)][0]()
        return replace(node, **{name: _replace_path(child, names[1:], value,
                                                    where)})
    if get_origin(hint) is Union and value is not None:
        hint = [a for a in get_args(hint) if a is not type(None)][0]
    if hint not in (float, int, str) and get_origin(hint) is not Union:
        raise ConfigError(where, 'not a scalar field')
    if hint is int and isinstance(value, float) and value.is_integer():
        value = int(value)
    return replace(node, **{name: _convert(hint, value, where)})


def with_value(config, path, value):
    """Copy of `config` with the scalar at dotted `path` set to `value`."""
    return _replace_path(config, path.split('.'), value, '')


def _require(condition, path, reason):
    if not condition:
        raise ConfigError(path, reason)


def validate(config):
    """Return `config` unchanged or raise `ConfigError`."""
    model, control, grid = config.model, config.control, config.grid
    _require(model.name in MODELS, 'model.name',
             'expected one of {0}'.format(', '.join(MODELS)))
    _require(model.t_end > 0, 'model.t_end', 'must be positive')
    _require(control.kind in CONTROL_KINDS, 'control.kind',
             'expected one of {0}'.format(', '.join(CONTROL_KINDS)))
    _require(grid.steps >= 2, 'grid.steps', 'must be at least 2')
    _require(all(t > 0 for t in grid.t_values), 'grid.t_values',
             'final times must be positive')
    _require(grid.max_dt is None or grid.max_dt > 0, 'grid.max_dt',
             'must be positive')
    _require(config.ensemble >= 0, 'ensemble', 'must be non-negative')
    _require(config.seed >= 0, 'seed', 'must be non-negative')
    _require(config.solver.methods and all(
        m in METHODS for m in config.solver.methods), 'solver.methods',
        'expected a non-empty subset of {0}'.format(', '.join(METHODS)))
    _require(config.solver.kernels in KERNELS, 'solver.kernels',
             'expected one of {0}'.format(', '.join(KERNELS)))
    _require(config.solver.closed_kernel in CLOSED_KERNELS,
             'solver.closed_kernel',
             'expected one of {0}'.format(', '.join(CLOSED_KERNELS)))
    _require(config.output.stride >= 1, 'output.stride', 'must be at least 1')
    if config.bath is not None:
        _require(config.bath.coupling > 0, 'bath.coupling', 'must be positive')
        _require(config.bath.memory_rate > 0, 'bath.memory_rate',
                 'must be positive')
    try:
        build_control(control, config.seed)
    except ValueError as exc:
        raise ConfigError('control', str(exc))
    if config.sweep is not None:
        _require(config.sweep.path, 'sweep.path', 'must name a field')
        for value in config.sweep.values:
            validate(with_value(replace(config, sweep=None),
                                config.sweep.path, value))
    return config


def build_control(spec, seed=0, realization=0):
    delta = spec.delta_ratio * spec.chi
    if spec.kind == 'none':
        variant = None
    elif spec.kind == 'rect':
        variant = RectTrain(spec.psi, delta, spec.chi)
    elif spec.kind == 'chaotic':
        variant = ChaoticTrain(spec.psi, delta, spec.chi, spec.mu, spec.l0)
    elif spec.kind == 'noise':
        variant = ImpulseNoise(delta, spec.chi, spec.k_min, spec.k_max,
                               spec.mean_amplitude, seed, realization)
    else:
        raise ValueError('unknown control kind {0!r}'.format(spec.kind))
    return ControlSignal(spec.j0, variant)


def build_model(spec, control, t_end=None):
    t_end = spec.t_end if t_end is None else float(t_end)
    if spec.name == 'open_qubit':
        return OpenQubitModel(control, t_end, spec.sweep_angle)
    if spec.name == 'rotating':
        return RotatingFieldQubit(control, spec.omega_field, spec.omega_z,
                                  t_end)
    if spec.name == 'two_qubit':
        return TwoQubitEffectiveModel(control, t_end, spec.noise_b)
    raise ValueError('unknown model {0!r}'.format(spec.name))


MODEL_KERNELS = {'rotating': rotating_kernels, 'two_qubit': twoqubit_kernels}


def point_grid(config, t_end):
    steps = config.grid.steps
    if config.grid.max_dt is not None:
        steps = max(steps, int(math.ceil(t_end / config.grid.max_dt - 1e-9)))
    return TimeGrid.span(t_end, steps)


@dataclass(eq=False)
class PointResult:
    """Fidelity series of one run; methods not asked for are ``None``."""

    times: np.ndarray
    exact: Optional[np.ndarray] = None
    tcl: Optional[np.ndarray] = None
    kappa_integral: Optional[np.ndarray] = None
    flags: set = field(default_factory=set)
    diagnostics: list = field(default_factory=list)


def _open_qubit_point(config, model, control, grid):
    methods = config.solver.methods
    if config.bath is None:
        decay = DecayFunctions.quiet(grid, control)
    else:
        bath = BathSpec(config.bath.coupling, config.bath.memory_rate)
        decay = solve_c_plus(bath, control, grid)
    point = PointResult(grid.times, kappa_integral=decay.kappa_integral,
                        diagnostics=list(decay.diagnostics))
    if decay.truncated_at is not None:
        point.flags.add('truncated')
    if 'exact' in methods:
        point.exact = exact_qubit_me(model, decay, grid).fidelity_series
    if 'tcl' in methods:
        ops = build_adiabatic_ops(model.frame(grid),
                                  open_qubit_dissipator(model, decay))
        size = ops.frame.size
        blocks = partition(ops, model.target * (size + 1))
        props = block_propagators(blocks, grid)
        if config.solver.kernels == 'constant_gap':
            kernels = open_qubit_kernels(model, decay)
        else:
            kernels = kernel_table(blocks, props)
        result = propagate_projected(blocks, kernels, grid)
        _, flagged = sigma_norm(blocks, props, grid)
        if flagged:
            point.flags.add('sigma')
        point.flags.update(result.flags)
        point.diagnostics.extend(result.diagnostics)
        point.tcl = result.fidelity_series
    return point


def _closed_point(config, model, grid):
    point = PointResult(grid.times)
    runs = []
    if 'exact' in config.solver.methods:
        runs.append(('exact', propagate_closed(model, grid, 'exact')))
    if 'tcl' in config.solver.methods:
        kernels = None
        if config.solver.closed_kernel == 'model':
            kernels = MODEL_KERNELS[model.name](model, grid)
        runs.append(('tcl', propagate_closed(model, grid, 'second_order',
                                             kernels)))
    for method, result in runs:
        setattr(point, method, result.fidelity_series)
        point.flags.update(result.flags)
        point.diagnostics.extend(result.diagnostics)
    return point


def evaluate_point(config, t_end, realization=0):
    """Run every requested method once, for final time `t_end`."""
    control = build_control(config.control, config.seed, realization)
    model = build_model(config.model, control, t_end)
    grid = point_grid(config, t_end)
    logger.debug('{0}: T = {1:g}, {2} steps, realization {3}', config.id,
                 t_end, grid.steps, realization)
    if config.model.name == 'open_qubit':
        return _open_qubit_point(config, model, control, grid)
    return _closed_point(config, model, grid)


@dataclass(frozen=True)
class Row:

    time: float
    fidelity_exact: float
    fidelity_tcl: float
    stderr: float
    flags: str
    kappa_integral: float = float('nan')


@dataclass(eq=False)
class RunReport:
    """Rows of one configuration, ready for `emit`."""

    config: ExperimentConfig
    sweep_value: Optional[float]
    rows: list
    realizations: int
    diagnostics: list = field(default_factory=list)
    version: str = __version__


def _members(config):
    if config.control.kind == 'noise':
        return config.ensemble
    return min(config.ensemble, 1)


def _t_ends(config):
    return config.grid.t_values or (config.model.t_end,)


def _mean_series(points, method):
    series = [getattr(p, method) for p in points]
    if not series or series[0] is None:
        return None, None
    stack = np.stack(series)
    mean = stack.mean(axis=0)
    if len(series) > 1:
        return mean, stack.std(axis=0, ddof=1) / math.sqrt(len(series))
    return mean, np.zeros_like(mean)


def _value(series, index):
    return float('nan') if series is None else float(series[index])


def _assemble(config, sweep_value, results):
    """Average ensemble members into rows; `results` pairs T with outcomes."""
    rows, diagnostics = [], []
    series_mode = not config.grid.t_values
    for t_end in _t_ends(config):
        outcomes = [o for t, o in results if t == t_end]
        points = [o.value for o in outcomes if o.ok]
        flags = set()
        for o in outcomes:
            if not o.ok:
                flags.add('failed')
                diagnostics.append('T = {0:g}, task {1}: {2}'.format(
                    t_end, o.index, o.reason))
        for p in points:
            flags.update(p.flags)
            diagnostics.extend(p.diagnostics)
        label = ';'.join(sorted(flags))
        if not points:
            if outcomes:
                nan = float('nan')
                rows.append(Row(t_end, nan, nan, nan, label))
            continue
        exact, exact_err = _mean_series(points, 'exact')
        tcl, tcl_err = _mean_series(points, 'tcl')
        kappa, _ = _mean_series(points, 'kappa_integral')
        stderr = exact_err if exact_err is not None else tcl_err
        times = points[0].times
        if series_mode:
            last = len(times) - 1
            indices = list(range(0, last + 1, config.output.stride))
            if indices[-1] != last:
                indices.append(last)
        else:
            indices = [len(times) - 1]
        for i in indices:
            rows.append(Row(float(times[i]), _value(exact, i), _value(tcl, i),
                            _value(stderr, i), label, _value(kappa, i)))
    return RunReport(config, sweep_value, rows, _members(config),
                     sorted(set(diagnostics)))


def _execute(plans, threads=None):
    jobs, owners = [], []
    for p, (config, _) in enumerate(plans):
        for t_end in _t_ends(config):
            for member in range(_members(config)):
                jobs.append(partial(evaluate_point, config, t_end, member))
                owners.append((p, t_end))
    logger.info('running {0} points on {1} threads', len(jobs),
                threads or 'default')
    outcomes = gather(jobs, threads)
    return [_assemble(config, value,
                      [(t, o) for (q, t), o in zip(owners, outcomes) if q == p])
            for p, (config, value) in enumerate(plans)]


def run_experiment(config, threads=None):
    """One report for `config`, ignoring its sweep section."""
    config = validate(replace(config, sweep=None))
    return _execute([(config, None)], threads)[0]


def sweep(config, path, values, threads=None):
    """One report per value of the scalar at dotted `path`.

    Every point of every value is dispatched in a single batch.

    """
    base = replace(config, sweep=None)
    plans = [(validate(with_value(base, path, value)), value)
             for value in values]
    return _execute(plans, threads)


def run_config(config, threads=None):
    """Reports for `config`, following its sweep section when present."""
    if config.sweep is not None and config.sweep.path:
        return sweep(config, config.sweep.path, config.sweep.values, threads)
    return [run_experiment(config, threads)]


def _fmt(x):
    if x is None:
        return ''
    if isinstance(x, str):
        return x
    if math.isnan(x):
        return 'nan'
    return format(float(x), '.17g')


def _write(path, text):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(str(path), exc.strerror or str(exc))


def csv_text(report):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(COLUMNS)
    value = _fmt(report.sweep_value)
    for row in report.rows:
        writer.writerow([value, _fmt(row.time), _fmt(row.fidelity_exact),
                         _fmt(row.fidelity_tcl), _fmt(row.stderr), row.flags])
    return buffer.getvalue()


def sidecar(report):
    return {'config': config_to_tree(report.config),
            'seed': report.config.seed,
            'sweep_value': report.sweep_value,
            'realizations': report.realizations,
            'kappa_integral': [None if math.isnan(row.kappa_integral)
                               else row.kappa_integral for row in report.rows],
            'diagnostics': list(report.diagnostics),
            'version': report.version}


def _dump(tree):
    return json.dumps(jsonable(tree), indent=2, sort_keys=True) + '\n'


def emit(reports, out_dir=None):
    """Write CSV and sidecar per report plus an index; returns the index path."""
    if not reports:
        raise ValueError('nothing to emit')
    first = reports[0].config
    out = Path(out_dir if out_dir is not None else first.output.path)
    entries = []
    for i, report in enumerate(reports):
        name = report.config.id
        if len(reports) > 1 or report.sweep_value is not None:
            name = '{0}_{1:03d}'.format(name, i)
        _write(out / (name + '.csv'), csv_text(report))
        _write(out / (name + '.json'), _dump(sidecar(report)))
        entries.append({'csv': name + '.csv', 'json': name + '.json',
                        'sweep_value': report.sweep_value})
    index = out / '{0}_index.json'.format(first.id)
    _write(index, _dump({'id': first.id, 'runs': entries,
                         'version': __version__}))
    logger.info('wrote {0} runs to {1}', len(entries), out)
    return index


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='base random seed')
    common.add_argument('--out', help='output directory')
    common.add_argument('--threads', type=int, help='worker threads')
    common.add_argument('--grid-steps', type=int, help='time steps per run')
    common.add_argument('--verbose', action='store_true')

    parser = argparse.ArgumentParser(
        prog='eigtrack', description='Eigenstate tracking experiments.')
    commands = parser.add_subparsers(dest='command', required=True)
    run = commands.add_parser('run', parents=[common],
                              help='run a configuration file')
    run.add_argument('config')
    sweeping = commands.add_parser('sweep', parents=[common],
                                   help='sweep one field of a configuration')
    sweeping.add_argument('config')
    sweeping.add_argument('--param', required=True,
                          help='dotted field path, e.g. bath.memory_rate')
    sweeping.add_argument('--values', required=True,
                          help='comma separated values')
    shipped = commands.add_parser('preset', parents=[common],
                                  help='run a shipped configuration')
    shipped.add_argument('name', choices=PRESETS + tuple(PRESET_ALIASES))
    shipped.add_argument('--override', action='append', default=[],
                         metavar='PATH=VALUE')
    checking = commands.add_parser('validate', parents=[common],
                                   help='check a configuration file')
    checking.add_argument('config')
    return parser


def _apply_flags(config, args):
    if args.seed is not None:
        config = with_value(config, 'seed', args.seed)
    if args.out is not None:
        config = with_value(config, 'output.path', args.out)
    if args.grid_steps is not None:
        config = with_value(config, 'grid.steps', args.grid_steps)
    return config


def _dispatch(args):
    if args.command == 'preset':
        config = preset(args.name)
        for item in args.override:
            path, sep, text = item.partition('=')
            if not sep:
                raise ConfigError(path, 'override must look like PATH=VALUE')
            config = with_value(config, path, parse_value(text))
    else:
        config = load_config(args.config)
    config = validate(_apply_flags(config, args))
    if args.command == 'validate':
        logger.info('{0}: configuration is valid', config.id)
        return 0
    if args.command == 'sweep':
        values = [parse_value(v) for v in args.values.split(',') if v]
        reports = sweep(config, args.param, values, args.threads)
    else:
        reports = run_config(config, args.threads)
    emit(reports)
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = 'DEBUG' if args.verbose else 'INFO'
    with StreamHandler(sys.stderr, level=level).applicationbound():
        try:
            return _dispatch(args)
        except ConfigError as exc:
            logger.error('invalid configuration: {0}', exc)
            return 2
        except OutputError as exc:
            logger.error(str(exc))
            return 1


if __name__ == '__main__':
    sys.exit(main())
