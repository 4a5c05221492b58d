import argparse
import asyncio
import contextlib
import logging
import math
import sys
from typing import Dict, Iterator, List, Optional, Sequence, TextIO

from weakvalue.analysis import weak_value_grid
from weakvalue.detector import ShiftCalibration, calibrate_shifts
from weakvalue.errors import ConfigError, WeakValueError
from weakvalue.experiment import ExperimentConfig, parse_config
from weakvalue.formats import (
    COUNT_MAP_KEYS,
    dump_count_map,
    metadata_lines,
    read_count_map,
    write_count_map,
    write_sweep,
)
from weakvalue.lab import Lab
from weakvalue.meter import MeterOrder
from weakvalue.polarization import PI_H, PI_V, make_linear_state, weak_value

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

# flag -> experiment key
OVERRIDE_FLAGS = {
    'preset': 'preset',
    'a_x': 'a_x',
    'a_y': 'a_y',
    'sigma': 'sigma',
    'theta_i': 'theta_i',
    'theta_f': 'theta_f',
    'aw_range': 'aw_range',
    'shots': 'shots',
    'efficiency': 'efficiency',
    'dark_rate': 'dark_rate_hz',
    'gate': 'gate_s',
    'seed': 'seed',
    'epsilon': 'epsilon',
    'search': 'search',
    'output': 'output',
}

# values of these may start with '-'
SIGNED_FLAGS = ('--theta-i', '--theta-f', '--aw-range', '--search')


def _join_signed_values(argv: Sequence[str]) -> List[str]:
    joined: List[str] = []
    tokens = iter(argv)
    for token in tokens:
        if token in SIGNED_FLAGS:
            value = next(tokens, None)
            if value is not None and value.startswith('-'):
                joined.append(f'{token}={value}')
                continue
            joined.append(token)
            if value is not None:
                joined.append(value)
            continue
        joined.append(token)
    return joined


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group('experiment')
    group.add_argument('--config', help='experiment file with `key = value` lines')
    group.add_argument('--preset', help='crystal pair: thin or thick')
    group.add_argument('--a-x', dest='a_x', help='x walk-off shift in pixels')
    group.add_argument('--a-y', dest='a_y', help='y walk-off shift in pixels')
    group.add_argument('--sigma', help='pointer width in pixels')
    group.add_argument('--theta-i', dest='theta_i', help='pre-selection angle (radians, or NNdeg)')
    group.add_argument('--theta-f', dest='theta_f', help='comma-separated post-selection angles')
    group.add_argument('--aw-range', dest='aw_range', help='target weak values lo:hi:n')
    group.add_argument('--shots', help='heralded triggers per acquisition')
    group.add_argument('--efficiency', help='detection efficiency in [0, 1]')
    group.add_argument('--dark-rate', dest='dark_rate', help='dark count rate per pixel in Hz')
    group.add_argument('--gate', help='gate width in seconds')
    group.add_argument('--seed', help='Monte Carlo seed')
    group.add_argument('--epsilon', help='relative tolerance of the validity regions')
    group.add_argument('--search', help='weak-value search interval lo:hi')
    group.add_argument('--output', help='output path (stdout when omitted)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='weakvalue', description='Weak-value polarization measurement simulator.')
    parser.add_argument(
        '--log-level',
        default='WARNING',
        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
        help='stderr logging threshold',
    )
    commands = parser.add_subparsers(dest='command', required=True)

    sweep = commands.add_parser('sweep', help='sweep the post-selection and write the sweep CSV')
    _experiment_flags(sweep)

    regions = commands.add_parser('regions', help='validity regions of the perturbative orders')
    _experiment_flags(regions)

    simulate = commands.add_parser('simulate', help='Monte Carlo count map of one acquisition')
    _experiment_flags(simulate)
    simulate.add_argument(
        '--calibration',
        action='store_true',
        help='simulate the |H> and |V> calibration runs instead',
    )

    calibrate = commands.add_parser('calibrate', help='walk-off shifts from two calibration count maps')
    calibrate.add_argument('counts_h', help='count map of the |H> run')
    calibrate.add_argument('counts_v', help='count map of the |V> run')

    predict = commands.add_parser('predict', help='meter prediction for one post-selection')
    _experiment_flags(predict)
    predict.add_argument('--order', default='exact', choices=['exact', '1', '3'])

    bias = commands.add_parser('bias', help='finite-coupling bias of the weak-value estimates')
    _experiment_flags(bias)
    bias.add_argument('--axis', default='x', choices=['x', 'y'])
    return parser


def _load_experiment(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {
        key: getattr(args, flag)
        for flag, key in OVERRIDE_FLAGS.items()
        if getattr(args, flag, None) is not None
    }
    return parse_config(args.config, overrides)


def _metadata(command: str, experiment: ExperimentConfig) -> List[str]:
    return metadata_lines([('command', command)] + list(experiment.metadata().items()))


@contextlib.contextmanager
def _open_output(path: Optional[str], stdout: TextIO) -> Iterator[TextIO]:
    if path is None:
        yield stdout
        return
    try:
        stream = open(path, 'w', encoding='utf-8', newline='\n')
    except OSError as err:
        raise ConfigError('output', f'cannot write {path}: {err}') from err
    with stream:
        yield stream


def _single_angle(experiment: ExperimentConfig) -> float:
    angles = experiment.postselection_angles()
    if len(angles) != 1:
        raise ConfigError('theta_f', f'this command takes one post-selection, got {len(angles)}')
    return angles[0]


def _number(value: float) -> str:
    return '' if math.isnan(value) else f'{value:.17e}'


async def _sweep(lab: Lab, experiment: ExperimentConfig, stdout: TextIO) -> None:
    rows = await lab.sweep(
        experiment.theta_i,
        experiment.postselection_angles(),
        experiment.coupling,
        experiment.detection,
    )
    echo = experiment.metadata()
    with _open_output(experiment.output, stdout) as stream:
        write_sweep(stream, rows, dict([('command', 'sweep')] + list(echo.items())))
    logger.info('wrote %d sweep rows', len(rows))


async def _regions(lab: Lab, experiment: ExperimentConfig, stdout: TextIO) -> None:
    reports = await lab.regions(experiment.coupling, experiment.epsilon, experiment.search)
    lines = _metadata('regions', experiment)
    lines.append('axis,a,g,region,low,high')
    for axis, report in reports.items():
        intervals = [(1, report.region1)]
        intervals += [(2, interval) for interval in report.region2]
        intervals += [(3, interval) for interval in report.region3]
        for region, (low, high) in intervals:
            lines.append(f'{axis},{report.a!r},{report.g:.6f},{region},{low:.6f},{high:.6f}')
    with _open_output(experiment.output, stdout) as stream:
        stream.write('\n'.join(lines) + '\n')


def _calibration_paths(output: Optional[str]) -> List[str]:
    if output is None:
        raise ConfigError('output', 'simulate --calibration needs --output to name the two count maps')
    stem = output[:-4] if output.endswith('.csv') else output
    return [f'{stem}_H.csv', f'{stem}_V.csv']


async def _simulate(lab: Lab, experiment: ExperimentConfig, calibration: bool, stdout: TextIO) -> None:
    detection = experiment.detection
    if detection is None:
        raise ConfigError('shots', 'simulate needs shots')
    echo = _count_map_echo(experiment)
    if calibration:
        paths = _calibration_paths(experiment.output)
        result, counts_h, counts_v = await lab.calibrate(experiment.coupling, detection)
        for index, (path, counts) in enumerate(zip(paths, (counts_h, counts_v))):
            counts.metadata.update(echo, command='simulate --calibration', run=str(index))
            write_count_map(path, counts)
        stdout.write(_shift_report(result))
        return

    counts = await lab.simulate(experiment.theta_i, _single_angle(experiment), experiment.coupling, detection)
    counts.metadata.update(echo, command='simulate')
    if experiment.output is None:
        stdout.write(dump_count_map(counts))
    else:
        write_count_map(experiment.output, counts)


def _count_map_echo(experiment: ExperimentConfig) -> Dict[str, str]:
    # the map header already carries the detection settings of the run itself
    echo = {key: value for key, value in experiment.metadata().items() if key not in COUNT_MAP_KEYS}
    echo['base_seed'] = str(experiment.seed)
    return echo


def _shift_report(result: ShiftCalibration) -> str:
    return (
        f'a_x = {result.a_x:.6f} +- {result.stderr_a_x:.6f}\n'
        f'a_y = {result.a_y:.6f} +- {result.stderr_a_y:.6f}\n'
    )


def _calibrate(counts_h_path: str, counts_v_path: str, stdout: TextIO) -> None:
    counts_h = read_count_map(counts_h_path)
    counts_v = read_count_map(counts_v_path)
    background = counts_h.detection.dark_mean_per_pixel or None
    stdout.write(_shift_report(calibrate_shifts(counts_h, counts_v, background)))


async def _predict(lab: Lab, experiment: ExperimentConfig, order: str, stdout: TextIO) -> None:
    theta_f = _single_angle(experiment)
    psi_i, psi_f = make_linear_state(experiment.theta_i), make_linear_state(theta_f)
    aw_h = weak_value(PI_H, psi_i, psi_f).real
    aw_v = weak_value(PI_V, psi_i, psi_f).real
    prediction = await lab.predict(experiment.theta_i, theta_f, experiment.coupling, MeterOrder.from_value(order))
    lines = _metadata('predict', experiment)
    lines += [
        f'order = {prediction.order.value}',
        f'aw_h = {aw_h:.6f}',
        f'aw_v = {aw_v:.6f}',
        f'x = {prediction.x_centroid:.6f}',
        f'y = {prediction.y_centroid:.6f}',
        f'p = {prediction.postselection_probability:.6f}',
    ]
    with _open_output(experiment.output, stdout) as stream:
        stream.write('\n'.join(lines) + '\n')


async def _bias(lab: Lab, experiment: ExperimentConfig, axis: str, stdout: TextIO) -> None:
    if experiment.aw_range is None:
        raise ConfigError('aw_range', 'bias needs aw_range')
    coupling = experiment.coupling
    a = coupling.a_x if axis == 'x' else coupling.a_y
    if not a > 0:
        raise ConfigError(f'a_{axis}', f'bias needs a positive a_{axis}')
    rows = await lab.bias(a, coupling.sigma, weak_value_grid(*experiment.aw_range))
    lines = _metadata('bias', experiment)
    lines.append(','.join(rows[0]._fields))
    for row in rows:
        lines.append(','.join(_number(value) for value in row))
    with _open_output(experiment.output, stdout) as stream:
        stream.write('\n'.join(lines) + '\n')


async def _dispatch(args: argparse.Namespace, stdout: TextIO) -> None:
    if args.command == 'calibrate':
        _calibrate(args.counts_h, args.counts_v, stdout)
        return
    experiment = _load_experiment(args)
    async with Lab() as lab:
        if args.command == 'sweep':
            await _sweep(lab, experiment, stdout)
        elif args.command == 'regions':
            await _regions(lab, experiment, stdout)
        elif args.command == 'simulate':
            await _simulate(lab, experiment, args.calibration, stdout)
        elif args.command == 'predict':
            await _predict(lab, experiment, args.order, stdout)
        elif args.command == 'bias':
            await _bias(lab, experiment, args.axis, stdout)


def run_command(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    """Run one subcommand and return its exit status.

    0 on success, 2 for configuration and usage errors, 3 for runtime errors.
    """
    stdout = sys.stdout if stdout is None else stdout
    argv = sys.argv[1:] if argv is None else argv
    parser = build_parser()
    try:
        args = parser.parse_args(_join_signed_values(argv))
    except SystemExit as exit_:
        return EXIT_OK if exit_.code in (0, None) else EXIT_CONFIG

    logging.basicConfig(
        level=getattr(logging, args.log_level),
        stream=sys.stderr,
        format='%(levelname)s %(name)s: %(message)s',
    )
    try:
        asyncio.run(_dispatch(args, stdout))
    except ConfigError as err:
        print(f'weakvalue: {err}', file=sys.stderr)
        return EXIT_CONFIG
    except WeakValueError as err:
        print(f'weakvalue: {err}', file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run_command())
