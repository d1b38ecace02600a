import argparse
import sys

from loguru import logger
from omegaconf.errors import OmegaConfBaseException

from cli.commands import cmd_eval, cmd_experiment, cmd_features, cmd_replay, cmd_synth, cmd_train
from cli.run_config import RunConfig, effective_config, load_config
from simulation.profiles import UnknownProfileError
from version import __version__

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='global seed, propagated to every stochastic component')
    common.add_argument('--config', help='YAML or JSON file merged over the packaged defaults')
    common.add_argument('--out', help='output file (standard output when omitted, where sensible)')
    common.add_argument(
        '--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE', help='e.g. train.epochs=20'
    )

    parser = argparse.ArgumentParser(prog='candid', description='One-class driver identification on CAN bus traces')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    synth = commands.add_parser('synth', parents=[common], help='simulate a driver trace CSV')
    synth.add_argument('--profile', help='builtin profile A-D, or a profile name inside --profile-file')
    synth.add_argument('--profile-file', help='JSON driver profile(s)')
    synth.add_argument('--duration', type=int, help='seconds (rows) to simulate')
    synth.set_defaults(handler=cmd_synth)

    features = commands.add_parser('features', parents=[common], help='fit the feature pipeline')
    features.add_argument('traces', nargs='+', help='owner training traces, [label=]path')
    features.add_argument('--drivers', nargs='+', help='multi-driver traces for the indifference rule, [label=]path')
    features.add_argument('--catalog', action='store_true', help='keep the fixed essential feature catalog')
    features.add_argument('--plot', help='write the correlation heatmap to this image file')
    features.set_defaults(handler=cmd_features)

    train = commands.add_parser('train', parents=[common], help='train the RGAN on owner traces')
    train.add_argument('traces', nargs='+', help='owner traces, [label=]path')
    train.add_argument('--pipeline', help='feature pipeline JSON; fitted on the owner traces when omitted')
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser('eval', parents=[common], help='evaluate a checkpoint on owner/thief traces')
    evaluate.add_argument('--checkpoint', required=True)
    evaluate.add_argument('--owner', nargs='+', required=True, help='owner test traces')
    evaluate.add_argument('--thief', nargs='+', required=True, help='thief test traces')
    evaluate.add_argument('--ratio', type=float, help='owner share of the test set (default 0.8)')
    evaluate.add_argument('--size', type=int, help='test set size (default: largest the pools allow)')
    evaluate.add_argument('--threshold', type=float, help='decision threshold')
    evaluate.add_argument('--calibrate-fnr', type=float, help='calibrate the threshold to this owner rejection rate')
    evaluate.add_argument('--calibration', nargs='+', help='owner validation traces used for calibration')
    evaluate.set_defaults(handler=cmd_eval)

    replay = commands.add_parser('replay', parents=[common], help='stream verdicts over a trace, one per second')
    replay.add_argument('--checkpoint', required=True)
    replay.add_argument('trace', nargs='?', default='-', help="trace CSV, '-' for standard input")
    replay.add_argument('--threshold', type=float, help='decision threshold')
    replay.set_defaults(handler=cmd_replay)

    experiment = commands.add_parser('experiment', parents=[common], help='owner-rotation experiment')
    experiment.add_argument('--profile-file', help='JSON driver profiles (default: the four builtin drivers)')
    experiment.set_defaults(handler=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f'seed={args.seed}')
    try:
        config = load_config(args.config, overrides)
        run_config = RunConfig.from_config(config)
    except (OmegaConfBaseException, ValueError, OSError) as error:
        logger.error(f'Invalid configuration: {error}')
        return EXIT_USAGE

    logger.remove()
    logger.add(sys.stderr, level=run_config.log_level)
    logger.info(f'{args.command} with effective configuration:\n{effective_config(config)}')

    try:
        return args.handler(args, run_config)
    except UnknownProfileError as error:
        logger.error(str(error))
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError, OSError, KeyError) as error:
        logger.error(f'{type(error).__name__}: {error}')
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
