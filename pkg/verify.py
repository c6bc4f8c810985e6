import argparse
import logging
import sys
from pathlib import Path

from hydra import compose, initialize_config_dir
from hydra.errors import HydraException
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException

from scslab.cache import CoefficientCache
from scslab.errors import CacheCorruptionError, ConfigurationError, InsufficientCoefficientsError, ScslabError
from scslab.harness import RunConfig, run
from utils import seed_everything, setup_logging

log = logging.getLogger(__name__)

CONF_DIR = Path(__file__).resolve().parent / 'conf'

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

DEFAULT_EXPERIMENTS = {
    'verify': 'corollary1',
    'curve': 'transition-curve',
    'cfs': 'cfs',
    'selftest': 'selftest',
}


def _list(values):
    return '[' + ','.join(repr(v) for v in values) + ']'


def build_overrides(args):
    """ Hydra overrides for the composed config, from the command line flags. """
    experiment = args.experiment or DEFAULT_EXPERIMENTS[args.command]
    overrides = [f'experiment={experiment}']

    if args.weight is not None:
        overrides.append(f'weight={args.weight}')
    if args.x:
        overrides.append(f'x_grid={_list(args.x)}')
    if args.ratio:
        overrides += ['y_rule=ratio', f'ratios={_list(args.ratio)}']
    if args.y:
        overrides += [f'y_rule={"grid" if args.paired else "fixed"}', f'y_values={_list(args.y)}']
    if args.eps is not None:
        overrides.append(f'eps_trunc={args.eps!r}')
    if args.theta is not None:
        overrides.append(f'theta={args.theta!r}')
    if args.threads is not None:
        overrides.append(f'threads={args.threads}')
    if args.out is not None:
        overrides.append(f'out_dir={args.out}')
    if args.n is not None:
        overrides.append(f'n_coefficients={args.n}')
    if args.force:
        overrides.append('force=true')
    if args.strict:
        overrides.append('strict=true')

    return overrides + list(args.overrides)


def compose_config(overrides):
    with initialize_config_dir(config_dir=str(CONF_DIR)):
        return compose(config_name='config', overrides=overrides)


def build_cache(args):
    if args.n is None:
        raise ConfigurationError('build-cache needs --n')
    cache = CoefficientCache(args.cache_dir)
    for weight in args.weights:
        f = cache.load_or_build(weight, args.n, force=args.force, threads=args.threads or 1)
        print(f'[OUTPUT] {cache.path_for(f.weight, f.N)} ({cache.cache_id(f.weight, f.N)})')
    return EXIT_PASS


def main(args):
    setup_logging(args.verbose)

    try:
        if args.command == 'build-cache':
            return build_cache(args)

        cfg = compose_config(build_overrides(args))
        print(OmegaConf.to_yaml(cfg))

        rc = RunConfig.from_cfg(cfg)
        seed_everything(rc.seed)
        report = run(rc)

    except InsufficientCoefficientsError as e:
        log.error(f'{e}; rerun with --n {e.required} or larger')
        return EXIT_CONFIG
    except CacheCorruptionError as e:
        log.error(str(e))
        return EXIT_CONFIG
    except (ConfigurationError, HydraException, OmegaConfBaseException) as e:
        log.error(f'configuration error: {e}')
        return EXIT_CONFIG
    except ScslabError as e:
        log.error(f'{type(e).__name__}: {e}')
        return EXIT_FAIL

    print(f'[OUTPUT] {Path(rc.out_dir) / report.csv_name}')
    print(f'[OUTPUT] {Path(rc.out_dir) / "report.json"}')
    print('PASS' if report.passed else 'FAIL')
    return EXIT_PASS if report.passed else EXIT_FAIL


def parse_args(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--weight', type=int, default=None, help='weight k of the eigenform')
    common.add_argument('--x', type=float, nargs='+', default=None, help='scales X')
    common.add_argument('--ratio', type=float, nargs='+', default=None, help='values of Y^2 / X')
    common.add_argument('--y', type=float, nargs='+', default=None, help='shift ranges Y')
    common.add_argument('--paired', action='store_true', help='pair --x and --y instead of crossing them')
    common.add_argument('--eps', type=float, default=None, help='truncation of the n-sums, in (0, 1e-6]')
    common.add_argument('--theta', type=float, default=None, help='exponent toward Ramanujan (0 or 7/64)')
    common.add_argument('--threads', type=int, default=None, help='joblib workers')
    common.add_argument('--out', default=None, help='output directory')
    common.add_argument('--n', type=int, default=None, help='number of coefficients N')
    common.add_argument('--force', action='store_true', help='rebuild the coefficient cache')
    common.add_argument('--strict', action='store_true', help='treat diagnostics as hard checks')
    common.add_argument('-e', '--experiment', default=None, help='experiment config, e.g. extended/corollary1')
    common.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    common.add_argument('overrides', nargs='*', help='hydra overrides, key=value')

    parser = argparse.ArgumentParser(description='Verify averaged shifted convolution sums of level-1 eigenforms')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('build-cache', parents=[common], help='build and cache eigenform coefficients')
    p.add_argument('--weights', type=int, nargs='+', default=[12], help='weights to build')
    p.add_argument('--cache-dir', default=None, help='cache directory (SCSLAB_CACHE_DIR wins)')

    sub.add_parser('verify', parents=[common], help='corollary 1 (default), corollary2 or main-theorem via -e')
    sub.add_parser('curve', parents=[common], help='the transition function c_f on an alpha grid')
    sub.add_parser('cfs', parents=[common], help='Jacobi-symbol sums and their transition function')
    sub.add_parser('selftest', parents=[common], help='exact and oracle checks at small sizes')

    args = parser.parse_args(argv)
    if args.command == 'build-cache' and args.weight is not None:
        args.weights = [args.weight]
    return args


if __name__ == '__main__':
    sys.exit(main(parse_args()))
