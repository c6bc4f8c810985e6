import hashlib
import logging
import math
import platform
from dataclasses import dataclass, field

import hydra
import numpy as np
from omegaconf import DictConfig, OmegaConf

from . import __version__
from .cache import CoefficientCache, default_cache_dir
from .eigenforms import SUPPORTED_WEIGHTS
from .errors import ConfigurationError, DomainError, InsufficientCoefficientsError
from .report import VerificationReport, regime_summary  # noqa: F401  (re-exported)
from .scs import MAX_EPS_TRUNC
from .specfun import DEFAULT_CONTOUR, ContourSpec
from .transition import THETA

log = logging.getLogger(__name__)

MODES = ('corollary1', 'corollary2', 'main-theorem', 'transition-curve', 'cfs', 'selftest')
Y_RULES = ('fixed', 'ratio', 'grid')
THETAS = (0.0, THETA)

# mode-specific config sections
SECTIONS = {
    'corollary1': 'corollary1',
    'corollary2': 'corollary2',
    'main-theorem': 'main_theorem',
    'transition-curve': 'curve',
    'cfs': 'cfs',
    'selftest': 'selftest',
}

# product length 2(N+1) - 1 must fit the 2^21 transform of the prime pool
MAX_COEFFICIENTS = 2 ** 20 - 1

# keys that do not change any computed number
HASH_EXCLUDE = ('threads', 'out_dir', 'cache_folder', 'force')


@dataclass(frozen=True)
class RunConfig:
    """ Validated run configuration.

    Args:
        mode (str): one of MODES.
        weight (int): weight of the eigenform (ignored by cfs).
        x_grid (tuple): scales X.
        y_rule (str): 'fixed' (every Y of y_values with every X), 'ratio'
            (Y = sqrt(r X) for r in ratios) or 'grid' (X and Y paired).
        y_values (tuple): shift ranges for the 'fixed' and 'grid' rules.
        ratios (tuple): values of Y^2 / X for the 'ratio' rule.
        eps_trunc (float): n-tail truncation, in (0, 1e-6].
        contour (ContourSpec): vertical line used for W_k.
        theta (float): exponent toward Ramanujan, 0 or 7/64.
        out_dir (str): where the CSV and JSON outputs are written.
        threads (int): joblib workers.
        cache_dir (str): coefficient cache directory.
        seed (int): seed of the random selftest inputs.
        strict (bool): diagnostics become hard checks.
        force (bool): rebuild the coefficient cache.
        n_coefficients (int): explicit truncation N, else the smallest one the run needs.
        section (dict): mode-specific options.
        kernels (dict): smoothing kernel nodes for the main theorem.
        digest (str): hash of the result-determining configuration.
    """
    mode: str
    weight: int = 12
    x_grid: tuple = ()
    y_rule: str = 'ratio'
    y_values: tuple = ()
    ratios: tuple = ()
    eps_trunc: float = MAX_EPS_TRUNC
    contour: ContourSpec = DEFAULT_CONTOUR
    theta: float = THETA
    out_dir: str = 'runs'
    threads: int = 1
    cache_dir: str = None
    seed: int = 10
    strict: bool = False
    force: bool = False
    n_coefficients: int = None
    section: dict = field(default_factory=dict)
    kernels: dict = field(default_factory=dict)
    digest: str = ''

    @classmethod
    def from_cfg(cls, cfg):
        """ Validates a composed config; every violation raises ConfigurationError. """
        if not isinstance(cfg, DictConfig):
            cfg = OmegaConf.create(cfg)

        mode = cfg.get('mode', None)
        if mode not in MODES:
            raise ConfigurationError(f'mode must be one of {MODES}, got {mode!r}')

        weight = cfg.get('weight', 12)
        if mode != 'cfs' and weight not in SUPPORTED_WEIGHTS:
            raise ConfigurationError(f'weight {weight} is not supported; supported weights are {SUPPORTED_WEIGHTS}')

        y_rule = cfg.get('y_rule', 'ratio')
        if y_rule not in Y_RULES:
            raise ConfigurationError(f'y_rule must be one of {Y_RULES}, got {y_rule!r}')

        x_grid = tuple(float(x) for x in cfg.get('x_grid', None) or ())
        y_values = tuple(float(y) for y in cfg.get('y_values', None) or ())
        ratios = tuple(float(r) for r in cfg.get('ratios', None) or ())
        if any(not x >= 1 for x in x_grid):
            raise ConfigurationError(f'every X must be >= 1, got {list(x_grid)}')
        if any(not y >= 0 for y in y_values):
            raise ConfigurationError(f'every Y must be >= 0, got {list(y_values)}')
        if any(not r > 0 for r in ratios):
            raise ConfigurationError(f'every ratio must be > 0, got {list(ratios)}')
        if y_rule == 'grid' and len(x_grid) != len(y_values):
            raise ConfigurationError(f'y_rule=grid pairs x_grid and y_values, got {len(x_grid)} and {len(y_values)} values')
        if mode in ('corollary1', 'corollary2', 'main-theorem', 'cfs'):
            if not x_grid:
                raise ConfigurationError(f'mode {mode} needs a non-empty x_grid')
            if y_rule == 'ratio' and not ratios:
                raise ConfigurationError('y_rule=ratio needs ratios')
            if y_rule in ('fixed', 'grid') and not y_values:
                raise ConfigurationError(f'y_rule={y_rule} needs y_values')

        eps = float(cfg.get('eps_trunc', MAX_EPS_TRUNC))
        if not 0 < eps <= MAX_EPS_TRUNC:
            raise ConfigurationError(f'eps_trunc must be in (0, {MAX_EPS_TRUNC:g}], got {eps:g}')

        theta = float(cfg.get('theta', THETA))
        if not any(math.isclose(theta, t, abs_tol=1e-12) for t in THETAS):
            raise ConfigurationError(f'theta must be 0 or 7/64, got {theta}')

        threads = cfg.get('threads', 1)
        if not isinstance(threads, int) or not (threads >= 1 or threads == -1):
            raise ConfigurationError(f'threads must be a positive integer or -1, got {threads!r}')

        n_coefficients = cfg.get('n_coefficients', None)
        if n_coefficients is not None and not 2 <= int(n_coefficients) <= MAX_COEFFICIENTS:
            raise ConfigurationError(f'n_coefficients must be in [2, {MAX_COEFFICIENTS}], got {n_coefficients}')

        contour = DEFAULT_CONTOUR
        if cfg.get('contour', None) is not None:
            try:
                contour = hydra.utils.instantiate(cfg.contour)
            except Exception as e:
                raise ConfigurationError(f'bad contour {OmegaConf.to_container(cfg.contour)}: {e}') from e

        section = cfg.get(SECTIONS[mode], None)
        section = OmegaConf.to_container(section, resolve=True) if section is not None else {}
        kernels = cfg.get('kernels', None)
        kernels = OmegaConf.to_container(kernels, resolve=True) if kernels is not None else {}

        return cls(
            mode=mode,
            weight=int(weight),
            x_grid=x_grid,
            y_rule=y_rule,
            y_values=y_values,
            ratios=ratios,
            eps_trunc=eps,
            contour=contour,
            theta=theta,
            out_dir=str(cfg.get('out_dir', f'runs/{mode}')),
            threads=threads,
            cache_dir=str(default_cache_dir(cfg.get('cache_folder', None))),
            seed=int(cfg.get('seed', 10)),
            strict=bool(cfg.get('strict', False)),
            force=bool(cfg.get('force', False)),
            n_coefficients=None if n_coefficients is None else int(n_coefficients),
            section=section,
            kernels=kernels,
            digest=config_hash(cfg),
        )

    def points(self):
        """ (X, Y) pairs of the run, in configuration order. """
        if self.y_rule == 'grid':
            return list(zip(self.x_grid, self.y_values))
        if self.y_rule == 'fixed':
            return [(X, Y) for X in self.x_grid for Y in self.y_values]
        return [(X, math.sqrt(r * X)) for r in self.ratios for X in self.x_grid]

    def option(self, key, default=None):
        return self.section.get(key, default)

    def kernel(self, name, **kwargs):
        """ Instantiates the kernel node `name` of the config (extra kwargs such as X are passed on). """
        if name not in self.kernels:
            raise ConfigurationError(f'kernel {name!r} is not configured; available: {sorted(self.kernels)}')
        try:
            return hydra.utils.instantiate(self.kernels[name], **kwargs)
        except Exception as e:
            raise ConfigurationError(f'cannot build kernel {name!r}: {e}') from e


def config_hash(cfg):
    """ sha256 of the sorted, resolved YAML of the result-determining keys. """
    container = OmegaConf.to_container(cfg, resolve=True)
    for key in HASH_EXCLUDE:
        container.pop(key, None)
    text = OmegaConf.to_yaml(OmegaConf.create(container), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def load_eigenform(rc, required, what=''):
    """ Eigenform of the run's weight with N = n_coefficients, or the smallest N the run needs.

    Returns:
        tuple: (eigenform, cache id).

    Raises:
        InsufficientCoefficientsError: if the configured N is below `required`
            or `required` exceeds MAX_COEFFICIENTS.
    """
    required = max(int(required), 2)
    N = rc.n_coefficients or required
    if N < required or required > MAX_COEFFICIENTS:
        raise InsufficientCoefficientsError(required, min(N, MAX_COEFFICIENTS), what or rc.mode)

    cache = CoefficientCache(rc.cache_dir)
    f = cache.load_or_build(rc.weight, N, force=rc.force, threads=rc.threads)
    return f, cache.cache_id(rc.weight, N)


def new_report(rc, **kwargs):
    return VerificationReport(rc.mode, strict=rc.strict, **kwargs)


def run(rc):
    """ Runs one verification mode and writes its CSV and report.json.

    The mode is dispatched to `scslab.suites.<mode>.run(rc)`, which returns a
    VerificationReport; provenance is added here.

    Returns:
        VerificationReport: the written report; `report.passed` decides the exit status.
    """
    module = rc.mode.replace('-', '_')
    suite = hydra.utils.get_method(f'scslab.suites.{module}.run')

    log.info(f'[RUN] mode={rc.mode} weight={rc.weight} points={len(rc.points())} config={rc.digest[:12]}')
    report = suite(rc)

    report.strict = rc.strict
    report.provenance.update({
        'config_hash': rc.digest,
        'tool_version': __version__,
        'numpy_version': np.__version__,
        'python_version': platform.python_version(),
        'mode': rc.mode,
        'weight': rc.weight,
        'theta': rc.theta,
        'eps_trunc': rc.eps_trunc,
        'contour': {'sigma': rc.contour.sigma, 'step': rc.contour.step, 'tmax': rc.contour.tmax},
    })
    report.write(rc.out_dir)

    hard = [c for c in report.checks if c.hard or rc.strict]
    failed = [c.name for c in hard if not c.passed]
    log.info(f'[RUN] {len(hard) - len(failed)}/{len(hard)} hard checks passed' + (f'; failed: {failed}' if failed else ''))
    return report


def verify_domain(fn, *args, **kwargs):
    """ Calls fn, turning a DomainError on configured values into a ConfigurationError. """
    try:
        return fn(*args, **kwargs)
    except DomainError as e:
        raise ConfigurationError(str(e)) from e
