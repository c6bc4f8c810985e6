import json
import logging

import numpy as np
import pandas as pd
import pytest
from hydra.errors import HydraException
from omegaconf import OmegaConf

import verify
from scslab.errors import ConfigurationError, InsufficientCoefficientsError
from scslab.harness import RunConfig, config_hash, load_eigenform, run
from scslab.kernels import SmoothingKernel
from scslab.specfun import ContourSpec
from utils import LOG_FORMAT, setup_logging

EXPERIMENTS = [
    'corollary1', 'corollary2', 'main-theorem', 'transition-curve', 'cfs', 'selftest',
    'extended/corollary1', 'extended/corollary2', 'extended/main-theorem', 'extended/transition-curve',
    'extended/cfs',
]

ACCEPTANCE = {
    'acceptance/selftest': 'selftest',
    'acceptance/transition-curve': 'transition-curve',
    'acceptance/fft-oracle': 'corollary1',
    'acceptance/corollary1': 'corollary1',
    'acceptance/corollary1-large': 'corollary1',
    'acceptance/corollary2': 'corollary2',
    'acceptance/main-theorem': 'main-theorem',
    'acceptance/cfs': 'cfs',
}

BASE = {'mode': 'corollary1', 'x_grid': [100], 'y_rule': 'ratio', 'ratios': [0.5]}


def _compose(tmp_path, experiment, *overrides):
    return verify.compose_config([
        f'experiment={experiment}',
        f'out_dir={tmp_path / "out"}',
        f'cache_folder={tmp_path / "cache"}',
        *overrides,
    ])


def test_experiment_is_mandatory(tmp_path):
    with pytest.raises(HydraException):
        verify.compose_config([f'out_dir={tmp_path / "out"}'])


@pytest.mark.parametrize('experiment', EXPERIMENTS)
def test_experiments_compose(tmp_path, experiment):
    rc = RunConfig.from_cfg(_compose(tmp_path, experiment))
    assert rc.mode == experiment.split('/')[-1]
    assert isinstance(rc.contour, ContourSpec)
    assert len(rc.digest) == 64


@pytest.mark.parametrize('experiment, mode', ACCEPTANCE.items())
def test_acceptance_experiments_compose(tmp_path, experiment, mode):
    assert RunConfig.from_cfg(_compose(tmp_path, experiment)).mode == mode


def test_acceptance_grids(tmp_path):
    def points(experiment):
        return RunConfig.from_cfg(_compose(tmp_path, experiment)).points()

    expected = [(1e4, (r * 1e4) ** 0.5) for r in (0.1, 0.3, 1, 3, 10)]
    np.testing.assert_allclose(points('acceptance/corollary1'), expected)
    np.testing.assert_allclose(points('acceptance/corollary1-large'), [(1e3, 1e5 ** 0.5)])
    assert points('acceptance/fft-oracle') == [(1e4, 10.0), (1e4, 100.0), (1e4, 300.0)]
    np.testing.assert_allclose(points('acceptance/corollary2')[0], (1e3, 10.0))
    assert points('acceptance/cfs') == [(1e4, 1e4), (2e4, 1e4)]

    selftest = RunConfig.from_cfg(_compose(tmp_path, 'acceptance/selftest'))
    assert selftest.option('hecke') == [{'weight': 12, 'N': 100000}, {'weight': 26, 'N': 10000}]
    assert (selftest.option('ntt_trials'), selftest.option('ntt_length')) == (100, 2048)
    assert selftest.option('l_value') == {'N': 100000, 'tol': 1e-3}


def test_main_theorem_kernels(tmp_path):
    rc = RunConfig.from_cfg(_compose(tmp_path, 'main-theorem'))
    assert set(rc.kernels) == {'point_mass', 'gamma_cutoff', 'bump'}
    assert rc.option('bump_widths') == [0.04, 0.02, 0.01]

    bump = rc.kernel('bump', X=100.0, width=0.02)
    assert isinstance(bump, SmoothingKernel)
    assert bump.kind == 'sampled'
    assert rc.kernel('point_mass', X=100.0).X == 100.0
    with pytest.raises(ConfigurationError):
        rc.kernel('triangle', X=100.0)


@pytest.mark.parametrize('change', [
    {'mode': 'fourier'},
    {'weight': 14},
    {'y_rule': 'diagonal'},
    {'x_grid': [0.5]},
    {'x_grid': []},
    {'ratios': []},
    {'ratios': [-1.0]},
    {'y_rule': 'grid', 'y_values': [1.0, 2.0]},
    {'eps_trunc': 1e-5},
    {'theta': 0.2},
    {'threads': 0},
    {'n_coefficients': 1},
    {'n_coefficients': 2 ** 20},
    {'contour': {'_target_': 'scslab.specfun.ContourSpec', 'step': -1.0}},
])
def test_invalid_configs(change):
    with pytest.raises(ConfigurationError):
        RunConfig.from_cfg({**BASE, **change})


def test_cfs_accepts_any_weight():
    rc = RunConfig.from_cfg({'mode': 'cfs', 'weight': 14, 'x_grid': [10], 'y_rule': 'grid', 'y_values': [5]})
    assert rc.points() == [(10.0, 5.0)]


def test_points():
    ratio = RunConfig.from_cfg({**BASE, 'x_grid': [100, 400], 'ratios': [1, 4]})
    assert ratio.points() == [(100.0, 10.0), (400.0, 20.0), (100.0, 20.0), (400.0, 40.0)]

    fixed = RunConfig.from_cfg({**BASE, 'x_grid': [100, 400], 'y_rule': 'fixed', 'y_values': [3, 5]})
    assert fixed.points() == [(100.0, 3.0), (100.0, 5.0), (400.0, 3.0), (400.0, 5.0)]

    grid = RunConfig.from_cfg({**BASE, 'x_grid': [100, 400], 'y_rule': 'grid', 'y_values': [3, 5]})
    assert grid.points() == [(100.0, 3.0), (400.0, 5.0)]


def test_config_hash():
    cfg = OmegaConf.create(BASE)
    assert config_hash(cfg) == config_hash(OmegaConf.create(dict(reversed(list(BASE.items())))))
    assert config_hash(cfg) == config_hash(OmegaConf.create({**BASE, 'threads': 8, 'out_dir': 'elsewhere'}))
    assert config_hash(cfg) != config_hash(OmegaConf.create({**BASE, 'weight': 16}))


def test_load_eigenform(cache_dir):
    rc = RunConfig.from_cfg({**BASE, 'cache_folder': str(cache_dir), 'n_coefficients': 50})
    with pytest.raises(InsufficientCoefficientsError) as info:
        load_eigenform(rc, 60)
    assert info.value.required == 60

    f, cache_id = load_eigenform(rc, 40)
    assert f.N == 50
    assert cache_id.startswith('coeffs_k12_N50.txt:')


@pytest.mark.slow
def test_corollary1_run(tmp_path, cache_dir):
    cfg = _compose(tmp_path, 'corollary1', 'x_grid=[100,200]', 'ratios=[0.5,2]', 'corollary1.direct_max_x=200')
    rc = RunConfig.from_cfg(cfg)
    report = run(rc)
    assert report.passed, [c for c in report.checks if not c.passed]

    frame = pd.read_csv(tmp_path / 'out' / 'rows.csv')
    assert list(frame.columns) == ['k', 'X', 'Y', 'ratio', 'lhs', 'rhs', 'residual', 'yardstick']
    assert len(frame) == 4

    data = json.loads((tmp_path / 'out' / 'report.json').read_text())
    assert data['provenance']['config_hash'] == rc.digest
    assert data['provenance']['cache_id'].startswith('coeffs_k12_N')
    assert 'c_f' in data['extras']

    # a second run reads the cache and reproduces the rows
    run(rc)
    assert pd.read_csv(tmp_path / 'out' / 'rows.csv').equals(frame)


@pytest.mark.slow
def test_main_theorem_run(tmp_path, cache_dir):
    cfg = _compose(tmp_path, 'main-theorem', 'x_grid=[100]', 'ratios=[0.5]')
    report = run(RunConfig.from_cfg(cfg))
    checks = {c.name: c for c in report.checks}
    assert checks['point mass lhs == (4pi)^(2-k) X corollary1 lhs'].passed
    assert checks['point mass rhs == (4pi)^(2-k) X corollary1 rhs'].passed
    assert checks['psi = 0 gives 0 on both sides'].passed
    assert checks['rows finite'].passed
    kernels = [r.kernel for r in report.rows]
    assert kernels == ['point-mass', 'bump-0.04', 'bump-0.02', 'bump-0.01', 'gamma-cutoff']


@pytest.mark.slow
def test_corollary2_run_checks_brute_force(tmp_path, cache_dir):
    cfg = _compose(tmp_path, 'corollary2', 'x_grid=[100]', 'ratios=[0.25]', '+corollary2.bruteforce_max_x=100')
    report = run(RunConfig.from_cfg(cfg))
    checks = {c.name: c for c in report.checks}
    assert checks['lhs == brute force within 1e-10'].passed
    assert checks['c_f grid tails certified'].passed


@pytest.mark.slow
def test_selftest_acceptance_sections(tmp_path):
    cfg = _compose(tmp_path, 'selftest', '+selftest.hecke=[{weight:12,N:2000}]', '+selftest.ntt_trials=2',
                   '+selftest.ntt_length=128', '+selftest.l_value={N:4000,tol:0.01}')
    checks = {c.name: c for c in run(RunConfig.from_cfg(cfg)).checks}
    assert checks['Hecke relations k=12 N=2000'].passed
    assert checks['ntt == schoolbook on 2 random series of length 128'].passed
    assert checks['L-value methods agree to 0.01 at N=4000'].passed


def test_cfs_run(tmp_path):
    cfg = _compose(tmp_path, 'cfs', 'x_grid=[37,120,101]', 'y_values=[91,17,55]', 'cfs.kmax=500',
                   '~cfs.second_differences')
    report = run(RunConfig.from_cfg(cfg))
    assert report.passed
    assert len(pd.read_csv(tmp_path / 'out' / 'cfs.csv')) == 3


def test_cli_insufficient_coefficients(tmp_path, cache_dir):
    args = verify.parse_args([
        'verify', f'cache_folder={cache_dir}', '--x', '100', '--ratio', '0.5', '--n', '200', '--out', str(tmp_path),
    ])
    assert verify.main(args) == verify.EXIT_CONFIG


def test_cli_bad_theta(tmp_path):
    args = verify.parse_args(['verify', '--theta', '0.3', '--out', str(tmp_path)])
    assert verify.main(args) == verify.EXIT_CONFIG


def test_cli_build_cache(cache_dir):
    args = verify.parse_args(['build-cache', '--weights', '12', '16', '--n', '30', '--cache-dir', str(cache_dir)])
    assert verify.main(args) == verify.EXIT_PASS
    assert (cache_dir / 'coeffs_k16_N30.txt').exists()


@pytest.mark.slow
def test_cli_selftest(tmp_path, capsys):
    args = verify.parse_args(['selftest', '--out', str(tmp_path)])
    assert verify.main(args) == verify.EXIT_PASS
    assert capsys.readouterr().out.strip().endswith('PASS')
    assert (tmp_path / 'selftest.csv').exists()


def test_setup_logging_replaces_root_handlers():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    try:
        stale = logging.NullHandler()
        root.addHandler(stale)
        setup_logging(verbose=True)
        assert stale not in root.handlers
        assert root.level == logging.DEBUG
        assert root.handlers[-1].formatter._fmt == LOG_FORMAT
        assert logging.getLogger('joblib').level == logging.WARNING
    finally:
        root.handlers[:] = handlers
        root.setLevel(level)
