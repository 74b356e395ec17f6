#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/cli.py
# Purpose:                Command-line experiment runner.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU Affero General Public License as
# published by the Free Software Foundation, either version 3 of the
# License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU Affero General Public License for more details.
#
# You should have received a copy of the GNU Affero General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#--------------------------------------------------------------------------------------------------
"""
Run experiments from the command line or from a flat JSON configuration file.

Every subcommand builds an :class:`ExperimentConfig` and hands it to :func:`run`, so
``prodmix learn --samples s.txt --k 3 --seed 1 --report r.json`` and ``prodmix run --config c.json``
with ``{"mode": "learn", "samples": "s.txt", "k": 3, "seed": 1, "report": "r.json"}`` do the same.

Exit status is ``0`` on success, ``2`` when the configuration or the input is invalid, and ``3``
when a numerical stage fails.
"""

import argparse
import hashlib
import json
import logging
import sys

import numpy

import prodmix
from prodmix import linalg
from prodmix.analyzers.completers import matrix as matrix_completion
from prodmix.analyzers.completers import tensor as tensor_completion
from prodmix.analyzers.experimenters.recovery import RecoveryReport, match_and_score
from prodmix.models import mixture
from prodmix.models.symmetric_tensor import read_symmetric_tensor, write_symmetric_tensor
from prodmix import workflow


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """
    An :class:`ExperimentConfig` is missing a field, has an unknown one, or has a bad value.
    """
    pass


def _flag(value):
    if isinstance(value, str):
        if value.lower() in ('true', '1', 'yes'):
            return True
        if value.lower() in ('false', '0', 'no'):
            return False
        raise ValueError(value)
    return bool(value)


class ExperimentConfig(object):
    """
    A validated experiment configuration: a flat mapping from field names to values.

    :param fields: The fields. ``mode`` is always required; see :attr:`REQUIRED` for the rest.

    :raises: :exc:`ConfigError` for an unknown mode or field, a missing required field, or a
        value of the wrong type.
    """

    MODES = ('gen-mixture', 'sample', 'moments', 'complete-matrix', 'complete-tensor', 'learn',
             'learn-exact', 'eval')

    FIELDS = {'mode': str, 'seed': int,
              # paths
              'mixture': str, 'samples': str, 'input': str, 'mask': str, 'tensor': str,
              'estimate': str, 'out': str, 'report': str,
              # problem sizes and parameters
              'n': int, 'k': int, 'r': int, 'm': int, 'N': int, 'eta': float, 'epsilon': float,
              'delta': float, 'confidence': float, 'mu': float, 'mu_u': float, 'mu_v': float,
              'lambda': float, 'bias': float,
              # solver settings
              'max_iterations': int, 'tolerance': float, 'restarts': int, 'iterations': int,
              'multilinear_only': _flag, 'record_timings': _flag}

    "Fields each mode needs."
    REQUIRED = {'gen-mixture': ('n', 'k', 'out'),
                'sample': ('mixture', 'N', 'out'),
                'moments': ('m', 'out'),
                'complete-matrix': ('input', 'mask', 'out'),
                'complete-tensor': ('tensor', 'out'),
                'learn': ('samples', 'k', 'report'),
                'learn-exact': ('mixture', 'report'),
                'eval': ('mixture', 'estimate', 'report')}

    "Modes that draw random numbers, and so need a ``seed``."
    RANDOMIZED = ('gen-mixture', 'sample', 'learn')

    _MODE_ERR = 'unknown mode "{}"; choose one of: {}'
    _FIELD_ERR = 'unknown configuration field(s): {}'
    _MISSING_ERR = 'mode "{}" requires the field(s): {}'
    _TYPE_ERR = 'field "{}" has the bad value {!r}'
    _SEED_ERR = 'mode "{}" draws random numbers, so "seed" is required'

    def __init__(self, **fields):
        super(ExperimentConfig, self).__init__()
        fields = {key: val for key, val in fields.items() if val is not None}
        mode = fields.get('mode')
        if mode not in ExperimentConfig.MODES:
            raise ConfigError(ExperimentConfig._MODE_ERR.format(
                mode, ', '.join(ExperimentConfig.MODES)))
        unknown = sorted(set(fields) - set(ExperimentConfig.FIELDS))
        if unknown:
            raise ConfigError(ExperimentConfig._FIELD_ERR.format(', '.join(unknown)))
        self._fields = {}
        for key, val in fields.items():
            try:
                self._fields[key] = ExperimentConfig.FIELDS[key](val)
            except (TypeError, ValueError):
                raise ConfigError(ExperimentConfig._TYPE_ERR.format(key, val))
        missing = [key for key in ExperimentConfig.REQUIRED[mode] if key not in self._fields]
        if mode == 'moments' and 'samples' not in self._fields and 'mixture' not in self._fields:
            missing.append('samples or mixture')
        if missing:
            raise ConfigError(ExperimentConfig._MISSING_ERR.format(mode, ', '.join(missing)))
        if mode in ExperimentConfig.RANDOMIZED and 'seed' not in self._fields:
            raise ConfigError(ExperimentConfig._SEED_ERR.format(mode))

    @property
    def mode(self):
        return self._fields['mode']

    def __getitem__(self, key):
        return self._fields[key]

    def __contains__(self, key):
        return key in self._fields

    def get(self, key, default=None):
        return self._fields.get(key, default)

    def as_dict(self):
        return dict(self._fields)

    def digest(self):
        "The SHA-256 hash of the configuration as canonical JSON."
        text = json.dumps(self._fields, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode('utf-8')).hexdigest()

    @classmethod
    def from_json(cls, pathname):
        """
        :raises: :exc:`ConfigError` if the file does not hold a flat JSON object.
        """
        with open(pathname, 'r') as handle:
            try:
                data = json.load(handle)
            except ValueError as err:
                raise ConfigError('{} is not valid JSON: {}'.format(pathname, err))
        if not isinstance(data, dict) or any(isinstance(v, (dict, list)) for v in data.values()):
            raise ConfigError('{} must hold a flat JSON object'.format(pathname))
        return cls(**data)


def _json_default(obj):
    if isinstance(obj, numpy.integer):
        return int(obj)
    if isinstance(obj, numpy.floating):
        return float(obj)
    if isinstance(obj, numpy.bool_):
        return bool(obj)
    if isinstance(obj, numpy.ndarray):
        return obj.tolist()
    raise TypeError('{!r} is not JSON serializable'.format(obj))


def write_report(report, pathname):
    with open(pathname, 'w') as handle:
        json.dump(report, handle, indent=2, sort_keys=True, default=_json_default)
        handle.write('\n')


def stage_seeds(seed, stages):
    """
    Derive one seed per stage from the configuration's seed, and log them.

    :rtype: dict of str to int
    """
    children = numpy.random.SeedSequence(seed).spawn(len(stages))
    post = {}
    for stage, child in zip(stages, children):
        post[stage] = int(child.generate_state(1)[0])
        logger.info('seed for stage %s: %d', stage, post[stage])
    return post


def _solver_settings(config):
    return {key: config[key] for key in ('max_iterations', 'tolerance', 'delta') if key in config}


def _run_gen_mixture(config):
    seeds = stage_seeds(config['seed'], ['mixture'])
    mix = mixture.ProductMixture.random(config['n'], config['k'], seeds['mixture'],
                                        span=config.get('r'), bias=config.get('bias', 0.9),
                                        min_separation=config.get('eta'))
    mix.to_json(config['out'])
    post = {'seeds': seeds, 'n': mix.n, 'k': mix.k}
    if mix.k >= 2:
        post['separation'] = mixture.separation(mix)
    return post


def _run_sample(config):
    seeds = stage_seeds(config['seed'], ['sample'])
    mix = mixture.ProductMixture.from_json(config['mixture'])
    samples = mixture.sample(mix, config['N'], seeds['sample'])
    samples.savetxt(config['out'])
    return {'seeds': seeds, 'samples': samples.size, 'n': samples.n}


def _run_moments(config):
    order = config['m']
    if 'samples' in config:
        samples = mixture.SampleSet.loadtxt(config['samples'])
        tensor = mixture.empirical_multilinear_moments(samples, order)
        post = {'source': 'samples', 'samples': samples.size}
        if 'confidence' in config:
            post['accuracy'] = mixture.hoeffding_accuracy(samples.size, samples.n, order,
                                                          config['confidence'])
    else:
        tensor = mixture.exact_augmented_moments(mixture.ProductMixture.from_json(
            config['mixture']), order)
        if config.get('multilinear_only', False):
            tensor = tensor.multilinear_only()
        post = {'source': 'mixture'}
    write_symmetric_tensor(tensor, config['out'])
    post.update({'order': tensor.order, 'dim': tensor.dim, 'present': int(tensor.mask.sum())})
    return post


def _run_complete_matrix(config):
    observed = linalg.read_matrix_csv(config['input'])
    mask = matrix_completion.ObservationMask.from_array(linalg.read_matrix_csv(config['mask']))
    settings = matrix_completion.CompletionSettings.from_dict(_solver_settings(config))
    report = matrix_completion.complete(observed, mask, settings, config.get('r'),
                                        config.get('mu_u'), config.get('mu_v'),
                                        config.get('lambda'))
    linalg.write_matrix_csv(report.matrix, config['out'])
    return report.as_dict()


def _run_complete_tensor(config):
    tensor = read_symmetric_tensor(config['tensor'])
    settings = _solver_settings(config)
    settings.update({'rank': config.get('r'), 'mu': config.get('mu'),
                     'epsilon': config.get('epsilon', 0.0)})
    report = tensor_completion.SymmetricTensorCompleter(tensor, settings).run()
    write_symmetric_tensor(report.tensor, config['out'])
    return report.as_dict()


def _pipeline_settings(config, seeds):
    settings = {'seed': seeds['decompose'], 'completion': _solver_settings(config),
                'record timings': config.get('record_timings', False)}
    for key, name in (('restarts', 'restarts'), ('iterations', 'iterations'), ('r', 'rank'),
                      ('mu', 'mu'), ('confidence', 'confidence')):
        if key in config:
            settings[name] = config[key]
    return settings


def _run_learn(config):
    seeds = stage_seeds(config['seed'], ['decompose'])
    samples = mixture.SampleSet.loadtxt(config['samples'])
    settings = _pipeline_settings(config, seeds)
    if 'epsilon' in config:
        settings['accuracy'] = config['epsilon']
    truth = mixture.ProductMixture.from_json(config['mixture']) if 'mixture' in config else None
    report = workflow.learn_mixture_sampled(samples, config['k'], config.get('eta'), settings,
                                            truth)
    post = report.as_dict()
    post['seeds'] = seeds
    return post


def _run_learn_exact(config):
    seeds = stage_seeds(config.get('seed', 0), ['decompose'])
    mix = mixture.ProductMixture.from_json(config['mixture'])
    if 'm' in config:
        order = config['m']
    else:
        order = 1 if mix.k < 2 else mixture.min_odd_power(mix.k, mixture.separation(mix))
    second = mixture.exact_augmented_moments(mix, 2 * order)
    third = mixture.exact_augmented_moments(mix, 3 * order)
    if config.get('multilinear_only', False):
        second, third = second.multilinear_only(), third.multilinear_only()
    settings = _pipeline_settings(config, seeds)
    if 'epsilon' in config:
        settings['epsilon'] = config['epsilon']
    report = workflow.learn_mixture_exact(second, third, config.get('k', mix.k), order, settings,
                                          mix)
    post = report.as_dict()
    post['seeds'] = seeds
    return post


def _run_eval(config):
    truth = mixture.ProductMixture.from_json(config['mixture'])
    estimate = RecoveryReport.from_json(config['estimate'])
    return match_and_score(truth, estimate).as_dict()


_RUNNERS = {'gen-mixture': _run_gen_mixture,
            'sample': _run_sample,
            'moments': _run_moments,
            'complete-matrix': _run_complete_matrix,
            'complete-tensor': _run_complete_tensor,
            'learn': _run_learn,
            'learn-exact': _run_learn_exact,
            'eval': _run_eval}


def run(config):
    """
    Run one experiment and write its outputs. Modes with a ``report`` field write the report
    there; the others write it next to ``out``, with ``.report.json`` appended. Every report
    holds the mode, the configuration's hash, and the library version.

    :param config: The experiment.
    :type config: :class:`ExperimentConfig`

    :returns: The report.
    :rtype: dict

    :raises: :exc:`ValueError` or :exc:`TypeError` for invalid input.
    :raises: :exc:`RuntimeError` when a numerical stage fails.
    """
    logger.info('running %s (config %s)', config.mode, config.digest()[:12])
    report = _RUNNERS[config.mode](config)
    report.update({'mode': config.mode, 'config_hash': config.digest(),
                   'version': prodmix.__version__})
    pathname = config.get('report') or config['out'] + '.report.json'
    write_report(report, pathname)
    logger.info('wrote the report to %s', pathname)
    return report


def _add_solver_flags(parser):
    parser.add_argument('--tol', dest='tolerance', type=float,
                        help='solver tolerance on the relative residual and change')
    parser.add_argument('--max-iterations', dest='max_iterations', type=int,
                        help='solver iteration limit')
    parser.add_argument('--delta', type=float,
                        help='noise radius around the observed entries (0 for exact completion)')


def _add_decomposition_flags(parser):
    parser.add_argument('--restarts', type=int,
                        help='power-iteration starting points per component (default 20 + 10k)')
    parser.add_argument('--iterations', type=int, help='power updates per starting point')
    parser.add_argument('--record-timings', dest='record_timings', action='store_true',
                        default=None, help='include per-stage timings in the report')


def make_parser():
    """
    The argument parser, with one subcommand per mode and ``run`` for configuration files.

    :rtype: :class:`argparse.ArgumentParser`
    """
    parser = argparse.ArgumentParser(prog='prodmix', description=__doc__.strip().split('\n')[0])
    parser.add_argument('--version', action='version', version=prodmix.__version__)
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument('-v', '--verbose', action='store_true', help='log debugging output')
    noise.add_argument('-q', '--quiet', action='store_true', help='log only warnings and errors')
    subs = parser.add_subparsers(dest='mode', metavar='MODE')
    subs.required = True

    sub = subs.add_parser('run', help='run the experiment in a JSON configuration file')
    sub.add_argument('--config', required=True, help='the configuration file')

    sub = subs.add_parser('gen-mixture', help='draw a random mixture')
    sub.add_argument('--n', type=int, required=True, help='dimension')
    sub.add_argument('--k', type=int, required=True, help='number of centers')
    sub.add_argument('--r', type=int, help='put every center in one random r-dimensional span')
    sub.add_argument('--eta', type=float, help='redraw until the separation is at least this')
    sub.add_argument('--bias', type=float, help='largest absolute coordinate bias (default 0.9)')
    sub.add_argument('--seed', type=int, required=True, help='random seed')
    sub.add_argument('--out', required=True, help='mixture JSON file to write')

    sub = subs.add_parser('sample', help='draw samples from a mixture')
    sub.add_argument('--mixture', required=True, help='mixture JSON file')
    sub.add_argument('--n', dest='N', type=int, required=True, help='number of samples')
    sub.add_argument('--seed', type=int, required=True, help='random seed')
    sub.add_argument('--out', required=True, help='sample file to write')

    sub = subs.add_parser('moments', help='compute moments from samples or from a mixture')
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument('--samples', help='estimate multilinear moments from this sample file')
    source.add_argument('--mixture', help='compute the exact augmented moments of this mixture')
    sub.add_argument('--order', dest='m', type=int, required=True, help='moment order')
    sub.add_argument('--confidence', type=float,
                     help='failure probability for the reported accuracy of estimated moments')
    sub.add_argument('--multilinear-only', dest='multilinear_only', action='store_true',
                     default=None, help='keep only the multilinear entries of exact moments')
    sub.add_argument('--out', required=True, help='symtensor file to write')

    sub = subs.add_parser('complete-matrix', help='complete a matrix by nuclear norm minimization')
    sub.add_argument('--input', required=True, help='matrix CSV file')
    sub.add_argument('--mask', required=True, help='CSV file of 0/1, where 1 means observed')
    sub.add_argument('--rank', '--r', dest='r', type=int,
                     help='rank, for the recoverability diagnostics')
    sub.add_argument('--mu-u', dest='mu_u', type=float, help='column-space incoherence')
    sub.add_argument('--mu-v', dest='mu_v', type=float, help='row-space incoherence')
    sub.add_argument('--lambda', dest='lambda', type=float,
                     help='constant for the noisy-completion diagnostics')
    _add_solver_flags(sub)
    sub.add_argument('--out', required=True, help='completed matrix CSV file to write')
    sub.add_argument('--report', help='report JSON file (default: OUT.report.json)')

    sub = subs.add_parser('complete-tensor', help='complete a symmetric tensor from its '
                          'multilinear entries')
    sub.add_argument('--input', dest='tensor', required=True, help='symtensor file')
    sub.add_argument('--rank', '--r', dest='r', type=int,
                     help='slice rank (estimated if omitted)')
    sub.add_argument('--mu', type=float, help='slice incoherence (estimated if omitted)')
    sub.add_argument('--epsilon', type=float, help='entrywise noise level of the input')
    _add_solver_flags(sub)
    sub.add_argument('--out', required=True, help='completed symtensor file to write')
    sub.add_argument('--report', help='report JSON file (default: OUT.report.json)')

    sub = subs.add_parser('learn', help='learn a mixture from samples')
    sub.add_argument('--samples', required=True, help='sample file')
    sub.add_argument('--k', type=int, required=True, help='number of centers')
    sub.add_argument('--eta', type=float, help='lower bound on the separation of the centers')
    sub.add_argument('--epsilon', type=float, help='moment accuracy to check the sample size for')
    sub.add_argument('--confidence', type=float, help='failure probability for the accuracy')
    sub.add_argument('--truth', dest='mixture', help='mixture JSON file to score against')
    sub.add_argument('--seed', type=int, required=True, help='random seed')
    _add_solver_flags(sub)
    _add_decomposition_flags(sub)
    sub.add_argument('--report', required=True, help='report JSON file to write')

    sub = subs.add_parser('learn-exact', help='learn a mixture from its exact moments')
    sub.add_argument('--mixture', required=True, help='mixture JSON file')
    sub.add_argument('--m', type=int, help='odd power (default: the smallest that separates)')
    sub.add_argument('--k', type=int, help='number of centers (default: that of the mixture)')
    sub.add_argument('--multilinear-only', dest='multilinear_only', action='store_true',
                     default=None, help='drop the non-multilinear entries and complete them')
    sub.add_argument('--seed', type=int, help='random seed for power iteration (default 0)')
    _add_solver_flags(sub)
    _add_decomposition_flags(sub)
    sub.add_argument('--report', required=True, help='report JSON file to write')

    sub = subs.add_parser('eval', help='score a saved report against a mixture')
    sub.add_argument('--truth', dest='mixture', required=True, help='mixture JSON file')
    sub.add_argument('--estimate', required=True, help='report JSON file from learn')
    sub.add_argument('--report', required=True, help='scored report JSON file to write')
    return parser


def _fail(status, err, stage=None):
    message = {'error': err.__class__.__name__, 'message': str(err)}
    if stage is not None:
        message['stage'] = stage
    sys.stderr.write(json.dumps(message, sort_keys=True) + '\n')
    return status


def main(argv=None):
    """
    Parse the command line, run the experiment, and return the exit status.

    :rtype: int
    """
    args = vars(make_parser().parse_args(argv))
    level = logging.DEBUG if args.pop('verbose') else \
        (logging.WARNING if args.pop('quiet') else logging.INFO)
    args.pop('quiet', None)
    logging.basicConfig(level=level, format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        if args['mode'] == 'run':
            config = ExperimentConfig.from_json(args['config'])
        else:
            config = ExperimentConfig(**args)
        run(config)
    except workflow.StageError as stage_err:
        if stage_err.stage == 'validate':
            return _fail(EXIT_INVALID, stage_err.cause, stage_err.stage)
        return _fail(EXIT_NUMERICAL, stage_err.cause, stage_err.stage)
    except (ValueError, TypeError, OSError) as err:
        return _fail(EXIT_INVALID, err)
    except RuntimeError as err:
        return _fail(EXIT_NUMERICAL, err, getattr(err, 'stage', None))
    return EXIT_OK
