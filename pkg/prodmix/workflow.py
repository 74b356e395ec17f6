#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/workflow.py
# Purpose:                The learning pipelines, and a WorkflowManager to run them.
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
The learning pipelines. :func:`learn_mixture_exact` starts from moment tensors of orders ``2m``
and ``3m``; :func:`learn_mixture_sampled` starts from samples and estimates those moments first.
Both go through the same stages:

#. ``complete``: fill in the non-multilinear entries of both tensors.
#. ``flatten``: turn them into an ``n**m`` by ``n**m`` matrix and an order-3 tensor.
#. ``whiten``: whiten the tensor with the top-``k`` eigenspace of the matrix.
#. ``decompose``: run tensor power iteration on the whitened tensor.
#. ``recover``: read off the weights and the flattened powers of the bias vectors.
#. ``roots``: take odd roots of the diagonal entries to get the bias vectors.

An exception raised in a stage comes out as a :class:`StageError` naming the stage.

The :class:`WorkflowManager` wraps both pipelines with settings and export, for interactive use.
"""

from contextlib import contextmanager
from collections import OrderedDict
import logging
import time

import numpy
import pandas

from prodmix.analyzers.completers import tensor as tensor_completion
from prodmix.analyzers.completers.matrix import CompletionSettings
from prodmix.analyzers.experimenters import power_iteration, recovery, whitening
from prodmix.models import mixture
from prodmix.models.symmetric_tensor import SymmetricTensor, flatten_even, flatten_triple


logger = logging.getLogger(__name__)

# settings understood by the pipelines, with their defaults
DEFAULT_SETTINGS = {'restarts': None,
                    'iterations': power_iteration.DEFAULT_ITERATIONS,
                    'seed': 0,
                    'rank': None,
                    'mu': None,
                    'epsilon': 0.0,
                    'accuracy': 0.05,
                    'confidence': 0.01,
                    'completion': {},
                    'record timings': False}

# solver tolerance used for estimated moments unless the caller sets one
SAMPLED_TOLERANCE = 1e-7


class StageError(RuntimeError):
    """
    A pipeline stage failed. ``stage`` names it and ``cause`` holds the original exception.
    """

    def __init__(self, stage, cause):
        super(StageError, self).__init__('stage "{}" failed: {}'.format(stage, cause))
        self.stage = stage
        self.cause = cause


@contextmanager
def _stage(name, timings):
    logger.info('stage %s', name)
    start = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as err:
        logger.error('stage %s failed: %s', name, err)
        raise StageError(name, err) from err
    finally:
        timings[name] = time.perf_counter() - start
        logger.info('stage %s took %.3f s', name, timings[name])


def _merge_settings(settings):
    merged = dict(DEFAULT_SETTINGS)
    unknown = set(settings or {}) - set(DEFAULT_SETTINGS)
    if unknown:
        raise ValueError('unknown pipeline settings: {}'.format(', '.join(sorted(unknown))))
    merged.update(settings or {})
    return merged


def _complete(tensor, settings, epsilon):
    "Complete one moment tensor, or skip it when nothing is missing."
    if tensor.is_complete():
        logger.info('order-%d moments are complete; skipping completion', tensor.order)
        return tensor, {'skipped': True}
    comp_settings = dict(settings['completion'])
    comp_settings.update({'rank': settings['rank'], 'mu': settings['mu'], 'epsilon': epsilon})
    report = tensor_completion.SymmetricTensorCompleter(tensor, comp_settings).run()
    post = report.as_dict()
    post['skipped'] = False
    return report.tensor, post


def _learn(second, third, k, order, settings, timings, diagnostics):
    dim = second.dim
    epsilon = settings['epsilon']
    with _stage('complete', timings):
        second, diagnostics['completion_2m'] = _complete(second, settings, epsilon)
        third, diagnostics['completion_3m'] = _complete(third, settings, epsilon)
    with _stage('flatten', timings):
        matrix = flatten_even(second)
        cube = flatten_triple(third)
    with _stage('whiten', timings):
        white = whitening.WhiteningExperimenter(matrix, {'k': k}).run()
        whitened = white.apply(cube)
        diagnostics['whitening'] = white.as_dict()
    with _stage('decompose', timings):
        decomposition = power_iteration.TensorPowerExperimenter(
            whitened, {'k': k, 'restarts': settings['restarts'],
                       'iterations': settings['iterations'], 'seed': settings['seed']}).run()
        diagnostics['decomposition'] = decomposition.as_dict()
    with _stage('recover', timings):
        flats, weights = recovery.recover_parameters(decomposition, white)
    with _stage('roots', timings):
        vectors = numpy.array([recovery.unflatten_root(flat, order, dim) for flat in flats])
    return vectors, weights


def _finish(vectors, weights, order, settings, timings, diagnostics, truth):
    if settings['record timings']:
        diagnostics['timings'] = dict(timings)
    report = recovery.RecoveryReport(vectors, weights, order, diagnostics)
    if truth is not None:
        recovery.match_and_score(truth, report)
    return report


def learn_mixture_exact(second, third, k, order, settings=None, truth=None):
    """
    Learn a mixture from its moment tensors of orders ``2m`` and ``3m``. Only their multilinear
    entries need to be present. Fully present tensors are taken as exact and not completed.

    :param second: The order-``2m`` moments.
    :type second: :class:`~prodmix.models.symmetric_tensor.SymmetricTensor`
    :param third: The order-``3m`` moments.
    :type third: :class:`~prodmix.models.symmetric_tensor.SymmetricTensor`
    :param int k: The number of centers.
    :param int order: The odd power ``m``.
    :param settings: Pipeline settings; see :data:`DEFAULT_SETTINGS`.
    :type settings: dict or None
    :param truth: If given, the estimates are matched and scored against it.
    :type truth: :class:`~prodmix.models.mixture.ProductMixture` or None

    :rtype: :class:`~prodmix.analyzers.experimenters.recovery.RecoveryReport`

    :raises: :exc:`StageError` if a stage fails. Argument problems fail in stage ``validate``.
    """
    timings = OrderedDict()
    diagnostics = {}
    with _stage('validate', timings):
        settings = _merge_settings(settings)
        _validate(second, third, k, order)
    vectors, weights = _learn(second, third, k, order, settings, timings, diagnostics)
    return _finish(vectors, weights, order, settings, timings, diagnostics, truth)


def _validate(second, third, k, order):
    if not isinstance(second, SymmetricTensor) or not isinstance(third, SymmetricTensor):
        raise TypeError('the moments must be SymmetricTensor instances')
    if order < 1 or order % 2 == 0:
        raise ValueError('the power m must be a positive odd integer, got {}'.format(order))
    if second.order != 2 * order or third.order != 3 * order:
        raise ValueError('expected moments of orders {} and {}, got {} and {}'.format(
            2 * order, 3 * order, second.order, third.order))
    if second.dim != third.dim:
        raise ValueError('the moments have dimensions {} and {}'.format(second.dim, third.dim))
    if not 1 <= k <= second.dim ** order:
        raise ValueError('cannot learn {} centers from powers of dimension {}'.format(
            k, second.dim ** order))


def learn_mixture_sampled(samples, k, eta=None, settings=None, truth=None):
    """
    Learn a mixture from samples. The power ``m`` is the smallest odd power that separates the
    centers when ``eta`` is given, and ``1`` otherwise (for linearly independent centers). The
    multilinear moments of orders ``2m`` and ``3m`` are estimated from the samples and passed
    through the same stages as :func:`learn_mixture_exact`.

    The report's diagnostics hold the sample count, the accuracy that many samples achieve
    with probability ``1 - confidence``, the resulting error terms after completion, and how
    many samples the ``accuracy`` setting would need.

    :param samples: The samples.
    :type samples: :class:`~prodmix.models.mixture.SampleSet`
    :param int k: The number of centers.
    :param eta: A lower bound on the separation of the centers.
    :type eta: float or None
    :param settings: Pipeline settings; see :data:`DEFAULT_SETTINGS`.
    :type settings: dict or None
    :param truth: If given, the estimates are matched and scored against it.
    :type truth: :class:`~prodmix.models.mixture.ProductMixture` or None

    :rtype: :class:`~prodmix.analyzers.experimenters.recovery.RecoveryReport`

    :raises: :exc:`StageError` if a stage fails.

    **Warns**

    :class:`~prodmix.models.mixture.MomentAccuracyWarning` if there are fewer samples than the
    ``accuracy`` setting needs.
    """
    timings = OrderedDict()
    diagnostics = {}
    with _stage('validate', timings):
        settings = _merge_settings(settings)
        if 'tolerance' not in settings['completion']:
            settings['completion'] = dict(settings['completion'], tolerance=SAMPLED_TOLERANCE)
        if not isinstance(samples, mixture.SampleSet):
            raise TypeError('learn_mixture_sampled() needs a SampleSet')
        if k < 1:
            raise ValueError('k must be at least 1')
        order = 1 if eta is None else mixture.min_odd_power(k, eta)
        if 3 * order > samples.n:
            raise ValueError('order-{} moments need at least {} coordinates, got {}'.format(
                3 * order, 3 * order, samples.n))
        logger.info('learning %d centers from %d samples with power m = %d', k, samples.size,
                    order)
    with _stage('moments', timings):
        second = mixture.empirical_multilinear_moments(samples, 2 * order)
        third = mixture.empirical_multilinear_moments(samples, 3 * order)
        achieved = mixture.hoeffding_accuracy(samples.size, samples.n, 3 * order,
                                              settings['confidence'])
        request = mixture.MomentRequest(3 * order, settings['accuracy'], settings['confidence'])
        needed = mixture.check_sample_size(samples, request)
        matrix_term, tensor_term = mixture.sample_error_terms(achieved, samples.n, order)
        diagnostics['sampling'] = {'samples': samples.size, 'seed': samples.seed,
                                   'eta': eta, 'achieved_accuracy': achieved,
                                   'requested_accuracy': settings['accuracy'],
                                   'confidence': settings['confidence'],
                                   'required_samples': needed,
                                   'enough_samples': samples.size >= needed,
                                   'matrix_error_term': matrix_term,
                                   'tensor_error_term': tensor_term}
        settings['epsilon'] = achieved
    vectors, weights = _learn(second, third, k, order, settings, timings, diagnostics)
    return _finish(vectors, weights, order, settings, timings, diagnostics, truth)


class WorkflowManager(object):
    """
    :parameter data: Either a :class:`~prodmix.models.mixture.SampleSet`, or a pair of
        :class:`~prodmix.models.symmetric_tensor.SymmetricTensor` holding moments of orders
        ``2m`` and ``3m``.

    The :class:`WorkflowManager` runs the learning pipelines. Use it with these tasks:

    * :meth:`settings`, to get or set a setting (for example the number of centers).
    * :meth:`run`, to learn the mixture.
    * :meth:`export`, to save the most recent result.

    >>> wm = WorkflowManager(samples)
    >>> wm.settings('k', 3)
    >>> report = wm.run('learn sampled')
    """

    # Instance Variables
    # - self._data: the SampleSet or the pair of moment tensors
    # - self._result: the RecoveryReport from the most recent call to run()
    # - self._settings: the settings

    # names of the experiments available through run()
    _experiments_list = ['learn exact', 'learn sampled']

    _RUN_ERR = 'WorkflowManager.run() could not parse the instruction "{}"'
    _DATA_ERR = '"{}" needs {}'
    _K_ERR = 'Please set "k" before you call run()'

    def __init__(self, data):
        self._data = data
        self._result = None
        self._settings = dict(DEFAULT_SETTINGS)
        self._settings.update({'k': None, 'order': None, 'eta': None, 'truth': None})

    def settings(self, field, value=None):
        """
        Get or set a setting.

        :param str field: The name of the setting.
        :param value: If not ``None``, the new value of ``field``.

        :returns: The value of ``field``, or ``None`` when assigning.

        :raises: :exc:`AttributeError` if ``field`` is not a setting.

        **Settings**

        * ``k``: The number of centers. Required.
        * ``order``: The odd power ``m`` of the moments, for ``'learn exact'``. By default it is
            a third of the order of the second tensor.
        * ``eta``: A lower bound on the separation, for ``'learn sampled'``.
        * ``truth``: A :class:`~prodmix.models.mixture.ProductMixture` to score against.
        * ``completion``: A dict of
            :class:`~prodmix.analyzers.completers.matrix.CompletionSettings` arguments.
        * ``restarts``, ``iterations``, ``seed``: For the tensor power iteration.
        * ``rank``, ``mu``: For the tensor completion. Estimated when ``None``.
        * ``epsilon``: The entrywise noise of exact moments, for the completion error bounds.
        * ``accuracy``, ``confidence``: The moment accuracy wanted from samples, and the allowed
            failure probability.
        * ``record timings``: Whether reports include the time spent in each stage.
        """
        if field not in self._settings:
            raise AttributeError('Invalid setting: {}'.format(field))
        if value is None:
            return self._settings[field]
        if field == 'completion':
            CompletionSettings.from_dict(value)
        self._settings[field] = value

    def run(self, instruction):
        """
        Run a pipeline.

        :param str instruction: Either ``'learn exact'`` or ``'learn sampled'``.

        :returns: The estimates.
        :rtype: :class:`~prodmix.analyzers.experimenters.recovery.RecoveryReport`

        :raises: :exc:`RuntimeError` if the instruction is not recognized, if ``k`` is not set,
            or if the data do not suit the instruction.
        :raises: :exc:`StageError` if a stage fails.
        """
        if self._settings['k'] is None:
            raise RuntimeError(WorkflowManager._K_ERR)
        pipeline_settings = {key: self._settings[key] for key in DEFAULT_SETTINGS}
        if instruction == WorkflowManager._experiments_list[0]:
            if not isinstance(self._data, (tuple, list)) or len(self._data) != 2:
                raise RuntimeError(WorkflowManager._DATA_ERR.format(instruction,
                                                                    'two moment tensors'))
            second, third = self._data
            order = self._settings['order'] or third.order // 3
            post = learn_mixture_exact(second, third, self._settings['k'], order,
                                       pipeline_settings, self._settings['truth'])
        elif instruction == WorkflowManager._experiments_list[1]:
            if not isinstance(self._data, mixture.SampleSet):
                raise RuntimeError(WorkflowManager._DATA_ERR.format(instruction, 'a SampleSet'))
            post = learn_mixture_sampled(self._data, self._settings['k'], self._settings['eta'],
                                         pipeline_settings, self._settings['truth'])
        else:
            raise RuntimeError(WorkflowManager._RUN_ERR.format(instruction))
        self._result = post
        return post

    def _get_dataframe(self):
        "The estimates of the most recent result, joined with the scores when there are any."
        frame = self._result.estimates()
        if self._result.is_scored():
            frame = pandas.concat([frame, self._result.scores()], axis=1)
        return frame

    def export(self, form, pathname):
        """
        Save the most recent result of :meth:`run` to a file.

        :param str form: ``'CSV'``, ``'HTML'`` or ``'JSON'``.
        :param str pathname: Where to write. The file extension is added if missing.

        :returns: The pathname of the written file.
        :rtype: str

        :raises: :exc:`RuntimeError` for an unrecognized format.
        :raises: :exc:`RuntimeError` if :meth:`run` has never been called.

        Formats:

        * ``'CSV'``: one row per estimated center with its weight, bias vector, and scores.
        * ``'HTML'``: the same table, as HTML.
        * ``'JSON'``: the whole report, diagnostics included.
        """
        if self._result is None:
            raise RuntimeError('Call run() before calling export()')
        if form == 'JSON':
            directory = {'JSON': ('.json', self._result.to_json)}
        else:
            export_me = self._get_dataframe()
            directory = {'CSV': ('.csv', export_me.to_csv),
                         'HTML': ('.html', export_me.to_html)}
        if form not in directory:
            raise RuntimeError('Unrecognized output format: {}'.format(form))
        extension, method = directory[form]
        if not pathname.endswith(extension):
            pathname += extension
        method(pathname)
        return pathname
