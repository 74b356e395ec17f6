#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/experimenters/recovery.py
# Purpose:                Turn a decomposition back into mixture parameters, and score them.
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
Recover mixing weights and bias vectors from the decomposition of whitened moments, and compare
them with a known mixture.

With ``T(U, U, U) = sum_i lambda_i u_i^{(x)3}``, each weight is ``1 / lambda_i**2`` and each
flattened tensor power ``v_i^{(x)m}`` is ``lambda_i B u_i``, with ``B`` the un-whitening map.
The bias vector is read off the diagonal positions ``(j, j, ..., j)`` of that power by an odd
root.
"""

import json
import logging

import numpy
import pandas
from scipy.optimize import linear_sum_assignment


logger = logging.getLogger(__name__)

# the estimated weights should sum to a value inside this range
WEIGHT_SUM_RANGE = (0.5, 1.5)


def recover_parameters(decomposition, whitening):
    """
    Mixing weights and flattened tensor powers of the bias vectors.

    :param decomposition: The decomposition of the whitened order-3 moments.
    :type decomposition: :class:`~prodmix.analyzers.experimenters.power_iteration.OrthogonalDecomposition`
    :param whitening: The map used to whiten them.
    :type whitening: :class:`~prodmix.analyzers.experimenters.whitening.WhiteningMap`

    :returns: The flattened powers, one per row, and the weights.
    :rtype: 2-tuple of :class:`numpy.ndarray`

    :raises: :exc:`ValueError` if some ``lambda_i <= 0``.
    """
    values = numpy.asarray(decomposition.eigenvalues, dtype=numpy.float64)
    if numpy.any(values <= 0.0):
        raise ValueError('cannot recover a weight from lambda <= 0: {}'.format(values))
    weights = 1.0 / values ** 2
    flats = (values[:, numpy.newaxis] * (decomposition.vectors @ whitening.unwhiten.T))
    return flats, weights


def unflatten_root(flat, order, dim):
    """
    The bias vector ``v`` of a flattened tensor power ``v^{(x)m}``: ``v(j)`` is the signed
    ``m``-th root of the entry at ``(j, j, ..., j)``, clamped to ``[-1, 1]``.

    :param flat: The flattened power, of length ``dim ** order``.
    :type flat: 1-D :class:`numpy.ndarray`
    :param int order: The odd power ``m``.
    :param int dim: The dimension ``n``.

    :rtype: 1-D :class:`numpy.ndarray`

    :raises: :exc:`ValueError` if ``order`` is even or ``flat`` has the wrong length.
    """
    if order % 2 == 0:
        raise ValueError('roots need an odd power, got {}'.format(order))
    flat = numpy.asarray(flat, dtype=numpy.float64).ravel()
    if len(flat) != dim ** order:
        raise ValueError('expected {} entries, got {}'.format(dim ** order, len(flat)))
    diagonal = numpy.ravel_multi_index(numpy.tile(numpy.arange(dim), (order, 1)),
                                       (dim,) * order)
    entries = flat[diagonal]
    return numpy.clip(numpy.sign(entries) * numpy.abs(entries) ** (1.0 / order), -1.0, 1.0)


class RecoveryReport(object):
    """
    Estimated mixture parameters and everything known about them.

    * ``vectors`` and ``weights``: the estimates, one center per row.
    * ``order``: the power ``m`` used.
    * ``diagnostics``: a dict of upstream diagnostics (completion, whitening, decomposition,
      sampling), as JSON-friendly values.
    * ``weight_sum_ok``: whether the weights sum to a value in ``[0.5, 1.5]``.

    After :func:`match_and_score`, also ``permutation`` (the true center matched to each
    estimate), ``signs``, ``vector_errors`` and ``weight_errors``.
    """

    def __init__(self, vectors, weights, order, diagnostics=None):
        super(RecoveryReport, self).__init__()
        self.vectors = numpy.asarray(vectors, dtype=numpy.float64)
        self.weights = numpy.asarray(weights, dtype=numpy.float64)
        self.order = order
        self.diagnostics = diagnostics or {}
        self.permutation = None
        self.signs = None
        self.vector_errors = None
        self.weight_errors = None
        low, high = WEIGHT_SUM_RANGE
        self.weight_sum_ok = bool(low <= self.weights.sum() <= high)
        if not self.weight_sum_ok:
            logger.warning('estimated weights sum to %.4g', self.weights.sum())

    @property
    def k(self):
        return len(self.weights)

    @property
    def n(self):
        return self.vectors.shape[1]

    def is_scored(self):
        return self.permutation is not None

    def estimates(self):
        """
        One row per estimated center, with its weight and bias vector.

        :rtype: :class:`pandas.DataFrame`
        """
        frame = pandas.DataFrame(self.vectors, columns=['v{}'.format(j) for j in range(self.n)])
        frame.insert(0, 'weight', self.weights)
        frame.index.name = 'center'
        return frame

    def scores(self):
        """
        One row per estimated center with the matched true center, the sign, and the errors.

        :rtype: :class:`pandas.DataFrame`

        :raises: :exc:`RuntimeError` if :func:`match_and_score` was never called.
        """
        if not self.is_scored():
            raise RuntimeError('this report has not been scored')
        frame = pandas.DataFrame({'truth': self.permutation, 'sign': self.signs,
                                  'vector error': self.vector_errors,
                                  'weight error': self.weight_errors})
        frame.index.name = 'center'
        return frame

    def as_dict(self):
        post = {'k': self.k, 'n': self.n, 'order': self.order,
                'weights': self.weights.tolist(), 'vectors': self.vectors.tolist(),
                'weight_sum': float(self.weights.sum()), 'weight_sum_ok': self.weight_sum_ok,
                'diagnostics': self.diagnostics}
        if self.is_scored():
            post.update({'permutation': [int(x) for x in self.permutation],
                         'signs': [int(x) for x in self.signs],
                         'vector_errors': [float(x) for x in self.vector_errors],
                         'weight_errors': [float(x) for x in self.weight_errors],
                         'max_vector_error': float(max(self.vector_errors)),
                         'max_weight_error': float(max(self.weight_errors))})
        return post

    @classmethod
    def from_dict(cls, data):
        return cls(data['vectors'], data['weights'], data['order'], data.get('diagnostics'))

    def to_json(self, pathname):
        with open(pathname, 'w') as handle:
            json.dump(self.as_dict(), handle, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, pathname):
        with open(pathname, 'r') as handle:
            return cls.from_dict(json.load(handle))


def match_and_score(truth, report):
    """
    Match estimated centers to true ones. The matching minimizes the total of
    ``min_s ||s v_true - v_est||`` over ``s`` in ``{-1, +1}``, solved exactly as an assignment
    problem. The errors and matching are stored on ``report``.

    :param truth: The true mixture.
    :type truth: :class:`~prodmix.models.mixture.ProductMixture`
    :param report: The estimates.
    :type report: :class:`RecoveryReport`

    :returns: ``report``, now scored.
    :rtype: :class:`RecoveryReport`

    :raises: :exc:`ValueError` if the number of centers or the dimension differ.
    """
    if truth.k != report.k:
        raise ValueError('cannot match {} estimated centers to {} true ones'.format(report.k,
                                                                                  truth.k))
    if truth.n != report.n:
        raise ValueError('estimated dimension {} differs from true dimension {}'.format(
            report.n, truth.n))
    plus = numpy.linalg.norm(truth.vectors[:, numpy.newaxis, :] -
                             report.vectors[numpy.newaxis, :, :], axis=2)
    minus = numpy.linalg.norm(truth.vectors[:, numpy.newaxis, :] +
                              report.vectors[numpy.newaxis, :, :], axis=2)
    cost = numpy.minimum(plus, minus)
    rows, cols = linear_sum_assignment(cost)
    permutation = numpy.empty(report.k, dtype=int)
    permutation[cols] = rows
    estimate = numpy.arange(report.k)
    report.permutation = permutation
    report.signs = numpy.where(minus[permutation, estimate] < plus[permutation, estimate], -1, 1)
    report.vector_errors = cost[permutation, estimate]
    report.weight_errors = numpy.abs(truth.weights[permutation] - report.weights)
    logger.info('largest vector error %.3e, largest weight error %.3e',
                report.vector_errors.max(), report.weight_errors.max())
    return report
