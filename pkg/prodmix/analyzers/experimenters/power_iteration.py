#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/experimenters/power_iteration.py
# Purpose:                Robust tensor power iteration with deflation.
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
Decompose a (nearly) orthogonally decomposable symmetric tensor ``T = sum_i lambda_i u_i^{(x)3}``.

Each component comes from ``L`` random unit starting points, each run through ``iters`` power
updates ``u <- T(I, u, u) / ||T(I, u, u)||``. The start with the largest ``T(u, u, u)`` is run for
another ``iters`` updates, recorded, and deflated away before looking for the next component.
"""

import logging

import numpy

from prodmix.analyzers import experimenter
from prodmix.models.mixture import make_generator


logger = logging.getLogger(__name__)

# restarts per component are BASE_RESTARTS + RESTARTS_PER_COMPONENT * k
BASE_RESTARTS = 20
RESTARTS_PER_COMPONENT = 10
DEFAULT_ITERATIONS = 100


def default_restarts(k):
    return BASE_RESTARTS + RESTARTS_PER_COMPONENT * k


def _contract(tensor, vectors):
    "``T(I, u, u)`` for every row ``u`` of ``vectors``."
    return numpy.einsum('abc,lb,lc->la', tensor, vectors, vectors)


def power_iterate(tag, tensor, starts, iterations):
    """
    Run the power update from several starting points at once. A module-level function so it
    can be handed to a process pool.

    :param tag: Returned unchanged.
    :param tensor: The symmetric order-3 tensor.
    :type tensor: 3-D :class:`numpy.ndarray`
    :param starts: Unit starting vectors, one per row.
    :type starts: 2-D :class:`numpy.ndarray`
    :param int iterations: Number of updates.

    :returns: ``tag``, the final vectors, and ``T(u, u, u)`` for each of them.
    :rtype: 3-tuple
    """
    vectors = numpy.array(starts, dtype=numpy.float64)
    for _ in range(iterations):
        image = _contract(tensor, vectors)
        norms = numpy.linalg.norm(image, axis=1, keepdims=True)
        # a zero image leaves the vector where it is
        vectors = numpy.where(norms > 0.0, image / numpy.where(norms > 0.0, norms, 1.0), vectors)
    values = numpy.einsum('la,la->l', _contract(tensor, vectors), vectors)
    return tag, vectors, values


class OrthogonalDecomposition(object):
    """
    The result of :func:`tensor_power_iteration`.

    * ``vectors``: the components ``u_i``, one per row, sorted by decreasing ``lambda_i``.
    * ``eigenvalues``: the ``lambda_i``.
    * ``restarts`` and ``iterations``: the ``L`` and ``iters`` used.
    * ``residuals``: ``||T'(I, u_i, u_i) - lambda_i u_i||`` for the deflated tensor ``T'`` from
      which component ``i`` was taken.
    """

    def __init__(self, vectors, eigenvalues, restarts, iterations, residuals):
        super(OrthogonalDecomposition, self).__init__()
        self.vectors = vectors
        self.eigenvalues = eigenvalues
        self.restarts = restarts
        self.iterations = iterations
        self.residuals = residuals

    @property
    def k(self):
        return len(self.eigenvalues)

    def reconstruct(self):
        "``sum_i lambda_i u_i^{(x)3}``."
        return numpy.einsum('l,la,lb,lc->abc', self.eigenvalues, self.vectors, self.vectors,
                            self.vectors)

    def as_dict(self):
        return {'eigenvalues': [float(x) for x in self.eigenvalues], 'restarts': self.restarts,
                'iterations': self.iterations, 'residuals': [float(x) for x in self.residuals]}


class TensorPowerExperimenter(experimenter.Experimenter):
    """
    Decompose an orthogonally decomposable order-3 tensor with the robust tensor power method.
    """

    possible_settings = {'k': 'int; the number of components',
                         'restarts': 'int or None; starting points per component '
                                     '(None means 20 + 10 * k)',
                         'iterations': 'int; power updates per starting point',
                         'seed': 'int or numpy.random.SeedSequence; seed for the starting points'}

    default_settings = {'restarts': None, 'iterations': DEFAULT_ITERATIONS, 'seed': 0}

    _NON_POSITIVE = 'non-positive component: lambda_{} = {!r}'

    def __init__(self, index, settings=None):
        """
        :param index: The symmetric order-3 tensor.
        :type index: 3-D :class:`numpy.ndarray`
        :param settings: Must hold ``'k'``.
        :type settings: dict

        :raises: :exc:`RuntimeError` if ``'k'`` is missing.
        :raises: :exc:`ValueError` if the tensor is not cubical or ``k`` is out of range.
        """
        super(TensorPowerExperimenter, self).__init__(index, settings)
        self._index = numpy.asarray(self._index, dtype=numpy.float64)
        if self._index.ndim != 3 or len(set(self._index.shape)) != 1:
            raise ValueError('power iteration needs a cubical order-3 tensor, got shape {}'
                             .format(self._index.shape))
        self._k = int(self._settings['k'])
        if not 1 <= self._k:
            raise ValueError('k must be at least 1')
        self._restarts = self._settings['restarts'] or default_restarts(self._k)
        self._iterations = int(self._settings['iterations'])

    def run(self):
        """
        :rtype: :class:`OrthogonalDecomposition`

        :raises: :exc:`ValueError` with ``'non-positive component'`` if the best start of some
            component has ``lambda <= 0``.
        """
        rng = make_generator(self._settings['seed'])
        residual_tensor = self._index.copy()
        dim = residual_tensor.shape[0]
        vectors, values, residuals = [], [], []
        for comp in range(self._k):
            starts = rng.standard_normal((self._restarts, dim))
            starts /= numpy.linalg.norm(starts, axis=1, keepdims=True)
            results = self._do_multiprocessing(power_iterate,
                                               [(comp, residual_tensor, starts, self._iterations)])
            _, found, found_values = results[0]
            best = int(numpy.argmax(found_values))
            _, refined, refined_value = power_iterate(comp, residual_tensor, found[best:best + 1],
                                                      self._iterations)
            vector, value = refined[0], float(refined_value[0])
            if value <= 0.0:
                raise ValueError(TensorPowerExperimenter._NON_POSITIVE.format(comp + 1, value))
            residuals.append(float(numpy.linalg.norm(
                _contract(residual_tensor, vector[numpy.newaxis])[0] - value * vector)))
            logger.debug('component %d: lambda = %.6g', comp + 1, value)
            vectors.append(vector)
            values.append(value)
            residual_tensor = residual_tensor - value * numpy.einsum('a,b,c->abc', vector, vector,
                                                                     vector)
        order = numpy.argsort(values)[::-1]
        return OrthogonalDecomposition(numpy.array(vectors)[order], numpy.array(values)[order],
                                       self._restarts, self._iterations,
                                       numpy.array(residuals)[order])


def tensor_power_iteration(tensor, k, restarts=None, iterations=DEFAULT_ITERATIONS, seed=0):
    """
    Decompose ``T ~= sum_i lambda_i u_i^{(x)3}`` with the robust tensor power method.

    :param tensor: The symmetric order-3 tensor over ``R^k``.
    :type tensor: 3-D :class:`numpy.ndarray`
    :param int k: The number of components.
    :param restarts: Starting points per component. Defaults to ``20 + 10 * k``.
    :type restarts: int or None
    :param int iterations: Power updates per starting point.
    :param seed: Seed for the starting points.

    :rtype: :class:`OrthogonalDecomposition`

    :raises: :exc:`ValueError` with ``'non-positive component'`` if some ``lambda <= 0``.
    """
    return TensorPowerExperimenter(tensor, {'k': k, 'restarts': restarts,
                                            'iterations': iterations, 'seed': seed}).run()
