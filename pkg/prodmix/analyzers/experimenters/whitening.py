#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/experimenters/whitening.py
# Purpose:                Whitening maps for second-moment matrices.
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
Whitening: for a symmetric ``M`` with top-``k`` eigenpairs ``V``, ``D``, the map
``U = V D**(-1/2)`` satisfies ``U.T @ M @ U == I``. When ``M = sum_i w_i v_i v_i.T`` with
independent ``v_i``, the vectors ``sqrt(w_i) U.T v_i`` are orthonormal, so applying ``U`` to
``sum_i w_i v_i^{(x)3}`` gives an orthogonally decomposable tensor.

Going back uses ``B = V D**(1/2)``, which maps ``U.T v`` to ``v`` for ``v`` in the span of ``V``.
"""

import logging
import math

import numpy

from prodmix import linalg
from prodmix.analyzers import experimenter


logger = logging.getLogger(__name__)

# the k-th eigenvalue must exceed this fraction of the largest
RANK_DEFICIENCY_THRESHOLD = 1e-12


class WhiteningMap(object):
    """
    The result of :func:`whiten`.

    * ``transform``: the ``n`` by ``k`` matrix ``U`` with ``U.T @ M @ U == I``.
    * ``unwhiten``: the ``n`` by ``k`` matrix ``B = V D**(1/2)``.
    * ``eigenvalues``: the retained eigenvalues, largest first.
    """

    def __init__(self, transform, unwhiten, eigenvalues):
        super(WhiteningMap, self).__init__()
        self.transform = transform
        self.unwhiten = unwhiten
        self.eigenvalues = eigenvalues

    @property
    def k(self):
        return self.transform.shape[1]

    @property
    def dim(self):
        return self.transform.shape[0]

    @property
    def sigma_k(self):
        "The smallest retained eigenvalue."
        return float(self.eigenvalues[-1])

    def apply(self, tensor):
        """
        Whiten an order-3 tensor: ``T(U, U, U)``.

        :rtype: ``k`` by ``k`` by ``k`` :class:`numpy.ndarray`
        """
        return linalg.tensor_apply(tensor, self.transform)

    def error_bound(self, matrix_error, tensor_error):
        """
        How far the whitened tensor can be from the whitened exact tensor when the moment matrix
        is off by ``matrix_error`` and the order-3 moments by ``tensor_error`` (both in Frobenius
        norm): ``6 / sqrt(sigma_k) * matrix_error + tensor_error * ||U||_2**2 * ||U||_F``.

        :rtype: float
        """
        spectral = numpy.linalg.norm(self.transform, ord=2)
        frobenius = numpy.linalg.norm(self.transform)
        return 6.0 / math.sqrt(self.sigma_k) * matrix_error + \
            tensor_error * spectral ** 2 * frobenius

    def as_dict(self):
        return {'k': self.k, 'eigenvalues': [float(x) for x in self.eigenvalues],
                'sigma_k': self.sigma_k}


def whiten(matrix, k):
    """
    The whitening map of the top-``k`` eigenspace of a symmetric matrix. The matrix is
    symmetrized first, so round-off asymmetry is harmless.

    :param matrix: The second-moment matrix.
    :type matrix: square :class:`numpy.ndarray`
    :param int k: The number of eigenpairs to keep.

    :rtype: :class:`WhiteningMap`

    :raises: :exc:`ValueError` if ``k`` is out of range, or with ``'rank deficient'`` if the
        ``k``-th eigenvalue is not positive or is below ``1e-12`` times the largest.
    """
    matrix = numpy.asarray(matrix, dtype=numpy.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError('whitening needs a square matrix, got shape {}'.format(matrix.shape))
    if not 1 <= k <= matrix.shape[0]:
        raise ValueError('cannot keep {} eigenpairs of a {} matrix'.format(k, matrix.shape))
    values, vectors = numpy.linalg.eigh((matrix + matrix.T) / 2.0)
    values = values[::-1][:k]
    vectors = vectors[:, ::-1][:, :k]
    if values[-1] <= 0.0 or values[-1] < RANK_DEFICIENCY_THRESHOLD * values[0]:
        raise ValueError('rank deficient: eigenvalue {} is {:.3e} (largest {:.3e})'.format(
            k, values[-1], values[0]))
    logger.debug('whitening with eigenvalues %s', values)
    root = numpy.sqrt(values)
    return WhiteningMap(vectors / root, vectors * root, values)


class WhiteningExperimenter(experimenter.Experimenter):
    """
    Compute the :class:`WhiteningMap` of a second-moment matrix.
    """

    possible_settings = {'k': 'int; the number of eigenpairs to keep'}

    def __init__(self, index, settings=None):
        """
        :param index: The symmetric second-moment matrix.
        :type index: square :class:`numpy.ndarray`
        :param settings: Must hold ``'k'``.
        :type settings: dict

        :raises: :exc:`RuntimeError` if ``'k'`` is missing.
        """
        super(WhiteningExperimenter, self).__init__(index, settings)

    def run(self):
        """
        :rtype: :class:`WhiteningMap`

        :raises: :exc:`ValueError` if the matrix is rank deficient.
        """
        return whiten(self._index, int(self._settings['k']))
