#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/linalg.py
# Purpose:                Subspaces, incoherence, trilinear transforms, and matrix files.
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
Dense linear algebra shared by the completion and decomposition analyzers.
"""

import logging

import numpy
import pandas


logger = logging.getLogger(__name__)

# columns of a SubspaceBasis must be orthonormal to this tolerance
ORTHONORMAL_TOLERANCE = 1e-10


class SubspaceBasis(object):
    """
    An orthonormal basis of an ``r``-dimensional subspace of ``R^n``, stored as the columns of an
    ``n`` by ``r`` matrix.

    :param columns: The basis vectors, one per column.
    :type columns: 2-D :class:`numpy.ndarray`
    :param float tolerance: Largest allowed entry of ``columns.T @ columns - I``.

    :raises: :exc:`ValueError` if the columns are not orthonormal.
    """

    _ORTHO_ERR = 'basis columns are not orthonormal (deviation {:.3g})'

    def __init__(self, columns, tolerance=ORTHONORMAL_TOLERANCE):
        super(SubspaceBasis, self).__init__()
        columns = numpy.array(columns, dtype=numpy.float64)
        if columns.ndim == 1:
            columns = columns.reshape(-1, 1)
        if columns.shape[1]:
            deviation = numpy.abs(columns.T @ columns - numpy.eye(columns.shape[1])).max()
            if deviation > tolerance:
                raise ValueError(SubspaceBasis._ORTHO_ERR.format(deviation))
        columns.flags.writeable = False
        self._columns = columns

    @property
    def columns(self):
        return self._columns

    @property
    def dim(self):
        "The ambient dimension ``n``."
        return self._columns.shape[0]

    @property
    def rank(self):
        "The subspace dimension ``r``."
        return self._columns.shape[1]

    @classmethod
    def from_span(cls, vectors):
        """
        An orthonormal basis for the span of some (not necessarily independent) column vectors.
        """
        return column_space(vectors)[1]


def column_space(matrix, threshold=1e-8):
    """
    Numerical rank and orthonormal basis of the column space of a matrix. Singular values below
    ``threshold`` times the largest one are treated as zero.

    :param matrix: The matrix.
    :type matrix: 2-D :class:`numpy.ndarray`
    :param float threshold: Relative singular value cutoff.

    :returns: The numerical rank and the basis.
    :rtype: 2-tuple of int and :class:`SubspaceBasis`
    """
    matrix = numpy.atleast_2d(numpy.asarray(matrix, dtype=numpy.float64))
    left, sing, _ = numpy.linalg.svd(matrix, full_matrices=False)
    if not len(sing) or sing[0] == 0.0:
        return 0, SubspaceBasis(numpy.zeros((matrix.shape[0], 0)))
    rank = int(numpy.sum(sing > threshold * sing[0]))
    return rank, SubspaceBasis(left[:, :rank])


def incoherence(basis):
    """
    The incoherence ``mu = (n / r) * max_i ||P_U e_i||**2`` of a subspace, where ``P_U`` is the
    orthogonal projection onto it. The value lies in ``[1, n / r]``.

    :param basis: The subspace.
    :type basis: :class:`SubspaceBasis`

    :rtype: float

    :raises: :exc:`ValueError` with ``'empty subspace'`` if the rank is zero.
    """
    if basis.rank == 0:
        raise ValueError('empty subspace')
    # ||P_U e_i||^2 is the squared norm of row i of an orthonormal basis
    leverage = numpy.sum(basis.columns ** 2, axis=1)
    return float(basis.dim / basis.rank * leverage.max())


def tensor_apply(tensor, transform):
    """
    The multilinear transform ``T(W, W, W)`` with entries
    ``sum T[a', b', c'] W[a', a] W[b', b] W[c', c]``.

    :param tensor: An order-3 tensor over ``R^n``.
    :type tensor: 3-D :class:`numpy.ndarray`
    :param transform: An ``n`` by ``k`` matrix.
    :type transform: 2-D :class:`numpy.ndarray`

    :returns: An order-3 tensor over ``R^k``.
    :rtype: 3-D :class:`numpy.ndarray`

    :raises: :exc:`ValueError` if the dimensions do not match.
    """
    tensor = numpy.asarray(tensor, dtype=numpy.float64)
    transform = numpy.asarray(transform, dtype=numpy.float64)
    if transform.ndim != 2 or tensor.ndim != 3 or \
            set(tensor.shape) != {transform.shape[0]}:
        raise ValueError('cannot apply a {} matrix to a tensor of shape {}'.format(
            transform.shape, tensor.shape))
    return numpy.einsum('abc,ai,bj,ck->ijk', tensor, transform, transform, transform,
                        optimize=True)


def tensor_power(vector, times):
    """
    The flattened tensor power ``v ⊗ v ⊗ ... ⊗ v``, in the lexicographic index order used by
    :func:`~prodmix.models.symmetric_tensor.flatten_even`.

    :rtype: 1-D :class:`numpy.ndarray` of length ``len(vector) ** times``
    """
    vector = numpy.asarray(vector, dtype=numpy.float64)
    post = numpy.ones(1)
    for _ in range(times):
        post = numpy.outer(post, vector).ravel()
    return post


def tensor_power_inner(first, second, times):
    """
    The inner product of two flattened tensor powers. It equals ``<u, w> ** times``.

    :rtype: float
    """
    return float(tensor_power(first, times) @ tensor_power(second, times))


def read_matrix_csv(pathname):
    """
    Read a matrix written by :func:`write_matrix_csv`: one header line ``rows,cols``, then one
    comma-separated row per line.

    :rtype: 2-D :class:`numpy.ndarray`

    :raises: :exc:`ValueError` if the shape does not match the header or an entry is not finite.
    """
    with open(pathname, 'r') as handle:
        try:
            rows, cols = (int(x) for x in handle.readline().strip().split(','))
        except ValueError:
            raise ValueError('bad matrix header in {}'.format(pathname))
        frame = pandas.read_csv(handle, header=None)
    matrix = frame.to_numpy(dtype=numpy.float64)
    if matrix.shape != (rows, cols):
        raise ValueError('{} holds a {} matrix, header says {}'.format(pathname, matrix.shape,
                                                                       (rows, cols)))
    if not numpy.all(numpy.isfinite(matrix)):
        raise ValueError('matrix in {} has non-finite entries'.format(pathname))
    return matrix


def write_matrix_csv(matrix, pathname):
    """
    Write a matrix as CSV with a ``rows,cols`` header line.
    """
    matrix = numpy.atleast_2d(numpy.asarray(matrix, dtype=numpy.float64))
    with open(pathname, 'w') as handle:
        handle.write('{},{}\n'.format(*matrix.shape))
        pandas.DataFrame(matrix).to_csv(handle, header=False, index=False, float_format='%.17g')
