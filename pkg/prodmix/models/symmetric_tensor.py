#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/models/symmetric_tensor.py
# Purpose:                Symmetric tensors stored once per multiset index.
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
The :class:`SymmetricTensor` holds a symmetric tensor of order ``m`` over dimension ``n`` with a
presence flag for every entry. Each entry is stored once, at the position of its *canonical*
index: the multi-index sorted in ascending order. An index string such as ``(2, 0, 2)`` has the
canonical index ``(0, 2, 2)``, and so do ``(2, 2, 0)`` and ``(0, 2, 2)``.

Storage offsets come from the colexicographic rank of the multiset: with ``a_0 <= a_1 <= ...``
the canonical index and ``b_i = a_i + i``, the offset is the sum of ``C(b_i, i + 1)``. This is a
bijection onto ``range(multiset_count(n, m))``.

Use a :class:`SymmetricTensorBuilder` to fill in entries one at a time. A finished
:class:`SymmetricTensor` cannot be modified.
"""

import functools
import itertools
import logging
import math
from collections import Counter

import numpy
import pandas


logger = logging.getLogger(__name__)

# number of full (non-canonical) positions handled at once by to_dense() and symmetrize()
_CHUNK_SIZE = 1 << 20

# first line of a symtensor file
_FILE_HEADER = 'symtensor v1 order={} dim={}'


def as_index(symbols, dim=None, order=None):
    """
    Validate an index string.

    :param symbols: The coordinate indices.
    :type symbols: iterable of int
    :param dim: If not ``None``, every symbol must lie in ``range(dim)``.
    :type dim: int or None
    :param order: If not ``None``, the index string must have this length.
    :type order: int or None

    :returns: The index string.
    :rtype: tuple of int

    :raises: :exc:`ValueError` if a symbol is out of range or the length is wrong.
    """
    index = tuple(int(x) for x in symbols)
    if order is not None and len(index) != order:
        raise ValueError(SymmetricTensor._LENGTH_ERR.format(len(index), order))
    if dim is not None:
        for symbol in index:
            if symbol < 0 or symbol >= dim:
                raise ValueError(SymmetricTensor._SYMBOL_ERR.format(symbol, dim))
    return index


def histogram(index):
    """
    Count how many times each symbol appears in an index string.

    >>> histogram((1, 1, 2, 3))
    (2, 1, 1)

    :param index: The index string.
    :type index: sequence of int

    :returns: The repetition counts, largest first. Its length is the number of distinct symbols.
    :rtype: tuple of int
    """
    return tuple(sorted(Counter(index).values(), reverse=True))


def is_multilinear(index):
    """
    Whether every symbol in the index string is different.

    :param index: The index string.
    :type index: sequence of int

    :rtype: bool
    """
    return len(set(index)) == len(index)


def multiset_count(dim, order):
    """
    Number of canonical indices in a symmetric tensor, ``C(dim + order - 1, order)``.

    :rtype: int
    """
    if order == 0:
        return 1
    return math.comb(dim + order - 1, order)


@functools.lru_cache(maxsize=64)
def _binomial_table(dim, order):
    """
    The table ``C(a, j)`` for ``a < dim + order`` and ``j <= order``, as 64-bit integers.
    """
    table = numpy.zeros((dim + order, order + 1), dtype=numpy.int64)
    for a in range(dim + order):
        for j in range(order + 1):
            table[a, j] = math.comb(a, j)
    table.flags.writeable = False
    return table


def rank_sorted(rows, dim):
    """
    Storage offsets of many canonical indices at once.

    :param rows: Canonical indices, one per row, each sorted ascending.
    :type rows: 2-D :class:`numpy.ndarray` of int
    :param int dim: The tensor dimension.

    :returns: The storage offset of every row.
    :rtype: 1-D :class:`numpy.ndarray` of int64
    """
    rows = numpy.asarray(rows, dtype=numpy.int64)
    order = rows.shape[1]
    if order == 0:
        return numpy.zeros(rows.shape[0], dtype=numpy.int64)
    table = _binomial_table(dim, order)
    shifted = rows + numpy.arange(order, dtype=numpy.int64)
    ranks = numpy.zeros(rows.shape[0], dtype=numpy.int64)
    for i in range(order):
        ranks += table[shifted[:, i], i + 1]
    return ranks


def canonical_rank(index, dim):
    """
    Storage offset of one index string, which need not be sorted.

    :param index: The index string.
    :type index: sequence of int
    :param int dim: The tensor dimension.

    :rtype: int
    """
    return int(rank_sorted(numpy.array([sorted(index)], dtype=numpy.int64).reshape(1, len(index)),
                           dim)[0])


def canonical_indices(dim, order):
    """
    Every canonical index of a symmetric tensor, in lexicographic order.

    :returns: One canonical index per row.
    :rtype: 2-D :class:`numpy.ndarray` of int64
    """
    rows = list(itertools.combinations_with_replacement(range(dim), order))
    return numpy.array(rows, dtype=numpy.int64).reshape(len(rows), order)


def _full_index_chunks(dim, order):
    """
    Yield ``(start, rows)`` pairs covering every position of the dense ``dim**order`` array in C
    order, where ``rows`` holds the corresponding full multi-indices.
    """
    total = dim ** order
    for start in range(0, total, _CHUNK_SIZE):
        flat = numpy.arange(start, min(start + _CHUNK_SIZE, total), dtype=numpy.int64)
        if order == 0:
            yield start, numpy.zeros((len(flat), 0), dtype=numpy.int64)
        else:
            yield start, numpy.stack(numpy.unravel_index(flat, (dim,) * order), axis=1)


class SymmetricTensor(object):
    """
    A symmetric tensor of order ``m`` over dimension ``n`` in canonical storage, with a presence
    flag for every canonical entry.

    Reading an absent entry raises :exc:`KeyError`. Use :meth:`get` for a default value instead.

    :param int order: The order ``m`` of the tensor.
    :param int dim: The dimension ``n`` of the tensor.
    :param values: Entry values in storage order. Defaults to zeros.
    :type values: 1-D :class:`numpy.ndarray` or None
    :param mask: Presence flags in storage order. Defaults to all present when ``values`` is
        given, and to all absent otherwise.
    :type mask: 1-D :class:`numpy.ndarray` of bool or None

    :raises: :exc:`ValueError` if the arrays have the wrong length or a present value is not
        finite.
    """

    # Error messages
    _LENGTH_ERR = 'index string has length {}, expected {}'
    _SYMBOL_ERR = 'symbol {} is outside range({})'
    _SIZE_ERR = 'expected {} canonical entries, got {}'
    _FINITE_ERR = 'present entries must be finite'
    _ABSENT_ERR = 'entry {} is not present'
    _INCOMPLETE_ERR = 'tensor has {} missing entries'
    _ORDER_ERR = 'tensor of order {} cannot be flattened into {} parts'
    _SLICE_ERR = 'slice needs an index string of length {}, got {}'

    def __init__(self, order, dim, values=None, mask=None):
        super(SymmetricTensor, self).__init__()
        if order < 0 or dim < 1:
            raise ValueError('order must be >= 0 and dim >= 1 (got {}, {})'.format(order, dim))
        self._order = int(order)
        self._dim = int(dim)
        count = multiset_count(self._dim, self._order)
        if values is None:
            values = numpy.zeros(count)
            if mask is None:
                mask = numpy.zeros(count, dtype=bool)
        values = numpy.array(values, dtype=numpy.float64).ravel()
        if mask is None:
            mask = numpy.ones(count, dtype=bool)
        mask = numpy.array(mask, dtype=bool).ravel()
        if len(values) != count:
            raise ValueError(SymmetricTensor._SIZE_ERR.format(count, len(values)))
        if len(mask) != count:
            raise ValueError(SymmetricTensor._SIZE_ERR.format(count, len(mask)))
        if not numpy.all(numpy.isfinite(values[mask])):
            raise ValueError(SymmetricTensor._FINITE_ERR)
        values[~mask] = 0.0
        values.flags.writeable = False
        mask.flags.writeable = False
        self._values = values
        self._mask = mask

    @property
    def order(self):
        "The order ``m``."
        return self._order

    @property
    def dim(self):
        "The dimension ``n``."
        return self._dim

    @property
    def values(self):
        "Read-only entry values in storage order. Absent entries hold ``0.0``."
        return self._values

    @property
    def mask(self):
        "Read-only presence flags in storage order."
        return self._mask

    def __len__(self):
        return len(self._values)

    def __repr__(self):
        return 'SymmetricTensor(order={}, dim={}, present={}/{})'.format(
            self._order, self._dim, int(self._mask.sum()), len(self._mask))

    def rank(self, index):
        """
        Storage offset of an index string, after checking it.

        :raises: :exc:`ValueError` for an invalid index string.
        """
        return canonical_rank(as_index(index, self._dim, self._order), self._dim)

    def is_present(self, index):
        return bool(self._mask[self.rank(index)])

    def __getitem__(self, index):
        pos = self.rank(index)
        if not self._mask[pos]:
            raise KeyError(SymmetricTensor._ABSENT_ERR.format(tuple(sorted(index))))
        return float(self._values[pos])

    def get(self, index, default=None):
        pos = self.rank(index)
        return float(self._values[pos]) if self._mask[pos] else default

    def is_complete(self):
        return bool(self._mask.all())

    def indices(self):
        """
        The canonical indices in storage order.

        :rtype: 2-D :class:`numpy.ndarray` of int64
        """
        lex = canonical_indices(self._dim, self._order)
        post = numpy.empty_like(lex)
        post[rank_sorted(lex, self._dim)] = lex
        return post

    def multilinear_mask(self):
        """
        Which canonical entries have all-distinct symbols, in storage order.

        :rtype: 1-D :class:`numpy.ndarray` of bool
        """
        rows = self.indices()
        if self._order < 2:
            return numpy.ones(len(rows), dtype=bool)
        return numpy.all(rows[:, 1:] != rows[:, :-1], axis=1)

    def multilinear_only(self):
        """
        A copy in which every entry with a repeated symbol is marked absent.

        :rtype: :class:`SymmetricTensor`
        """
        return SymmetricTensor(self._order, self._dim, self._values,
                               self._mask & self.multilinear_mask())

    def builder(self):
        """
        A :class:`SymmetricTensorBuilder` that starts from this tensor's entries.
        """
        return SymmetricTensorBuilder(self._order, self._dim, self._values, self._mask)

    def to_dense(self):
        """
        The full ``n**m`` array.

        :raises: :exc:`ValueError` if some entry is absent.

        :rtype: :class:`numpy.ndarray`
        """
        if not self.is_complete():
            raise ValueError(SymmetricTensor._INCOMPLETE_ERR.format(int((~self._mask).sum())))
        flat = numpy.empty(self._dim ** self._order)
        for start, rows in _full_index_chunks(self._dim, self._order):
            ranks = rank_sorted(numpy.sort(rows, axis=1), self._dim)
            flat[start:start + len(rows)] = self._values[ranks]
        return flat.reshape((self._dim,) * self._order)

    def slice(self, prefix):
        """
        The matrix ``T(Y, ., .)`` for an index string ``Y`` of length ``m - 2``.

        :param prefix: The index string ``Y``.
        :type prefix: sequence of int

        :returns: The slice, with absent entries set to ``0.0``, and its presence mask.
        :rtype: 2-tuple of ``n`` by ``n`` :class:`numpy.ndarray`

        :raises: :exc:`ValueError` if ``Y`` does not have length ``m - 2``.
        """
        if len(prefix) != self._order - 2:
            raise ValueError(SymmetricTensor._SLICE_ERR.format(self._order - 2, len(prefix)))
        prefix = as_index(prefix, self._dim)
        n = self._dim
        grid_a, grid_b = numpy.meshgrid(numpy.arange(n), numpy.arange(n), indexing='ij')
        rows = numpy.column_stack([numpy.tile(numpy.array(prefix, dtype=numpy.int64), (n * n, 1)),
                                   grid_a.ravel(), grid_b.ravel()])
        ranks = rank_sorted(numpy.sort(rows, axis=1), n)
        return self._values[ranks].reshape(n, n), self._mask[ranks].reshape(n, n)

    @classmethod
    def from_dense(cls, array):
        """
        Read the canonical entries of a dense array that is already symmetric. Use
        :func:`symmetrize` when it may not be.

        :rtype: :class:`SymmetricTensor`
        """
        array = numpy.asarray(array, dtype=numpy.float64)
        order, dim = array.ndim, (array.shape[0] if array.ndim else 1)
        lex = canonical_indices(dim, order)
        values = numpy.empty(len(lex))
        values[rank_sorted(lex, dim)] = array[tuple(lex.T)] if order else array
        return cls(order, dim, values)


class SymmetricTensorBuilder(object):
    """
    A single-writer helper that fills in the entries of a :class:`SymmetricTensor`.

    Writes follow a first-writer-wins rule: the first value written to an absent entry is kept.
    Every write is also accumulated, so :meth:`build` can replace each written entry with the
    mean of all values written to it.
    """

    def __init__(self, order, dim, values=None, mask=None):
        super(SymmetricTensorBuilder, self).__init__()
        self._order = order
        self._dim = dim
        count = multiset_count(dim, order)
        self._values = numpy.zeros(count) if values is None else numpy.array(values, dtype=float)
        self._mask = numpy.zeros(count, dtype=bool) if mask is None else numpy.array(mask,
                                                                                     dtype=bool)
        self._initial = self._mask.copy()
        self._write_sum = numpy.zeros(count)
        self._write_count = numpy.zeros(count, dtype=numpy.int64)

    @property
    def order(self):
        return self._order

    @property
    def dim(self):
        return self._dim

    def is_present(self, index):
        return bool(self._mask[canonical_rank(index, self._dim)])

    def get(self, index, default=None):
        pos = canonical_rank(index, self._dim)
        return float(self._values[pos]) if self._mask[pos] else default

    def write(self, index, value):
        """
        Write one entry. Entries present when the builder was created are never changed.

        :returns: ``None`` if the entry was absent, so ``value`` was stored. Otherwise the value
            already stored there.
        :rtype: float or None
        """
        pos = canonical_rank(as_index(index, self._dim, self._order), self._dim)
        if self._initial[pos]:
            return float(self._values[pos])
        self._write_sum[pos] += value
        self._write_count[pos] += 1
        if self._mask[pos]:
            return float(self._values[pos])
        self._values[pos] = value
        self._mask[pos] = True
        return None

    def missing_count(self):
        return int((~self._mask).sum())

    def build(self, average_writes=False):
        """
        Make the :class:`SymmetricTensor`.

        :param bool average_writes: Whether to replace every written entry with the mean of the
            values written to it, rather than the first one.
        """
        values = self._values.copy()
        if average_writes:
            written = self._write_count > 0
            values[written] = self._write_sum[written] / self._write_count[written]
        return SymmetricTensor(self._order, self._dim, values, self._mask.copy())


def symmetrize(array):
    """
    Make a :class:`SymmetricTensor` from a raw array whose axes all have the same length. Each
    canonical entry is the mean of the array over every permutation of its index.

    :param array: The raw order-``m`` array.
    :type array: :class:`numpy.ndarray`

    :rtype: :class:`SymmetricTensor`

    :raises: :exc:`ValueError` if the axes differ in length.
    """
    array = numpy.asarray(array, dtype=numpy.float64)
    if array.ndim and len(set(array.shape)) != 1:
        raise ValueError('every axis must have the same length, got {}'.format(array.shape))
    order = array.ndim
    dim = array.shape[0] if order else 1
    count = multiset_count(dim, order)
    totals = numpy.zeros(count)
    hits = numpy.zeros(count)
    flat = array.ravel()
    for start, rows in _full_index_chunks(dim, order):
        ranks = rank_sorted(numpy.sort(rows, axis=1), dim)
        totals += numpy.bincount(ranks, weights=flat[start:start + len(rows)], minlength=count)
        hits += numpy.bincount(ranks, minlength=count)
    return SymmetricTensor(order, dim, totals / hits)


def flatten_even(tensor):
    """
    Flatten a complete symmetric tensor of order ``2m`` into the ``n**m`` by ``n**m`` matrix whose
    entry ``(A, B)`` is ``T(A + B)``. Rows and columns follow the lexicographic order of
    ``[n]**m``.

    :raises: :exc:`ValueError` if the order is odd or the tensor is incomplete.
    """
    if tensor.order % 2:
        raise ValueError(SymmetricTensor._ORDER_ERR.format(tensor.order, 2))
    side = tensor.dim ** (tensor.order // 2)
    return tensor.to_dense().reshape(side, side)


def flatten_triple(tensor):
    """
    Flatten a complete symmetric tensor of order ``3m`` into an order-3 tensor over dimension
    ``n**m``, using the same index order as :func:`flatten_even`.

    :raises: :exc:`ValueError` if the order is not a multiple of three or the tensor is
        incomplete.
    """
    if tensor.order % 3:
        raise ValueError(SymmetricTensor._ORDER_ERR.format(tensor.order, 3))
    side = tensor.dim ** (tensor.order // 3)
    return tensor.to_dense().reshape(side, side, side)


def write_symmetric_tensor(tensor, pathname):
    """
    Write a tensor in the ``symtensor v1`` format: a header line, then one line per canonical
    index in lexicographic order with the sorted index, the value, and a ``0``/``1`` presence flag.
    """
    lex = canonical_indices(tensor.dim, tensor.order)
    ranks = rank_sorted(lex, tensor.dim)
    frame = pandas.DataFrame(lex, columns=['i{}'.format(j) for j in range(tensor.order)])
    frame['value'] = tensor.values[ranks]
    frame['present'] = tensor.mask[ranks].astype(int)
    with open(pathname, 'w') as handle:
        handle.write(_FILE_HEADER.format(tensor.order, tensor.dim) + '\n')
        frame.to_csv(handle, sep=' ', header=False, index=False, float_format='%.17g')
    logger.debug('wrote %s to %s', tensor, pathname)


def read_symmetric_tensor(pathname):
    """
    Read a file written by :func:`write_symmetric_tensor`. Lines may appear in any order and need
    not be sorted within the line.

    :rtype: :class:`SymmetricTensor`

    :raises: :exc:`ValueError` for a bad header, a wrong number of lines, or a repeated index.
    """
    with open(pathname, 'r') as handle:
        header = handle.readline().split()
        try:
            if header[:2] != ['symtensor', 'v1']:
                raise ValueError
            fields = dict(each.split('=', 1) for each in header[2:])
            order, dim = int(fields['order']), int(fields['dim'])
        except (ValueError, KeyError):
            raise ValueError('not a symtensor v1 file: {}'.format(pathname))
        frame = pandas.read_csv(handle, sep=r'\s+', header=None)
    count = multiset_count(dim, order)
    if len(frame.index) != count or len(frame.columns) != order + 2:
        raise ValueError(SymmetricTensor._SIZE_ERR.format(count, len(frame.index)))
    rows = numpy.sort(frame.iloc[:, :order].to_numpy(dtype=numpy.int64), axis=1)
    if rows.size and (rows.min() < 0 or rows.max() >= dim):
        raise ValueError('index out of range in {}'.format(pathname))
    ranks = rank_sorted(rows, dim)
    if len(numpy.unique(ranks)) != count:
        raise ValueError('repeated index in {}'.format(pathname))
    values = numpy.empty(count)
    mask = numpy.empty(count, dtype=bool)
    values[ranks] = frame.iloc[:, order].to_numpy(dtype=numpy.float64)
    mask[ranks] = frame.iloc[:, order + 1].to_numpy() != 0
    return SymmetricTensor(order, dim, values, mask)
