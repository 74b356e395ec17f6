#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/completers/tensor.py
# Purpose:                Complete symmetric tensors from their multilinear entries.
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
Complete a low-rank symmetric tensor of order ``m`` when only its multilinear entries (those with
``m`` distinct symbols) are known.

Missing entries are grouped by the length of their histogram, that is, the number of distinct
symbols. Level ``m - 1`` goes first: for every multilinear ``Y`` of length ``m - 2`` the slice
``T(Y, ., .)`` loses the rows and columns named in ``Y`` and becomes a square matrix with only
its diagonal missing. Then, from level ``m - 2`` down to level 1, each missing entry ``X`` picks
a *parent* ``Y`` of length ``m - 2`` with the same number of distinct symbols. In ``T(Y, ., .)``
only the block indexed by the symbols of ``Y`` is missing, and everything else was filled in at
a higher level, so one matrix completion fills the whole block.

Jobs within a level are independent of each other and go through
:meth:`~prodmix.analyzers.completer.Completer._do_multiprocessing`. Levels run in order.
"""

import itertools
import logging
import warnings
from collections import OrderedDict, Counter

import numpy
import pandas

from prodmix import linalg
from prodmix.analyzers import completer
from prodmix.analyzers.completers import matrix
from prodmix.models.symmetric_tensor import histogram, is_multilinear


logger = logging.getLogger(__name__)


class TensorCompletionError(RuntimeError):
    """
    A slice completion failed. ``parent`` and ``level`` name the slice; ``cause`` holds the
    :class:`~prodmix.analyzers.completers.matrix.CompletionError`.
    """

    def __init__(self, message, parent=None, level=None, cause=None):
        super(TensorCompletionError, self).__init__(message)
        self.parent = parent
        self.level = level
        self.cause = cause


def parent_substring(index):
    """
    Choose the index string ``Y`` of length ``m - 2`` whose slice ``T(Y, ., .)`` is used to
    complete the entry ``X``.

    * If some symbol appears at least three times, remove two copies of the smallest such symbol.
    * Otherwise, if two symbols appear twice, remove one copy of each of the two smallest.
    * Otherwise exactly one symbol is doubled and ``X`` has ``m - 1`` distinct symbols. Remove
      both copies; the slice of the result loses the rows and columns named in it.

    In the first two cases ``Y`` has as many distinct symbols as ``X``.

    >>> parent_substring((1, 1, 1, 2))
    (1, 2)
    >>> parent_substring((3, 3, 5))
    (5,)

    :param index: The index string ``X``.
    :type index: sequence of int

    :rtype: tuple of int

    :raises: :exc:`ValueError` with ``'no parent needed'`` if ``X`` is multilinear.
    """
    if is_multilinear(index):
        raise ValueError('no parent needed: {} is multilinear'.format(tuple(index)))
    counts = Counter(index)
    remaining = sorted(index)
    triples = sorted(s for s, c in counts.items() if c >= 3)
    doubles = sorted(s for s, c in counts.items() if c >= 2)
    if triples:
        drop = (triples[0], triples[0])
    elif len(doubles) >= 2:
        drop = (doubles[0], doubles[1])
    else:
        drop = (doubles[0], doubles[0])
    for symbol in drop:
        remaining.remove(symbol)
    return tuple(remaining)


class CompletionSchedule(object):
    """
    Every missing entry of a tensor, grouped by level, with its parent, and the distinct slice
    completions ("jobs") each level needs.

    :attr:`levels` maps each level ``l`` (from ``m - 1`` down to ``1``) to a list of
    ``(X, Y)`` pairs in lexicographic order of ``X``. :attr:`jobs` maps each level to the list of
    parents ``Y`` whose slices are completed. An entry whose slice block was already covered by
    an earlier job of the same level gets no job of its own.
    """

    def __init__(self, dim, order, levels, jobs):
        super(CompletionSchedule, self).__init__()
        self.dim = dim
        self.order = order
        self.levels = levels
        self.jobs = jobs

    def __len__(self):
        return sum(len(entries) for entries in self.levels.values())

    def completion_count(self):
        "The total number of slice completions."
        return sum(len(parents) for parents in self.jobs.values())

    def slice_count(self):
        """
        The number of distinct index strings whose slices are completed. A multilinear ``Y`` is
        completed once at level ``m - 1`` and again at level ``m - 2``, so this can be smaller
        than :meth:`completion_count`. It never exceeds ``n**(m - 2)``.
        """
        return len(set(parent for parents in self.jobs.values() for parent in parents))

    def level_counts(self):
        return OrderedDict((level, len(parents)) for level, parents in self.jobs.items())

    def as_frame(self):
        """
        One row per scheduled entry, with columns ``level``, ``index`` and ``parent``.

        :rtype: :class:`pandas.DataFrame`
        """
        rows = [(level, index, parent) for level, entries in self.levels.items()
                for index, parent in entries]
        return pandas.DataFrame(rows, columns=['level', 'index', 'parent'])


def _block(parent):
    "The symbols whose rows and columns are missing in the slice of ``parent``."
    return sorted(set(parent))


def build_schedule(dim, order):
    """
    The :class:`CompletionSchedule` for a symmetric tensor of the given shape in which only the
    multilinear entries are known.

    :rtype: :class:`CompletionSchedule`
    """
    levels = OrderedDict((level, []) for level in range(order - 1, 0, -1))
    for index in itertools.combinations_with_replacement(range(dim), order):
        if not is_multilinear(index):
            levels[len(histogram(index))].append((index, parent_substring(index)))

    jobs = OrderedDict()
    for level, entries in levels.items():
        covered = set()
        jobs[level] = []
        for index, parent in entries:
            if index in covered:
                continue
            jobs[level].append(parent)
            if level == order - 1:
                # the diagonal of the reduced slice
                covered.update(tuple(sorted(parent + (i, i))) for i in range(dim)
                               if i not in parent)
            else:
                symbols = _block(parent)
                covered.update(tuple(sorted(parent + (a, b)))
                               for a, b in itertools.combinations_with_replacement(symbols, 2))
    return CompletionSchedule(dim, order, levels, jobs)


def predicted_error(epsilon, dim, order):
    """
    Bounds on the error of a completed tensor when every known entry is off by at most
    ``epsilon``: ``4 eps (5 n**1.5)**(m - 1)`` for each completed slice (Frobenius norm) and
    ``4 eps (5 n**1.5)**(1.5 m - 2)`` for the whole tensor.

    :returns: The slice bound and the total bound.
    :rtype: 2-tuple of float
    """
    base = 5.0 * dim ** 1.5
    return (4.0 * epsilon * base ** (order - 1), 4.0 * epsilon * base ** (1.5 * order - 2))


def estimate_rank_and_incoherence(tensor, threshold=1e-8):
    """
    Estimate the rank and incoherence of a tensor's slices from one fully-known submatrix.

    Take ``Y = (0, 1, ..., m - 3)``, split the other symbols into two halves, and use the
    submatrix of ``T(Y, ., .)`` with rows from one half and columns from the other. All of its
    entries are multilinear. The rank is its numerical rank at ``threshold`` times the top
    singular value, and the incoherence is that of its column space.

    :returns: The rank and the incoherence. The rank is at least 1.
    :rtype: 2-tuple of int and float

    :raises: :exc:`ValueError` if fewer than two symbols remain outside ``Y``.
    """
    order, dim = tensor.order, tensor.dim
    prefix = tuple(range(order - 2))
    rest = list(range(order - 2, dim))
    if len(rest) < 2:
        raise ValueError('need at least {} symbols to estimate rank, got {}'.format(order, dim))
    half = len(rest) // 2
    rows, cols = rest[:half], rest[half:]
    values, present = tensor.slice(prefix)
    sub = values[numpy.ix_(rows, cols)]
    if not present[numpy.ix_(rows, cols)].all():
        raise ValueError('the multilinear submatrix used for estimation is incomplete')
    rank, basis = linalg.column_space(sub, threshold)
    if rank == 0:
        return 1, 1.0
    return rank, linalg.incoherence(basis)


class TensorCompletionReport(object):
    """
    The output of :func:`complete_symmetric`.

    * ``tensor``: the completed :class:`SymmetricTensor`.
    * ``level_counts``: number of slice completions per level.
    * ``slice_count``: number of distinct index strings whose slices were completed.
    * ``rank`` and ``mu``: the rank and incoherence used for the feasibility check, with
      ``estimated`` saying whether they came from :func:`estimate_rank_and_incoherence`.
    * ``feasible``: whether ``4 mu r m / n < 1``.
    * ``epsilon``, ``slice_bound`` and ``total_bound``: see :func:`predicted_error`.
    * ``slices``: one dict per slice completion, with ``level``, ``parent``, ``iterations``,
      ``residual`` and ``converged``.
    * ``max_disagreement``: the largest difference between two values written to one entry.
    """

    def __init__(self, tensor, level_counts, rank, mu, estimated, feasible, epsilon, slices,
                 max_disagreement, slice_count=0):
        super(TensorCompletionReport, self).__init__()
        self.tensor = tensor
        self.level_counts = level_counts
        self.rank = rank
        self.mu = mu
        self.estimated = estimated
        self.feasible = feasible
        self.epsilon = epsilon
        self.slice_bound, self.total_bound = predicted_error(epsilon, tensor.dim, tensor.order)
        self.slices = slices
        self.max_disagreement = max_disagreement
        self.slice_count = slice_count

    def completion_count(self):
        return sum(self.level_counts.values())

    def level_table(self):
        """
        Slice completions per level.

        :rtype: :class:`pandas.Series`
        """
        return pandas.Series(self.level_counts, name='completions', dtype='int64')

    def as_dict(self):
        "Everything but the tensor, as JSON-friendly values."
        return {'order': self.tensor.order, 'dim': self.tensor.dim,
                'levels': {str(k): v for k, v in self.level_counts.items()},
                'completions': self.completion_count(),
                'distinct_slices': self.slice_count, 'rank': self.rank, 'mu': self.mu,
                'estimated': self.estimated, 'feasible': self.feasible,
                'epsilon': self.epsilon, 'slice_bound': self.slice_bound,
                'total_bound': self.total_bound, 'max_disagreement': self.max_disagreement}


def complete_slice(tag, values, observed, settings, rank, mu):
    """
    Complete one slice. A module-level function so it can be handed to a process pool.

    :returns: ``tag`` and the :class:`~prodmix.analyzers.completers.matrix.CompletionReport`,
        or ``tag`` and the :class:`~prodmix.analyzers.completers.matrix.CompletionError`.
    :rtype: 2-tuple
    """
    mask = matrix.ObservationMask(observed)
    try:
        return tag, matrix.complete(values, mask, settings, rank, mu, mu)
    except matrix.CompletionError as comp_err:
        return tag, comp_err


def _slice_job(snapshot, parent, level):
    """
    Extract the slice of ``parent`` from the tensor as it was at the start of ``level``.

    :returns: The symbols kept as rows and columns, the slice values and the observed mask.

    :raises: :exc:`RuntimeError` if an entry that should be known by now is missing.
    """
    values, present = snapshot.slice(parent)
    dim = snapshot.dim
    if level == snapshot.order - 1:
        keep = [i for i in range(dim) if i not in parent]
        values = values[numpy.ix_(keep, keep)]
        present = present[numpy.ix_(keep, keep)]
        expected = ~numpy.eye(len(keep), dtype=bool)
    else:
        keep = list(range(dim))
        block = numpy.zeros(dim, dtype=bool)
        block[_block(parent)] = True
        expected = ~numpy.outer(block, block)
    if not numpy.array_equal(present, expected):
        raise RuntimeError('slice {} at level {} is not ready: {} entries missing outside the '
                           'block'.format(parent, level, int((expected & ~present).sum())))
    return keep, values, present


def complete_symmetric(tensor, rank=None, mu=None, settings=None, epsilon=0.0,
                       agreement_tolerance=1e-6, runner=None):
    """
    Complete a symmetric tensor from its multilinear entries.

    :param tensor: The tensor. Non-multilinear entries are ignored if present.
    :type tensor: :class:`SymmetricTensor`
    :param rank: Rank of the slices. Estimated along with ``mu`` when either is ``None``.
    :type rank: int or None
    :param mu: Incoherence of the slices.
    :type mu: float or None
    :param settings: Solver settings for each slice.
    :type settings: :class:`~prodmix.analyzers.completers.matrix.CompletionSettings` or None
    :param float epsilon: Entrywise noise level of the input, for the predicted error bounds.
    :param float agreement_tolerance: Largest allowed difference between two values written to
        one entry, relative to ``max(1, |value|)``. Only enforced for exact (``delta = 0`` and
        ``epsilon = 0``) completion of a feasible instance; otherwise disagreements are logged.
    :param runner: Called as ``runner(func, jobs)`` to run the jobs of one level. Defaults to
        running them in order.
    :type runner: function or None

    :rtype: :class:`TensorCompletionReport`

    :raises: :exc:`ValueError` if ``n < m`` or a multilinear entry is missing.
    :raises: :exc:`TensorCompletionError` if a slice completion fails, or duplicate writes
        disagree when they must not.
    """
    order, dim = tensor.order, tensor.dim
    settings = settings or matrix.CompletionSettings()
    runner = runner or completer.run_jobs
    if dim < order:
        raise ValueError('a tensor of order {} over dimension {} has no multilinear entries'
                         .format(order, dim))
    ml_mask = tensor.multilinear_mask()
    if not tensor.mask[ml_mask].all():
        raise ValueError('{} multilinear entries are missing'.format(
            int((~tensor.mask[ml_mask]).sum())))
    extra = int((tensor.mask & ~ml_mask).sum())
    if extra:
        logger.info('ignoring %d non-multilinear entries of the input', extra)
        tensor = tensor.multilinear_only()
    if order < 2:
        return TensorCompletionReport(tensor, OrderedDict(), rank, mu, False, True, epsilon, [],
                                      0.0)

    estimated = rank is None or mu is None
    if estimated:
        est_rank, est_mu = estimate_rank_and_incoherence(tensor, settings.rank_threshold)
        rank = est_rank if rank is None else rank
        mu = est_mu if mu is None else mu
        logger.info('estimated slice rank %d and incoherence %.3g', rank, mu)
    feasible = bool(4.0 * mu * rank * order / dim < 1.0)
    if not feasible:
        logger.warning('exact completion is not guaranteed: 4*mu*r*m/n = %.3g',
                       4.0 * mu * rank * order / dim)
    strict = feasible and settings.delta == 0.0 and epsilon == 0.0

    schedule = build_schedule(dim, order)
    logger.info('completing order-%d tensor over %d symbols: %d missing entries, %d slices',
                order, dim, len(schedule), schedule.completion_count())
    builder = tensor.builder()
    slices = []
    max_disagreement = 0.0

    for level, parents in schedule.jobs.items():
        snapshot = builder.build()
        jobs, layouts = [], {}
        for parent in parents:
            keep, values, present = _slice_job(snapshot, parent, level)
            layouts[parent] = (keep, present)
            jobs.append((parent, values, present, settings, rank, mu))
        logger.debug('level %d: %d slice completions', level, len(jobs))

        for parent, outcome in runner(complete_slice, jobs):
            if isinstance(outcome, matrix.CompletionError):
                raise TensorCompletionError('completing slice {} at level {} failed: {}'.format(
                    parent, level, outcome), parent=parent, level=level, cause=outcome)
            keep, present = layouts[parent]
            if not outcome.converged:
                logger.warning('slice %s at level %d stopped short of convergence', parent, level)
            slices.append({'level': level, 'parent': list(parent),
                           'iterations': outcome.iterations, 'residual': outcome.residual,
                           'converged': outcome.converged})
            rows, cols = numpy.nonzero(~present)
            for a, b in zip(rows, cols):
                if a > b:
                    continue
                index = parent + (keep[a], keep[b])
                value = 0.5 * float(outcome.matrix[a, b] + outcome.matrix[b, a])
                earlier = builder.write(index, value)
                if earlier is None:
                    continue
                gap = abs(earlier - value)
                max_disagreement = max(max_disagreement, gap)
                if gap > agreement_tolerance * max(1.0, abs(earlier)):
                    message = 'entry {} written as {!r} and {!r} at level {}'.format(
                        tuple(sorted(index)), earlier, value, level)
                    if strict:
                        raise TensorCompletionError(message, parent=parent, level=level)
                    logger.warning(message)

    completions = schedule.level_counts()
    logger.debug('%d slice completions over %d distinct slices', schedule.completion_count(),
                 schedule.slice_count())
    completed = builder.build(average_writes=True)
    return TensorCompletionReport(completed, completions, rank, mu, estimated, feasible, epsilon,
                                  slices, max_disagreement, schedule.slice_count())


class SymmetricTensorCompleter(completer.Completer):
    """
    Complete a :class:`SymmetricTensor` from its multilinear entries with
    :func:`complete_symmetric`.
    """

    required_input_type = 'SymmetricTensor'
    "The :class:`SymmetricTensorCompleter` requires a :class:`SymmetricTensor`."

    possible_settings = {'rank': 'int or None; rank of the slices (estimated if None)',
                         'mu': 'float or None; incoherence of the slices (estimated if None)',
                         'epsilon': 'float; entrywise noise level of the input',
                         'agreement tolerance': 'float; see complete_symmetric()',
                         'max_iterations': 'int',
                         'tolerance': 'float',
                         'delta': 'float; noise radius for each slice',
                         'penalty': 'float or None',
                         'penalty_growth': 'float',
                         'penalty_ceiling': 'float',
                         'feasibility_tolerance': 'float',
                         'rank_threshold': 'float'}
    "Refer to :class:`~prodmix.analyzers.completers.matrix.CompletionSettings` as well."

    default_settings = {'rank': None, 'mu': None, 'epsilon': 0.0, 'agreement tolerance': 1e-6}

    def __init__(self, tensor, settings=None):
        """
        :raises: :exc:`TypeError` if ``tensor`` is not a :class:`SymmetricTensor`.
        :raises: :exc:`RuntimeError` if a setting is unknown.
        """
        super(SymmetricTensorCompleter, self).__init__(tensor, settings)
        self._solver_settings = matrix.CompletionSettings.from_dict(self._settings)

    def run(self):
        """
        :rtype: :class:`TensorCompletionReport`

        :raises: :exc:`TensorCompletionError` if a slice completion fails.
        """
        with warnings.catch_warnings():
            # feasibility is reported once for the whole tensor
            warnings.simplefilter('ignore', matrix.VacuousBoundWarning)
            return complete_symmetric(self._data, self._settings['rank'], self._settings['mu'],
                                      self._solver_settings, self._settings['epsilon'],
                                      self._settings['agreement tolerance'],
                                      self._do_multiprocessing)
