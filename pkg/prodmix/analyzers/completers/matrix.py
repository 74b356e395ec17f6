#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/completers/matrix.py
# Purpose:                Low-rank matrix completion by nuclear norm minimization.
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
Complete a low-rank matrix from an arbitrary (adversarial) set of observed entries.

The solver minimizes the nuclear norm of ``X`` subject to ``||P_O(X - D)||_F <= delta``, where
``P_O`` keeps the observed entries. It is an inexact augmented Lagrangian iteration on the split
``D = A + E``: the low-rank part ``A`` takes a singular value soft-thresholding step, and ``E`` is
free on hidden entries and held inside the Frobenius ball of radius ``delta`` on observed ones.
The penalty is rebalanced whenever the primal and dual residuals drift more than a factor of ten
apart, and is held fixed for the second half of the iteration budget.

An iterate that has not met the stopping rule is still returned when it agrees with the
observations to within ``settings.feasibility_tolerance``. The report then says
``converged=False`` and makes no recovery claim.

Whether exact recovery is guaranteed depends on how many entries are hidden per row and column
and on the incoherence of the row and column spaces. Use :func:`recoverable` for the exact case
and :func:`diagnostics` for the noisy error bound.
"""

import logging
import math
import warnings

import numpy

from prodmix.analyzers import completer


logger = logging.getLogger(__name__)

# the penalty is rebalanced when one residual exceeds the other by this factor
_BALANCE = 10.0

_NO_CONVERGENCE_ERR = 'no convergence after {} iterations (relative residual {:.3e})'
_NOT_FINITE_ERR = 'the iterate is no longer finite after {} iterations'


class VacuousBoundWarning(RuntimeWarning):
    """
    The noisy-completion error bound does not apply because ``alpha >= 1`` or ``beta >= 1``.
    """
    pass


class CompletionError(RuntimeError):
    """
    The solver did not converge to a point that agrees with the observations, or its iterates
    stopped being finite. The last iterate and residual are kept on the exception.
    """

    def __init__(self, message, last_iterate=None, residual=None, iterations=None):
        super(CompletionError, self).__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual
        self.iterations = iterations


class ObservationMask(object):
    """
    Which entries of a ``rows`` by ``cols`` matrix are observed.

    :param observed: ``True`` where the entry is observed.
    :type observed: 2-D :class:`numpy.ndarray` of bool
    """

    def __init__(self, observed):
        super(ObservationMask, self).__init__()
        observed = numpy.array(observed, dtype=bool)
        if observed.ndim != 2:
            raise ValueError('an observation mask must be two-dimensional')
        observed.flags.writeable = False
        self._observed = observed

    @classmethod
    def from_hidden(cls, rows, cols, hidden):
        """
        Build a mask from the positions that are *not* observed.

        :param hidden: ``(row, column)`` pairs.
        :type hidden: iterable of 2-tuple of int
        """
        observed = numpy.ones((rows, cols), dtype=bool)
        for row, col in hidden:
            observed[row, col] = False
        return cls(observed)

    @classmethod
    def from_array(cls, array):
        "Build a mask from a 0/1 array, where 1 means observed."
        return cls(numpy.asarray(array) != 0)

    @property
    def observed(self):
        return self._observed

    @property
    def hidden(self):
        return ~self._observed

    @property
    def shape(self):
        return self._observed.shape

    @property
    def rows(self):
        return self._observed.shape[0]

    @property
    def cols(self):
        return self._observed.shape[1]

    @property
    def kappa(self):
        "The largest number of hidden entries in any column."
        return int(self.hidden.sum(axis=0).max()) if self.cols else 0

    @property
    def rho(self):
        "The largest number of hidden entries in any row."
        return int(self.hidden.sum(axis=1).max()) if self.rows else 0

    def hidden_count(self):
        return int(self.hidden.sum())

    def is_full(self):
        return bool(self._observed.all())


class CompletionSettings(object):
    """
    Knobs for the solver.

    :param int max_iterations: Iteration limit. Default is 5000.
    :param float tolerance: Stop once the relative constraint violation and the relative change
        of the iterate are both below this. Default is ``1e-9``.
    :param float delta: Radius of the Frobenius ball allowed around the observed entries. Use
        ``0.0`` for exact completion.
    :param penalty: Initial augmented Lagrangian penalty. ``None`` means ``1 / ||P_O D||_2``.
    :type penalty: float or None
    :param float penalty_growth: Factor by which the penalty is raised or lowered when the
        primal and dual residuals are out of balance. ``1.0`` keeps the penalty fixed.
    :param float penalty_ceiling: The penalty stays within this factor of its initial value,
        above and below.
    :param float feasibility_tolerance: An iterate that misses the stopping rule is still
        returned when its relative constraint violation is below this. Default is ``1e-6``.
    :param float rank_threshold: Relative singular value cutoff used to report numerical rank.

    :raises: :exc:`ValueError` for a non-positive tolerance, a negative ``delta``, or other
        out-of-range values.
    """

    _FIELDS = ('max_iterations', 'tolerance', 'delta', 'penalty', 'penalty_growth',
               'penalty_ceiling', 'feasibility_tolerance', 'rank_threshold')

    def __init__(self, max_iterations=5000, tolerance=1e-9, delta=0.0, penalty=None,
                 penalty_growth=2.0, penalty_ceiling=1e6, feasibility_tolerance=1e-6,
                 rank_threshold=1e-8):
        super(CompletionSettings, self).__init__()
        if int(max_iterations) < 1:
            raise ValueError('max_iterations must be at least 1')
        if not tolerance > 0.0:
            raise ValueError('tolerance must be positive')
        if not delta >= 0.0:
            raise ValueError('delta must be non-negative')
        if penalty is not None and not penalty > 0.0:
            raise ValueError('penalty must be positive')
        if not penalty_growth >= 1.0:
            raise ValueError('penalty_growth must be at least 1')
        if not penalty_ceiling >= 1.0:
            raise ValueError('penalty_ceiling must be at least 1')
        if not feasibility_tolerance > 0.0:
            raise ValueError('feasibility_tolerance must be positive')
        self.max_iterations = int(max_iterations)
        self.tolerance = float(tolerance)
        self.delta = float(delta)
        self.penalty = penalty
        self.penalty_growth = float(penalty_growth)
        self.penalty_ceiling = float(penalty_ceiling)
        self.feasibility_tolerance = float(feasibility_tolerance)
        self.rank_threshold = float(rank_threshold)

    @classmethod
    def from_dict(cls, settings):
        "Make settings from a dict holding any subset of the constructor's arguments."
        return cls(**{key: settings[key] for key in cls._FIELDS if key in settings})

    def as_dict(self):
        return {key: getattr(self, key) for key in CompletionSettings._FIELDS}

    def __repr__(self):
        return 'CompletionSettings({})'.format(
            ', '.join('{}={!r}'.format(k, v) for k, v in sorted(self.as_dict().items())))


class CompletionReport(object):
    """
    The output of :func:`complete`: the recovered matrix and everything known about how well it
    was recovered.
    """

    def __init__(self, matrix, iterations, residual, rank, nuclear_norm, delta,
                 recoverable=None, alpha=None, beta=None, bound=None, vacuous=False,
                 converged=True):
        super(CompletionReport, self).__init__()
        self.matrix = matrix
        self.iterations = iterations
        self.residual = residual
        self.rank = rank
        self.nuclear_norm = nuclear_norm
        self.delta = delta
        self.recoverable = recoverable
        self.alpha = alpha
        self.beta = beta
        self.bound = bound
        self.vacuous = vacuous
        self.converged = converged

    def as_dict(self):
        "Everything but the matrix, as JSON-friendly values."
        return {'iterations': self.iterations, 'residual': self.residual, 'rank': self.rank,
                'nuclear_norm': self.nuclear_norm, 'delta': self.delta,
                'converged': self.converged, 'recoverable': self.recoverable,
                'alpha': self.alpha, 'beta': self.beta, 'bound': self.bound,
                'vacuous': self.vacuous}


def _hidden_fraction_sum(mask, mu_u, mu_v):
    "The quantity ``kappa * mu_U / m + rho * mu_V / n`` shared by the recovery conditions."
    return mask.kappa * mu_u / mask.rows + mask.rho * mu_v / mask.cols


def recoverable(mask, mu_u, mu_v, rank):
    """
    Whether exact recovery is guaranteed: ``2 (kappa mu_U / m + rho mu_V / n) r < 1`` for an
    ``m`` by ``n`` matrix with at most ``kappa`` hidden entries per column and ``rho`` per row.

    :param mask: The observed positions.
    :type mask: :class:`ObservationMask`
    :param float mu_u: Incoherence of the column space.
    :param float mu_v: Incoherence of the row space.
    :param int rank: Rank of the matrix.

    :rtype: bool
    """
    return 2.0 * _hidden_fraction_sum(mask, mu_u, mu_v) * rank < 1.0


def diagnostics(mask, mu_u, mu_v, rank, lam=None, delta=0.0):
    """
    Error amplification factors and the noisy-completion error bound.

    ``alpha = 1.5 (kappa mu_U / m + rho mu_V / n) r`` always; ``beta = r / (1 - lam) *
    sqrt(kappa rho mu_U mu_V / (m n))`` only when ``lam`` is given. The bound
    ``2 delta + 2 delta sqrt(min(m, n)) / (1 - beta) * sqrt(1 + 1 / (1 - alpha))`` needs both
    factors, and only applies when both are below one.

    :param lam: The constant inside ``beta``. Without it, ``beta`` and the bound are ``None``.
    :type lam: float or None
    :param float delta: Radius of the noise ball.

    :returns: ``alpha``, ``beta``, ``bound``, and ``vacuous`` (whether a factor is at least one).
    :rtype: dict
    """
    alpha = 1.5 * _hidden_fraction_sum(mask, mu_u, mu_v) * rank
    beta = None
    if lam is not None:
        if lam >= 1.0:
            beta = math.inf
        else:
            beta = rank / (1.0 - lam) * math.sqrt(mask.kappa * mask.rho * mu_u * mu_v /
                                                  (mask.rows * mask.cols))
    vacuous = alpha >= 1.0 or (beta is not None and beta >= 1.0)
    bound = None
    if beta is not None and not vacuous:
        bound = 2.0 * delta + 2.0 * delta * math.sqrt(min(mask.rows, mask.cols)) / (1.0 - beta) * \
            math.sqrt(1.0 + 1.0 / (1.0 - alpha))
    return {'alpha': alpha, 'beta': beta, 'bound': bound, 'vacuous': vacuous}


def _shrink(matrix, threshold):
    """
    Singular value soft-thresholding.

    :returns: The shrunk matrix and its singular values.
    """
    left, sing, right = numpy.linalg.svd(matrix, full_matrices=False)
    sing = numpy.maximum(sing - threshold, 0.0)
    keep = sing > 0.0
    return (left[:, keep] * sing[keep]) @ right[keep], sing[keep]


def _project_ball(matrix, radius):
    "Project onto the Frobenius ball of the given radius."
    size = numpy.linalg.norm(matrix)
    if size <= radius:
        return matrix
    return matrix * (radius / size)


def complete(observed, mask, settings=None, rank=None, mu_u=None, mu_v=None, lam=None):
    """
    Complete a matrix by nuclear norm minimization.

    Rank and incoherence never reach the solver. When they are given, the report also says
    whether exact recovery is guaranteed and carries the noisy-completion diagnostics.

    :param observed: The matrix. Values at hidden positions are ignored.
    :type observed: 2-D :class:`numpy.ndarray`
    :param mask: The observed positions.
    :type mask: :class:`ObservationMask`
    :param settings: Solver settings. Defaults to :class:`CompletionSettings` defaults.
    :type settings: :class:`CompletionSettings` or None
    :param rank: Rank of the matrix, if known.
    :type rank: int or None
    :param mu_u: Incoherence of the column space, if known.
    :type mu_u: float or None
    :param mu_v: Incoherence of the row space, if known. Defaults to ``mu_u``.
    :type mu_v: float or None
    :param lam: The constant inside ``beta``; see :func:`diagnostics`.
    :type lam: float or None

    :returns: The recovered matrix and diagnostics.
    :rtype: :class:`CompletionReport`

    :raises: :exc:`ValueError` if shapes disagree or an observed entry is not finite.
    :raises: :exc:`CompletionError` if the solver does not converge within
        ``settings.max_iterations`` and its last iterate violates the constraint by more than
        ``settings.feasibility_tolerance``. An unconverged iterate within that margin is
        returned with ``converged`` and ``recoverable`` both ``False``.
    """
    settings = settings or CompletionSettings()
    observed = numpy.asarray(observed, dtype=numpy.float64)
    if observed.shape != mask.shape:
        raise ValueError('matrix shape {} does not match mask shape {}'.format(observed.shape,
                                                                             mask.shape))
    if not numpy.all(numpy.isfinite(observed[mask.observed])):
        raise ValueError('observed entries must be finite')
    if mu_v is None:
        mu_v = mu_u

    data = numpy.where(mask.observed, observed, 0.0)
    data_norm = numpy.linalg.norm(data)

    if mask.is_full() and settings.delta == 0.0:
        result, iterations, residual, converged = data.copy(), 0, 0.0, True
    elif data_norm == 0.0:
        result, iterations, residual, converged = numpy.zeros_like(data), 0, 0.0, True
    else:
        result, iterations, residual, converged = _solve(data, mask, settings, data_norm)
    if not converged:
        if not residual < settings.feasibility_tolerance:
            raise CompletionError(_NO_CONVERGENCE_ERR.format(iterations, residual),
                                  last_iterate=result, residual=residual, iterations=iterations)
        logger.warning('no convergence after %d iterations; returning the last iterate, which '
                       'meets the observations to %.3e', iterations, residual)

    sing = numpy.linalg.svd(result, compute_uv=False)
    num_rank = int(numpy.sum(sing > settings.rank_threshold * sing[0])) if len(sing) and \
        sing[0] > 0.0 else 0
    report = CompletionReport(result, iterations, residual, num_rank, float(sing.sum()),
                              settings.delta, converged=converged)
    if not converged:
        report.recoverable = False
    if rank is not None and mu_u is not None:
        report.recoverable = converged and recoverable(mask, mu_u, mu_v, rank)
        diag = diagnostics(mask, mu_u, mu_v, rank, lam, settings.delta)
        report.alpha, report.beta = diag['alpha'], diag['beta']
        report.bound, report.vacuous = diag['bound'], diag['vacuous']
        if converged and not report.recoverable:
            logger.info('exact recovery is not guaranteed for this mask '
                        '(kappa=%d, rho=%d, mu=%.3g/%.3g, r=%d)', mask.kappa, mask.rho, mu_u,
                        mu_v, rank)
        if report.vacuous and settings.delta > 0.0:
            message = 'noisy completion bound is vacuous (alpha={:.3g}, beta={})'.format(
                report.alpha, report.beta)
            logger.warning(message)
            warnings.warn(message, VacuousBoundWarning)
    return report


def _solve(data, mask, settings, data_norm):
    """
    The alternating-direction iteration behind :func:`complete`.

    The penalty is rebalanced against the ratio of the primal residual to the dual residual, by
    ``settings.penalty_growth`` up or down, and stays within ``settings.penalty_ceiling`` of its
    initial value either way. Rebalancing stops after half the iteration limit, after which the
    penalty is fixed.

    :returns: The recovered matrix, the number of iterations, the final relative residual, and
        whether the stopping rule was met.
    :rtype: 4-tuple

    :raises: :exc:`CompletionError` if an iterate stops being finite.
    """
    observed = mask.observed
    penalty = settings.penalty
    if penalty is None:
        penalty = 1.0 / numpy.linalg.norm(data, ord=2)
    floor, ceiling = penalty / settings.penalty_ceiling, penalty * settings.penalty_ceiling
    balancing = settings.max_iterations // 2
    tiny = numpy.finfo(numpy.float64).tiny

    low_rank = numpy.zeros_like(data)
    error = numpy.zeros_like(data)
    dual = numpy.zeros_like(data)
    residual = change = math.inf
    for iteration in range(1, settings.max_iterations + 1):
        previous, previous_error = low_rank, error
        low_rank, _ = _shrink(data - error + dual / penalty, 1.0 / penalty)
        # hidden entries are unconstrained, observed ones stay within the delta ball
        error = data - low_rank + dual / penalty
        error[observed] = _project_ball(error[observed], settings.delta)
        gap = data - low_rank - error
        dual = dual + penalty * gap

        residual = numpy.linalg.norm(gap) / data_norm
        change = numpy.linalg.norm(low_rank - previous) / data_norm
        if not math.isfinite(residual) or not math.isfinite(change):
            raise CompletionError(_NOT_FINITE_ERR.format(iteration), last_iterate=low_rank,
                                  residual=float(residual), iterations=iteration)
        if iteration % 500 == 0:
            logger.debug('iteration %d: residual %.3e, change %.3e, penalty %.3e', iteration,
                         residual, change, penalty)
        if residual < settings.tolerance and change < settings.tolerance:
            logger.debug('converged after %d iterations (residual %.3e)', iteration, residual)
            return low_rank, iteration, float(residual), True

        if iteration <= balancing:
            dual_residual = penalty * numpy.linalg.norm(error - previous_error) / \
                max(numpy.linalg.norm(dual), tiny)
            if residual > _BALANCE * dual_residual:
                penalty = min(penalty * settings.penalty_growth, ceiling)
            elif dual_residual > _BALANCE * residual:
                penalty = max(penalty / settings.penalty_growth, floor)

    logger.debug('stopped after %d iterations (residual %.3e, change %.3e)',
                 settings.max_iterations, residual, change)
    return low_rank, settings.max_iterations, float(residual), False


class MatrixCompleter(completer.Completer):
    """
    Complete one partially-observed matrix. The input is the matrix itself; the observed
    positions go in the ``'mask'`` setting.
    """

    required_input_type = 'numpy.ndarray'
    "The :class:`MatrixCompleter` requires a :class:`numpy.ndarray`."

    possible_settings = {'mask': '2-D array of bool; True where an entry is observed. Required.',
                         'rank': 'int; rank of the matrix, for diagnostics only',
                         'mu_u': 'float; incoherence of the column space, for diagnostics only',
                         'mu_v': 'float; incoherence of the row space, for diagnostics only',
                         'lambda': 'float; the constant inside beta',
                         'max_iterations': 'int',
                         'tolerance': 'float',
                         'delta': 'float; noise radius',
                         'penalty': 'float or None',
                         'penalty_growth': 'float',
                         'penalty_ceiling': 'float',
                         'feasibility_tolerance': 'float',
                         'rank_threshold': 'float'}
    "Refer to :class:`CompletionSettings` for the solver settings."

    default_settings = {'rank': None, 'mu_u': None, 'mu_v': None, 'lambda': None}

    _MISSING_MASK = 'MatrixCompleter requires the "mask" setting'

    def __init__(self, matrix, settings=None):
        """
        :raises: :exc:`TypeError` if ``matrix`` is not a :class:`numpy.ndarray`.
        :raises: :exc:`RuntimeError` if the ``'mask'`` setting is missing or a setting is unknown.
        """
        super(MatrixCompleter, self).__init__(matrix, settings)
        if 'mask' not in self._settings:
            raise RuntimeError(MatrixCompleter._MISSING_MASK)
        self._mask = self._settings['mask']
        if not isinstance(self._mask, ObservationMask):
            self._mask = ObservationMask(self._mask)
        self._solver_settings = CompletionSettings.from_dict(self._settings)

    def run(self):
        """
        :returns: The completed matrix and its diagnostics.
        :rtype: :class:`CompletionReport`

        :raises: :exc:`CompletionError` if the solver does not reach a point that agrees with
            the observations.
        """
        return complete(self._data, self._mask, self._solver_settings, self._settings['rank'],
                        self._settings['mu_u'], self._settings['mu_v'], self._settings['lambda'])
