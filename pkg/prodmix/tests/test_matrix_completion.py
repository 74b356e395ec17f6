#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/tests/test_matrix_completion.py
# Purpose:                Tests for nuclear norm matrix completion.
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

import math
import warnings
from unittest import TestCase, TestLoader

import mock
import numpy

from prodmix.analyzers.completers import matrix
from prodmix.analyzers.completers.matrix import (CompletionError, CompletionSettings,
                                                 MatrixCompleter, ObservationMask)


def _hadamard(size):
    "A Sylvester Hadamard matrix; ``size`` must be a power of two."
    post = numpy.ones((1, 1))
    while post.shape[0] < size:
        post = numpy.block([[post, post], [post, -post]])
    return post


def _band_mask(size, width):
    "Hide entry ``(i, j)`` when ``j - i`` is in ``range(width)`` modulo ``size``."
    return ObservationMask.from_hidden(size, size, [(i, (i + j) % size) for i in range(size)
                                                    for j in range(width)])


def _neighbour_mask(size):
    "Hide the diagonal and both cyclic neighbours of every row."
    return ObservationMask.from_hidden(size, size, [(i, (i + j) % size) for i in range(size)
                                                    for j in (-1, 0, 1)])


def _sign_vector(size, seed):
    "A unit vector whose entries are all ``+-1 / sqrt(size)``; its incoherence is 1."
    rng = numpy.random.default_rng(seed)
    return rng.choice([-1.0, 1.0], size=size) / math.sqrt(size)


def _random_factors(size, rank, seed):
    "Orthonormal columns spanning a random ``rank``-dimensional subspace, and their incoherence."
    rng = numpy.random.default_rng(seed)
    basis, _ = numpy.linalg.qr(rng.standard_normal((size, rank)))
    return basis, size / rank * float((basis ** 2).sum(axis=1).max())


def _random_pairs_mask(size, pairs, seed):
    "Hide the diagonal and ``pairs`` random symmetric off-diagonal pairs for every row."
    rng = numpy.random.default_rng(seed)
    hidden = [(i, i) for i in range(size)]
    for row in range(size):
        others = [col for col in range(size) if col != row]
        for col in rng.choice(others, size=pairs, replace=False):
            hidden.extend([(row, int(col)), (int(col), row)])
    return ObservationMask.from_hidden(size, size, hidden)


def _nuclear_norm(mat):
    return float(numpy.linalg.svd(mat, compute_uv=False).sum())


# pylint: disable=R0904
# pylint: disable=C0111
class TestObservationMask(TestCase):
    def test_kappa_rho_1(self):
        # brute force against the hidden set
        rng = numpy.random.default_rng(9)
        observed = rng.random((7, 5)) > 0.3
        mask = ObservationMask(observed)
        self.assertEqual(max((~observed[:, j]).sum() for j in range(5)), mask.kappa)
        self.assertEqual(max((~observed[i]).sum() for i in range(7)), mask.rho)
        self.assertEqual(int((~observed).sum()), mask.hidden_count())

    def test_from_hidden_1(self):
        mask = ObservationMask.from_hidden(3, 4, [(0, 0), (2, 3), (1, 3)])
        self.assertEqual((3, 4), mask.shape)
        self.assertEqual(2, mask.kappa)
        self.assertEqual(1, mask.rho)
        self.assertFalse(mask.is_full())

    def test_from_array_1(self):
        mask = ObservationMask.from_array(numpy.array([[1.0, 0.0], [1.0, 1.0]]))
        self.assertEqual([[True, False], [True, True]], mask.observed.tolist())

    def test_init_1(self):
        self.assertRaises(ValueError, ObservationMask, numpy.ones(3, dtype=bool))


class TestCompletionSettings(TestCase):
    def test_init_1(self):
        settings = CompletionSettings()
        self.assertEqual(5000, settings.max_iterations)
        self.assertEqual(1e-9, settings.tolerance)
        self.assertEqual(0.0, settings.delta)

    def test_init_2(self):
        self.assertRaises(ValueError, CompletionSettings, tolerance=0.0)
        self.assertRaises(ValueError, CompletionSettings, delta=-1.0)
        self.assertRaises(ValueError, CompletionSettings, max_iterations=0)
        self.assertRaises(ValueError, CompletionSettings, penalty_growth=0.5)
        self.assertRaises(ValueError, CompletionSettings, feasibility_tolerance=0.0)

    def test_init_3(self):
        # the penalty is rebalanced by a fixed factor, not grown every iteration
        settings = CompletionSettings()
        self.assertEqual(2.0, settings.penalty_growth)
        self.assertEqual(1e-6, settings.feasibility_tolerance)
        self.assertIsNone(settings.penalty)

    def test_from_dict_1(self):
        settings = CompletionSettings.from_dict({'tolerance': 1e-6, 'rank': 3})
        self.assertEqual(1e-6, settings.tolerance)
        self.assertEqual(CompletionSettings().as_dict()['max_iterations'],
                         settings.max_iterations)


class TestRecoverable(TestCase):
    def test_recoverable_1(self):
        mask = ObservationMask(numpy.ones((10, 10), dtype=bool))
        self.assertTrue(matrix.recoverable(mask, 10.0, 10.0, 10))

    def test_recoverable_2(self):
        # diagonal hidden: true exactly when 4 mu r / n < 1
        mask = _band_mask(20, 1)
        self.assertTrue(matrix.recoverable(mask, 2.0, 2.0, 2))
        self.assertFalse(matrix.recoverable(mask, 2.5, 2.5, 2))

    def test_recoverable_3(self):
        mask = _band_mask(40, 4)
        self.assertEqual(4, mask.kappa)
        self.assertEqual(4, mask.rho)
        self.assertFalse(matrix.recoverable(mask, 2.0, 2.0, 2))

    def test_diagnostics_1(self):
        mask = _band_mask(40, 4)
        diag = matrix.diagnostics(mask, 2.0, 2.0, 2)
        self.assertAlmostEqual(1.2, diag['alpha'], places=12)
        self.assertIsNone(diag['beta'])
        self.assertIsNone(diag['bound'])
        self.assertTrue(diag['vacuous'])

    def test_diagnostics_2(self):
        mask = _band_mask(32, 1)
        diag = matrix.diagnostics(mask, 1.0, 1.0, 1, lam=0.0, delta=0.01)
        alpha, beta = 1.5 * (2.0 / 32.0), 1.0 / 32.0
        bound = 0.02 + 0.02 * math.sqrt(32.0) / (1.0 - beta) * math.sqrt(1.0 + 1.0 / (1.0 - alpha))
        self.assertAlmostEqual(alpha, diag['alpha'], places=12)
        self.assertAlmostEqual(beta, diag['beta'], places=12)
        self.assertAlmostEqual(bound, diag['bound'], places=12)
        self.assertFalse(diag['vacuous'])

    def test_diagnostics_3(self):
        diag = matrix.diagnostics(_band_mask(8, 1), 1.0, 1.0, 1, lam=1.0)
        self.assertEqual(math.inf, diag['beta'])
        self.assertTrue(diag['vacuous'])


class TestComplete(TestCase):
    def test_complete_1(self):
        # everything observed
        data = numpy.arange(12.0).reshape(3, 4)
        report = matrix.complete(data, ObservationMask(numpy.ones((3, 4), dtype=bool)))
        numpy.testing.assert_array_equal(data, report.matrix)
        self.assertEqual(0, report.iterations)
        self.assertEqual(2, report.rank)

    def test_complete_2(self):
        # rank one, diagonal hidden
        vec = _sign_vector(20, 1)
        truth = numpy.outer(vec, vec)
        mask = _band_mask(20, 1)
        self.assertTrue(matrix.recoverable(mask, 1.0, 1.0, 1))
        report = matrix.complete(numpy.where(mask.observed, truth, 0.0), mask, rank=1, mu_u=1.0)
        self.assertLess(numpy.abs(report.matrix - truth).max(), 1e-6)
        self.assertTrue(report.recoverable)
        self.assertEqual(1, report.rank)

    def test_complete_3(self):
        # rank two with incoherence 1, three hidden entries per row and column
        basis = _hadamard(32)[:, 1:3] / math.sqrt(32.0)
        truth = basis @ numpy.diag([1.0, 0.5]) @ basis.T
        mask = _neighbour_mask(32)
        self.assertTrue(matrix.recoverable(mask, 1.0, 1.0, 2))
        report = matrix.complete(truth, mask, rank=2, mu_u=1.0, mu_v=1.0)
        error = numpy.linalg.norm(report.matrix - truth) / numpy.linalg.norm(truth)
        self.assertLess(error, 1e-6)
        # agrees with the observations, and is no larger in nuclear norm than the truth
        self.assertLess(numpy.abs((report.matrix - truth)[mask.observed]).max(), 1e-6)
        self.assertLess(report.nuclear_norm, 1.5 + 1e-6)

    def test_complete_4(self):
        # values at hidden positions are ignored
        vec = _sign_vector(12, 2)
        truth = numpy.outer(vec, vec)
        mask = _band_mask(12, 1)
        garbage = truth + 100.0 * numpy.eye(12)
        first = matrix.complete(truth, mask).matrix
        second = matrix.complete(garbage, mask).matrix
        numpy.testing.assert_allclose(first, second, atol=1e-12)

    def test_complete_5(self):
        # noisy observations stay within the predicted bound
        vec = _sign_vector(32, 3)
        truth = numpy.outer(vec, vec)
        mask = _band_mask(32, 1)
        rng = numpy.random.default_rng(4)
        for delta in (1e-4, 1e-3):
            noise = rng.standard_normal((32, 32))
            noise *= 0.9 * delta / numpy.linalg.norm(noise[mask.observed])
            settings = CompletionSettings(delta=delta)
            report = matrix.complete(truth + noise, mask, settings, rank=1, mu_u=1.0, lam=0.0)
            self.assertFalse(report.vacuous)
            self.assertLessEqual(numpy.linalg.norm(report.matrix - truth), report.bound)
            gap = numpy.linalg.norm((report.matrix - truth - noise)[mask.observed])
            self.assertLessEqual(gap, delta + 1e-6)

    def test_complete_6(self):
        # a vacuous noisy bound warns but does not fail
        vec = _sign_vector(8, 5)
        truth = numpy.outer(vec, vec)
        mask = _band_mask(8, 4)
        settings = CompletionSettings(delta=1e-3)
        with mock.patch('prodmix.analyzers.completers.matrix._solve') as mock_solve:
            mock_solve.return_value = (truth, 7, 1e-10, True)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter('always')
                report = matrix.complete(truth, mask, settings, rank=2, mu_u=2.0)
        self.assertTrue(report.vacuous)
        self.assertEqual(7, report.iterations)
        self.assertTrue(any(issubclass(w.category, matrix.VacuousBoundWarning) for w in caught))

    def test_complete_7(self):
        vec = _sign_vector(12, 6)
        truth = numpy.outer(vec, vec)
        with self.assertRaises(CompletionError) as err:
            matrix.complete(truth, _band_mask(12, 1), CompletionSettings(max_iterations=2))
        self.assertEqual(2, err.exception.iterations)
        self.assertEqual((12, 12), err.exception.last_iterate.shape)
        self.assertGreater(err.exception.residual, 0.0)

    def test_complete_8(self):
        self.assertRaises(ValueError, matrix.complete, numpy.zeros((3, 3)), _band_mask(4, 1))

    def test_complete_9(self):
        # nothing observed but zeros
        report = matrix.complete(numpy.zeros((4, 4)), _band_mask(4, 1))
        numpy.testing.assert_array_equal(numpy.zeros((4, 4)), report.matrix)
        self.assertEqual(0, report.rank)

    def test_complete_10(self):
        # an unconverged iterate that meets the observations is returned and flagged
        vec = _sign_vector(20, 7)
        truth = numpy.outer(vec, vec)
        with mock.patch('prodmix.analyzers.completers.matrix._solve') as mock_solve:
            mock_solve.return_value = (truth, 5000, 1e-8, False)
            report = matrix.complete(truth, _band_mask(20, 1), rank=1, mu_u=1.0)
        self.assertFalse(report.converged)
        self.assertFalse(report.recoverable)
        self.assertEqual(5000, report.iterations)
        self.assertFalse(report.as_dict()['converged'])

    def test_complete_11(self):
        # an unconverged iterate that misses the observations is an error
        vec = _sign_vector(20, 8)
        truth = numpy.outer(vec, vec)
        settings = CompletionSettings(feasibility_tolerance=1e-4)
        with mock.patch('prodmix.analyzers.completers.matrix._solve') as mock_solve:
            mock_solve.return_value = (0.5 * truth, 5000, 1e-3, False)
            with self.assertRaises(CompletionError) as err:
                matrix.complete(truth, _band_mask(20, 1), settings)
        self.assertEqual(5000, err.exception.iterations)
        self.assertEqual(1e-3, err.exception.residual)

    def test_complete_12(self):
        # a spiky rank-one instance outside the recovery condition still returns a feasible
        # iterate, no larger in nuclear norm than the truth
        vec = numpy.full(20, math.sqrt((1.0 - 0.338) / 19.0))
        vec[0] = math.sqrt(0.338)
        incoherence = 20.0 * float((vec ** 2).max())
        self.assertAlmostEqual(6.76, incoherence, places=10)
        truth = numpy.outer(vec, vec)
        mask = _band_mask(20, 1)
        settings = CompletionSettings(max_iterations=20000)
        report = matrix.complete(truth, mask, settings, rank=1, mu_u=incoherence)
        self.assertFalse(report.recoverable)
        gap = numpy.linalg.norm((report.matrix - truth)[mask.observed])
        self.assertLess(gap, 1e-5 * numpy.linalg.norm(truth))
        self.assertLessEqual(report.nuclear_norm, _nuclear_norm(truth) + 1e-5)

    def test_monotone_1(self):
        # hiding fewer entries keeps a recovered instance recovered
        basis = _hadamard(32)[:, 1:3] / math.sqrt(32.0)
        truth = basis @ numpy.diag([1.0, 0.5]) @ basis.T
        for mask in (_neighbour_mask(32), _band_mask(32, 2), _band_mask(32, 1)):
            report = matrix.complete(truth, mask)
            self.assertLess(numpy.linalg.norm(report.matrix - truth), 1e-6)


class TestRandomInstances(TestCase):
    """
    Random incoherent factors rather than structured ones. Exact recovery is asserted wherever
    the recovery condition holds, and minimality against the (feasible) truth everywhere.
    """

    def test_recovery_1(self):
        # diagonal hidden, ranks one to three, several seeds
        mask = _band_mask(40, 1)
        settings = CompletionSettings(max_iterations=20000)
        recovered = 0
        for rank in (1, 2, 3):
            for seed in range(3):
                basis, incoherence = _random_factors(40, rank, 10 * rank + seed)
                truth = basis @ numpy.diag(numpy.linspace(1.0, 0.4, rank)) @ basis.T
                report = matrix.complete(truth, mask, settings, rank=rank, mu_u=incoherence)
                if not matrix.recoverable(mask, incoherence, incoherence, rank):
                    continue
                recovered += 1
                self.assertTrue(report.converged)
                error = numpy.linalg.norm(report.matrix - truth) / numpy.linalg.norm(truth)
                self.assertLess(error, 1e-6, 'rank {}, seed {}'.format(rank, seed))
        self.assertGreater(recovered, 0)

    def test_recovery_2(self):
        # rank three in forty dimensions with the diagonal and three random pairs per row hidden
        settings = CompletionSettings(max_iterations=20000)
        for seed in range(3):
            basis, _ = _random_factors(40, 3, seed)
            truth = basis @ numpy.diag([1.0, 0.7, 0.4]) @ basis.T
            mask = _random_pairs_mask(40, 3, seed)
            report = matrix.complete(numpy.where(mask.observed, truth, 0.0), mask, settings)
            self.assertTrue(report.converged)
            error = numpy.linalg.norm(report.matrix - truth) / numpy.linalg.norm(truth)
            self.assertLess(error, 1e-6, 'seed {}'.format(seed))
            self.assertEqual(3, report.rank)

    def test_minimal_1(self):
        # never larger in nuclear norm than the truth, and always agreeing with the observations
        settings = CompletionSettings(max_iterations=20000)
        for seed in range(3):
            basis, _ = _random_factors(40, 3, 100 + seed)
            truth = basis @ numpy.diag([1.0, 0.7, 0.4]) @ basis.T
            mask = _random_pairs_mask(40, 3, 100 + seed)
            report = matrix.complete(truth, mask, settings)
            self.assertLessEqual(report.nuclear_norm, _nuclear_norm(truth) + 1e-6)
            gap = numpy.linalg.norm((report.matrix - truth)[mask.observed])
            self.assertLess(gap, 1e-6 * numpy.linalg.norm(truth))

    def test_minimal_2(self):
        # the same holds for non-symmetric factors when far more entries are hidden
        rng = numpy.random.default_rng(41)
        left, _ = numpy.linalg.qr(rng.standard_normal((30, 2)))
        right, _ = numpy.linalg.qr(rng.standard_normal((30, 2)))
        truth = left @ numpy.diag([1.0, 0.6]) @ right.T
        mask = ObservationMask(rng.random((30, 30)) > 0.4)
        report = matrix.complete(truth, mask, CompletionSettings(max_iterations=20000))
        self.assertLessEqual(report.nuclear_norm, _nuclear_norm(truth) + 1e-6)
        gap = numpy.linalg.norm((report.matrix - truth)[mask.observed])
        self.assertLess(gap, 1e-6 * numpy.linalg.norm(truth))


class TestMatrixCompleter(TestCase):
    def test_init_1(self):
        self.assertRaises(TypeError, MatrixCompleter, [[1.0]], {'mask': [[True]]})

    def test_init_2(self):
        self.assertRaises(RuntimeError, MatrixCompleter, numpy.ones((2, 2)))

    def test_init_3(self):
        self.assertRaises(RuntimeError, MatrixCompleter, numpy.ones((2, 2)),
                          {'mask': numpy.ones((2, 2), dtype=bool), 'colour': 'blue'})

    def test_run_1(self):
        data = numpy.ones((2, 2))
        setts = {'mask': numpy.array([[True, False], [True, True]]), 'rank': 1, 'mu_u': 1.0,
                 'tolerance': 1e-6}
        with mock.patch('prodmix.analyzers.completers.matrix.complete') as mock_complete:
            actual = MatrixCompleter(data, setts).run()
        self.assertIs(mock_complete.return_value, actual)
        args = mock_complete.call_args[0]
        self.assertIs(data, args[0])
        self.assertEqual([[True, False], [True, True]], args[1].observed.tolist())
        self.assertEqual(1e-6, args[2].tolerance)
        self.assertEqual((1, 1.0, None, None), args[3:])


#-------------------------------------------------------------------------------------------------#
# Definitions                                                                                     #
#-------------------------------------------------------------------------------------------------#
OBSERVATION_MASK_SUITE = TestLoader().loadTestsFromTestCase(TestObservationMask)
COMPLETION_SETTINGS_SUITE = TestLoader().loadTestsFromTestCase(TestCompletionSettings)
RECOVERABLE_SUITE = TestLoader().loadTestsFromTestCase(TestRecoverable)
COMPLETE_SUITE = TestLoader().loadTestsFromTestCase(TestComplete)
RANDOM_INSTANCES_SUITE = TestLoader().loadTestsFromTestCase(TestRandomInstances)
MATRIX_COMPLETER_SUITE = TestLoader().loadTestsFromTestCase(TestMatrixCompleter)
