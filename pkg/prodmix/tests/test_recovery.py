#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/tests/test_recovery.py
# Purpose:                Tests for parameter recovery and scoring.
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

import functools
import os
import shutil
import tempfile
from unittest import TestCase, TestLoader

import mock
import numpy

from prodmix.analyzers.experimenters import power_iteration, recovery, whitening
from prodmix.analyzers.experimenters.recovery import RecoveryReport
from prodmix.models.mixture import ProductMixture


# pylint: disable=R0904
# pylint: disable=C0111
class TestUnflattenRoot(TestCase):
    def test_root_1(self):
        vec = numpy.array([0.5, -0.3, 0.8])
        flat = functools.reduce(numpy.kron, [vec] * 3)
        numpy.testing.assert_allclose(recovery.unflatten_root(flat, 3, 3), vec, atol=1e-14)

    def test_root_2(self):
        vec = numpy.array([0.2, -0.9])
        flat = functools.reduce(numpy.kron, [vec] * 5)
        numpy.testing.assert_allclose(recovery.unflatten_root(flat, 5, 2), vec, atol=1e-14)

    def test_root_3(self):
        # a perturbation of size d moves a coordinate by at most d**(1/m)
        vec = numpy.array([0.0, 0.5])
        flat = functools.reduce(numpy.kron, [vec] * 3)
        flat[0] += 1e-9
        actual = recovery.unflatten_root(flat, 3, 2)
        self.assertLessEqual(abs(actual[0]), 1e-3 * (1.0 + 1e-9))
        self.assertAlmostEqual(0.5, actual[1], places=14)

    def test_root_4(self):
        # roots are clamped to [-1, 1]
        flat = numpy.zeros(8)
        flat[0], flat[7] = 8.0, -27.0
        self.assertEqual([1.0, -1.0], recovery.unflatten_root(flat, 3, 2).tolist())

    def test_root_5(self):
        self.assertRaises(ValueError, recovery.unflatten_root, numpy.ones(4), 2, 2)
        self.assertRaises(ValueError, recovery.unflatten_root, numpy.ones(9), 3, 2)

    def test_root_6(self):
        vec = numpy.array([0.4, -0.6, 0.1])
        numpy.testing.assert_allclose(recovery.unflatten_root(vec, 1, 3), vec)


class TestRecoverParameters(TestCase):
    def test_recover_1(self):
        # exact moments of a mixture with order one give back weights and vectors
        rng = numpy.random.default_rng(6)
        weights = numpy.array([0.2, 0.3, 0.5])
        vectors = rng.uniform(-0.9, 0.9, size=(3, 6))
        matrix = (vectors.T * weights) @ vectors
        cube = numpy.einsum('i,ia,ib,ic->abc', weights, vectors, vectors, vectors)
        white = whitening.whiten(matrix, 3)
        decomposition = power_iteration.tensor_power_iteration(white.apply(cube), 3, seed=2)
        flats, actual_weights = recovery.recover_parameters(decomposition, white)
        # lambda_i = w_i**(-1/2), so the largest lambda goes with the smallest weight
        numpy.testing.assert_allclose(actual_weights, weights, atol=1e-8)
        numpy.testing.assert_allclose(flats, vectors, atol=1e-8)

    def test_recover_2(self):
        decomposition = mock.Mock(eigenvalues=numpy.array([1.0, -0.5]),
                                  vectors=numpy.eye(2))
        white = mock.Mock(unwhiten=numpy.eye(2))
        self.assertRaises(ValueError, recovery.recover_parameters, decomposition, white)

    def test_recover_3(self):
        decomposition = mock.Mock(eigenvalues=numpy.array([2.0]), vectors=numpy.array([[1.0]]))
        white = mock.Mock(unwhiten=numpy.array([[0.5], [0.25]]))
        flats, weights = recovery.recover_parameters(decomposition, white)
        numpy.testing.assert_allclose(weights, [0.25])
        numpy.testing.assert_allclose(flats, [[1.0, 0.5]])


class TestRecoveryReport(TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_init_1(self):
        report = RecoveryReport([[0.1, 0.2], [0.3, 0.4]], [0.4, 0.6], 1)
        self.assertEqual(2, report.k)
        self.assertEqual(2, report.n)
        self.assertTrue(report.weight_sum_ok)
        self.assertFalse(report.is_scored())

    def test_init_2(self):
        with self.assertLogs('prodmix.analyzers.experimenters.recovery', level='WARNING'):
            report = RecoveryReport([[0.1], [0.3]], [1.0, 1.0], 1)
        self.assertFalse(report.weight_sum_ok)

    def test_estimates_1(self):
        report = RecoveryReport([[0.1, 0.2], [0.3, 0.4]], [0.4, 0.6], 1)
        frame = report.estimates()
        self.assertEqual(['weight', 'v0', 'v1'], list(frame.columns))
        self.assertEqual([0.4, 0.6], frame['weight'].tolist())
        self.assertEqual([0.2, 0.4], frame['v1'].tolist())

    def test_scores_1(self):
        report = RecoveryReport([[0.1]], [1.0], 1)
        self.assertRaises(RuntimeError, report.scores)

    def test_json_1(self):
        report = RecoveryReport([[0.1, 0.2], [0.3, 0.4]], [0.4, 0.6], 3, {'whitening': {'k': 2}})
        pathname = os.path.join(self.directory, 'report.json')
        report.to_json(pathname)
        actual = RecoveryReport.from_json(pathname)
        numpy.testing.assert_array_equal(report.vectors, actual.vectors)
        numpy.testing.assert_array_equal(report.weights, actual.weights)
        self.assertEqual(3, actual.order)
        self.assertEqual({'whitening': {'k': 2}}, actual.diagnostics)


class TestMatchAndScore(TestCase):
    def setUp(self):
        self.truth = ProductMixture([0.2, 0.3, 0.5], 0.5 * numpy.eye(3))

    def test_match_1(self):
        estimates = numpy.array([-self.truth.vectors[2], self.truth.vectors[0],
                                 self.truth.vectors[1]])
        report = RecoveryReport(estimates, [0.5, 0.2, 0.3], 1)
        actual = recovery.match_and_score(self.truth, report)
        self.assertIs(report, actual)
        self.assertEqual([2, 0, 1], actual.permutation.tolist())
        self.assertEqual([-1, 1, 1], actual.signs.tolist())
        numpy.testing.assert_allclose(actual.vector_errors, 0.0, atol=1e-15)
        numpy.testing.assert_allclose(actual.weight_errors, 0.0, atol=1e-15)
        self.assertTrue(actual.is_scored())

    def test_match_2(self):
        estimates = numpy.array([[0.0, 0.45, 0.0], [0.5, 0.0, 0.1], [0.0, 0.0, 0.5]])
        report = recovery.match_and_score(self.truth, RecoveryReport(estimates, [0.25, 0.25, 0.5],
                                                                     1))
        self.assertEqual([1, 0, 2], report.permutation.tolist())
        numpy.testing.assert_allclose(report.vector_errors, [0.05, 0.1, 0.0], atol=1e-12)
        numpy.testing.assert_allclose(report.weight_errors, [0.05, 0.05, 0.0], atol=1e-12)
        frame = report.scores()
        self.assertEqual(['truth', 'sign', 'vector error', 'weight error'], list(frame.columns))
        post = report.as_dict()
        self.assertAlmostEqual(0.1, post['max_vector_error'], places=12)
        self.assertAlmostEqual(0.05, post['max_weight_error'], places=12)
        self.assertEqual([1, 0, 2], post['permutation'])

    def test_match_3(self):
        report = RecoveryReport(numpy.zeros((2, 3)), [0.5, 0.5], 1)
        self.assertRaises(ValueError, recovery.match_and_score, self.truth, report)

    def test_match_4(self):
        report = RecoveryReport(numpy.zeros((3, 2)), [0.2, 0.3, 0.5], 1)
        self.assertRaises(ValueError, recovery.match_and_score, self.truth, report)


#-------------------------------------------------------------------------------------------------#
# Definitions                                                                                     #
#-------------------------------------------------------------------------------------------------#
UNFLATTEN_ROOT_SUITE = TestLoader().loadTestsFromTestCase(TestUnflattenRoot)
RECOVER_PARAMETERS_SUITE = TestLoader().loadTestsFromTestCase(TestRecoverParameters)
RECOVERY_REPORT_SUITE = TestLoader().loadTestsFromTestCase(TestRecoveryReport)
MATCH_AND_SCORE_SUITE = TestLoader().loadTestsFromTestCase(TestMatchAndScore)
