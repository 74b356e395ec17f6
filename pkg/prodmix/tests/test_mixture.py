#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/tests/test_mixture.py
# Purpose:                Tests for product mixtures, sampling, and moments.
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

import itertools
import math
import os
import shutil
import tempfile
import warnings
from unittest import TestCase, TestLoader

import numpy

from prodmix.models import mixture
from prodmix.models.mixture import MomentRequest, ProductMixture, SampleSet


# pylint: disable=R0904
# pylint: disable=C0111
class TestProductMixture(TestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_init_1(self):
        mix = ProductMixture([0.25, 0.75], [[0.5, -0.5, 0.0], [1.0, 1.0, -1.0]])
        self.assertEqual(3, mix.n)
        self.assertEqual(2, mix.k)
        self.assertEqual(0.75, mix.w_max)
        self.assertEqual(0.25, mix.w_min)

    def test_init_2(self):
        self.assertRaises(ValueError, ProductMixture, [0.5, 0.6], [[0.0], [0.0]])
        self.assertRaises(ValueError, ProductMixture, [1.5, -0.5], [[0.0], [0.0]])
        self.assertRaises(ValueError, ProductMixture, [1.0], [[1.1, 0.0]])
        self.assertRaises(ValueError, ProductMixture, [0.5, 0.5], [[0.0, 0.0]])

    def test_random_1(self):
        first = ProductMixture.random(8, 3, seed=4)
        second = ProductMixture.random(8, 3, seed=4)
        numpy.testing.assert_array_equal(first.vectors, second.vectors)
        numpy.testing.assert_array_equal(first.weights, second.weights)
        self.assertAlmostEqual(1.0, first.weights.sum(), places=14)
        self.assertLessEqual(numpy.abs(first.vectors).max(), 0.9)

    def test_random_2(self):
        mix = ProductMixture.random(12, 4, seed=1, span=2)
        self.assertEqual(2, numpy.linalg.matrix_rank(mix.vectors))
        numpy.testing.assert_allclose(numpy.abs(mix.vectors).max(axis=1), 0.9)

    def test_random_3(self):
        mix = ProductMixture.random(20, 3, seed=2, min_separation=0.5)
        self.assertGreaterEqual(mixture.separation(mix), 0.5)

    def test_random_4(self):
        self.assertRaises(ValueError, ProductMixture.random, 4, 3, seed=0, span=1,
                          min_separation=0.5, max_tries=5)

    def test_json_1(self):
        mix = ProductMixture([0.3, 0.7], [[0.1, 0.2], [-0.3, 0.4]])
        pathname = os.path.join(self.directory, 'mixture.json')
        mix.to_json(pathname)
        actual = ProductMixture.from_json(pathname)
        numpy.testing.assert_array_equal(mix.vectors, actual.vectors)
        numpy.testing.assert_array_equal(mix.weights, actual.weights)

    def test_from_dict_1(self):
        data = {'n': 3, 'k': 1, 'weights': [1.0], 'vectors': [[0.0, 0.0]]}
        self.assertRaises(ValueError, ProductMixture.from_dict, data)


class TestSampling(TestCase):
    def test_sample_1(self):
        mix = ProductMixture([1.0], [[1.0, 1.0, 1.0, 1.0]])
        samples = mixture.sample(mix, 50, seed=3)
        self.assertEqual((50, 4), samples.samples.shape)
        self.assertTrue(numpy.all(samples.samples == 1))

    def test_sample_2(self):
        mix = ProductMixture([1.0], [[-1.0, 1.0]])
        samples = mixture.sample(mix, 10, seed=3)
        self.assertEqual([[-1, 1]] * 10, samples.samples.tolist())

    def test_sample_3(self):
        # same seed, same samples
        mix = ProductMixture.random(6, 2, seed=8)
        first = mixture.sample(mix, 1000, seed=9, chunk_size=300)
        second = mixture.sample(mix, 1000, seed=9, chunk_size=300)
        numpy.testing.assert_array_equal(first.samples, second.samples)
        self.assertEqual(9, first.seed)
        third = mixture.sample(mix, 1000, seed=10, chunk_size=300)
        self.assertFalse(numpy.array_equal(first.samples, third.samples))

    def test_sample_4(self):
        # coordinate means approach sum_i w_i v_i
        mix = ProductMixture([0.4, 0.6], [[0.8, -0.2, 0.0], [-0.5, 0.5, 0.9]])
        samples = mixture.sample(mix, 200000, seed=1)
        expected = mix.weights @ mix.vectors
        numpy.testing.assert_allclose(samples.samples.mean(axis=0), expected, atol=0.01)

    def test_sample_5(self):
        # within each center, every coordinate is +1 with probability (1 + v(j)) / 2
        mix = ProductMixture([0.5, 0.5], [[0.8, -0.2, 0.0, -0.9, 0.4],
                                          [-0.5, 0.5, 0.9, 0.1, -0.3]])
        samples = mixture.sample(mix, 100000, seed=12)
        self.assertEqual((100000,), samples.centers.shape)
        for center in range(2):
            rows = samples.samples[samples.centers == center]
            self.assertAlmostEqual(0.5, len(rows) / 100000.0, delta=0.01)
            numpy.testing.assert_allclose((rows == 1).mean(axis=0),
                                          (1.0 + mix.vectors[center]) / 2.0, atol=0.01)

    def test_sample_6(self):
        # the hidden centers follow the chunks, and stay out of the file
        mix = ProductMixture([0.3, 0.7], [[1.0, 1.0], [-1.0, -1.0]])
        samples = mixture.sample(mix, 1000, seed=5, chunk_size=300)
        numpy.testing.assert_array_equal(numpy.where(samples.centers == 0, 1, -1),
                                         samples.samples[:, 0])
        directory = tempfile.mkdtemp()
        try:
            pathname = os.path.join(directory, 'samples.txt')
            samples.savetxt(pathname)
            self.assertIsNone(SampleSet.loadtxt(pathname).centers)
        finally:
            shutil.rmtree(directory)

    def test_sample_set_1(self):
        self.assertRaises(ValueError, SampleSet, [[1, 0]])
        self.assertRaises(ValueError, SampleSet, [[1, -1], [1, 1]], centers=[0])

    def test_sample_set_2(self):
        directory = tempfile.mkdtemp()
        try:
            pathname = os.path.join(directory, 'samples.txt')
            samples = SampleSet([[1, -1, 1], [-1, -1, 1]])
            samples.savetxt(pathname)
            actual = SampleSet.loadtxt(pathname)
        finally:
            shutil.rmtree(directory)
        self.assertEqual([[1, -1, 1], [-1, -1, 1]], actual.samples.tolist())
        self.assertEqual(2, len(actual))


class TestMoments(TestCase):
    def setUp(self):
        self.mix = ProductMixture([0.2, 0.3, 0.5], [[0.5, -0.4, 0.1, 0.9],
                                                   [-0.7, 0.2, 0.6, 0.3],
                                                   [0.1, 0.8, -0.5, -0.2]])

    def test_exact_1(self):
        moments = mixture.exact_augmented_moments(self.mix, 3)
        self.assertTrue(moments.is_complete())
        for index in itertools.combinations_with_replacement(range(4), 3):
            expected = sum(w * numpy.prod(v[list(index)]) for w, v in zip(self.mix.weights,
                                                                         self.mix.vectors))
            self.assertAlmostEqual(expected, moments[index], places=14)

    def test_exact_2(self):
        self.assertRaises(ValueError, mixture.exact_augmented_moments, self.mix, 0)

    def test_empirical_1(self):
        samples = mixture.sample(self.mix, 100000, seed=12)
        moments = mixture.empirical_multilinear_moments(samples, 3)
        exact = mixture.exact_augmented_moments(self.mix, 3)
        accuracy = mixture.hoeffding_accuracy(samples.size, 4, 3, 0.01)
        self.assertEqual(4, int(moments.mask.sum()))
        for index in itertools.combinations(range(4), 3):
            self.assertLess(abs(moments[index] - exact[index]), accuracy)
        self.assertFalse(moments.is_present((0, 0, 1)))

    def test_empirical_2(self):
        # brute force on a handful of samples
        samples = SampleSet([[1, -1, 1, 1], [-1, -1, 1, -1], [1, 1, 1, -1]])
        moments = mixture.empirical_multilinear_moments(samples, 2)
        data = samples.samples.astype(float)
        for first, second in itertools.combinations(range(4), 2):
            expected = numpy.mean(data[:, first] * data[:, second])
            self.assertAlmostEqual(expected, moments[(first, second)], places=14)

    def test_empirical_3(self):
        samples = SampleSet([[1, -1]])
        self.assertRaises(ValueError, mixture.empirical_multilinear_moments, samples, 3)


class TestSeparation(TestCase):
    def test_separation_1(self):
        mix = ProductMixture([0.5, 0.5], [[0.5, 0.0], [0.0, -0.5]])
        self.assertEqual(1.0, mixture.separation(mix))

    def test_separation_2(self):
        mix = ProductMixture([0.5, 0.5], [[0.5, 0.5], [-0.25, -0.25]])
        with self.assertLogs('prodmix.models.mixture', level='WARNING'):
            self.assertEqual(0.0, mixture.separation(mix))

    def test_separation_3(self):
        mix = ProductMixture([0.5, 0.5], [[1.0, 0.0], [1.0, 1.0]])
        self.assertAlmostEqual(1.0 - 1.0 / math.sqrt(2.0), mixture.separation(mix), places=14)

    def test_separation_4(self):
        self.assertRaises(ValueError, mixture.separation, ProductMixture([1.0], [[0.5]]))
        self.assertRaises(ValueError, mixture.separation,
                          ProductMixture([0.5, 0.5], [[0.0, 0.0], [1.0, 0.0]]))

    def test_min_odd_power_1(self):
        self.assertEqual(3, mixture.min_odd_power(4, 0.5))
        self.assertEqual(3, mixture.min_odd_power(8, 0.5))
        self.assertEqual(5, mixture.min_odd_power(9, 0.5))

    def test_min_odd_power_2(self):
        self.assertEqual(1, mixture.min_odd_power(10, 1.0))
        self.assertEqual(1, mixture.min_odd_power(1, 0.1))

    def test_min_odd_power_3(self):
        for eta in (0.0, -0.5):
            with self.assertRaises(ValueError) as err:
                mixture.min_odd_power(3, eta)
            self.assertIn('not separated', str(err.exception))

    def test_power_gram_1(self):
        # at the chosen power the Gram matrix of the normalized powers is well conditioned
        mix = ProductMixture.random(16, 4, seed=3, min_separation=0.4)
        power = mixture.min_odd_power(mix.k, mixture.separation(mix))
        gram = mixture.power_gram(mix, power)
        numpy.testing.assert_allclose(numpy.diag(gram), 1.0)
        self.assertGreater(numpy.linalg.eigvalsh(gram).min(), 0.0)


class TestSampleBounds(TestCase):
    def test_required_1(self):
        request = MomentRequest(1, 1.0, 1.0 / math.e)
        self.assertEqual(10, mixture.required_samples(request, math.e))

    def test_required_2(self):
        # halving epsilon quadruples the count, up to rounding
        request = MomentRequest(3, 0.1, 0.01)
        finer = MomentRequest(3, 0.05, 0.01)
        first = mixture.required_samples(request, 20)
        second = mixture.required_samples(finer, 20)
        self.assertLessEqual(abs(second - 4 * first), 4)

    def test_required_3(self):
        request = MomentRequest(2, 0.2, 0.05)
        needed = mixture.required_samples(request, 10, order=6)
        self.assertLessEqual(mixture.hoeffding_accuracy(needed, 10, 6, 0.05), 0.2)
        self.assertGreater(mixture.hoeffding_accuracy(needed - 1, 10, 6, 0.05), 0.2)

    def test_hoeffding_1(self):
        self.assertAlmostEqual(1.0, mixture.hoeffding_accuracy(10, math.e, 1, 1.0 / math.e),
                               places=14)

    def test_request_1(self):
        self.assertRaises(ValueError, MomentRequest, 3, 0.0, 0.1)
        self.assertRaises(ValueError, MomentRequest, 3, 1.5, 0.1)
        self.assertRaises(ValueError, MomentRequest, 3, 0.1, 1.0)
        self.assertRaises(ValueError, MomentRequest, 0, 0.1, 0.1)

    def test_error_terms_1(self):
        matrix_term, tensor_term = mixture.sample_error_terms(1.0, 1, 1)
        self.assertEqual(20.0, matrix_term)
        self.assertAlmostEqual(4.0 * 5.0 ** 2.5, tensor_term, places=10)

    def test_check_1(self):
        samples = SampleSet(numpy.ones((5, 3)))
        request = MomentRequest(3, 0.5, 0.1)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            needed = mixture.check_sample_size(samples, request)
        self.assertEqual(mixture.required_samples(request, 3), needed)
        self.assertTrue(any(issubclass(w.category, mixture.MomentAccuracyWarning)
                            for w in caught))

    def test_check_2(self):
        samples = SampleSet(numpy.ones((100000, 3)))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            mixture.check_sample_size(samples, MomentRequest(3, 0.5, 0.1))
        self.assertEqual([], [w for w in caught
                              if issubclass(w.category, mixture.MomentAccuracyWarning)])


class TestMomentErrorRates(TestCase):
    def setUp(self):
        self.mix = ProductMixture([0.4, 0.6], [[0.7] * 10, [0.7, -0.7] * 5])

    def test_rates_1(self):
        # quadrupling N halves the median entry error
        sizes = [10000, 40000, 160000]
        table = mixture.moment_error_rates(self.mix, sizes, trials=10, seed=21, order=3)
        self.assertEqual(sizes, table.index.tolist())
        self.assertEqual(['median_error', 'max_error', 'envelope', 'violations', 'ratio'],
                         table.columns.tolist())
        self.assertTrue(math.isnan(table['ratio'].iloc[0]))
        for ratio in table['ratio'].iloc[1:]:
            self.assertGreaterEqual(ratio, 1.6)
            self.assertLessEqual(ratio, 2.6)
        self.assertTrue((table['max_error'] >= table['median_error']).all())

    def test_rates_2(self):
        # entries stay inside the Hoeffding envelope at the sample size it asks for
        mix = ProductMixture([0.5, 0.5], [[0.6, -0.3, 0.0, 0.9, -0.8, 0.2],
                                          [-0.4, 0.5, 0.7, -0.1, 0.3, -0.6]])
        request = MomentRequest(3, 0.05, 0.01)
        needed = mixture.required_samples(request, 6)
        table = mixture.moment_error_rates(mix, [needed], trials=50, seed=3, order=3,
                                           delta=0.01)
        self.assertLessEqual(table.loc[needed, 'envelope'], 0.05)
        self.assertLessEqual(table.loc[needed, 'violations'], 0.02)

    def test_rates_3(self):
        # the same seed gives the same table
        first = mixture.moment_error_rates(self.mix, [500, 2000], trials=2, seed=4, order=2)
        second = mixture.moment_error_rates(self.mix, [500, 2000], trials=2, seed=4, order=2)
        self.assertTrue(first.equals(second))

    def test_rates_4(self):
        self.assertRaises(ValueError, mixture.moment_error_rates, self.mix, [100], 0, 1, 2)


#-------------------------------------------------------------------------------------------------#
# Definitions                                                                                     #
#-------------------------------------------------------------------------------------------------#
PRODUCT_MIXTURE_SUITE = TestLoader().loadTestsFromTestCase(TestProductMixture)
SAMPLING_SUITE = TestLoader().loadTestsFromTestCase(TestSampling)
MOMENTS_SUITE = TestLoader().loadTestsFromTestCase(TestMoments)
SEPARATION_SUITE = TestLoader().loadTestsFromTestCase(TestSeparation)
SAMPLE_BOUNDS_SUITE = TestLoader().loadTestsFromTestCase(TestSampleBounds)
MOMENT_ERROR_RATES_SUITE = TestLoader().loadTestsFromTestCase(TestMomentErrorRates)
