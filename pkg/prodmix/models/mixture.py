#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/models/mixture.py
# Purpose:                Mixtures of product distributions over the hypercube, and their moments.
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
A mixture of product distributions over ``{-1, +1}^n`` has ``k`` centers. Center ``i`` is chosen
with probability ``w_i``, and then coordinate ``j`` is ``+1`` with probability
``(1 + v_i(j)) / 2``, independently of the other coordinates.

Every moment entry with distinct indices equals the same entry of the *augmented* moment tensor
``sum_i w_i v_i^{(x)m}``. Entries with a repeated index carry no information, because
``x(j)**2 == 1``.

Random numbers come from :class:`numpy.random.Generator` with the ``PCG64`` bit generator.
:func:`sample` splits the work into chunks and gives each chunk its own stream, spawned from
:class:`numpy.random.SeedSequence` with the caller's seed, so results do not depend on how the
chunks are scheduled.
"""

import itertools
import json
import logging
import math
import warnings

import numpy
import pandas

from prodmix.models.symmetric_tensor import SymmetricTensor, multiset_count, rank_sorted


logger = logging.getLogger(__name__)

# mixing weights must sum to one within this
WEIGHT_TOLERANCE = 1e-12

# samples drawn per random stream in sample()
DEFAULT_CHUNK_SIZE = 100000

# upper limit on the entries of a temporary (samples x moments) product array
_PRODUCT_LIMIT = 1 << 22
_TRIALS_ERR = 'at least one trial is needed'


def make_generator(seed):
    """
    A :class:`numpy.random.Generator` over ``PCG64`` seeded with ``seed``.

    :param seed: An integer or a :class:`numpy.random.SeedSequence`.
    """
    return numpy.random.Generator(numpy.random.PCG64(seed))


class ProductMixture(object):
    """
    A mixture of ``k`` product distributions over ``{-1, +1}^n``.

    :param weights: The mixing weights ``w_1 .. w_k``.
    :type weights: sequence of float
    :param vectors: The bias vectors, one per row.
    :type vectors: ``k`` by ``n`` array

    :raises: :exc:`ValueError` if a weight is not positive, the weights do not sum to one, a
        bias is outside ``[-1, 1]``, or the shapes disagree.
    """

    _WEIGHT_ERR = 'mixing weights must be positive and sum to 1 (sum is {!r})'
    _BIAS_ERR = 'bias vectors must lie in [-1, 1]'
    _SHAPE_ERR = 'got {} weights for {} bias vectors'
    _SEPARATION_ERR = 'no mixture with separation >= {} in {} draws'

    def __init__(self, weights, vectors):
        super(ProductMixture, self).__init__()
        weights = numpy.array(weights, dtype=numpy.float64).ravel()
        vectors = numpy.atleast_2d(numpy.array(vectors, dtype=numpy.float64))
        if len(weights) != vectors.shape[0] or not len(weights):
            raise ValueError(ProductMixture._SHAPE_ERR.format(len(weights), vectors.shape[0]))
        if numpy.any(weights <= 0.0) or abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(ProductMixture._WEIGHT_ERR.format(float(weights.sum())))
        if not numpy.all(numpy.abs(vectors) <= 1.0):
            raise ValueError(ProductMixture._BIAS_ERR)
        weights.flags.writeable = False
        vectors.flags.writeable = False
        self._weights = weights
        self._vectors = vectors

    @property
    def weights(self):
        return self._weights

    @property
    def vectors(self):
        return self._vectors

    @property
    def n(self):
        "The dimension."
        return self._vectors.shape[1]

    @property
    def k(self):
        "The number of centers."
        return self._vectors.shape[0]

    @property
    def w_max(self):
        return float(self._weights.max())

    @property
    def w_min(self):
        return float(self._weights.min())

    def __repr__(self):
        return 'ProductMixture(n={}, k={})'.format(self.n, self.k)

    def as_dict(self):
        return {'n': self.n, 'k': self.k, 'weights': self._weights.tolist(),
                'vectors': self._vectors.tolist()}

    @classmethod
    def from_dict(cls, data):
        """
        :raises: :exc:`ValueError` if ``n`` or ``k`` disagree with the arrays.
        """
        mix = cls(data['weights'], data['vectors'])
        if int(data.get('n', mix.n)) != mix.n or int(data.get('k', mix.k)) != mix.k:
            raise ValueError('n and k do not match the weights and vectors')
        return mix

    def to_json(self, pathname):
        with open(pathname, 'w') as handle:
            json.dump(self.as_dict(), handle, indent=2)

    @classmethod
    def from_json(cls, pathname):
        with open(pathname, 'r') as handle:
            return cls.from_dict(json.load(handle))

    @classmethod
    def random(cls, n, k, seed, span=None, bias=0.9, min_separation=None, max_tries=1000):
        """
        Draw a random mixture. Weights are uniform on ``[1, 2]`` before normalization.

        :param int n: The dimension.
        :param int k: The number of centers.
        :param int seed: Seed for the generator.
        :param span: If given, every bias vector lies in one random subspace of this dimension.
            Otherwise each coordinate is uniform on ``[-bias, bias]``.
        :type span: int or None
        :param float bias: Largest absolute bias of any coordinate.
        :param min_separation: If given, redraw until :func:`separation` is at least this.
        :type min_separation: float or None
        :param int max_tries: How many draws to attempt for ``min_separation``.

        :raises: :exc:`ValueError` if no draw reaches ``min_separation``.
        """
        rng = make_generator(seed)
        for _ in range(max_tries):
            weights = rng.uniform(1.0, 2.0, size=k)
            weights /= weights.sum()
            if span is None:
                vectors = rng.uniform(-bias, bias, size=(k, n))
            else:
                vectors = rng.standard_normal((k, span)) @ rng.standard_normal((span, n))
                vectors *= bias / numpy.abs(vectors).max(axis=1, keepdims=True)
            weights[-1] = 1.0 - weights[:-1].sum()
            mix = cls(weights, vectors)
            if min_separation is None or k < 2 or separation(mix) >= min_separation:
                return mix
        raise ValueError(ProductMixture._SEPARATION_ERR.format(min_separation, max_tries))


class SampleSet(object):
    """
    ``N`` samples from ``{-1, +1}^n``, one per row, and the seed that produced them.

    Samples drawn by :func:`sample` also keep the hidden center each one came from, in
    ``centers``. Learning never looks at it; files written by :meth:`savetxt` leave it out.

    :raises: :exc:`ValueError` if an entry is not exactly ``+1`` or ``-1``, or ``centers`` does
        not have one entry per sample.
    """

    def __init__(self, samples, seed=None, centers=None):
        super(SampleSet, self).__init__()
        samples = numpy.atleast_2d(numpy.asarray(samples))
        if not numpy.all(numpy.abs(samples) == 1):
            raise ValueError('samples must be +1 or -1')
        samples = samples.astype(numpy.int8)
        samples.flags.writeable = False
        if centers is not None:
            centers = numpy.array(centers, dtype=numpy.int64)
            if centers.shape != (samples.shape[0],):
                raise ValueError('expected {} centers, got {}'.format(samples.shape[0],
                                                                      centers.shape))
            centers.flags.writeable = False
        self._samples = samples
        self._centers = centers
        self.seed = seed

    @property
    def samples(self):
        return self._samples

    @property
    def centers(self):
        "The center behind each sample, or ``None`` when unknown."
        return self._centers

    @property
    def size(self):
        "The number of samples ``N``."
        return self._samples.shape[0]

    @property
    def n(self):
        return self._samples.shape[1]

    def __len__(self):
        return self.size

    def savetxt(self, pathname):
        "Write one space-separated row of ``+1``/``-1`` values per line."
        pandas.DataFrame(self._samples).to_csv(pathname, sep=' ', header=False, index=False)

    @classmethod
    def loadtxt(cls, pathname, seed=None):
        return cls(pandas.read_csv(pathname, sep=r'\s+', header=None).to_numpy(), seed)


class MomentRequest(object):
    """
    How accurately moments of a given order should be estimated.

    :param int order: The moment order ``m``.
    :param float epsilon: Every entry should be within this of its expectation.
    :param float delta: Allowed probability of failure.

    :raises: :exc:`ValueError` if ``epsilon`` is outside ``(0, 1]`` or ``delta`` is outside
        ``(0, 1)``.
    """

    def __init__(self, order, epsilon, delta):
        super(MomentRequest, self).__init__()
        if int(order) < 1:
            raise ValueError('order must be at least 1')
        if not 0.0 < epsilon <= 1.0:
            raise ValueError('epsilon must lie in (0, 1]')
        if not 0.0 < delta < 1.0:
            raise ValueError('delta must lie in (0, 1)')
        self.order = int(order)
        self.epsilon = float(epsilon)
        self.delta = float(delta)


def sample(mix, size, seed, chunk_size=DEFAULT_CHUNK_SIZE):
    """
    Draw samples from a mixture: choose center ``i`` with probability ``w_i``, then set each
    coordinate ``j`` to ``+1`` with probability ``(1 + v_i(j)) / 2``.

    :param mix: The mixture.
    :type mix: :class:`ProductMixture`
    :param int size: The number of samples ``N``.
    :param int seed: The seed. The same seed and ``chunk_size`` give the same samples.
    :param int chunk_size: Samples drawn from each spawned stream.

    :rtype: :class:`SampleSet`
    """
    root = numpy.random.SeedSequence(seed)
    n_chunks = max(1, int(math.ceil(size / float(chunk_size))))
    streams = root.spawn(n_chunks)
    logger.debug('sampling %d points in %d chunks from seed %s', size, n_chunks, seed)
    chunks, labels = [], []
    for i, stream in enumerate(streams):
        rng = make_generator(stream)
        count = min(chunk_size, size - i * chunk_size)
        if count <= 0:
            break
        centers = rng.choice(mix.k, size=count, p=mix.weights)
        coins = rng.random((count, mix.n))
        chunks.append(numpy.where(coins < (1.0 + mix.vectors[centers]) / 2.0, 1, -1))
        labels.append(centers)
    samples = numpy.concatenate(chunks) if chunks else numpy.ones((0, mix.n))
    centers = numpy.concatenate(labels) if labels else numpy.zeros(0, dtype=numpy.int64)
    return SampleSet(samples.astype(numpy.int8).reshape(size, mix.n), seed, centers)


def exact_augmented_moments(mix, order):
    """
    The full augmented moment tensor ``sum_i w_i v_i^{(x)m}``.

    :rtype: :class:`SymmetricTensor`

    :raises: :exc:`ValueError` if ``order < 1``.
    """
    if order < 1:
        raise ValueError('order must be at least 1')
    tensor = SymmetricTensor(order, mix.n, numpy.zeros(multiset_count(mix.n, order)))
    rows = tensor.indices()
    products = numpy.ones((mix.k, len(rows)))
    for t in range(order):
        products *= mix.vectors[:, rows[:, t]]
    return SymmetricTensor(order, mix.n, mix.weights @ products)


def empirical_multilinear_moments(samples, order):
    """
    Estimate the multilinear entries of the order-``m`` moment tensor: the entry
    ``(j_1 < ... < j_m)`` is the mean over samples of ``x(j_1) * ... * x(j_m)``. Every other entry
    is absent.

    :param samples: The samples.
    :type samples: :class:`SampleSet`
    :param int order: The moment order ``m``.

    :rtype: :class:`SymmetricTensor`

    :raises: :exc:`ValueError` if ``order`` exceeds the dimension or is less than one.
    """
    dim = samples.n
    if not 1 <= order <= dim:
        raise ValueError('cannot estimate order-{} multilinear moments in dimension {}'.format(
            order, dim))
    combos = numpy.array(list(itertools.combinations(range(dim), order)), dtype=numpy.int64)
    totals = numpy.zeros(len(combos))
    batch = max(1, _PRODUCT_LIMIT // max(1, len(combos)))
    data = samples.samples
    for start in range(0, samples.size, batch):
        block = data[start:start + batch].astype(numpy.float64)
        products = numpy.ones((len(block), len(combos)))
        for t in range(order):
            products *= block[:, combos[:, t]]
        totals += products.sum(axis=0)
    count = multiset_count(dim, order)
    values = numpy.zeros(count)
    mask = numpy.zeros(count, dtype=bool)
    ranks = rank_sorted(combos, dim)
    values[ranks] = totals / max(1, samples.size)
    mask[ranks] = True
    return SymmetricTensor(order, dim, values, mask)


def separation(mix):
    """
    ``eta = 1 - max_{i != j} |<v_i, v_j>| / (||v_i|| ||v_j||)``. Orthogonal centers give 1;
    duplicate or opposite centers give 0, which is logged as a warning.

    :rtype: float

    :raises: :exc:`ValueError` if ``k < 2`` or some bias vector is zero.
    """
    if mix.k < 2:
        raise ValueError('separation needs at least two centers')
    norms = numpy.linalg.norm(mix.vectors, axis=1)
    if numpy.any(norms == 0.0):
        raise ValueError('separation is undefined for a zero bias vector')
    unit = mix.vectors / norms[:, numpy.newaxis]
    cosines = numpy.abs(unit @ unit.T)
    numpy.fill_diagonal(cosines, 0.0)
    eta = max(0.0, 1.0 - float(cosines.max()))
    if eta == 0.0:
        logger.warning('centers are not separated: two bias vectors are parallel; merge '
                       'duplicate centers before learning')
    return eta


def min_odd_power(k, eta):
    """
    The smallest odd ``m`` with ``m >= ceil(log(k) / log(1 / (1 - eta)))``. At that power the
    tensor powers of ``eta``-separated centers are linearly independent.

    :param int k: The number of centers.
    :param float eta: The separation.

    :rtype: int

    :raises: :exc:`ValueError` with ``'not separated'`` if ``eta <= 0``.
    """
    if eta <= 0.0:
        raise ValueError('not separated (eta = {!r}); merge duplicate centers first'.format(eta))
    if eta >= 1.0 or k <= 1:
        return 1
    power = int(math.ceil(math.log(k) / math.log(1.0 / (1.0 - eta)) - 1e-12))
    power = max(power, 1)
    return power if power % 2 else power + 1


def power_gram(mix, order):
    """
    The Gram matrix of the normalized tensor powers ``v_i^{(x)m} / ||v_i||^m``. Its entries are
    the ``m``-th powers of the cosines between centers.

    :rtype: ``k`` by ``k`` :class:`numpy.ndarray`
    """
    unit = mix.vectors / numpy.linalg.norm(mix.vectors, axis=1)[:, numpy.newaxis]
    return (unit @ unit.T) ** order


def _sample_bound(epsilon, dim, order, delta):
    return 2.0 / epsilon ** 2 * (4.0 * order * math.log(dim) + math.log(1.0 / delta))


def required_samples(request, dim, order=None):
    """
    Samples needed for every moment entry up to order ``m`` to be within ``epsilon`` of its
    expectation with probability ``1 - delta``: ``ceil((2 / eps**2) (4 m log n + log(1 / delta)))``.

    :param request: Accuracy and failure probability.
    :type request: :class:`MomentRequest`
    :param int dim: The dimension ``n``.
    :param order: The order ``m``. Defaults to ``request.order``.
    :type order: int or None

    :rtype: int
    """
    order = request.order if order is None else order
    value = _sample_bound(request.epsilon, dim, order, request.delta)
    # round-off in the logarithms must not push an exact integer up by one
    return int(math.ceil(value * (1.0 - 1e-12)))


def hoeffding_accuracy(size, dim, order, delta):
    """
    The accuracy ``epsilon`` that ``size`` samples achieve, solving the bound in
    :func:`required_samples` for ``epsilon``.

    :rtype: float
    """
    return math.sqrt(2.0 * (4.0 * order * math.log(dim) + math.log(1.0 / delta)) / size)


def moment_error_rates(mix, sizes, trials, seed, order, delta=0.01):
    """
    How the error of the empirical multilinear moments falls as the sample size grows.

    For every size ``N`` in ``sizes``, draw ``trials`` independent sample sets and compare their
    order-``m`` multilinear moments with the exact ones. The table has one row per ``N``:

    * ``median_error``: median over trials of the median entry error.
    * ``max_error``: median over trials of the largest entry error.
    * ``envelope``: :func:`hoeffding_accuracy` for ``N`` at failure probability ``delta``.
    * ``violations``: fraction of trials in which some entry lies outside the envelope.
    * ``ratio``: ``median_error`` of the previous row divided by this one. Quadrupling ``N``
      should give about 2.

    :param mix: The mixture to sample from.
    :type mix: :class:`ProductMixture`
    :param sizes: Sample sizes, in increasing order.
    :type sizes: sequence of int
    :param int trials: Sample sets drawn per size.
    :param int seed: Seed for the whole table. Every sample set gets its own derived seed.
    :param int order: The moment order ``m``.
    :param float delta: Failure probability for the envelope.

    :rtype: :class:`pandas.DataFrame`, indexed by ``samples``

    :raises: :exc:`ValueError` if ``trials`` is less than one or ``order`` exceeds ``n``.
    """
    if int(trials) < 1:
        raise ValueError(_TRIALS_ERR)
    exact = exact_augmented_moments(mix, order)
    seeds = numpy.random.SeedSequence(seed).generate_state(len(sizes) * trials)
    rows = []
    for i, size in enumerate(sizes):
        medians, maxima = [], []
        for trial in range(trials):
            samples = sample(mix, size, int(seeds[i * trials + trial]))
            estimate = empirical_multilinear_moments(samples, order)
            errors = numpy.abs(estimate.values - exact.values)[estimate.mask]
            medians.append(float(numpy.median(errors)))
            maxima.append(float(errors.max()))
        envelope = hoeffding_accuracy(size, mix.n, order, delta)
        rows.append({'samples': int(size), 'median_error': float(numpy.median(medians)),
                     'max_error': float(numpy.median(maxima)), 'envelope': envelope,
                     'violations': float(numpy.mean(numpy.array(maxima) > envelope))})
        logger.debug('N=%d: median entry error %.3g over %d trials', size,
                     rows[-1]['median_error'], trials)
    table = pandas.DataFrame(rows).set_index('samples')
    table['ratio'] = table['median_error'].shift(1) / table['median_error']
    return table


def sample_error_terms(epsilon, dim, order):
    """
    Error terms carried into whitening and decomposition when the moments of orders ``2m`` and
    ``3m`` are estimated to accuracy ``epsilon``: ``4 eps (5 n**1.5)**(3m - 2)`` for the
    flattened order-``2m`` moments and ``4 eps (5 n**1.5)**(4.5m - 2)`` for the order-``3m``
    moments, both in Frobenius norm.

    :rtype: 2-tuple of float
    """
    base = 5.0 * dim ** 1.5
    return (4.0 * epsilon * base ** (3 * order - 2), 4.0 * epsilon * base ** (4.5 * order - 2))


def check_sample_size(samples, request, order=None):
    """
    Warn with :class:`MomentAccuracyWarning` when a sample set is smaller than
    :func:`required_samples` asks for.

    :returns: The number of samples required.
    :rtype: int
    """
    needed = required_samples(request, samples.n, order)
    if samples.size < needed:
        message = '{} samples give moment accuracy {:.3g}; {} are needed for {:.3g}'.format(
            samples.size, hoeffding_accuracy(samples.size, samples.n, order or request.order,
                                             request.delta), needed, request.epsilon)
        logger.warning(message)
        warnings.warn(message, MomentAccuracyWarning)
    return needed


class MomentAccuracyWarning(RuntimeWarning):
    """
    There are fewer samples than needed for the requested moment accuracy.
    """
    pass
