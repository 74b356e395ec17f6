#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/completer.py
# Purpose:                Base class for the matrix and tensor completion analyzers.
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
The :class:`Completer` base class. A completer takes partially-observed data and fills in what is
missing. Subclasses declare the type of data they accept and the settings they understand.
"""

import numpy

from prodmix.models.symmetric_tensor import SymmetricTensor


def run_jobs(func, jobs):
    """
    Call ``func`` once for each argument tuple in ``jobs``. This is a module-level function so it
    can be handed to a process pool.

    :param function func: The function to call.
    :param jobs: Argument tuples. The first element of each is a tag returned unchanged.
    :type jobs: list of tuple

    :returns: The return value of every call, in the order of ``jobs``.
    :rtype: list
    """
    return [func(*each_job) for each_job in jobs]  # pylint: disable=W0142


class Completer(object):
    """
    An object that completes one partially-observed matrix or tensor.

    Use the :attr:`required_input_type` attribute to know what type of object is required in
    :meth:`__init__`.
    """

    required_input_type = None
    "Either ``'numpy.ndarray'`` or ``'SymmetricTensor'``. Subclasses must set this."
    possible_settings = {}
    "A dict describing every setting a subclass understands."
    default_settings = {}
    "The value of every setting that is not given to the constructor."

    _TYPE_CONVERTER = {'numpy.ndarray': numpy.ndarray,
                       'SymmetricTensor': SymmetricTensor}

    # Error messages
    _INIT_KEY_ERR = '{} has an incorrectly-set "required_input_type"'
    _INIT_TYPE_ERR = '{} requires "{}" objects'
    _SETTINGS_ERR = '{} does not understand the setting "{}"'

    def __init__(self, data, settings=None):
        """
        :param data: The partially-observed input.
        :type data: :class:`numpy.ndarray` or :class:`SymmetricTensor`
        :param settings: Settings for this completer. Anything not given takes its value from
            :attr:`default_settings`.
        :type settings: dict or None

        :raises: :exc:`TypeError` if ``data`` is the wrong type.
        :raises: :exc:`RuntimeError` if ``settings`` holds a key not in :attr:`possible_settings`.
        """
        try:
            req_type = Completer._TYPE_CONVERTER[self.required_input_type]
        except KeyError:
            raise TypeError(Completer._INIT_KEY_ERR.format(self.__class__.__name__))
        if not isinstance(data, req_type):
            raise TypeError(Completer._INIT_TYPE_ERR.format(self.__class__.__name__,
                                                            self.required_input_type))
        super(Completer, self).__init__()
        self._data = data
        self._settings = dict(self.default_settings)
        for key, value in (settings or {}).items():
            if key not in self.possible_settings:
                raise RuntimeError(Completer._SETTINGS_ERR.format(self.__class__.__name__, key))
            self._settings[key] = value

    @property
    def settings(self):
        "A copy of the settings in use."
        return dict(self._settings)

    def run(self):
        """
        Complete the input.

        :returns: A report holding the completed data and diagnostics. Each subclass documents
            its report type.
        """
        pass

    def _do_multiprocessing(self, func, jobs):
        """
        Submit every argument tuple in ``jobs`` to ``func`` and wait for all of them. The jobs
        must not depend on each other. They run serially for now.

        :param function func: A module-level function.
        :param jobs: The argument tuples.
        :type jobs: list of tuple

        :returns: What ``func`` returned for each job, in order.
        :rtype: list
        """
        return run_jobs(func, jobs)
