#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/experimenter.py
# Purpose:                Base class for analyzers that work on complete moments.
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
This module outlines the Experimenter base class, which helps with turning complete moment
matrices and tensors into whitening maps, decompositions, and mixture parameters.
"""

from prodmix.analyzers.completer import run_jobs


class Experimenter(object):
    """
    Run an experiment on complete moments.

    Use the :attr:`possible_settings` attribute to know which settings a subclass understands.
    """

    possible_settings = {}
    default_settings = {}

    _SETTINGS_ERR = '{} requires the setting "{}"'

    def __init__(self, index, settings=None):
        """
        Create a new Experimenter.

        :param index: The input. Its type depends on the subclass.
        :param settings: A dict of the settings for this Experimenter. Settings that are not given
            take their value from :attr:`default_settings`.
        :type settings: dict or None

        :raises: :exc:`RuntimeError` if a setting with no default is not present in ``settings``.
        """
        super(Experimenter, self).__init__()
        self._index = index
        self._settings = dict(self.default_settings)
        self._settings.update(settings or {})
        for key in self.possible_settings:
            if key not in self._settings:
                raise RuntimeError(Experimenter._SETTINGS_ERR.format(self.__class__.__name__, key))

    def run(self):
        """
        Run the experiment.

        :returns: The result of the experiment. Each subclass documents its return type.
        """
        pass

    def _do_multiprocessing(self, func, func_args):
        """
        Submit each of the argument lists in ``func_args`` to the function in ``func``. In the
        future, this method may use multiprocessing.

        :param func: The function to call.
        :type func: module-level function
        :param func_args: A nested list of the arguments to be passed to ``func``. Each outer list
            element will be a single call to ``func``.
        :type func_args: iterable of iterables of objects

        :returns: A list of whatever was returned by ``func``.
        :rtype: list

        **Side Effects**

        Blocks until all calculations have completed.
        """
        return run_jobs(func, func_args)
