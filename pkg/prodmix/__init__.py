#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/__init__.py
# Purpose:                Version numbers for the prodmix package.
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

_MAJOR = 0
_MINOR = 3
_PATCH = 1
__version__ = '%d.%d.%d' % (_MAJOR, _MINOR, _PATCH)
