#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               setup.py
# Purpose:                Distutils Information for prodmix
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
Distutils information for prodmix.
"""

from setuptools import setup
import prodmix  # to get the version numbers


# NOTE: update this from 'prodmix/__init__.py'
VERSION = prodmix.__version__

setup(
    name = "prodmix",
    version = VERSION,
    description = "Learning mixtures of product distributions through tensor completion",
    license = "AGPLv3+",
    platforms = 'any',
    keywords = ['mixture models', 'tensor decomposition', 'matrix completion',
                'method of moments'],
    python_requires = '>=3.6',
    install_requires = [
        # NB: keep this in sync with prodmix/requirements.txt
        'numpy >=1.17',
        'scipy >=1.4',
        'pandas >=0.25',
        ],
    extras_require = {
        'test': ['mock >=1.0.1', 'coverage'],
        },
    packages = [
        'prodmix',
        'prodmix.models',
        'prodmix.analyzers',
        'prodmix.analyzers.completers',
        'prodmix.analyzers.experimenters',
        'prodmix.tests',
        ],
    entry_points = {
        'console_scripts': ['prodmix = prodmix.cli:main'],
        },
    classifiers = [
        "Programming Language :: Python :: 3",
        "Natural Language :: English",
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU Affero General Public License v3 or later (AGPLv3+)",
        "Operating System :: OS Independent",
        "Topic :: Software Development :: Libraries :: Python Modules",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Information Analysis",
        ],
    long_description = """\
prodmix
-------

prodmix learns mixtures of product distributions over {-1, +1}^n from their moments. It fills in
the entries of the moment tensors that samples cannot estimate by completing low-rank matrix
slices, then recovers the mixing weights and bias vectors with tensor power iteration.
"""
)
