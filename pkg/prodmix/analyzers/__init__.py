#!/usr/bin/env python
# -*- coding: utf-8 -*-
#--------------------------------------------------------------------------------------------------
# Program Name:           prodmix
# Program Description:    Learns mixtures of product distributions through tensor completion.
#
# Filename:               prodmix/analyzers/__init__.py
# Purpose:                Init file.
#--------------------------------------------------------------------------------------------------
"""
Completers fill in the missing entries of a partially-observed matrix or symmetric tensor. The
:class:`~completers.matrix.MatrixCompleter` solves one matrix completion problem; the
:class:`~completers.tensor.SymmetricTensorCompleter` reduces tensor completion to many of them.

Analysis modules that subclass :class:`~prodmix.analyzers.experimenter.Experimenter`, by contrast,
take complete moments and turn them into something else: a whitening map, an orthogonal
decomposition, or the parameters of a mixture.
"""
