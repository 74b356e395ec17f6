# -*- coding: utf-8 -*-
#
# prodmix documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import importlib.util
import os
import sys

# Ensure we can import "prodmix"
if importlib.util.find_spec('prodmix') is None:
    sys.path.insert(0, os.path.abspath('../..'))

import prodmix

# -- General configuration -----------------------------------------------------

# so Sphinx tells me about all references where the target cannot be found
nitpicky = False

needs_sphinx = '1.0'

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.doctest', 'sphinx.ext.intersphinx',
              'sphinx.ext.mathjax', 'sphinx.ext.viewcode']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'prodmix'
copyright = 'CC-BY-SA 4.0'

# The short X.Y version, and the full version
version = '.'.join(prodmix.__version__.split('.')[:2])
release = prodmix.__version__

exclude_patterns = ['_build']
add_function_parentheses = True
show_authors = False
pygments_style = 'sphinx'

# -- Options for HTML output ---------------------------------------------------

html_theme = 'sphinxdoc'
html_short_title = "prodmix API (v%s)" % release
html_static_path = ['_static']
html_last_updated_fmt = '%d %b %Y'
htmlhelp_basename = 'prodmixdoc'

# -- Options for LaTeX output --------------------------------------------------

latex_elements = {}
latex_documents = [
  ('index', 'prodmix.tex', 'prodmix Documentation', '', 'manual'),
]

# -- Options for manual page output --------------------------------------------

man_pages = [
    ('index', 'prodmix', 'prodmix Documentation', [], 1)
]

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'pandas': ('https://pandas.pydata.org/docs/', None)}
