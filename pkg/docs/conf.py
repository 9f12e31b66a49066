# -*- coding: utf-8 -*-
#
# c2e documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import sys
import os

# The package lives under src/, make it importable for autodoc.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), os.pardir, 'src')))

# -- General configuration ------------------------------------------------

needs_sphinx = '1.0'

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.todo',
    'sphinx.ext.coverage',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

# General information about the project.
project = u'c2e'
copyright = u'2026, the c2e developers'

# The short X.Y version.
version = '0.3'
# The full version, including alpha/beta/rc tags.
release = '0.3.0'

exclude_patterns = ['_build']

add_function_parentheses = True
add_module_names = True
show_authors = True
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'c2edoc'

# -- Options for LaTeX output ---------------------------------------------

latex_elements = {
    # The paper size ('letterpaper' or 'a4paper').
    #'papersize': 'letterpaper',
}

latex_documents = [
    ('index', 'c2e.tex', u'c2e Documentation',
     u'the c2e developers', 'manual'),
]

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('index', 'c2e', u'elastic cloud/edge training simulator',
     [u'the c2e developers'], 1)
]

autodoc_member_order = 'groupwise'
