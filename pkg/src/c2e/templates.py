"""
This module defines the canned templates the command line renders its human-readable output with. It also defines \
get_template which takes a template config string and returns a jinja2.Template object for the file-based template \
or canned template.

.. note:: Template Config Strings
There are two valid forms of a template config string. For a canned template, it must start with "CANNED:" and be \
the name of a canned template in this module, e.g. "CANNED:RUN_SUMMARY". For a user-provided file-based template it \
must start with "FILE:" and be the os path to the file ('~' is recognized), e.g. "FILE:~/.c2e/summary.txt". \
The command line takes either through ``--template``.
"""

import os

from jinja2 import Template as _Template

from .configuration import valid_template_value, Invalid
from .exceptions import MalformedTemplateConfig, TemplateNotFoundException

# variables: name, summary
RUN_SUMMARY = \
    """
{{ name }}: {% if summary.training_completion_time is none %}no completion{% else %}completion \
{{ '%.3f'|format(summary.training_completion_time) }} s{% endif %}, \
accuracy {{ '%.4f'|format(summary.final_accuracy) }} after {{ summary.epochs }} epoch(s), \
migrations {{ summary.total_migrations }}, peak nodes {{ summary.peak_active_nodes }}\
{% if summary.aborted %} ABORTED: {{ summary.abort_reason }}{% endif %}
"""

# variables: violations
VIOLATIONS = \
    """
{% for violation in violations %}
{{ violation.name }}: {{ violation.detail }}
{% endfor %}
"""

# variables: descriptor, suggestions
SUGGESTIONS = \
    """
{{ descriptor.sample_type }} {{ descriptor.sample_shape|list }} + {{ descriptor.label_type }} \
({{ descriptor.training_samples }} training samples)
{% for arch in suggestions %}
{{ loop.index }}. {{ arch.backbone or '-' }} + {{ arch.head }} [{{ arch.capacity_class }}, \
{{ arch.head_layers }} head layers{% if arch.head_units %}, {{ arch.head_units }} units{% endif %}] \
in {{ arch.input_shape|list }} out {{ arch.output_shape|list }}
{% endfor %}
"""

# variables: rows (dicts with the aggregate columns)
SWEEP_REPORT = \
    """
{% for row in rows %}
seed {{ row.seed }} [{{ row.overrides or '-' }}] {{ row.status }}\
{% if row.status == 'ok' %}: completion {{ row.training_completion_time or '-' }}, \
accuracy {{ row.final_accuracy }}, migrations {{ row.total_migrations }}, \
peak nodes {{ row.peak_active_nodes }}{% else %}: {{ row.error }}{% endif %}

{% endfor %}
{{ rows|length }} run(s), {{ rows|selectattr('status', 'ne', 'ok')|list|length }} failed
"""

def _build(text):
    return _Template(text.strip('\n'), trim_blocks=True, lstrip_blocks=True)


def get_template(template_config):
    """
    Returns the template based on the config string
    :param template_config: The template config string, e.g. "CANNED:RUN_SUMMARY"
    :type template_config: str
    :raises MalformedTemplateConfig: If the template config string does not begin with CANNED or FILE
    :raises TemplateNotFoundException: If the name of the canned template or the path of the file based template \
    cannot be found.
    :returns jinja2.Template: The Template object containing the user-defined template or canned template
    """
    try:
        valid_template_value(template_config)
    except Invalid as e:
        raise MalformedTemplateConfig(e.msg)

    template_value = template_config.split(":", 1)[1]

    if template_config.startswith('CANNED:'):
        canned = globals().get(template_value)
        if isinstance(canned, str) and template_value.isupper():
            return _build(canned)
        raise TemplateNotFoundException("Canned template {} not found".format(template_config))

    path = os.path.expanduser(template_value)
    if os.path.exists(path):
        with open(path, 'r') as f:
            return _build(f.read())
    raise TemplateNotFoundException("File based template {} not found".format(template_value))


def render(template_config, **variables):
    """
    Renders a template config string with the given variables
    """
    return get_template(template_config).render(**variables)
