"""
Plain ``config.settings`` resolves to the base settings; pick local or
production through DJANGO_SETTINGS_MODULE.
"""

from .base import *  # noqa
