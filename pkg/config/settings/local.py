"""
Local development settings.
"""

from .base import *  # noqa

DEBUG = True

# Queued runs execute inline unless a broker is explicitly configured.
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=True, cast=bool)  # noqa: F405

LOGGING['loggers']['apps']['level'] = config('MULTISLICE_LOG_LEVEL', default='INFO')  # noqa: F405
