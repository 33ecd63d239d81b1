"""
Production settings: a Redis-backed Celery worker pool running experiment batches.
"""

from .base import *  # noqa

DEBUG = False

REDIS_URL = config('REDIS_URL')  # noqa: F405
CELERY_BROKER_URL = config('CELERY_BROKER_URL', default=REDIS_URL)  # noqa: F405
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default=REDIS_URL)  # noqa: F405
CELERY_TASK_ALWAYS_EAGER = False

MULTISLICE_OUTPUT_DIR = config('MULTISLICE_OUTPUT_DIR', default='/data/runs')  # noqa: F405

LOGGING['handlers']['console']['formatter'] = 'verbose'  # noqa: F405
