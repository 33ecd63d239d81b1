"""
Base settings for the multislice experiment harness.
"""

from pathlib import Path
from decouple import config, Csv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# No request handling happens, but Django still insists on a key.
SECRET_KEY = config('SECRET_KEY', default='multislice-insecure-local-key')

DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

DJANGO_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
]

THIRD_PARTY_APPS = [
    'rest_framework',
]

LOCAL_APPS = [
    'apps.common',
    'apps.dyadic',
    'apps.sl2_core',
    'apps.modular_space',
    'apps.arith',
    'apps.slicing_lab',
    'apps.walk',
    'apps.experiments',
]

INSTALLED_APPS = DJANGO_APPS + THIRD_PARTY_APPS + LOCAL_APPS

MIDDLEWARE = []

# Experiments keep their state in run directories, never in a database.
DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Experiment harness
MULTISLICE_VERSION = '0.1.0'
MULTISLICE_THREADS = config('MULTISLICE_THREADS', default=1, cast=int)
MULTISLICE_OUTPUT_DIR = config('MULTISLICE_OUTPUT_DIR', default=str(BASE_DIR / 'runs'))
MULTISLICE_DEFAULT_SEED = config('MULTISLICE_DEFAULT_SEED', default=20240601, cast=int)

# Entry bound for the lattice enumeration behind dist_x / injectivity_radius
MULTISLICE_LATTICE_SEARCH_CAP = config('MULTISLICE_LATTICE_SEARCH_CAP', default=6, cast=int)
MULTISLICE_ORBIT_SIZE_CAP = config('MULTISLICE_ORBIT_SIZE_CAP', default=20000, cast=int)
MULTISLICE_FIELD_DEGREE_CAP = config('MULTISLICE_FIELD_DEGREE_CAP', default=64, cast=int)
MULTISLICE_RATIONAL_Q_MAX = config('MULTISLICE_RATIONAL_Q_MAX', default=64, cast=int)


# Celery Configuration
# An empty broker means queued runs execute in-process.
REDIS_URL = config('REDIS_URL', default='')

CELERY_BROKER_URL = config('CELERY_BROKER_URL', default=REDIS_URL or 'memory://')
CELERY_RESULT_BACKEND = config('CELERY_RESULT_BACKEND', default=REDIS_URL or 'cache+memory://')
CELERY_TASK_ALWAYS_EAGER = config('CELERY_TASK_ALWAYS_EAGER', default=not REDIS_URL, cast=bool)
CELERY_ACCEPT_CONTENT = ['application/json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE

# REST Framework (serializers only; no API surface)
REST_FRAMEWORK = {
    'DEFAULT_PERMISSION_CLASSES': [],
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': config('DJANGO_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'apps': {
            'handlers': ['console'],
            'level': config('MULTISLICE_LOG_LEVEL', default='DEBUG' if DEBUG else 'INFO'),
            'propagate': False,
        },
    },
}
