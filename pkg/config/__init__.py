# Loading the Celery app here binds @shared_task experiment runs to it.
from .celery import app as celery_app

__all__ = ('celery_app',)
