"""
Celery configuration for queued multislice runs.
"""

import os
from celery import Celery

# Workers outside docker-compose fall back to local settings.
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings.local')

app = Celery('multislice')

# Every CELERY_* setting in config.settings configures the app.
app.config_from_object('django.conf:settings', namespace='CELERY')

# Picks up apps.experiments.tasks.
app.autodiscover_tasks()
