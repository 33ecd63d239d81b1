"""
Queued experiment runs.

With CELERY_TASK_ALWAYS_EAGER (the default without REDIS_URL) the task runs
in-process; otherwise a worker started with ``celery -A config worker``
picks it up.
"""

import logging
from typing import Optional

from celery import shared_task

from .services import ExperimentConfig, run_experiment

logger = logging.getLogger(__name__)


@shared_task(name='multislice.run_experiment')
def run_experiment_task(config: dict, threads: Optional[int] = None) -> dict:
    outcome = run_experiment(ExperimentConfig.from_dict(config), threads)
    logger.info(f'run_experiment_task: {outcome.kind} finished with exit code {outcome.exit_code}')
    return outcome.to_dict()
