"""
``manage.py multislice`` - run, list, describe and self-test experiments.

Exit codes: 0 when the run completed and its checks passed, 1 on invalid
input or configuration, 2 when the run completed but a check or an input
precondition failed.
"""

import json
import logging

from django.core.management.base import BaseCommand, CommandError

from apps.common.exceptions import MultisliceError
from apps.common.reports import to_jsonable
from apps.experiments.serializers import ExperimentConfigSerializer, serializer_schema
from apps.experiments.services import (
    EXIT_ERROR,
    EXIT_FAILED,
    EXIT_PASS,
    ExperimentConfig,
    get_experiment,
    registered_kinds,
    run_experiment,
    run_self_test,
)

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = 'Run and inspect multislicing and random-walk experiments'

    def add_arguments(self, parser):
        actions = parser.add_subparsers(dest='action', required=True)

        run = actions.add_parser('run', help='Run one experiment from a JSON config')
        run.add_argument('--config', required=True, help='Path to a {"kind", "params", "seed"} JSON document')
        run.add_argument('--seed', type=int, help='Override the config seed')
        run.add_argument('--threads', type=int, help='Worker cap (default MULTISLICE_THREADS)')
        run.add_argument('--output', help='Output directory (default MULTISLICE_OUTPUT_DIR)')
        run.add_argument('--enqueue', action='store_true', help='Send the run to the Celery queue')

        actions.add_parser('list', help='List registered experiment kinds')

        describe = actions.add_parser('describe', help='Show the parameter schema of one kind')
        describe.add_argument('kind')

        selftest = actions.add_parser('self-test', help='Run the known-answer battery')
        selftest.add_argument('--only', nargs='*', help='Restrict to these check names')

    def handle(self, *args, **options):
        action = options['action']
        try:
            if action == 'run':
                self._run(options)
            elif action == 'list':
                self._list()
            elif action == 'describe':
                self._describe(options['kind'])
            else:
                self._self_test(options.get('only'))
        except MultisliceError as e:
            logger.error(f'multislice {action}: {e}')
            raise CommandError(str(e), returncode=EXIT_ERROR) from e

    def _run(self, options):
        config = ExperimentConfig.load(options['config'])
        if options.get('seed') is not None:
            config.seed = options['seed']
        if options.get('output'):
            config.output_dir = options['output']

        if options.get('enqueue'):
            from apps.experiments.tasks import run_experiment_task

            result = run_experiment_task.delay(config.to_dict(), options.get('threads'))
            if not result.ready():
                self.stdout.write(f'queued {config.kind} as task {result.id}')
                return
            outcome = result.get()
        else:
            outcome = run_experiment(config, options.get('threads')).to_dict()

        self.stdout.write(json.dumps(to_jsonable(outcome), sort_keys=True, indent=2))
        if outcome['exit_code'] != EXIT_PASS:
            reason = f"precondition '{outcome['condition']}' violated" if outcome['condition'] else 'checks failed'
            raise CommandError(f"{config.kind}: {reason}; see {outcome['run_dir']}", returncode=EXIT_FAILED)
        self.stdout.write(self.style.SUCCESS(f"{config.kind}: passed -> {outcome['run_dir']}"))

    def _list(self):
        for kind in registered_kinds():
            self.stdout.write(f'{kind:<28} {get_experiment(kind).summary}')

    def _describe(self, kind: str):
        experiment = get_experiment(kind)
        config_fields = serializer_schema(ExperimentConfigSerializer)['properties']
        document = {
            'kind': kind,
            'summary': experiment.summary,
            'params': serializer_schema(experiment.serializer),
            'seed': config_fields['seed'],
        }
        self.stdout.write(json.dumps(to_jsonable(document), sort_keys=True, indent=2))

    def _self_test(self, only):
        results = run_self_test(only)
        for result in results:
            style = self.style.SUCCESS if result.passed else self.style.ERROR
            self.stdout.write(style(f"{'ok' if result.passed else 'FAIL':<5} {result.name:<16} {result.detail}"))
        failed = [r.name for r in results if not r.passed]
        if failed:
            raise CommandError(f'self-test failed: {", ".join(failed)}', returncode=EXIT_FAILED)
