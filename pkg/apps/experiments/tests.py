"""
Tests for the experiment registry, the runner and the multislice command.
"""

import importlib
import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from apps.common.exceptions import InvalidInputError
from apps.modular_space.services import XPoint

from .serializers import SubcriticalSerializer, serializer_schema
from .services import (
    EXIT_FAILED,
    EXIT_PASS,
    ExperimentConfig,
    ExperimentResult,
    config_hash,
    get_experiment,
    register,
    registered_kinds,
    run_experiment,
    run_self_test,
)
from .services.builders import build_start
from .tasks import run_experiment_task

GRID_CONFIG = {
    'kind': 'subcritical_experiment',
    'seed': 5,
    'params': {
        'set': {'builder': 'full_grid', 'd': 2, 'k': 6},
        'shape': {'dims': [1, 1], 'exponents': ['0', '1']},
        'epsilon': 0.1,
        'trials': 16,
        'pair_budget': 300,
    },
}

IRREGULAR_CONFIG = {
    'kind': 'subcritical_experiment',
    'seed': 5,
    'params': {
        'set': {'builder': 'two_scale', 'k': 8},
        'shape': {'dims': [1, 1], 'exponents': ['1/2', '1']},
    },
}

MALFORMED = '{\n  "kind": "subcritical_experiment",\n  "params": {,}\n}\n'


class OutputDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.output = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()

    def write_config(self, document, name='config.json') -> Path:
        path = self.output / name
        path.write_text(document if isinstance(document, str) else json.dumps(document), encoding='utf-8')
        return path

    def config(self, document) -> ExperimentConfig:
        return ExperimentConfig.from_dict({**document, 'output_dir': str(self.output)})


class ServiceImportTests(SimpleTestCase):
    """Every services package imports against the installed scientific stack."""

    PACKAGES = ('common', 'dyadic', 'slicing_lab', 'sl2_core', 'modular_space', 'walk', 'arith', 'experiments')

    def test_packages_import(self):
        for name in self.PACKAGES:
            module = 'apps.common.reports' if name == 'common' else f'apps.{name}.services'
            self.assertIsNotNone(importlib.import_module(module), module)

    def test_bezout_in_hermite_form(self):
        from apps.walk.services.finite_orbits import column_hermite

        self.assertEqual(column_hermite(np.array([[3, 5], [1, 2]])), (1, 0, 1))


class RegistryTests(SimpleTestCase):
    """Registered kinds and parameter validation."""

    def test_at_least_twelve_kinds(self):
        kinds = registered_kinds()
        self.assertGreaterEqual(len(kinds), 12)
        for kind in ('subcritical_experiment', 'supercritical_experiment', 'lyapunov_estimate',
                     'bootstrap_experiment', 'mahler_suite', 'combinatorics_suite'):
            self.assertIn(kind, kinds)

    def test_unknown_kind(self):
        with self.assertRaises(InvalidInputError):
            get_experiment('no-such-kind')

    def test_duplicate_registration_rejected(self):
        with self.assertRaises(InvalidInputError):
            register('lyapunov_estimate', SubcriticalSerializer, 'again')(lambda p, s, t: None)

    def test_validate_fills_defaults(self):
        params = get_experiment('lyapunov_estimate').validate({})
        self.assertEqual(params['n'], 200)
        self.assertEqual(params['N'], 10_000)
        self.assertEqual(params['mu'], {'name': 'standard-pair'})

    def test_persistence_exponent_defaults_to_fitted(self):
        params = get_experiment('persistence_check').validate({})
        self.assertIsNone(params['s'])
        self.assertIsNone(params['lam'])

    def test_validate_rejects_bad_params(self):
        experiment = get_experiment('subcritical_experiment')
        with self.assertRaises(InvalidInputError):
            experiment.validate({'set': {'builder': 'full_grid'}, 'shape': {'dims': [1, 1], 'exponents': ['0']}})
        with self.assertRaises(InvalidInputError):
            experiment.validate({**GRID_CONFIG['params'], 'epsilon': 2.0})

    def test_bad_walk_measure_rejected(self):
        with self.assertRaises(InvalidInputError):
            get_experiment('lyapunov_estimate').validate({'mu': {'name': 'no-such-walk'}})


class SchemaTests(SimpleTestCase):
    """Rendered parameter schemas."""

    def test_subcritical_schema(self):
        schema = serializer_schema(SubcriticalSerializer)
        properties = schema['properties']
        for name in ('kappa', 'alpha', 'epsilon', 'trials', 'set', 'shape', 'charts'):
            self.assertIn(name, properties)
        self.assertEqual(properties['trials']['type'], 'integer')
        self.assertEqual(properties['trials']['default'], 64)
        self.assertEqual(properties['set']['type'], 'object')
        self.assertIn('builder', properties['set']['properties'])
        self.assertIn('full_grid', properties['set']['properties']['builder']['enum'])

    def test_nullable_default_is_rendered(self):
        properties = serializer_schema(get_experiment('sl2_slicing_experiment').serializer)['properties']
        self.assertIsNone(properties['chart_radius']['default'])


class ConfigTests(OutputDirMixin, SimpleTestCase):
    """Loading and hashing run documents."""

    def test_malformed_json_reports_position(self):
        path = self.write_config(MALFORMED)
        with self.assertRaises(InvalidInputError) as ctx:
            ExperimentConfig.load(path)
        self.assertIn('line 3', str(ctx.exception))
        self.assertIn('column', str(ctx.exception))

    def test_missing_file(self):
        with self.assertRaises(InvalidInputError):
            ExperimentConfig.load(self.output / 'missing.json')

    def test_rejects_non_object_and_unknown_kind(self):
        with self.assertRaises(InvalidInputError):
            ExperimentConfig.from_dict([1, 2])
        with self.assertRaises(InvalidInputError):
            ExperimentConfig.from_dict({'kind': 'no-such-kind'})

    @override_settings(MULTISLICE_DEFAULT_SEED=99)
    def test_seed_defaults_from_settings(self):
        config = ExperimentConfig.from_dict({'kind': 'lyapunov_estimate'})
        self.assertEqual(config.seed, 99)

    def test_hash_depends_on_seed_and_params(self):
        params = get_experiment('lyapunov_estimate').validate({'n': 10})
        base = config_hash('lyapunov_estimate', params, 1)
        self.assertEqual(base, config_hash('lyapunov_estimate', dict(params), 1))
        self.assertNotEqual(base, config_hash('lyapunov_estimate', params, 2))
        self.assertNotEqual(base, config_hash('lyapunov_estimate', {**params, 'n': 11}, 1))


class RunnerTests(OutputDirMixin, SimpleTestCase):
    """Run directories, exit codes and reproducibility."""

    def test_passing_run_writes_outputs(self):
        outcome = run_experiment(self.config(GRID_CONFIG))
        self.assertEqual(outcome.exit_code, EXIT_PASS)
        self.assertTrue(outcome.run_dir.name.startswith('subcritical_experiment-'))
        for name in ('results.csv', 'report.json', 'manifest.json'):
            self.assertTrue((outcome.run_dir / name).exists(), name)
        header = (outcome.run_dir / 'results.csv').read_text().splitlines()[0]
        self.assertTrue(header.startswith('theta_index,covering,target,exceptional_flag'))
        manifest = json.loads((outcome.run_dir / 'manifest.json').read_text())
        self.assertEqual(manifest['config_hash'], outcome.config_hash)
        self.assertEqual(manifest['exit_code'], EXIT_PASS)
        self.assertEqual(set(manifest['outputs']), {'results.csv', 'report.json'})

    def test_rerun_is_byte_identical_across_threads(self):
        config = self.config(GRID_CONFIG)
        first = run_experiment(config, threads=1)
        snapshot = {name: (first.run_dir / name).read_bytes() for name in ('results.csv', 'report.json')}
        second = run_experiment(config, threads=4)
        self.assertEqual(first.run_dir, second.run_dir)
        for name, content in snapshot.items():
            self.assertEqual((second.run_dir / name).read_bytes(), content, name)
        self.assertEqual(first.outputs, second.outputs)

    def test_precondition_violation_exits_two(self):
        outcome = run_experiment(self.config(IRREGULAR_CONFIG))
        self.assertEqual(outcome.exit_code, EXIT_FAILED)
        self.assertEqual(outcome.condition, 'regularity')
        rows = (outcome.run_dir / 'results.csv').read_text().splitlines()
        self.assertEqual(rows[0], 'condition,message')
        self.assertTrue(rows[1].startswith('regularity,'))
        report = json.loads((outcome.run_dir / 'report.json').read_text())
        self.assertEqual(report['report']['error'], 'precondition-violated')

    def test_invalid_params_leave_no_run_dir(self):
        config = self.config({'kind': 'lyapunov_estimate', 'params': {'n': 0}})
        with self.assertRaises(InvalidInputError):
            run_experiment(config)
        self.assertEqual(list(self.output.iterdir()), [])

    def test_mahler_suite_with_extra_table(self):
        config = self.config({'kind': 'mahler_suite', 'params': {
            'cases': [{'polynomial': 'X1*X2', 'alphas': ['3/2', '2']}],
        }})
        outcome = run_experiment(config)
        self.assertEqual(outcome.exit_code, EXIT_PASS)
        self.assertIn('composition.csv', outcome.outputs)
        rows = (outcome.run_dir / 'results.csv').read_text().splitlines()
        number, mah, den = rows[1].split(',')[:3]
        self.assertEqual((number, den), ('3/2', '2'))
        self.assertAlmostEqual(float(mah), 3.0, places=9)

    def test_rational_separation(self):
        outcome = run_experiment(self.config({'kind': 'rational_separation', 'params': {'qs': [2, 4]}}))
        self.assertEqual(outcome.exit_code, EXIT_PASS)
        rows = (outcome.run_dir / 'results.csv').read_text().splitlines()
        self.assertEqual(rows[0], 'Q,count,min_separation')
        self.assertEqual(len(rows), 3)

    def test_covering_rows(self):
        config = self.config({'kind': 'covering_number', 'params': {
            'set': {'builder': 'full_grid', 'd': 2, 'k': 4},
            'shapes': [{'dims': [2], 'exponents': ['1']}, {'dims': [2], 'exponents': ['1/2']}],
        }})
        outcome = run_experiment(config)
        rows = (outcome.run_dir / 'results.csv').read_text().splitlines()
        self.assertEqual(rows[1].split(',')[3], '256')
        self.assertEqual(rows[2].split(',')[3], '16')

    def test_lyapunov_dirac(self):
        config = self.config({'kind': 'lyapunov_estimate', 'params': {
            'mu': {'atoms': [[2, 0, 0, 0.5]], 'weights': [1]}, 'n': 10, 'N': 32,
        }})
        outcome = run_experiment(config)
        self.assertEqual(outcome.exit_code, EXIT_PASS)
        report = json.loads((outcome.run_dir / 'report.json').read_text())
        self.assertAlmostEqual(report['report']['lambda'], 1.3862943611198906, places=9)


class CommandTests(OutputDirMixin, SimpleTestCase):
    """The manage.py multislice surface."""

    def call(self, *args):
        out, err = StringIO(), StringIO()
        call_command('multislice', *args, stdout=out, stderr=err)
        return out.getvalue()

    def test_list(self):
        lines = self.call('list').strip().splitlines()
        self.assertGreaterEqual(len(lines), 12)
        self.assertTrue(any(line.startswith('subcritical_experiment') for line in lines))

    def test_describe(self):
        document = json.loads(self.call('describe', 'subcritical_experiment'))
        for name in ('kappa', 'alpha', 'epsilon', 'trials'):
            self.assertIn(name, document['params']['properties'])
        self.assertIn('seed', document)

    def test_describe_unknown_kind_exits_one(self):
        with self.assertRaises(CommandError) as ctx:
            self.call('describe', 'no-such-kind')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_malformed_config_exits_one(self):
        path = self.write_config(MALFORMED)
        with self.assertRaises(CommandError) as ctx:
            self.call('run', '--config', str(path))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('line 3', str(ctx.exception))

    def test_precondition_exits_two(self):
        path = self.write_config(IRREGULAR_CONFIG)
        with self.assertRaises(CommandError) as ctx:
            self.call('run', '--config', str(path), '--output', str(self.output))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('regularity', str(ctx.exception))

    def test_run_with_seed_override(self):
        path = self.write_config(GRID_CONFIG)
        out = self.call('run', '--config', str(path), '--output', str(self.output), '--seed', '11')
        self.assertIn('passed', out)
        runs = [p.name for p in self.output.iterdir() if p.is_dir()]
        self.assertEqual(len(runs), 1)
        manifest = json.loads((self.output / runs[0] / 'manifest.json').read_text())
        self.assertEqual(manifest['config']['seed'], 11)

    def test_enqueue_runs_eagerly(self):
        path = self.write_config(GRID_CONFIG)
        out = self.call('run', '--config', str(path), '--output', str(self.output), '--enqueue')
        self.assertIn('"exit_code": 0', out)

    def test_self_test_subset(self):
        out = self.call('self-test', '--only', 'mahler-examples', 'lyapunov-dirac')
        self.assertIn('mahler-examples', out)
        self.assertIn('lyapunov-dirac', out)
        self.assertNotIn('FAIL', out)


class SelfTestTests(SimpleTestCase):
    """The known-answer battery."""

    def test_every_check_passes(self):
        results = run_self_test()
        self.assertEqual(len(results), 6)
        for result in results:
            self.assertTrue(result.passed, f'{result.name}: {result.detail}')

    def test_lattice_search_check(self):
        (result,) = run_self_test(['lattice-search'])
        self.assertTrue(result.passed, result.detail)


class StartPointTests(SimpleTestCase):
    """Start points built from config documents."""

    def test_default_start_is_haar(self):
        x = build_start({}, 5)
        self.assertIsInstance(x, XPoint)
        self.assertEqual(x, build_start({'kind': 'haar'}, 5))

    def test_every_start_kind_builds(self):
        for options in ({'kind': 'base'}, {'kind': 'compact', 'height_cutoff': 2.0}, {'kind': 'cusp', 'inj': 1e-3},
                        {'kind': 'matrix', 'matrix': [2.0, 0.0, 0.0, 0.5]}, {'kind': 'rational', 'Q': 3}):
            self.assertIsInstance(build_start(options, 5), XPoint, options['kind'])

    def test_compact_start_respects_height(self):
        x = build_start({'kind': 'compact', 'height_cutoff': 2.0}, 11)
        self.assertGreaterEqual(x.systole() ** 2, 0.5 - 1e-9)


class TaskTests(OutputDirMixin, SimpleTestCase):
    """The queued run task, executed in-process."""

    def test_task_returns_outcome(self):
        document = {**GRID_CONFIG, 'output_dir': str(self.output)}
        outcome = run_experiment_task.apply(args=(document,)).get()
        self.assertEqual(outcome['exit_code'], EXIT_PASS)
        self.assertTrue(Path(outcome['run_dir']).is_dir())

    def test_result_type(self):
        result = ExperimentResult(['a'], [[1]], {}, True)
        self.assertEqual(result.extra_tables, {})
