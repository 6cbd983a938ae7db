import json
import os
import tempfile
from io import StringIO
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.exceptions import ValidationError
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings

from gausscap import conf
from gausscap.errors import InvalidInputError
from gausscap.forms import (CapacityForm, ComplexMatrixField, ComplexVectorField, DualFiniteForm, InfoMCForm,
                            RealVectorField, WaterfillForm, clean_or_raise)
from gausscap.models import VerificationRun
from gausscap.reports import write_report
from gausscap.runner import RunConfig, convert_units, load_input, run

CAPACITY_INPUT = json.dumps({'input_cov': [[1.0]], 'noise': [[0.0]]})
NON_COMMUTING_WATERFILL = json.dumps({
    'budget': 2.0,
    'hamiltonian': [[2.0, 0.5], [0.5, 1.0]],
    'noise': [[0.3, 0.0], [0.0, 0.0]],
})


def call(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return json.loads(out.getvalue())


class FormTests(SimpleTestCase):
    def test_capacity_form(self):
        data = clean_or_raise(CapacityForm({'input_cov': {'dim': 1, 're': [[2.0]], 'im': [[0.0]]}}))
        self.assertEqual(data['input_cov'].dim, 1)
        self.assertIsNone(data['noise'])

    def test_field_errors_name_the_field(self):
        with self.assertRaises(InvalidInputError) as caught:
            clean_or_raise(CapacityForm({'input_cov': [[1.0, 2.0], [0.0, 1.0]]}))
        self.assertEqual(caught.exception.field, 'input_cov')
        with self.assertRaises(InvalidInputError) as caught:
            clean_or_raise(CapacityForm({'input_cov': [[-1.0]]}))
        self.assertEqual(caught.exception.field, 'input_cov')

    def test_dimension_mismatch(self):
        with self.assertRaises(InvalidInputError):
            clean_or_raise(CapacityForm({'input_cov': [[1.0]], 'noise': [[1.0, 0.0], [0.0, 1.0]]}))

    def test_waterfill_form_modes(self):
        data = clean_or_raise(WaterfillForm({'budget': 1.0, 'freqs': [1.0, 2.0]}))
        np.testing.assert_array_equal(data['noise_diag'], [0.0, 0.0])
        with self.assertRaises(InvalidInputError):
            clean_or_raise(WaterfillForm({'budget': 1.0}))
        with self.assertRaises(InvalidInputError):
            clean_or_raise(WaterfillForm({'budget': 0.0, 'freqs': [1.0]}))

    def test_matrix_and_vector_fields_clean_to_arrays(self):
        data = clean_or_raise(CapacityForm({
            'input_cov': [[1.0, 0.0], [0.0, 2.0]],
            'rescale': {'dim': 2, 're': [[2.0, 0.0], [0.0, 1.0]], 'im': [[0.0, 0.5], [0.0, 0.0]]},
        }))
        np.testing.assert_allclose(data['rescale'], [[2.0, 0.5j], [0.0, 1.0]])
        np.testing.assert_array_equal(RealVectorField().clean([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(ComplexVectorField().clean({'re': [1.0, 0.0], 'im': [0.0, 2.0]}), [1.0, 2.0j])
        with self.assertRaises(ValidationError):
            RealVectorField().clean(None)
        self.assertIsNone(ComplexMatrixField(required=False).clean(None))

    def test_dual_finite_form(self):
        document = {
            'ensemble': {'probs': [1.0], 'states': [[[1, 0], [0, 0]]]},
            'povm': {'elements': [[[1, 0, 0], [0, 1, 0], [0, 0, 1]]]},
        }
        with self.assertRaises(InvalidInputError):
            clean_or_raise(DualFiniteForm(document))

    def test_info_mc_needs_enough_samples(self):
        with self.assertRaises(InvalidInputError) as caught:
            clean_or_raise(InfoMCForm({'prior_cov': [[1.0]], 'n': 50}))
        self.assertEqual(caught.exception.field, 'n')


class RunnerTests(SimpleTestCase):
    def test_document_envelope(self):
        code, document = run(RunConfig('capacity', input=CAPACITY_INPUT))
        self.assertEqual(code, 0)
        self.assertEqual(document['toolkit'], 'gausscap')
        self.assertEqual(document['units'], 'nats')
        self.assertEqual(document['inputs'], json.loads(CAPACITY_INPUT))
        self.assertAlmostEqual(document['outputs']['capacity_nats'], np.log(2), places=14)

    def test_unknown_command(self):
        code, document = run(RunConfig('transmit'))
        self.assertEqual(code, 2)
        self.assertIn('capacity', document['diagnostics']['error']['message'])

    def test_malformed_json_reports_position(self):
        code, document = run(RunConfig('capacity', input='{"input_cov": [[1.0]],\n "noise": }'))
        self.assertEqual(code, 2)
        self.assertIn('line 2 column', document['diagnostics']['error']['message'])

    def test_input_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'input.json')
            with open(path, 'w', encoding='utf-8') as handle:
                handle.write(CAPACITY_INPUT)
            self.assertEqual(load_input(path), json.loads(CAPACITY_INPUT))
            with self.assertRaises(InvalidInputError):
                load_input(os.path.join(tmp, 'missing.json'))
        with self.assertRaises(InvalidInputError):
            load_input('{"input_cov": }')

    def test_unit_conversion(self):
        converted = convert_units({'capacity_nats': np.log(2), 'nested': [{'value_nats': 2 * np.log(2)}]}, 'bits')
        self.assertAlmostEqual(converted['capacity_bits'], 1.0, places=14)
        self.assertAlmostEqual(converted['nested'][0]['value_bits'], 2.0, places=14)
        self.assertEqual(convert_units({'capacity_nats': 1.0}, 'nats'), {'capacity_nats': 1.0})

    def test_tolerance_overrides(self):
        config = RunConfig('waterfill', input=NON_COMMUTING_WATERFILL, tolerances={'MAX_ITER': '1'})
        code, document = run(config)
        self.assertEqual(code, 3)
        error = document['diagnostics']['error']
        self.assertEqual(error['type'], 'NumericalFailureError')
        self.assertEqual(error['iterations'], 1)
        self.assertEqual(error['best']['dim'], 2)
        self.assertEqual(conf.get('MAX_ITER'), conf.DEFAULTS['MAX_ITER'])

    def test_invalid_tolerances(self):
        self.assertEqual(run(RunConfig('capacity', tolerances={'NOT_A_TOL': 1}))[0], 2)
        self.assertEqual(run(RunConfig('capacity', tolerances={'MIN_EIG': 'small'}))[0], 2)
        self.assertEqual(run(RunConfig('capacity', units='bytes'))[0], 2)

    def test_unsupported_input_exit_code(self):
        code, document = run(RunConfig('dual', input=json.dumps({'prior_cov': [[1.0]], 'state_noise': [[0.0]]})))
        self.assertEqual(code, 2)
        self.assertEqual(document['diagnostics']['error']['type'], 'UnsupportedInputError')

    def test_numerical_errors_become_error_documents(self):
        def singular(raw, config):
            raise np.linalg.LinAlgError('Singular matrix')

        with mock.patch.dict('gausscap.runner.HANDLERS', {'capacity': singular}):
            with self.assertLogs('gausscap.runner', level='WARNING'):
                code, document = run(RunConfig('capacity', input=CAPACITY_INPUT))
        self.assertEqual(code, 3)
        self.assertEqual(document['diagnostics']['error']['type'], 'NumericalFailureError')
        self.assertIn('Singular matrix', document['diagnostics']['error']['message'])
        self.assertEqual(document['outputs'], {})

    def test_capacity_with_state_noise(self):
        document = run(RunConfig('capacity', input=json.dumps({'input_cov': [[1.0]], 'state_noise': [[1.0]]})))[1]
        accessible = document['outputs']['accessible_information']
        self.assertAlmostEqual(accessible['accessible_information_nats'], np.log(1.5), places=14)

    def test_dual_finite(self):
        document = {
            'ensemble': {'probs': [0.5, 0.5], 'states': [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]},
            'povm': {'elements': [[[0.5, 0.5], [0.5, 0.5]], [[0.5, -0.5], [-0.5, 0.5]]]},
        }
        code, result = run(RunConfig('dual-finite', input=json.dumps(document), units='bits'))
        self.assertEqual(code, 0)
        self.assertAlmostEqual(result['outputs']['mutual_information_bits'], 0.0, places=12)
        self.assertLess(result['diagnostics']['residuals']['joint'], 1e-12)

    def test_info_mc(self):
        document = json.dumps({'prior_cov': [[1.0]], 'state_noise': [[1.0]], 'n': 20000})
        code, result = run(RunConfig('info-mc', input=document, seed=3))
        self.assertEqual(code, 0)
        self.assertEqual(result['outputs']['seed'], 3)
        self.assertAlmostEqual(result['outputs']['analytic_nats'], np.log(1.5), places=14)
        self.assertLess(result['diagnostics']['z_score'], 4.0)


class CommandTests(SimpleTestCase):
    def test_capacity_in_bits(self):
        document = call('capacity', '--input', CAPACITY_INPUT, '--units', 'bits')
        self.assertAlmostEqual(document['outputs']['capacity_bits'], 1.0, places=14)
        self.assertNotIn('capacity_nats', document['outputs'])

    def test_waterfill_diagonal(self):
        document = call('waterfill', '--input', json.dumps({'budget': 2.0, 'freqs': [1.0, 1.0]}))
        self.assertAlmostEqual(document['outputs']['water_level'], 2.0, places=12)

    def test_dual(self):
        document = call('dual', '--input', json.dumps({'prior_cov': [[1.0]], 'state_noise': [[1.0]]}))
        self.assertAlmostEqual(document['outputs']['dual_determinant'], 1.5, places=12)

    def test_dual_finite_command_name(self):
        document = {
            'ensemble': {'probs': [1.0], 'states': [[[1, 0], [0, 0]]]},
            'povm': {'elements': [[[1, 0], [0, 1]]]},
        }
        self.assertEqual(call('dual-finite', '--input', json.dumps(document))['command'], 'dual-finite')

    def test_sample_is_reproducible(self):
        source = json.dumps({'prior_cov': [[1.0]], 'n': 10})
        first = call('sample', '--input', source, '--seed', '5')
        second = call('sample', '--input', source, '--seed', '5')
        self.assertEqual(first['outputs'], second['outputs'])
        self.assertEqual(len(first['outputs']['pairs']), 10)

    def test_sample_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'pairs.csv')
            document = call('sample', '--input', json.dumps({'prior_cov': [[1.0]], 'n': 4}), '--seed', '1',
                            '--csv', path)
            self.assertEqual(document['outputs']['csv'], path)
            with open(path, encoding='utf-8') as handle:
                self.assertEqual(len(handle.read().splitlines()), 5)

    def test_failures_carry_exit_codes(self):
        with self.assertRaises(CommandError) as caught:
            call_command('capacity', '--input', '{"input_cov": ', stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 2)
        with self.assertRaises(CommandError) as caught:
            call_command('waterfill', '--input', NON_COMMUTING_WATERFILL, '--tol', 'MAX_ITER=1', stdout=StringIO())
        self.assertEqual(caught.exception.returncode, 3)

    def test_malformed_tolerance_flag(self):
        with self.assertRaises(CommandError):
            call_command('capacity', '--input', CAPACITY_INPUT, '--tol', 'MAX_ITER', stdout=StringIO())

    def test_output_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'result.json')
            out = StringIO()
            call_command('capacity', '--input', CAPACITY_INPUT, '--output', path, stdout=out)
            self.assertIn('result written to', out.getvalue())
            with open(path, encoding='utf-8') as handle:
                self.assertAlmostEqual(json.load(handle)['outputs']['capacity_nats'], np.log(2), places=14)

    def test_verify_suite(self):
        document = call('verify', '--suite', 'dual-scalar', '--seed', '7')
        self.assertTrue(document['outputs']['passed'])
        self.assertEqual({item['suite'] for item in document['outputs']['checks']}, {'dual-scalar'})

    def test_verify_chu_suite(self):
        document = call('verify', '--suite', 'chu', '--n', '50', '--seed', '7')
        self.assertTrue(document['outputs']['passed'])
        self.assertEqual(len(document['outputs']['checks']), 2)

    def test_verification_failure_exit_code(self):
        failing = [{'suite': 'weyl', 'check_name': 'weyl-relation', 'residual': 1.0, 'threshold': 1e-8, 'pass': False}]
        with mock.patch('gausscap.runner.run_suite', return_value=failing):
            out = StringIO()
            with self.assertRaises(CommandError) as caught:
                call_command('verify', '--suite', 'weyl', stdout=out)
        self.assertEqual(caught.exception.returncode, 4)
        document = json.loads(out.getvalue())
        self.assertFalse(document['outputs']['passed'])
        self.assertEqual(document['diagnostics']['error']['type'], 'VerificationFailedError')


class RecordedRunTests(TestCase):
    def test_record_stores_run_and_checks(self):
        document = call('verify', '--suite', 'gauge', '--record', '--seed', '2')
        record = VerificationRun.objects.get(pk=document['outputs']['run_id'])
        self.assertTrue(record.passed)
        self.assertEqual(record.seed, 2)
        self.assertEqual(record.checks.count(), 3)
        self.assertFalse(record.failed_checks().exists())
        self.assertIn('gauge', str(record))

    def test_report_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            document = call('verify', '--suite', 'dual-scalar', '--pdf', os.path.join(tmp, 'report.pdf'), '--record')
            report = document['outputs']['report']
            self.assertTrue(os.path.exists(report))
            self.assertEqual(VerificationRun.objects.get().report_file, report)


class ReportTests(SimpleTestCase):
    checks = [
        {'suite': 'weyl', 'check_name': 'weyl-relation', 'residual': 3e-12, 'threshold': 1e-8, 'pass': True},
        {'suite': 'weyl', 'check_name': 'weyl-extra', 'residual': 1.0, 'threshold': 1e-8, 'pass': False},
    ]

    def test_bare_name_goes_to_report_dir(self):
        with tempfile.TemporaryDirectory() as tmp:
            with override_settings(GAUSSCAP={'REPORT_DIR': tmp}):
                path = write_report('weyl.pdf', 'weyl', 1, self.checks)
            self.assertEqual(os.path.dirname(path), tmp)
            self.assertTrue(os.path.exists(path))

    def test_text_fallback_without_reportlab(self):
        with tempfile.TemporaryDirectory() as tmp:
            with mock.patch.dict('sys.modules', {'reportlab.lib': None}):
                with self.assertLogs('gausscap.reports', level='WARNING'):
                    path = write_report(os.path.join(tmp, 'weyl.pdf'), 'weyl', 1, self.checks)
            self.assertTrue(path.endswith('.txt'))
            with open(path, encoding='utf-8') as handle:
                text = handle.read()
            self.assertIn('FAIL  weyl-extra', text)
            self.assertIn('PASS  weyl-relation', text)
