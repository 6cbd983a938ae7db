"""Dispatch of toolkit commands: JSON document in, JSON result document out.

``run`` never raises for toolkit errors; it returns the exit code together
with a document describing either the result or the error.
"""
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.db import DatabaseError, transaction
from django.test import override_settings

from . import __version__, conf
from .capacity import accessible_information, chi_capacity, gaussian_ensemble_information
from .codec import dumps, encode_vector
from .duality import (dual_gaussian_observable, dual_pair_finite, joint_distribution, mutual_information_discrete,
                      verify_capacity_identity, verify_dual_pair)
from .errors import (EXIT_OK, GaussCapError, InvalidInputError, NumericalFailureError, VerificationFailedError)
from .forms import (CapacityForm, DualFiniteForm, DualForm, InfoMCForm, SampleForm, VerifyForm, WaterfillForm,
                    clean_or_raise)
from .gauss_core import GaussianEnsemble, GaussianObservable, HermitianMatrix
from .mc_sampler import mi_monte_carlo, pairs_to_csv, sample_pairs
from .verification import SUITE_NAMES, run_suite
from .waterfill import EnergyConstraint, constrained_capacity, waterfill_diagonal

logger = logging.getLogger(__name__)

VALID_COMMANDS = ('capacity', 'waterfill', 'dual', 'dual-finite', 'verify', 'sample', 'info-mc')
VALID_UNITS = ('nats', 'bits')


@dataclass
class RunConfig:
    command: str
    input: str = None
    output_path: str = None
    units: str = None
    seed: int = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def validate(self):
        if self.command not in VALID_COMMANDS:
            raise InvalidInputError(f'unknown command {self.command!r}; valid commands: {", ".join(VALID_COMMANDS)}',
                                    field='command')
        self.units = self.units or conf.get('UNITS')
        if self.units not in VALID_UNITS:
            raise InvalidInputError(f'units must be one of {", ".join(VALID_UNITS)}', field='units')
        for name, value in self.tolerances.items():
            if name not in conf.DEFAULTS:
                raise InvalidInputError(f'unknown tolerance {name!r}', field='tolerances')
            try:
                self.tolerances[name] = type(conf.DEFAULTS[name])(value)
            except (TypeError, ValueError):
                raise InvalidInputError(f'tolerance {name} must be a number, got {value!r}', field='tolerances')
        return self


def load_input(source):
    """Parse ``source``: inline JSON when it starts with ``{``, otherwise a file path."""
    if source is None:
        return {}
    text = source
    if not source.lstrip().startswith('{'):
        if not os.path.exists(source):
            raise InvalidInputError(f'input file not found: {source}', field='input')
        with open(source, encoding='utf-8') as handle:
            text = handle.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f'malformed JSON at line {exc.lineno} column {exc.colno}: {exc.msg}', field='input')
    if not isinstance(data, dict):
        raise InvalidInputError('input document must be a JSON object', field='input')
    return data


def convert_units(value, units):
    """Rename every ``*_nats`` key to ``*_bits`` (value divided by ln 2) when units are bits."""
    if units != 'bits':
        return value
    if isinstance(value, dict):
        converted = {}
        for key, item in value.items():
            if key.endswith('_nats'):
                key = key[:-len('_nats')] + '_bits'
                item = None if item is None else float(item) / np.log(2)
            else:
                item = convert_units(item, units)
            converted[key] = item
        return converted
    if isinstance(value, list):
        return [convert_units(item, units) for item in value]
    return value


def _observable(data, dim):
    noise = data.get('noise') or HermitianMatrix.zeros(dim)
    rescale = data.get('rescale')
    return GaussianObservable(np.eye(dim) if rescale is None else rescale, noise)


def run_capacity(raw, config):
    data = clean_or_raise(CapacityForm(raw))
    obs = _observable(data, data['input_cov'].dim)
    result = chi_capacity(obs, data['input_cov'])
    outputs = result.to_json()
    diagnostics = {
        'entropy_decomposition_residual': abs(result.value - (result.max_output_entropy - result.min_output_entropy)),
    }
    if data.get('state_noise') is not None:
        ens = GaussianEnsemble(data['input_cov'], data['state_noise'])
        outputs['gaussian_ensemble_information_nats'] = gaussian_ensemble_information(ens, obs)
        outputs['accessible_information'] = accessible_information(ens).to_json()
    return outputs, diagnostics


def run_waterfill(raw, config):
    data = clean_or_raise(WaterfillForm(raw))
    if data.get('freqs') is not None:
        result = waterfill_diagonal(data['freqs'], data['noise_diag'], data['budget'])
        return result.to_json(), {'budget_residual': result.budget_residual, 'kkt_residual': result.kkt_residual}
    constraint = EnergyConstraint(data['hamiltonian'], data['budget'])
    noise = data.get('noise') or HermitianMatrix.zeros(constraint.dim)
    result = constrained_capacity(constraint, noise)
    diagnostics = {'budget_residual': abs(result.energy(constraint) - constraint.budget)}
    if result.objective_trace:
        diagnostics['objective_nondecreasing'] = bool(np.all(np.diff(result.objective_trace) >= 0))
    return result.to_json(), diagnostics


def run_dual(raw, config):
    data = clean_or_raise(DualForm(raw))
    ens = GaussianEnsemble(data['prior_cov'], data['state_noise'])
    dual = dual_gaussian_observable(ens)
    identity = verify_capacity_identity(ens)
    outputs = dual.to_json()
    outputs.update({'dual_determinant': identity.lhs, 'primal_determinant': identity.rhs})
    diagnostics = {'residual': identity.residual, 'similarity_residual': identity.similarity_residual}
    return outputs, diagnostics


def run_dual_finite(raw, config):
    data = clean_or_raise(DualFiniteForm(raw))
    ens, povm = data['ensemble'], data['povm']
    pair = dual_pair_finite(ens, povm, completeness_tol=data.get('completeness_tol'))
    joint = joint_distribution(ens, povm)
    dual_joint = joint_distribution(pair.ensemble, pair.povm)
    outputs = pair.to_json()
    outputs.update({
        'joint': joint.to_json(),
        'dual_joint': dual_joint.to_json(),
        'mutual_information_nats': mutual_information_discrete(joint),
    })
    diagnostics = pair.diagnostics.to_json()
    diagnostics['residuals'] = verify_dual_pair(ens, povm, pair)
    return outputs, diagnostics


def _sampling_inputs(data):
    dim = data['prior_cov'].dim
    ens = GaussianEnsemble(data['prior_cov'], data.get('state_noise') or HermitianMatrix.zeros(dim))
    return ens, _observable(data, dim)


def run_sample(raw, config):
    data = clean_or_raise(SampleForm(raw))
    ens, obs = _sampling_inputs(data)
    seed = config.seed if config.seed is not None else int(np.random.SeedSequence().entropy)
    pairs = sample_pairs(ens, obs, data['n'], seed, data.get('shards'))
    outcomes = np.array([pair.outcome for pair in pairs])
    outputs = {'n': data['n'], 'seed': seed}
    csv_path = config.options.get('csv')
    if csv_path:
        outputs['csv'] = pairs_to_csv(pairs, csv_path)
    else:
        outputs['pairs'] = [{'input': encode_vector(p.input), 'outcome': encode_vector(p.outcome)} for p in pairs]
    diagnostics = {'outcome_second_moment': np.real(np.diag(outcomes.T @ outcomes.conj() / len(pairs))).tolist()}
    return outputs, diagnostics


def run_info_mc(raw, config):
    data = clean_or_raise(InfoMCForm(raw))
    ens, obs = _sampling_inputs(data)
    estimate = mi_monte_carlo(ens, obs, data['n'], config.seed, data.get('shards'))
    analytic = gaussian_ensemble_information(ens, obs)
    outputs = estimate.to_json()
    outputs['analytic_nats'] = analytic
    gap = abs(estimate.value - analytic)
    diagnostics = {'z_score': gap / estimate.stderr if estimate.stderr > 0 else (0.0 if gap == 0 else float('inf'))}
    return outputs, diagnostics


def _record(suite, config, checks, passed, report_file):
    from .models import VerificationRun

    try:
        with transaction.atomic():
            record = VerificationRun.objects.create(
                suite=suite, seed=config.seed, n=config.options.get('n'), toolkit_version=__version__,
                passed=passed, report_file=report_file or '')
            record.checks.bulk_create([
                record.checks.model(run=record, suite=item['suite'], check_name=item['check_name'],
                                    residual=item['residual'], threshold=item['threshold'], passed=item['pass'])
                for item in checks
            ])
    except DatabaseError as exc:
        raise GaussCapError(f'could not record the run ({exc}); run "python manage.py migrate" first')
    return record.pk


def run_verify(raw, config):
    options = {'suite': config.options.get('suite', 'all'), 'n': config.options.get('n'), 'seed': config.seed}
    data = clean_or_raise(VerifyForm({k: v for k, v in options.items() if v is not None}, suites=SUITE_NAMES))
    checks = run_suite(data['suite'], data.get('n'), data.get('seed'))
    passed = all(item['pass'] for item in checks)
    outputs = {'suite': data['suite'], 'passed': passed, 'checks': checks}
    diagnostics = {'failed': [item['check_name'] for item in checks if not item['pass']]}

    report_file = None
    if config.options.get('pdf'):
        from .reports import write_report
        report_file = write_report(config.options['pdf'], data['suite'], data.get('seed'), checks)
        outputs['report'] = report_file
    if config.options.get('record'):
        outputs['run_id'] = _record(data['suite'], config, checks, passed, report_file)
    if not passed:
        raise VerificationFailedError(f'{len(diagnostics["failed"])} check(s) failed: {", ".join(diagnostics["failed"])}',
                                      checks=checks, outputs=outputs)
    return outputs, diagnostics


HANDLERS = {
    'capacity': run_capacity,
    'waterfill': run_waterfill,
    'dual': run_dual,
    'dual-finite': run_dual_finite,
    'verify': run_verify,
    'sample': run_sample,
    'info-mc': run_info_mc,
}


def _error_document(exc):
    error = {'type': type(exc).__name__, 'message': str(exc)}
    if getattr(exc, 'field', None):
        error['field'] = exc.field
    if isinstance(exc, NumericalFailureError):
        error.update({'best': exc.best, 'value_nats': exc.value, 'iterations': exc.iterations})
    return error


def run(config):
    """Execute one command; returns (exit_code, document)."""
    raw, outputs, diagnostics = {}, {}, {}
    try:
        config.validate()
        gausscap_settings = {**getattr(settings, 'GAUSSCAP', {}), **config.tolerances}
        with override_settings(GAUSSCAP=gausscap_settings):
            raw = load_input(config.input)
            outputs, diagnostics = HANDLERS[config.command](raw, config)
        exit_code = EXIT_OK
    except VerificationFailedError as exc:
        outputs, exit_code = exc.outputs, exc.exit_code
        diagnostics = {'error': _error_document(exc)}
        logger.warning('%s', exc)
    except GaussCapError as exc:
        exit_code = exc.exit_code
        diagnostics = {'error': _error_document(exc)}
        logger.debug('command %s failed: %s', config.command, exc)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        error = NumericalFailureError(f'{type(exc).__name__}: {exc}')
        exit_code = error.exit_code
        diagnostics = {'error': _error_document(error)}
        logger.warning('command %s failed in numerical code', config.command, exc_info=True)

    document = {
        'toolkit': 'gausscap',
        'version': __version__,
        'command': config.command,
        'units': config.units or conf.get('UNITS'),
        'inputs': raw,
        'outputs': convert_units(json.loads(dumps(outputs)), config.units),
        'diagnostics': convert_units(json.loads(dumps(diagnostics)), config.units),
    }
    if config.output_path:
        with open(config.output_path, 'w', encoding='utf-8') as handle:
            handle.write(dumps(document, indent=2))
    return exit_code, document
