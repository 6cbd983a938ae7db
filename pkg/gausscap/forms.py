"""Validation of JSON input documents, one form per command."""
import numpy as np
from django import forms

from .codec import decode_matrix, decode_vector
from .duality import DiscreteEnsemble, DiscretePOVM
from .errors import InvalidInputError
from .gauss_core import HermitianMatrix


class ArrayFieldMixin:
    """Required check for fields that clean to numpy arrays, which have no truth value."""

    def validate(self, value):
        if value is None and self.required:
            raise forms.ValidationError(self.error_messages['required'], code='required')

    def run_validators(self, value):
        if value is not None:
            super().run_validators(value)


class ComplexMatrixField(ArrayFieldMixin, forms.Field):
    """A {"dim", "re", "im"} matrix document (or a bare real nested list)."""

    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return decode_matrix(value, field=self.label or 'matrix')
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


class HermitianField(ComplexMatrixField):
    def __init__(self, *, psd=True, **kwargs):
        self.psd = psd
        super().__init__(**kwargs)

    def to_python(self, value):
        matrix = super().to_python(value)
        if matrix is None:
            return None
        try:
            hermitian = HermitianMatrix(matrix)
            return hermitian.require_psd(self.label or 'matrix') if self.psd else hermitian
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


class RealVectorField(ArrayFieldMixin, forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            vector = decode_vector(value, field=self.label or 'vector')
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')
        if np.any(vector.imag != 0):
            raise forms.ValidationError('expected real values', code='invalid')
        return vector.real


class ComplexVectorField(ArrayFieldMixin, forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return decode_vector(value, field=self.label or 'vector')
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


class DiscreteEnsembleField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return DiscreteEnsemble.from_json(value)
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


class DiscretePOVMField(forms.Field):
    def to_python(self, value):
        if value in self.empty_values:
            return None
        try:
            return DiscretePOVM.from_json(value)
        except InvalidInputError as exc:
            raise forms.ValidationError(str(exc), code='invalid')


def _same_dims(form, names):
    dims = {name: form.cleaned_data[name].shape[0] if isinstance(form.cleaned_data[name], np.ndarray)
            else form.cleaned_data[name].dim
            for name in names if form.cleaned_data.get(name) is not None}
    if len(set(dims.values())) > 1:
        raise forms.ValidationError(f'dimensions differ: {dims}', code='dimension')


class CapacityForm(forms.Form):
    input_cov = HermitianField(label='input_cov')
    noise = HermitianField(label='noise', required=False)
    rescale = ComplexMatrixField(label='rescale', required=False)
    state_noise = HermitianField(label='state_noise', required=False)

    def clean(self):
        cleaned = super().clean()
        if not self.errors:
            _same_dims(self, ['input_cov', 'noise', 'rescale', 'state_noise'])
        return cleaned


class WaterfillForm(forms.Form):
    budget = forms.FloatField()
    freqs = RealVectorField(label='freqs', required=False)
    noise_diag = RealVectorField(label='noise_diag', required=False)
    hamiltonian = HermitianField(label='hamiltonian', required=False)
    noise = HermitianField(label='noise', required=False)

    def clean_budget(self):
        budget = self.cleaned_data['budget']
        if budget <= 0:
            raise forms.ValidationError('energy budget must be positive', code='min_value')
        return budget

    def clean(self):
        cleaned = super().clean()
        diagonal = cleaned.get('freqs') is not None
        matrix = cleaned.get('hamiltonian') is not None
        if diagonal == matrix:
            raise forms.ValidationError('give either "freqs" (diagonal case) or "hamiltonian" (general case)',
                                        code='mode')
        if diagonal and cleaned.get('noise_diag') is None:
            cleaned['noise_diag'] = np.zeros_like(cleaned['freqs'])
        if matrix:
            _same_dims(self, ['hamiltonian', 'noise'])
        return cleaned


class DualForm(forms.Form):
    prior_cov = HermitianField(label='prior_cov')
    state_noise = HermitianField(label='state_noise')

    def clean(self):
        cleaned = super().clean()
        if not self.errors:
            _same_dims(self, ['prior_cov', 'state_noise'])
        return cleaned


class DualFiniteForm(forms.Form):
    ensemble = DiscreteEnsembleField(label='ensemble')
    povm = DiscretePOVMField(label='povm')
    completeness_tol = forms.FloatField(required=False, min_value=0)

    def clean(self):
        cleaned = super().clean()
        ensemble, povm = cleaned.get('ensemble'), cleaned.get('povm')
        if ensemble is not None and povm is not None and ensemble.dim != povm.dim:
            raise forms.ValidationError(f'ensemble dimension {ensemble.dim} differs from POVM dimension {povm.dim}',
                                        code='dimension')
        return cleaned


class SampleForm(forms.Form):
    prior_cov = HermitianField(label='prior_cov')
    state_noise = HermitianField(label='state_noise', required=False)
    noise = HermitianField(label='noise', required=False)
    rescale = ComplexMatrixField(label='rescale', required=False)
    n = forms.IntegerField(min_value=1)
    shards = forms.IntegerField(min_value=1, required=False)

    def clean(self):
        cleaned = super().clean()
        if not self.errors:
            _same_dims(self, ['prior_cov', 'state_noise', 'noise', 'rescale'])
        return cleaned


class InfoMCForm(SampleForm):
    n = forms.IntegerField(min_value=100)


class VerifyForm(forms.Form):
    suite = forms.ChoiceField(choices=())
    n = forms.IntegerField(min_value=1, required=False)
    seed = forms.IntegerField(min_value=0, required=False)

    def __init__(self, *args, suites=(), **kwargs):
        super().__init__(*args, **kwargs)
        self.fields['suite'].choices = [(name, name) for name in suites]


def clean_or_raise(form):
    """Return cleaned_data or raise InvalidInputError with field-level messages."""
    if form.is_valid():
        return form.cleaned_data
    errors = form.errors.get_json_data()
    message = '; '.join(f'{name}: {" ".join(e["message"] for e in items)}' for name, items in errors.items())
    first = next(iter(errors))
    raise InvalidInputError(message, field=None if first == '__all__' else first)
