"""JSON encoding of complex matrices and vectors.

Matrices are ``{"dim": s, "re": [[...]], "im": [[...]]}`` and vectors are
``{"re": [...], "im": [...]}``. Every module and every CLI document uses this
encoding.
"""
import json

import numpy as np
from django.core.serializers.json import DjangoJSONEncoder

from .errors import InvalidInputError


def encode_matrix(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    return {
        'dim': int(matrix.shape[0]),
        're': matrix.real.tolist(),
        'im': matrix.imag.tolist(),
    }


def encode_vector(vector):
    vector = np.asarray(vector, dtype=complex).reshape(-1)
    return {'re': vector.real.tolist(), 'im': vector.imag.tolist()}


def _real_array(value, field, what):
    try:
        array = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f'{field}: "{what}" must contain only numbers', field=field) from exc
    if not np.all(np.isfinite(array)):
        raise InvalidInputError(f'{field}: "{what}" contains non-finite values', field=field)
    return array


def decode_matrix(data, field='matrix'):
    """Decode a matrix document; a bare nested list is read as a real matrix."""
    if isinstance(data, list):
        data = {'re': data}
    if not isinstance(data, dict) or 're' not in data:
        raise InvalidInputError(f'{field}: expected an object with "re" (and optionally "im", "dim")', field=field)
    re = _real_array(data['re'], field, 're')
    im = _real_array(data['im'], field, 'im') if data.get('im') is not None else np.zeros_like(re)
    if re.ndim != 2 or re.shape[0] != re.shape[1]:
        raise InvalidInputError(f'{field}: "re" must be a square matrix', field=field)
    if im.shape != re.shape:
        raise InvalidInputError(f'{field}: "re" and "im" shapes differ', field=field)
    if 'dim' in data and data['dim'] != re.shape[0]:
        raise InvalidInputError(f'{field}: "dim" is {data["dim"]} but the matrix is {re.shape[0]}x{re.shape[0]}', field=field)
    return re + 1j * im


def decode_vector(data, field='vector'):
    if isinstance(data, list):
        data = {'re': data}
    if not isinstance(data, dict) or 're' not in data:
        raise InvalidInputError(f'{field}: expected an object with "re" (and optionally "im")', field=field)
    re = _real_array(data['re'], field, 're')
    im = _real_array(data['im'], field, 'im') if data.get('im') is not None else np.zeros_like(re)
    if re.ndim != 1 or im.shape != re.shape:
        raise InvalidInputError(f'{field}: "re" and "im" must be equal-length lists', field=field)
    return re + 1j * im


class GaussCapJSONEncoder(DjangoJSONEncoder):
    """Serialise numpy scalars and arrays as well as Django's usual types."""

    def default(self, o):
        if isinstance(o, np.ndarray):
            if np.iscomplexobj(o):
                return encode_matrix(o) if o.ndim == 2 else encode_vector(o)
            return o.tolist()
        if isinstance(o, np.bool_):
            return bool(o)
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, (complex, np.complexfloating)):
            return {'re': float(o.real), 'im': float(o.imag)}
        if hasattr(o, 'to_json'):
            return o.to_json()
        return super().default(o)


def dumps(document, **kwargs):
    return json.dumps(document, cls=GaussCapJSONEncoder, **kwargs)
