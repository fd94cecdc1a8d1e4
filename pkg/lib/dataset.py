"""
JSONL persistence for datasets and generated varieties.

One JSON object per line, UTF-8. Floats are written with Python's shortest
round-trip repr, so reading a file back gives bit-identical values.
"""

import json
import logging
import math
from dataclasses import dataclass

import numpy as np

from lib.varieties import WeightMatrix, WeightVector, validate_rank2, validate_wps

logger = logging.getLogger(__name__)

FLOAT_KEYS = ('slope', 'intercept', 'se_slope', 'se_int', 'A', 'B')
REQUIRED_KEYS = ('kind', 'dim') + FLOAT_KEYS
VARIETY_KEYS = {'wps': 'weights', 'rank2': 'weight_matrix'}


@dataclass(frozen=True)
class DatasetRecord:
    kind: str
    weights: tuple
    dim: int
    slope: float
    intercept: float
    se_slope: float
    se_int: float
    A: float
    B: float
    log_prefix: tuple = None

    def variety(self):
        if self.kind == 'wps':
            return WeightVector(weights=tuple(self.weights))
        return WeightMatrix(top=tuple(self.weights[0]), bottom=tuple(self.weights[1]))


def variety_to_dict(variety):
    if isinstance(variety, WeightVector):
        return {'kind': 'wps', 'weights': variety.as_list()}
    if isinstance(variety, WeightMatrix):
        return {'kind': 'rank2', 'weight_matrix': variety.as_rows()}
    raise TypeError('expected WeightVector or WeightMatrix, got {}'.format(type(variety).__name__))


def variety_from_dict(obj):
    kind = obj.get('kind')
    if kind not in VARIETY_KEYS:
        raise ValueError('unknown kind {!r}'.format(kind))
    key = VARIETY_KEYS[kind]
    if key not in obj:
        raise ValueError("missing key '{}'".format(key))
    if kind == 'wps':
        return validate_wps(obj[key])
    return validate_rank2(obj[key])


def record_to_dict(record):
    obj = {'kind': record.kind}
    if record.kind == 'wps':
        obj['weights'] = list(record.weights)
    else:
        obj['weight_matrix'] = [list(row) for row in record.weights]
    obj['dim'] = record.dim
    for key in FLOAT_KEYS:
        obj[key] = getattr(record, key)
    if record.log_prefix is not None:
        obj['log_prefix'] = list(record.log_prefix)
    return obj


def validate_record(obj):
    """Check the structure of one decoded line; raises ValueError naming the problem."""
    if not isinstance(obj, dict):
        raise ValueError('expected a JSON object')
    for key in REQUIRED_KEYS:
        if key not in obj:
            raise ValueError("missing key '{}'".format(key))
    kind = obj['kind']
    if kind not in VARIETY_KEYS:
        raise ValueError('unknown kind {!r}'.format(kind))
    variety_key = VARIETY_KEYS[kind]
    if variety_key not in obj:
        raise ValueError("missing key '{}'".format(variety_key))
    allowed = set(REQUIRED_KEYS) | {variety_key, 'log_prefix'}
    for key in obj:
        if key not in allowed:
            raise ValueError("unexpected key '{}'".format(key))
    for key in FLOAT_KEYS:
        if not isinstance(obj[key], (int, float)) or not math.isfinite(obj[key]):
            raise ValueError("key '{}' must be a finite number".format(key))
    if 'log_prefix' in obj and len(obj['log_prefix']) != 100:
        raise ValueError("key 'log_prefix' must hold 100 numbers")


def record_from_dict(obj):
    validate_record(obj)
    if obj['kind'] == 'wps':
        weights = tuple(int(x) for x in obj['weights'])
    else:
        weights = tuple(tuple(int(x) for x in row) for row in obj['weight_matrix'])
    prefix = obj.get('log_prefix')
    return DatasetRecord(
        kind=obj['kind'],
        weights=weights,
        dim=int(obj['dim']),
        slope=float(obj['slope']),
        intercept=float(obj['intercept']),
        se_slope=float(obj['se_slope']),
        se_int=float(obj['se_int']),
        A=float(obj['A']),
        B=float(obj['B']),
        log_prefix=None if prefix is None else tuple(float(x) for x in prefix),
    )


def _write_lines(path, objects):
    count = 0
    with open(path, 'w', encoding='utf-8') as f:
        for obj in objects:
            f.write(json.dumps(obj, ensure_ascii=False))
            f.write('\n')
            count += 1
    logger.info('wrote %d lines to %s', count, path)


def _read_lines(path, decode):
    out = []
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                out.append(decode(json.loads(line)))
            except ValueError as err:
                raise ValueError('line {}: {}'.format(line_no, err)) from err
    return out


def write_dataset(path, records):
    _write_lines(path, (record_to_dict(r) for r in records))


def read_dataset(path):
    return _read_lines(path, record_from_dict)


def write_varieties(path, varieties):
    _write_lines(path, (variety_to_dict(v) for v in varieties))


def read_varieties(path):
    return _read_lines(path, variety_from_dict)


def passes_intercept_filter(record, threshold):
    """Keep records whose intercept standard error is below threshold."""
    return record.se_int < threshold


def records_to_arrays(records, with_prefix=False):
    """
    Feature matrix and labels.

    Returns:
        (X, y): X has columns slope, intercept and, with_prefix, the 100
        log-coefficients; y holds the dimensions
    """
    rows = []
    for r in records:
        row = [r.slope, r.intercept]
        if with_prefix:
            if r.log_prefix is None:
                raise ValueError('record without log_prefix: {}'.format(r.weights))
            row.extend(r.log_prefix)
        rows.append(row)
    return np.asarray(rows, dtype=np.float64), np.asarray([r.dim for r in records], dtype=np.int64)
