"""
Seeded dataset generation and experiment orchestration.

Generation is stratified by dimension. Each stratum draws from its own
stream np.random.default_rng([seed, dim]), so the output depends only on
(config, seed) and never on the number of joblib workers.
"""

import itertools
import json
import logging
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
from joblib import Parallel, delayed

from lib.asymptotics import (
    cluster_bound, cluster_objective, local_clt_ratio, rank2_asymptotics,
    residual_series, wps_asymptotics,
)
from lib.config import load_config
from lib.dataset import (
    DatasetRecord, passes_intercept_filter, read_dataset, records_to_arrays, write_dataset,
)
from lib.features import LinearFit, SamplingPolicy, extract_features, write_features_csv
from lib.learn import (
    ModelSpec, evaluate, fit_classifier, learning_curve, permutation_importance,
    save_model, train_val_split, write_curve_csv,
)
from lib.periods import log_prefix, period_coeffs, rank2_coeffs, wps_coeffs
from lib.terminality import FanDeduplicator, is_admissible, wps_is_terminal
from lib.utils import parse_window
from lib.varieties import WeightMatrix, WeightVector, validate_rank2, validate_wps

logger = logging.getLogger(__name__)

FAMILIES = ('wps', 'rank2')
EXPERIMENTS = (
    'wps-svm', 'rank2-svm', 'rank2-rfc', 'rank2-mlp2', 'rank2-mlp102',
    'outlier-verify', 'asymptotics-verify', 'bounds-verify', 'enumerate-dim3',
)


@dataclass(frozen=True)
class GenConfig:
    """
    What to generate.

    weight_bound overrides the bound rule: by default WPS weights satisfy
    a_N <= bound_factor * N and rank-2 entries lie in [0, entry_bound].
    With allow_short, strata that run out of draws are returned short
    instead of raising.
    """

    family: str
    count: int
    dim_min: int
    dim_max: int
    seed: int = 0
    bound_factor: int = 10
    entry_bound: int = 5
    weight_bound: int = None
    max_draws: int = 1_000_000
    batch_size: int = 4096
    allow_short: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError('family must be one of {}, got {!r}'.format(FAMILIES, self.family))
        if self.count < 1:
            raise ValueError('count must be >= 1, got {}'.format(self.count))
        if self.dim_min < 2 or self.dim_max < self.dim_min:
            raise ValueError('dimension range {}..{} invalid'.format(self.dim_min, self.dim_max))
        bounds = (self.bound_factor, self.entry_bound, self.max_draws, self.batch_size)
        if any(b < 1 for b in bounds) or (self.weight_bound is not None and self.weight_bound < 1):
            raise ValueError('bounds must be positive')

    @property
    def dims(self):
        return list(range(self.dim_min, self.dim_max + 1))

    def bound_for(self, dim):
        if self.weight_bound is not None:
            return self.weight_bound
        if self.family == 'wps':
            return self.bound_factor * (dim + 1)
        return self.entry_bound


# --- weighted projective spaces -------------------------------------------

def _draw_sorted_tuples(rng, size, n, bound):
    """Uniform non-decreasing n-tuples in [1, bound] (stars and bars)."""
    keys = rng.random((size, bound + n - 1))
    picks = np.sort(np.argpartition(keys, n - 1, axis=1)[:, :n], axis=1)
    return picks - np.arange(n) + 1


def _wps_prefilter(batch):
    """Vectorised well-formedness and bound check on sorted weight rows."""
    n = batch.shape[1]
    a = batch.sum(axis=1)
    j = np.arange(2, n)
    ok = np.all(batch[:, 2:] * (n - j + 1) < a[:, None], axis=1)
    for i in range(n):
        ok &= np.gcd.reduce(np.delete(batch, i, axis=1), axis=1) == 1
    return ok


def _wps_stratum(dim, target, bound, seed, max_draws, batch_size):
    rng = np.random.default_rng([seed, dim])
    n = dim + 1
    found, seen = [], set()
    draws = 0
    while len(found) < target and draws < max_draws:
        size = min(batch_size, max_draws - draws)
        batch = _draw_sorted_tuples(rng, size, n, bound)
        draws += size
        for row in batch[_wps_prefilter(batch)]:
            key = tuple(int(x) for x in row)
            if key in seen:
                continue
            seen.add(key)
            w = WeightVector(weights=key)
            if wps_is_terminal(w):
                found.append(w)
                if len(found) == target:
                    break
    return found, len(found) < target


def enumerate_terminal_wps(dim, bound):
    """All terminal WPS of the given dimension with every weight <= bound."""
    out = []
    tuples = itertools.combinations_with_replacement(range(1, bound + 1), dim + 1)
    while True:
        chunk = list(itertools.islice(tuples, 65536))
        if not chunk:
            return out
        batch = np.asarray(chunk, dtype=np.int64)
        for row in batch[_wps_prefilter(batch)]:
            w = WeightVector(weights=tuple(int(x) for x in row))
            if wps_is_terminal(w):
                out.append(w)


# --- rank-2 toric varieties ------------------------------------------------

def _rank2_prefilter(batch):
    """Vectorised validate_rank2 on (size, 2, N) batches."""
    top, bottom = batch[:, 0, :], batch[:, 1, :]
    ok = np.all((top > 0) | (bottom > 0), axis=1)
    a = top.sum(axis=1)[:, None]
    b = bottom.sum(axis=1)[:, None]
    imbalance = a * bottom - b * top
    ok &= np.all(imbalance != 0, axis=1)
    ok &= ((imbalance > 0).sum(axis=1) >= 2) & ((imbalance < 0).sum(axis=1) >= 2)
    return ok


def _rank2_stratum(dim, target, bound, seed, max_draws, batch_size):
    rng = np.random.default_rng([seed, dim])
    n = dim + 2
    found, seen = [], set()
    dedup = FanDeduplicator()
    draws = 0
    while len(found) < target and draws < max_draws:
        size = min(batch_size, max_draws - draws)
        batch = rng.integers(0, bound + 1, size=(size, 2, n))
        draws += size
        for m in batch[_rank2_prefilter(batch)]:
            key = tuple(sorted(zip(m[0].tolist(), m[1].tolist())))
            if key in seen:
                continue
            seen.add(key)
            w = WeightMatrix(top=tuple(m[0].tolist()), bottom=tuple(m[1].tolist()))
            fan, ok = is_admissible(w)
            if ok and dedup.add(fan):
                found.append(w)
                if len(found) == target:
                    break
    return found, len(found) < target


def _generate(cfg, stratum, n_jobs):
    dims = cfg.dims
    share, extra = divmod(cfg.count, len(dims))
    targets = {dim: share + (1 if i < extra else 0) for i, dim in enumerate(dims)}
    results = {}
    pending = list(dims)
    while True:
        outcomes = Parallel(n_jobs=n_jobs)(
            delayed(stratum)(dim, targets[dim], cfg.bound_for(dim), cfg.seed,
                             cfg.max_draws, cfg.batch_size)
            for dim in pending
        )
        results.update(zip(pending, outcomes))
        total = sum(len(found) for found, _ in results.values())
        if total >= cfg.count:
            break
        open_dims = [dim for dim in dims if not results[dim][1]]
        if not open_dims:
            if cfg.allow_short:
                logger.warning('generate: only %d of %d %s varieties', total, cfg.count, cfg.family)
                break
            raise RuntimeError('target unreachable: {} of {} {} varieties after {} draws per dimension'
                               .format(total, cfg.count, cfg.family, cfg.max_draws))
        for dim in dims:
            if results[dim][1]:
                targets[dim] = len(results[dim][0])
        more, extra = divmod(cfg.count - total, len(open_dims))
        for i, dim in enumerate(open_dims):
            targets[dim] += more + (1 if i < extra else 0)
        pending = open_dims
        logger.info('generate: refilling dimensions %s', open_dims)
    for dim in dims:
        logger.info('generate: %s dim %d -> %d', cfg.family, dim, len(results[dim][0]))
    return [v for dim in dims for v in results[dim][0]]


def gen_wps(cfg, n_jobs=1):
    """Terminal weighted projective spaces, deduplicated by weights."""
    if cfg.family != 'wps':
        raise ValueError('gen_wps needs a wps GenConfig')
    return _generate(cfg, _wps_stratum, n_jobs)


def gen_rank2(cfg, n_jobs=1):
    """Terminal rank-2 toric varieties, deduplicated by fan normal form."""
    if cfg.family != 'rank2':
        raise ValueError('gen_rank2 needs a rank2 GenConfig')
    return _generate(cfg, _rank2_stratum, n_jobs)


# --- records ---------------------------------------------------------------

def build_record(variety, d_max, policy, with_prefix=False, n_jobs=1):
    """Periods, regression fit, asymptotics and optional prefix of one variety."""
    seq = period_coeffs(variety, d_max, 'log', n_jobs=n_jobs)
    fit = extract_features(seq, policy)
    if isinstance(variety, WeightVector):
        asy = wps_asymptotics(variety)
        kind, weights = 'wps', variety.weights
    else:
        asy = rank2_asymptotics(variety)
        kind, weights = 'rank2', (variety.top, variety.bottom)
    prefix = tuple(float(x) for x in log_prefix(seq)) if with_prefix else None
    return DatasetRecord(kind=kind, weights=weights, dim=variety.dim, slope=fit.slope,
                         intercept=fit.intercept, se_slope=fit.se_slope,
                         se_int=fit.se_intercept, A=asy.A, B=asy.B, log_prefix=prefix)


def _try_build(variety, d_max, policy, with_prefix):
    try:
        return build_record(variety, d_max, policy, with_prefix)
    except (ValueError, RuntimeError) as err:
        logger.warning('build_dataset: skipping %s: %s', variety, err)
        return None


def build_dataset(varieties, d_max, policy, with_prefix=False, n_jobs=1):
    """Records in input order; varieties whose fit fails are skipped."""
    records = Parallel(n_jobs=n_jobs)(
        delayed(_try_build)(v, d_max, policy, with_prefix) for v in varieties
    )
    return [r for r in records if r is not None]


# --- experiments -----------------------------------------------------------

def _write_json(path, obj):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(obj, f, indent=2, sort_keys=True)
    logger.info('wrote %s', path)
    return path


def _gen_config(config, family):
    gen = config['generation']
    seed = config['pipeline']['seed']
    if family == 'wps':
        return GenConfig(family='wps', count=gen['wps_count'], dim_min=gen['wps_dim_min'],
                         dim_max=gen['wps_dim_max'], seed=seed, bound_factor=gen['wps_bound_factor'],
                         max_draws=gen['max_draws'], batch_size=gen['batch_size'], allow_short=True)
    return GenConfig(family='rank2', count=gen['rank2_count'], dim_min=gen['rank2_dim_min'],
                     dim_max=gen['rank2_dim_max'], seed=seed, entry_bound=gen['rank2_entry_bound'],
                     max_draws=gen['max_draws'], batch_size=gen['batch_size'], allow_short=True)


def _classify(config, out_dir, name, records, spec, train_frac, with_prefix=False,
              importance=False):
    seed = config['pipeline']['seed']
    learn = config['learn']
    X, y = records_to_arrays(records, with_prefix=with_prefix)
    tr, va = train_val_split(y.size, train_frac, seed)
    model = fit_classifier(spec, X[tr], y[tr], seed=seed)
    report = evaluate(model, X[va], y[va], seed=seed)
    paths = {'model': os.path.join(out_dir, name + '-model.json')}
    save_model(paths['model'], model)
    summary = {'experiment': name, 'seed': seed, 'config': config, 'train_frac': train_frac,
               'n_records': int(y.size), 'model': asdict(spec), 'report': report.as_dict()}
    if spec.kind == 'svm':
        curve = learning_curve(spec, X, y, learn['curve_fracs'], learn['curve_repeats'], seed)
        paths['curve'] = os.path.join(out_dir, name + '-curve.csv')
        write_curve_csv(paths['curve'], curve)
    if importance:
        scores = permutation_importance(model, X[va], y[va], seed, learn['importance_repeats'])
        ranking = np.argsort(-scores).tolist()
        summary['importance'] = scores.tolist()
        summary['importance_top'] = ranking[:10]
    paths['report'] = _write_json(os.path.join(out_dir, name + '.json'), summary)
    return paths


def _wps_svm(config, out_dir):
    periods, learn = config['periods'], config['learn']
    varieties = gen_wps(_gen_config(config, 'wps'))
    d_max = periods['d_max_wps']
    records = build_dataset(varieties, d_max, SamplingPolicy.wps(d_max), n_jobs=periods['n_jobs'])
    dataset = os.path.join(out_dir, 'wps-dataset.jsonl')
    write_dataset(dataset, records)
    fits = [(r.kind, r.dim, LinearFit(slope=r.slope, intercept=r.intercept, se_slope=r.se_slope,
                                      se_intercept=r.se_int, n_points=0)) for r in records]
    write_features_csv(os.path.join(out_dir, 'wps-features.csv'), fits)
    spec = ModelSpec('svm', {'C': learn['svm_c_wps'], 'epochs': learn['svm_epochs'],
                             'scheme': learn['svm_scheme']})
    paths = _classify(config, out_dir, 'wps-svm', records, spec, learn['train_frac_wps'])
    paths['dataset'] = dataset
    return paths


def _rank2_records(config, out_dir):
    """Generated, filtered rank-2 records (cached in out_dir between experiments)."""
    periods, features = config['periods'], config['features']
    path = os.path.join(out_dir, 'rank2-dataset.jsonl')
    if os.path.exists(path):
        records = read_dataset(path)
    else:
        varieties = gen_rank2(_gen_config(config, 'rank2'))
        policy = SamplingPolicy.grid(*parse_window(features['rank2_window_desk']))
        records = build_dataset(varieties, periods['d_max_rank2_desk'], policy, with_prefix=True,
                                n_jobs=periods['n_jobs'])
        write_dataset(path, records)
    threshold = features['filter_se_int_desk']
    kept = [r for r in records if passes_intercept_filter(r, threshold)]
    logger.info('rank2 dataset: %d of %d records pass se_int < %s', len(kept), len(records), threshold)
    return kept, path


def _rank2_classifier(config, out_dir, name):
    learn = config['learn']
    records, dataset = _rank2_records(config, out_dir)
    frac = learn['train_frac_rank2']
    if name == 'rank2-svm':
        spec = ModelSpec('svm', {'C': learn['svm_c_rank2'], 'epochs': learn['svm_epochs'],
                                 'scheme': learn['svm_scheme']})
        paths = _classify(config, out_dir, name, records, spec, frac)
    elif name == 'rank2-rfc':
        spec = ModelSpec('rfc', {'n_trees': learn['rfc_trees'], 'n_jobs': config['periods']['n_jobs']})
        paths = _classify(config, out_dir, name, records, spec, frac)
    else:
        records = [r for r in records if r.dim >= learn['mlp_min_dim']]
        spec = ModelSpec('mlp', {'hidden': tuple(learn['mlp_hidden']), 'epochs': learn['mlp_epochs'],
                                 'lr': learn['mlp_lr'], 'batch_size': learn['mlp_batch_size']})
        with_prefix = name == 'rank2-mlp102'
        paths = _classify(config, out_dir, name, records, spec, frac, with_prefix=with_prefix,
                          importance=with_prefix)
    paths['dataset'] = dataset
    return paths


def verify_outlier(config):
    """Fit the outlier variety on the standard window and, optionally, the extended one."""
    periods, features, pipeline = config['periods'], config['features'], config['pipeline']
    w = validate_rank2(pipeline['outlier_matrix'])
    asy = rank2_asymptotics(w)
    runs = [(periods['d_max_rank2'], features['outlier_window'])]
    if pipeline['outlier_extended']:
        runs.append((periods['d_max_outlier_extended'], features['outlier_extended_window']))
    d_top = max(d for d, _ in runs)
    seq = rank2_coeffs(w, d_top, 'log', n_jobs=periods['n_jobs'])
    fits = []
    for d_max, window in runs:
        fit = extract_features(seq, SamplingPolicy.grid(*parse_window(window)))
        fits.append({'d_max': d_max, 'window': window, 'slope': fit.slope,
                     'intercept': fit.intercept, 'se_slope': fit.se_slope,
                     'se_int': fit.se_intercept, 'n_points': fit.n_points})
    return {'weight_matrix': w.as_rows(), 'dim': w.dim, 'asymptotics': asy.as_dict(), 'fits': fits}


def verify_asymptotics():
    """Closed-form growth checks on P(1,1), P^2 and P^1 x P^1."""
    out = {}
    p11 = validate_wps([1, 1])
    seq = wps_coeffs(p11, 4000)
    asy = wps_asymptotics(p11)
    ds = [500, 1000, 2000, 4000]
    out['P(1,1)'] = {'asymptotics': asy.as_dict(),
                     'residuals': dict(zip(map(str, ds), residual_series(seq, asy, ds)))}
    p2 = validate_wps([1, 1, 1])
    asy = wps_asymptotics(p2)
    out['P2'] = {'asymptotics': asy.as_dict(),
                 'residual_3000': residual_series(wps_coeffs(p2, 3000), asy, [3000])[0]}
    p1p1 = validate_rank2([[1, 1, 0, 0], [0, 0, 1, 1]])
    asy = rank2_asymptotics(p1p1)
    seq = rank2_coeffs(p1p1, 4000)
    exact_log = 2 * (math.lgamma(4001) - 2 * math.lgamma(2001))
    out['P1xP1'] = {'asymptotics': asy.as_dict(),
                    'residual_4000': residual_series(seq, asy, [4000])[0],
                    'binomial_square_gap_4000': float(seq.log_coeffs[4000]) - exact_log}
    out['local_clt'] = {
        'p=(1/2,1/2),d=100,k=(50,50)': local_clt_ratio([0.5, 0.5], 100, [50, 50]),
        'p=(1/2,1/3,1/6)': {str(d): local_clt_ratio([1 / 2, 1 / 3, 1 / 6], d, [d // 2, d // 3, d // 6])
                            for d in (402, 1602, 6402)},
    }
    return out


def verify_bounds(config):
    """Numerical cluster bounds against every terminal 5-dim WPS with bounded weights."""
    asy_cfg = config['asymptotics']
    n = asy_cfg['bound_n']
    seed = config['pipeline']['seed']
    theta_min, theta_max = asy_cfg['bound_theta_min'], asy_cfg['bound_theta_max']
    low, p_low = cluster_bound(theta_min, n, 'min', restarts=asy_cfg['restarts'], seed=seed)
    varieties = enumerate_terminal_wps(n - 1, asy_cfg['bound_weight_limit'])
    max_a = max(w.a for w in varieties)
    eps = min(asy_cfg['bound_eps'], 1.0 / max_a)
    high, p_high = cluster_bound(theta_max, n, 'max', eps=eps, restarts=asy_cfg['restarts'], seed=seed)
    values = [cluster_objective([x / w.a for x in w.weights], theta_max) for w in varieties]
    literal = 41 / 40
    return {
        'theta_min': theta_min, 'min_value': low, 'min_p': list(p_low),
        'min_at_least_41_over_8': low >= 41 / 8 - 1e-6,
        'theta_max': theta_max, 'eps': eps, 'max_value': high, 'max_p': list(p_high),
        'n_varieties': len(varieties), 'max_weight_sum': max_a,
        'largest_variety_value': max(values),
        'above_region_max': sum(1 for v in values if v > high + 1e-9),
        'literal_upper_bound': literal,
        'literal_upper_bound_violations': sum(1 for v in values if v > literal),
    }


def enumerate_dim3(config):
    bounds = config['pipeline']['enumerate_dim3_bounds']
    counts = {str(b): len(enumerate_terminal_wps(3, b)) for b in bounds}
    found = [w.as_list() for w in enumerate_terminal_wps(3, max(bounds))]
    return {'counts': counts, 'varieties': found, 'stable': len(set(counts.values())) == 1}


def run_experiment(name, config=None, out_dir=None):
    """
    Run one named experiment and write its artifacts.

    Returns:
        dict of artifact name -> path; every JSON report records the seed
        and the configuration it ran with
    """
    if name not in EXPERIMENTS:
        raise ValueError('unknown experiment {!r}; expected one of: {}'.format(name, ', '.join(EXPERIMENTS)))
    config = config or load_config()
    out_dir = out_dir or config['pipeline']['out_dir']
    os.makedirs(out_dir, exist_ok=True)
    seed = config['pipeline']['seed']
    logger.info('run_experiment: %s (seed %d) -> %s', name, seed, out_dir)

    if name == 'wps-svm':
        return _wps_svm(config, out_dir)
    if name.startswith('rank2-'):
        return _rank2_classifier(config, out_dir, name)
    if name == 'outlier-verify':
        result = verify_outlier(config)
    elif name == 'asymptotics-verify':
        result = verify_asymptotics()
    elif name == 'bounds-verify':
        result = verify_bounds(config)
    else:
        result = enumerate_dim3(config)
    result = {'experiment': name, 'seed': seed, 'config': config, 'result': result}
    return {'report': _write_json(os.path.join(out_dir, name + '.json'), result)}


def with_overrides(config, **sections):
    """Copy of config with some keys of some sections replaced."""
    out = {key: dict(value) if isinstance(value, dict) else value for key, value in config.items()}
    for section, values in sections.items():
        out[section].update(values)
    return out
