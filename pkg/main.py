"""
Main entry point for the quantum period dimension toolkit.
"""

import argparse
import json
import logging
import sys

import numpy as np

from lib.asymptotics import cluster_bound, rank2_asymptotics, wps_asymptotics
from lib.config import (
    get_asymptotics_config, get_features_config, get_generation_config, get_learn_config,
    get_periods_config, get_pipeline_config, load_config,
)
from lib.dataset import (
    passes_intercept_filter, read_dataset, read_varieties, records_to_arrays, write_dataset,
    write_varieties,
)
from lib.features import LinearFit, SamplingPolicy, write_features_csv
from lib.learn import (
    ModelSpec, evaluate, fit_classifier, load_model, save_model, train_val_split,
)
from lib.periods import period_coeffs, write_log_coeffs_csv
from lib.pipeline import (
    EXPERIMENTS, GenConfig, build_dataset, enumerate_terminal_wps, gen_rank2, gen_wps,
    run_experiment, verify_outlier, with_overrides,
)
from lib.utils import parse_int_list, parse_matrix, parse_window
from lib.varieties import WeightVector, validate_rank2, validate_wps

logger = logging.getLogger('main')

MODEL_CHOICES = ('svm', 'rfc', 'mlp2', 'mlp102')


def emit(obj):
    """Print one JSON document to stdout."""
    print(json.dumps(obj, indent=2, sort_keys=True))


def parse_variety(args):
    """Variety named by --weights or --matrix."""
    if args.weights:
        return validate_wps(parse_int_list(args.weights))
    if args.matrix:
        return validate_rank2(parse_matrix(args.matrix))
    raise ValueError('give --weights A1,A2,... or --matrix A1,..,AN;B1,..,BN')


def model_spec(kind, family):
    """ModelSpec for a CLI model name, hyperparameters from config.json."""
    learn = get_learn_config()
    if kind == 'svm':
        C = learn['svm_c_wps'] if family == 'wps' else learn['svm_c_rank2']
        return ModelSpec('svm', {'C': C, 'epochs': learn['svm_epochs'], 'scheme': learn['svm_scheme']})
    if kind == 'rfc':
        return ModelSpec('rfc', {'n_trees': learn['rfc_trees']})
    if kind in ('mlp2', 'mlp102'):
        return ModelSpec('mlp', {'hidden': tuple(learn['mlp_hidden']), 'epochs': learn['mlp_epochs'],
                                 'lr': learn['mlp_lr'], 'batch_size': learn['mlp_batch_size']})
    raise ValueError('unknown model {!r}, expected one of {}'.format(kind, MODEL_CHOICES))


def load_records(args):
    """Dataset records from --data, filtered by --filter-se when given."""
    records = read_dataset(args.data)
    if args.filter_se is not None:
        kept = [r for r in records if passes_intercept_filter(r, args.filter_se)]
        logger.info('load_records: %d of %d pass se_int < %s', len(kept), len(records), args.filter_se)
        records = kept
    if not records:
        raise ValueError('no records left in {}'.format(args.data))
    return records


# --- subcommands -------------------------------------------------------------

def cmd_gen(args):
    gen = get_generation_config()
    family = 'wps' if args.command == 'gen-wps' else 'rank2'
    cfg = GenConfig(
        family=family,
        count=args.count or gen[family + '_count'],
        dim_min=args.dim_min or gen[family + '_dim_min'],
        dim_max=args.dim_max or gen[family + '_dim_max'],
        seed=args.seed,
        bound_factor=gen['wps_bound_factor'],
        entry_bound=gen['rank2_entry_bound'],
        weight_bound=args.bound,
        max_draws=args.max_draws or gen['max_draws'],
        batch_size=gen['batch_size'],
        allow_short=args.allow_short,
    )
    varieties = gen_wps(cfg, n_jobs=args.jobs) if family == 'wps' else gen_rank2(cfg, n_jobs=args.jobs)
    if args.out:
        write_varieties(args.out, varieties)
    counts = {}
    for v in varieties:
        counts[str(v.dim)] = counts.get(str(v.dim), 0) + 1
    emit({'family': family, 'seed': args.seed, 'count': len(varieties), 'by_dim': counts,
          'out': args.out})


def cmd_periods(args):
    variety = parse_variety(args)
    d_max = args.dmax or get_periods_config()['exact_check_degree']
    if args.exact:
        prefix = period_coeffs(variety, d_max, 'exact')
        emit({'d_max': d_max, 'coeffs': [str(c) for c in prefix.coeffs]})
        return
    seq = period_coeffs(variety, d_max, 'log', n_jobs=args.jobs)
    if args.out:
        write_log_coeffs_csv(args.out, seq)
    nonzero = seq.nonzero_indices()
    emit({'d_max': d_max, 'divisor': seq.divisor, 'nonzero': int(nonzero.size),
          'log_c_dmax': float(seq.log_coeffs[nonzero[-1]]), 'last_nonzero': int(nonzero[-1]),
          'out': args.out})


def cmd_features(args):
    varieties = read_varieties(args.input)
    periods = get_periods_config()
    if args.window:
        lo, hi, stride = parse_window(args.window)
        policy = SamplingPolicy.grid(lo, hi, stride)
        d_max = args.dmax or hi
    elif all(isinstance(v, WeightVector) for v in varieties):
        d_max = args.dmax or periods['d_max_wps']
        policy = SamplingPolicy.wps(d_max)
    else:
        lo, hi, stride = parse_window(get_features_config()['rank2_window_desk'])
        policy = SamplingPolicy.grid(lo, hi, stride)
        d_max = args.dmax or periods['d_max_rank2_desk']
    records = build_dataset(varieties, d_max, policy, with_prefix=args.prefix, n_jobs=args.jobs)
    if args.out:
        write_dataset(args.out, records)
    if args.csv:
        write_features_csv(args.csv, [
            (r.kind, r.dim, LinearFit(slope=r.slope, intercept=r.intercept, se_slope=r.se_slope,
                                      se_intercept=r.se_int, n_points=0))
            for r in records
        ])
    emit({'input': len(varieties), 'records': len(records), 'd_max': d_max, 'out': args.out,
          'csv': args.csv})


def cmd_asympt(args):
    variety = parse_variety(args)
    if isinstance(variety, WeightVector):
        asy = wps_asymptotics(variety)
    else:
        asy = rank2_asymptotics(variety)
    emit(asy.as_dict())


def cmd_train(args):
    records = load_records(args)
    family = records[0].kind
    with_prefix = args.model == 'mlp102'
    X, y = records_to_arrays(records, with_prefix=with_prefix)
    default_frac = get_learn_config()['train_frac_' + ('wps' if family == 'wps' else 'rank2')]
    tr, va = train_val_split(y.size, args.train_frac or default_frac, args.seed)
    spec = model_spec(args.model, family)
    model = fit_classifier(spec, X[tr], y[tr], seed=args.seed)
    report = evaluate(model, X[va], y[va], seed=args.seed)
    if args.out:
        save_model(args.out, model)
    emit({'model': args.model, 'train': int(tr.size), 'validation': int(va.size),
          'report': report.as_dict(), 'out': args.out})


def cmd_eval(args):
    records = load_records(args)
    model = load_model(args.model_file)
    X, y = records_to_arrays(records, with_prefix=model.n_features > 2)
    emit(evaluate(model, X, y, seed=args.seed).as_dict())


def cmd_bounds(args):
    asy = get_asymptotics_config()
    restarts = args.restarts or asy['restarts']
    theta_min = args.theta if args.theta is not None else asy['bound_theta_min']
    value, p = cluster_bound(theta_min, args.n or asy['bound_n'], 'min',
                             restarts=restarts, seed=args.seed)
    out = {'mode': 'min', 'theta': theta_min, 'value': value, 'p': list(p),
           'at_least_41_over_8': value >= 41 / 8 - 1e-6}
    if args.max:
        theta_max = asy['bound_theta_max']
        eps = args.eps or asy['bound_eps']
        high, p_high = cluster_bound(theta_max, args.n or asy['bound_n'], 'max', eps=eps,
                                     restarts=restarts, seed=args.seed)
        out['max'] = {'theta': theta_max, 'eps': eps, 'value': high, 'p': list(p_high)}
    emit(out)


def cmd_verify_outlier(args):
    config = load_config()
    if args.extended:
        config = with_overrides(config, pipeline={'outlier_extended': True})
    if args.jobs != 1:
        config = with_overrides(config, periods={'n_jobs': args.jobs})
    result = verify_outlier(config)
    if args.out:
        with open(args.out, 'w', encoding='utf-8') as f:
            json.dump(result, f, indent=2, sort_keys=True)
    emit(result)


def cmd_enumerate_dim3(args):
    bounds = parse_int_list(args.bounds) if args.bounds else get_pipeline_config()['enumerate_dim3_bounds']
    found = {b: enumerate_terminal_wps(3, b) for b in bounds}
    emit({'counts': {str(b): len(found[b]) for b in bounds},
          'varieties': [w.as_list() for w in found[max(bounds)]]})


def cmd_experiment(args):
    config = load_config()
    config = with_overrides(config, pipeline={'seed': args.seed}, periods={'n_jobs': args.jobs})
    emit(run_experiment(args.name, config, out_dir=args.out))


COMMANDS = {
    'gen-wps': cmd_gen,
    'gen-rank2': cmd_gen,
    'periods': cmd_periods,
    'features': cmd_features,
    'asympt': cmd_asympt,
    'train': cmd_train,
    'eval': cmd_eval,
    'bounds': cmd_bounds,
    'verify-outlier': cmd_verify_outlier,
    'enumerate-dim3': cmd_enumerate_dim3,
    'experiment': cmd_experiment,
}


def build_parser():
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument('--seed', type=int, default=0)
    shared.add_argument('--out', help='output file (directory for experiment)')
    shared.add_argument('--jobs', type=int, default=1, help='joblib workers')
    shared.add_argument('--config', help='path to config.json')
    shared.add_argument('--verbose', '-v', action='store_true')

    variety = argparse.ArgumentParser(add_help=False)
    variety.add_argument('--weights', help='WPS weights, e.g. 1,1,2')
    variety.add_argument('--matrix', help='rank-2 weight matrix, e.g. 1,1,0,0;0,0,1,1')

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument('--data', required=True, help='dataset JSONL')
    data.add_argument('--filter-se', type=float, help='keep records with se_int below T')

    parser = argparse.ArgumentParser(prog='main.py', description=__doc__.strip())
    sub = parser.add_subparsers(dest='command', required=True)

    for name in ('gen-wps', 'gen-rank2'):
        p = sub.add_parser(name, parents=[shared], help='generate terminal varieties')
        p.add_argument('--count', type=int)
        p.add_argument('--dim-min', type=int)
        p.add_argument('--dim-max', type=int)
        p.add_argument('--bound', type=int, help='fixed weight/entry bound')
        p.add_argument('--max-draws', type=int, help='draw budget per dimension')
        p.add_argument('--allow-short', action='store_true', help='return short instead of failing')

    p = sub.add_parser('periods', parents=[shared, variety], help='period coefficients')
    p.add_argument('--dmax', type=int)
    p.add_argument('--exact', action='store_true', help='big-integer coefficients')

    p = sub.add_parser('features', parents=[shared], help='regression features for generated varieties')
    p.add_argument('--input', required=True, help='varieties JSONL')
    p.add_argument('--dmax', type=int)
    p.add_argument('--window', help='LO:HI:STRIDE sampling window')
    p.add_argument('--prefix', action='store_true', help='store the first 100 log-coefficients')
    p.add_argument('--csv', help='also write a features CSV')

    sub.add_parser('asympt', parents=[shared, variety], help='asymptotic constants A, B')

    p = sub.add_parser('train', parents=[shared, data], help='train a dimension classifier')
    p.add_argument('--model', choices=MODEL_CHOICES, default='svm')
    p.add_argument('--train-frac', type=float)

    p = sub.add_parser('eval', parents=[shared, data], help='evaluate a saved model')
    p.add_argument('--model-file', required=True)

    p = sub.add_parser('bounds', parents=[shared], help='cluster bounds on B + theta*A')
    p.add_argument('--theta', type=float)
    p.add_argument('--n', type=int)
    p.add_argument('--max', action='store_true', help='also maximise on the ordered simplex')
    p.add_argument('--eps', type=float)
    p.add_argument('--restarts', type=int)

    p = sub.add_parser('verify-outlier', parents=[shared], help='fit the outlier variety')
    p.add_argument('--extended', action='store_true', help='also fit the 20k-40k window')

    p = sub.add_parser('enumerate-dim3', parents=[shared], help='exhaustive terminal WPS in dimension 3')
    p.add_argument('--bounds', help='comma-separated weight bounds')

    p = sub.add_parser('experiment', parents=[shared], help='run a named experiment')
    p.add_argument('name', choices=EXPERIMENTS)
    return parser


def initialize(args):
    """Configure logging and load the configuration."""
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
    )
    np.seterr(under='ignore')
    load_config(args.config)


def main(argv=None):
    """Entry point."""
    args = build_parser().parse_args(argv)
    try:
        initialize(args)
        COMMANDS[args.command](args)
    except (ValueError, RuntimeError, OSError) as err:
        logger.error('%s: %s', args.command, err)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
