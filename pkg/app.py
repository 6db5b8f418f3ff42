"""
Command-line entry point.

    python app.py run --preset paper-defaults --seed 7 --out-dir results
    python app.py gen --alpha 0.1667 --out-dir results
    python app.py hough --bits 010000000100000001000000
    python app.py hough --points="2,-1 2,0 2,1"
"""

import argparse
import json
import logging
import sys

from agents.coordinator import Coordinator
from components.report import render_report
from components.visualization import write_accumulator_csv
from utils.config import load_config
from utils.db_handler import DBHandler, Probe
from utils.helper import parse_bits, parse_points
from utils.logging_helper import ExperimentLogger, configure_logging
from memory.patterns import SIGNAL

logger = logging.getLogger(__name__)

# flag dest -> ExperimentConfig field
CONFIG_FLAGS = {
    'seed': 'seed', 'geometry': 'geometry', 'alpha': 'alphas', 'alpha_b': 'alpha_b',
    'model': 'models', 'classifier': 'classifiers', 'theta': 'theta', 'eta': 'etas',
    'gamma': 'gammas', 'solver': 'solver', 'reads': 'reads', 'sweeps': 'sweeps',
    's_star': 's_star', 'pause_sweeps': 'pause_sweeps', 'ramp_sweeps': 'ramp_sweeps',
    'training_sets': 'training_sets', 'signal_probes': 'signal_probes',
    'background_probes': 'background_probes', 'phi_bin': 'phi_bin', 'rho_bin': 'rho_bin',
    'rho_max': 'rho_max', 'bank_phi': 'bank_phi', 'bank_rho': 'bank_rho',
    'beta_min': 'beta_min', 'beta_max': 'beta_max', 'beta_points': 'beta_points', 'workers': 'workers',
}


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='YAML or JSON experiment config')
    common.add_argument('--preset', help='Named preset, e.g. paper-defaults')
    common.add_argument('--out-dir', default='results', help='Output directory')
    common.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    common.add_argument('--seed', type=int)
    common.add_argument('--geometry', help='Detector preset v24..v54')
    common.add_argument('--alpha', type=float, nargs='+', help='Signal pattern densities')
    common.add_argument('--alpha-b', type=float, help='Background density for keyed runs')
    common.add_argument('--model', nargs='+', choices=['qamm', 'qcam'])
    common.add_argument('--classifier', nargs='+', choices=['energy', 'key'])
    common.add_argument('--theta', type=float)
    common.add_argument('--eta', type=float, nargs='+')
    common.add_argument('--gamma', type=float, nargs='+')
    common.add_argument('--solver', choices=['exact', 'sa', 'reverse'])
    common.add_argument('--reads', type=int)
    common.add_argument('--sweeps', type=int)
    common.add_argument('--s-star', type=float)
    common.add_argument('--pause-sweeps', type=int)
    common.add_argument('--ramp-sweeps', type=int)
    common.add_argument('--training-sets', type=int)
    common.add_argument('--signal-probes', type=int)
    common.add_argument('--background-probes', type=int)
    common.add_argument('--beta-min', type=float, help='Lower end of the beta sweep')
    common.add_argument('--beta-max', type=float, help='Upper end of the beta sweep')
    common.add_argument('--beta-points', type=int, help='Number of beta grid points')
    common.add_argument('--phi-bin', type=float)
    common.add_argument('--rho-bin', type=float)
    common.add_argument('--rho-max', type=float)
    common.add_argument('--bank-phi', type=float)
    common.add_argument('--bank-rho', type=float)
    common.add_argument('--workers', type=int, help='Parameter cells run in parallel by this many processes')
    common.add_argument('--no-rescale', action='store_true', help='Skip the 3/(4 W_max) rescale')
    common.add_argument('--no-plots', action='store_true', help='Skip roc.svg and roc.html')
    common.add_argument('--dump-weights', action='store_true', help='Write trained weights as CSV')
    return common


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='track-recall', description='Associative-memory track classification')
    sub = parser.add_subparsers(dest='command', required=True)

    gen = sub.add_parser('gen', parents=[common], help='Generate a training library')
    gen.add_argument('--training-set', type=int, default=0)
    gen.add_argument('--output', default='library.json')

    corrupt = sub.add_parser('corrupt', parents=[common], help='Build a corrupted probe set from a library')
    corrupt.add_argument('--library', required=True)
    corrupt.add_argument('--training-set', type=int, default=0)
    corrupt.add_argument('--output', default='probes.json')

    train = sub.add_parser('train', parents=[common], help='Train weights and report the coupling structure')
    train.add_argument('--library', required=True)

    recall = sub.add_parser('recall', parents=[common], help='Recall probes against a library')
    recall.add_argument('--library', required=True)
    recall.add_argument('--bits', nargs='+', help='Probe values as bit strings')
    recall.add_argument('--probes', help='Probe-set JSON')

    for name, text in (('classify', 'Label probes at one beta'), ('roc', 'Sweep beta and write roc.csv')):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument('--library', required=True)
        p.add_argument('--probes', required=True)
        if name == 'classify':
            p.add_argument('--beta', type=float, default=1.0)

    hough = sub.add_parser('hough', parents=[common], help='Hough peak, bank and template banks')
    hough.add_argument('--bits', help='Value bit string to transform')
    hough.add_argument('--points', help='Raw hits as x,y pairs, e.g. --points="2,-1 2,0 2,1"')
    hough.add_argument('--library', help='Library to partition into banks')
    hough.add_argument('--accumulator-csv', help='Write the full accumulator of --bits here')
    hough.add_argument('--stability', action='store_true', help='Run the planar peak-stability scan')
    hough.add_argument('--trials', type=int, default=20)

    sub.add_parser('run', parents=[common], help='Run the full experiment')
    return parser


def config_overrides(args):
    overrides = {field: getattr(args, dest, None) for dest, field in CONFIG_FLAGS.items()}
    if args.no_rescale:
        overrides['rescale'] = False
    if args.no_plots:
        overrides['plots'] = False
    if args.dump_weights:
        overrides['dump_weights'] = True
    return overrides


class CommandError(Exception):
    def __init__(self, results):
        super().__init__(results.get('message', ''))
        self.results = results


def _check(results):
    if 'error' in results:
        raise CommandError(results)
    return results


def _emit(data):
    print(json.dumps(data, indent=2, sort_keys=True))


def _probes_from_args(args, db, cfg):
    if getattr(args, 'probes', None):
        return db.load_probes(args.probes)
    if getattr(args, 'bits', None):
        return [Probe(SIGNAL, parse_bits(b), 'cli') for b in args.bits]
    raise ValueError('Provide --bits or --probes')


def _train(coordinator, cfg, library, db):
    results = _check(coordinator.run_analysis('train', cfg=cfg, library=library, model=cfg.models[0]))
    if cfg.dump_weights:
        path = db.path(f"weights-{cfg.models[0]}.csv")
        results['weights'].to_csv(path)
        results['weights_csv'] = path
    return results


def run_command(args):
    cfg = load_config(args.config, args.preset, config_overrides(args))
    db = DBHandler(args.out_dir)
    coordinator = Coordinator(ExperimentLogger(db.path('logs')), db)

    if args.command == 'run':
        results = _check(coordinator.run_analysis('run', cfg=cfg))
        report = results['report']
        paths = render_report(report, db, plots=cfg.plots)
        return {'summary': paths['summary'], 'auc': {c.name: c.auc for c in report.cells}}

    if args.command == 'gen':
        results = _check(coordinator.run_analysis(
            'gen', cfg=cfg, training_set=args.training_set,
            model=cfg.models[0], classifier=cfg.classifiers[0],
        ))
        library = results['library']
        path = db.save_library(library, args.output)
        return {'library': path, 'V': library.V, 'K': library.K, 'p_s': library.p_s, 'p_b': library.p_b,
                'findings': results['findings']}

    if args.command == 'hough' and args.stability:
        results = _check(coordinator.run_analysis('stability', cfg=cfg, trials=args.trials))
        path = db.path('stability.csv')
        results['trials'].to_csv(path, index=False)
        return {'reference': results['reference'], 'trials_csv': path,
                'summary': results['summary'].to_dict(orient='records')}

    if args.command == 'hough' and (args.bits or args.points):
        library = db.load_library(args.library) if args.library else None
        if args.points:
            target = {'points': parse_points(args.points)}
        else:
            target = {'value': parse_bits(args.bits)}
        results = _check(coordinator.run_analysis('hough', cfg=cfg, library=library, **target))
        output = {'peak': results['peak'].to_dict(), 'bank': results['bank'], 'grid': results['grid'].to_dict(),
                  'findings': results['findings']}
        if args.accumulator_csv:
            output['accumulator_csv'] = write_accumulator_csv(results['accumulator'], args.accumulator_csv)
        return output

    if args.command == 'hough':
        if not args.library:
            raise ValueError('hough needs --bits, --points, --library or --stability')
        library = db.load_library(args.library)
        banks = _check(coordinator.run_analysis('banks', cfg=cfg, library=library))['banks']
        path = db.path('banks.csv')
        banks.to_frame().to_csv(path, index=False)
        return {'banks': {str(k): v for k, v in banks.banks().items()}, 'max_templates': banks.max_templates,
                'banks_csv': path}

    library = db.load_library(args.library)

    if args.command == 'corrupt':
        results = _check(coordinator.run_analysis(
            'corrupt', cfg=cfg, library=library, eta=cfg.etas[0], gamma=cfg.gammas[0],
            classifier=cfg.classifiers[0], training_set=args.training_set,
        ))
        path = db.save_probes(results['probes'], args.output)
        return {'probes': path, 'count': len(results['probes']), 'eta': cfg.etas[0], 'gamma': cfg.gammas[0]}

    trained = _train(coordinator, cfg, library, db)
    if args.command == 'train':
        return {'coupling_summary': trained['coupling_summary'], 'theta': trained['theta'],
                'weights_csv': trained.get('weights_csv'), 'findings': trained['findings']}

    weights, theta = trained['weights'], trained['theta']
    probes = _probes_from_args(args, db, cfg)
    if args.command == 'recall':
        results = _check(coordinator.run_analysis(
            'recall', cfg=cfg, weights=weights, theta=theta, probes=[p.value for p in probes], library=library,
        ))
        return {'recalls': results['recalls']}

    kwargs = dict(cfg=cfg, library=library, weights=weights, theta=theta, probes=probes,
                  classifier=cfg.classifiers[0])
    if args.command == 'classify':
        results = _check(coordinator.run_analysis('classify', beta=args.beta, **kwargs))
        return {'calibration': results['calibration'], 'probes': results['probes']}

    results = _check(coordinator.run_analysis('roc', **kwargs))
    path = db.path('roc.csv')
    results['roc'].to_frame().to_csv(path, index=False, float_format='%.6f')
    return {'auc': results['auc'], 'calibration': results['calibration'], 'roc_csv': path}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        configure_logging(args.log_level)
        _emit(run_command(args))
        return 0
    except CommandError as e:
        error = {'error': e.results.get('error', 'Error'), 'message': e.results.get('message', str(e))}
    except Exception as e:
        error = {'error': type(e).__name__, 'message': str(e)}
    logger.debug(f"Command {args.command} failed: {error}")
    print(json.dumps(error, sort_keys=True), file=sys.stderr)
    return 1


if __name__ == '__main__':
    sys.exit(main())
