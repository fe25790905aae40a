"""
Command line entry point.

    distia sweep golden_a1 --out-csv rates.csv --out-svg rates.svg
    distia prop2 --beta 0.5 1 1
    distia quantizer --bits 6 9 12 15 18
    distia scaling --a-values 0.25 0.5 1
    distia validate --module ia3

On failure the last line written to stderr is a JSON object with an
``error`` key, and the exit status is nonzero.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

from ..errors import DistiaError, SweepAborted
from .invariants import SUITES, run_all
from .output import csv_text, line_chart_svg, svg_text, write_text
from .scenario import GOLDEN_NAMES, golden_scenario, load_scenario
from .sweep import (DEFAULT_SCALING_EPS, precoder_scaling_study, prop2_experiment,
                    quantizer_study, run_sweep)

__all__ = ['main', 'build_parser']

EXIT_FAILURE = 1
EXIT_CHECKS_FAILED = 2


def _resolve_scenario(ref):
    if ref in GOLDEN_NAMES:
        return golden_scenario(ref)
    if not os.path.exists(ref) and f'golden_{ref}' in GOLDEN_NAMES:
        return golden_scenario(f'golden_{ref}')
    return load_scenario(ref)


def _apply_overrides(s, args):
    changes = {}
    if args.seed is not None:
        changes['seed'] = args.seed
    if args.trials is not None:
        changes['trials'] = args.trials
    return s.replace(**changes) if changes else s


def _rows_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator='\n')
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, float) else x for x in r])
    return buf.getvalue()


def _print_dof(result):
    for i, slope in enumerate(result.dof.per_user_slope):
        print(f'user {i + 1}: slope {slope:.3f} (r2 {result.dof.r2[i]:.4f})')
    for p in result.points:
        rates = ' '.join(f'{r:8.3f}' for r in p.per_user_rate)
        print(f'{p.P_dB:6.1f} dB  {rates}')


def _finish_sweep(result, args, title):
    if args.out_csv:
        write_text(csv_text(result), args.out_csv)
    if args.out_svg:
        write_text(svg_text(result, title=title), args.out_svg)
    _print_dof(result)
    if any(result.failed):
        print(f'failed trials per point: {list(result.failed)}')
    return 0


def cmd_sweep(args):
    s = _apply_overrides(_resolve_scenario(args.scenario), args)
    return _finish_sweep(run_sweep(s, workers=args.workers), args, 'Average rate per user')


def cmd_prop2(args):
    s = _apply_overrides(_resolve_scenario(args.scenario), args)
    result = prop2_experiment(args.beta, s, workers=args.workers)
    beta = ', '.join(f'{b:g}' for b in args.beta)
    return _finish_sweep(result, args, f'Average rate per user, beta = ({beta})')


def cmd_quantizer(args):
    seed = 0 if args.seed is None else args.seed
    trials = 1000 if args.trials is None else args.trials
    q = quantizer_study(args.N, args.M, args.bits, trials, seed=seed, workers=args.workers)
    rows = list(zip(q.bits, q.mean_distortion_sq, q.stderr))
    if args.out_csv:
        write_text(_rows_csv(('bits', 'mean_distortion_sq', 'stderr'), rows), args.out_csv)
    if args.out_svg:
        svg = line_chart_svg(q.bits, [('log2 mean distortion^2',
                                       [math.log2(m) for m in q.mean_distortion_sq])],
                             f'RVQ distortion, N={args.N}, M={args.M}', 'B [bits]',
                             'log2 E||H - Q(H)||^2')
        write_text(svg, args.out_svg)
    for b, m, e in rows:
        print(f'B={b:3d}  mean {m:.6f}  stderr {e:.2e}')
    print(f'fitted exponent {q.exponent:.4f} per bit')
    return 0


def cmd_scaling(args):
    s = _apply_overrides(_resolve_scenario(args.scenario), args)
    if args.trials is None:
        s = s.replace(trials=500)
    if args.eps is not None:
        s = s.replace(filter_eps=args.eps)
    elif not s.filter_eps:
        s = s.replace(filter_eps=DEFAULT_SCALING_EPS)
    rows = precoder_scaling_study(args.a_values, s, workers=args.workers)
    if args.out_csv:
        table = []
        for r in rows:
            for p, P in enumerate(r.P):
                table.append((r.A_min, P, r.mean_aligned_sq[p], r.mean_frob_sq[p],
                              r.mean_chordal_sq[p]))
        write_text(_rows_csv(('A_min', 'P', 'mean_aligned_sq', 'mean_frob_sq',
                              'mean_chordal_sq'), table), args.out_csv)
    if args.out_svg and rows:
        xs = [10 * math.log10(P) for P in rows[0].P]
        series = [(f'A = {r.A_min:g}', [math.log10(m) for m in r.mean_aligned_sq])
                  for r in rows]
        write_text(line_chart_svg(xs, series, 'Precoder error of TX 1', 'SNR [dB]',
                                  'log10 E||dU||^2'), args.out_svg)
    for r in rows:
        print(f'A={r.A_min:g}: exponent {r.exponent:.3f} '
              f'(frobenius {r.exponent_frob:.3f}, chordal {r.exponent_chordal:.3f})')
    return 0


def cmd_validate(args):
    def report(c):
        status = 'PASS' if c.passed else 'FAIL'
        print(f'{status} {c.module}.{c.name} ({c.seconds:.1f} s): {c.detail}', flush=True)

    results = run_all(modules=args.module, report=report)
    failed = [f'{c.module}.{c.name}' for c in results if not c.passed]
    print(f'{len(results) - len(failed)}/{len(results)} checks passed')
    if args.out_csv:
        write_text(_rows_csv(('module', 'check', 'passed', 'seconds', 'detail'),
                             [(c.module, c.name, int(c.passed), c.seconds, c.detail)
                              for c in results]), args.out_csv)
    if failed:
        _error_line('InvariantFailure', f'{len(failed)} checks failed', failed=failed)
        return EXIT_CHECKS_FAILED
    return 0


def _common(p, scenario=False):
    p.add_argument('--out-csv', metavar='PATH')
    p.add_argument('--out-svg', metavar='PATH')
    p.add_argument('--seed', type=int)
    p.add_argument('--trials', type=int)
    p.add_argument('--workers', type=int,
                   help='worker processes (default: $DISTIA_WORKERS or CPU count)')
    if scenario:
        p.add_argument('--scenario', default='golden_perfect',
                       help='scenario file or golden name supplying dims, SNR grid and seed')


def build_parser():
    parser = argparse.ArgumentParser(prog='distia',
                                     description='3-user MIMO IA simulator under distributed CSIT')
    parser.add_argument('-v', '--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('sweep', help='rate-vs-SNR sweep of a scenario')
    p.add_argument('scenario', help=f'scenario file, or one of {", ".join(GOLDEN_NAMES)}')
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser('prop2', help='rates with injected precoder errors')
    p.add_argument('--beta', type=float, nargs=3, default=[1.0, 1.0, 1.0])
    _common(p, scenario=True)
    p.set_defaults(func=cmd_prop2)

    p = sub.add_parser('quantizer', help='RVQ distortion against bit budget')
    p.add_argument('--N', type=int, default=2)
    p.add_argument('--M', type=int, default=2)
    p.add_argument('--bits', type=int, nargs='+', default=[6, 9, 12, 15, 18])
    _common(p)
    p.set_defaults(func=cmd_quantizer)

    p = sub.add_parser('scaling', help='precoder error decay against SNR')
    p.add_argument('--a-values', type=float, nargs='+', default=[0.25, 0.5, 1.0])
    p.add_argument('--eps', type=float, help=f'conditioning filter (default {DEFAULT_SCALING_EPS})')
    _common(p, scenario=True)
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser('validate', help='run the invariant suites')
    p.add_argument('--module', action='append', choices=sorted(SUITES))
    _common(p)
    p.set_defaults(func=cmd_validate)
    return parser


def _error_line(kind, message, **extra):
    payload = {'error': kind, 'message': message}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except SweepAborted as exc:
        _error_line(type(exc).__name__, str(exc), diagnostics=_jsonable(exc.diagnostics))
    except (DistiaError, ValueError, OSError) as exc:
        _error_line(type(exc).__name__, str(exc))
    return EXIT_FAILURE


def _jsonable(x):
    try:
        json.dumps(x)
        return x
    except TypeError:
        return repr(x)


if __name__ == '__main__':
    sys.exit(main())
