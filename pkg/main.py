#!/usr/bin/env python3
"""
Main entry point for the consensus toolkit.
Simulates scenarios, prints spectral certificates and runs the property suite.
"""

import argparse
import json
import logging
import os
import sys

import pandas as pd
from dotenv import load_dotenv

from analysis import format_report
from errors import InputError, NumericalError, ValidationError

load_dotenv()

# Configuration
LOG_LEVEL = os.getenv('LOG_LEVEL', 'WARNING').upper()
JOBS = int(os.getenv('JOBS', '1'))

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """Usage errors become InputError so they share exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError('arguments', message)


def build_parser():
    parser = _Parser(
        description='Consensus toolkit - disturbance-rejecting consensus and formation control',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python main.py simulate --example 1                     # Example 1, Reject mode
  python main.py simulate --example 1 --variant baseline  # without disturbance rejection
  python main.py simulate scenario_files/*.scn --jobs 4   # batch run
  python main.py spectral --example 2 --mu 0.2            # inertia and bound certificates
  python main.py verify --seed 7                          # property suite
        """
    )
    sub = parser.add_subparsers(dest='action', required=True)

    sim = sub.add_parser('simulate', help='Simulate scenario files or a built-in example')
    sim.add_argument('files', nargs='*', help='Scenario files')
    sim.add_argument('--example', type=int, help='Built-in example (1, 2 or 3)')
    sim.add_argument('--variant', choices=['baseline', 'reject', 'constant-point', 'damped'])
    sim.add_argument('--out', help='Trajectory CSV path')
    sim.add_argument('--report', help='Report path')
    sim.add_argument('--json', action='store_true', help='Emit the report as JSON')
    sim.add_argument('--jobs', type=int, default=JOBS, help='Scenarios run concurrently')

    spec = sub.add_parser('spectral', help='Inertia, Hurwitz and bound certificates')
    spec.add_argument('file', nargs='?', help='Scenario file')
    spec.add_argument('--example', type=int, help='Built-in example (1, 2 or 3)')
    spec.add_argument('--mu', type=float, help='Young-inequality weight for the dissipation check')
    spec.add_argument('--csv', help='Write the eigenvalue table to this CSV')

    ver = sub.add_parser('verify', help='Run the seeded property suite')
    ver.add_argument('--seed', type=int, help='Random seed (default VERIFY_SEED)')
    return parser


def _scenarios(args, files):
    import scenarios

    if args.example is not None and files:
        raise ValidationError('arguments', "give scenario files or --example, not both")
    if args.example is not None:
        return [scenarios.builtin_example(args.example, args.variant)]
    if not files:
        raise ValidationError('arguments', "no scenario given (file or --example N)")
    loaded = [scenarios.load_scenario(path) for path in files]
    if args.variant:
        loaded = [scenarios.apply_variant(s, args.variant) for s in loaded]
    return loaded


def cmd_simulate(args):
    import scenarios

    batch = _scenarios(args, args.files)
    if len(batch) > 1 and (args.out or args.report):
        raise ValidationError('arguments', "--out and --report need a single scenario")

    print(f"\nRunning {len(batch)} scenario(s)...")
    results = scenarios.run_batch(batch, jobs=args.jobs)
    for result in results:
        if args.json and not args.report:
            print(json.dumps(scenarios.report_payload(result), indent=2, default=str))
        else:
            print("\n" + format_report(result.report, title=result.scenario.name))
        for path in scenarios.write_outputs(result, csv=args.out, report=args.report, as_json=args.json):
            print(f"✓ Wrote {path}")
    return EXIT_OK


def _eigen_rows(label, report):
    table = report.to_dict()
    return [{'matrix': label, 'index': i, 'real': re, 'imag': im}
            for i, (re, im) in enumerate(zip(table['eigenvalues_real'], table['eigenvalues_imag']))]


def cmd_spectral(args):
    import scenarios
    import spectral
    from controller import Mode
    from graph_core import build_matrices

    files = [args.file] if args.file else []
    s = _scenarios(argparse.Namespace(example=args.example, variant=None), files)[0]
    cfg = s.controller
    gm = build_matrices(s.graph)
    n = gm.n

    kq = spectral.inertia_of_KQ(cfg.k, gm)
    err = spectral.classify_error_system(spectral.error_system_matrix(gm, cfg.k, cfg.m, cfg.q))
    predicted = spectral.polynomial_inertia_prediction(gm, cfg.k, cfg.m, cfg.q)
    a_tilde = spectral.check_hurwitz_Atilde(gm, cfg.m)
    certificate = spectral.lyapunov_certificate(gm, cfg.m)

    print("\n" + "=" * 60)
    print(f"SPECTRAL CERTIFICATES: {s.name} (n = {n}, mode {cfg.mode.value})")
    print("=" * 60)
    print(f"  K Q inertia (+, -, 0):          {kq.counts()}")
    heading = "Undamped error inertia (+, -, 0):" if cfg.mode is Mode.DAMPED else "Error matrix inertia (+, -, 0):"
    print(f"  {heading:<32}{err.counts()}  [{2 * n}x{2 * n}]")
    mark = "✓" if predicted == err.counts() else "✗"
    print(f"  {mark} Quadratic-pencil prediction:   {predicted}")
    mark = "✓" if a_tilde.is_hurwitz else "✗"
    print(f"  {mark} A~ Hurwitz, lambda_min(P) = {certificate:.6g}")

    bound = None
    if args.mu is not None or cfg.kappa > 0:
        if args.mu is not None:
            bound = spectral.check_assumption1(gm, cfg.k, cfg.m, cfg.kappa, args.mu)
        else:
            bound = spectral.search_mu(gm, cfg.k, cfg.m, cfg.kappa)
        mark = "✓" if bound.assumption_feasible else "✗"
        print(f"\n  {mark} Dissipation assumption at mu = {bound.mu:g}")
        print(f"    lambda_min(R):    {bound.r_min_eig:.6g}")
        print(f"    lambda_min(Rbar): {bound.rbar_min_eig:.6g}")
        if bound.assumption_feasible:
            bound = spectral.ultimate_bound(bound, *s.disturbance.bounds())
            print(f"    c:                {bound.c:.6g}")
            print(f"    Ultimate bound:   {bound.epsilon_bound:.6g}")
    print("=" * 60)

    if args.csv:
        rows = _eigen_rows('KQ', kq) + _eigen_rows('error', err)
        path = scenarios.resolve_output(args.csv)
        scenarios.atomic_write_text(path, pd.DataFrame(rows).to_csv(index=False, float_format='%.17g'))
        print(f"✓ Wrote {path}")
    return EXIT_OK


def cmd_verify(args):
    import verify

    seed = verify.VERIFY_SEED if args.seed is None else args.seed
    results = verify.run_suite(seed)
    verify.print_results(results, seed)
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {
    'simulate': cmd_simulate,
    'spectral': cmd_spectral,
    'verify': cmd_verify,
}


def main(argv=None):
    """Parse arguments, dispatch, and map errors to exit statuses."""
    logging.basicConfig(format='%(asctime)s %(levelname)s:%(message)s', level=LOG_LEVEL)

    print("=" * 70)
    print(" " * 23 + "CONSENSUS TOOLKIT")
    print("=" * 70)

    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.action](args)
    except InputError as e:
        print(f"✗ {e}")
        return EXIT_INPUT
    except NumericalError as e:
        print(f"✗ {e}")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
