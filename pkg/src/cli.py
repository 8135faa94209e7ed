"""
Command-line interface

Exit codes: 0 success, 1 usage or input error, 2 computation error,
3 the linearity test rejects at the chosen level.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from src.config import DEFAULT_ALPHA, EMPIRICAL_DEFAULTS, LOG_LEVEL, MASTER_SEED, run_log_enabled
from src.errors import ConfigError, DimensionError, SarTestError, SchemaError
from src.models.estimation import BasisSpec
from src.models.panel import ModelForm, PanelSchema
from src.models.simulation import DgpConfig, ErrorFamily, HeteroScheme, Link
from src.models.weight_matrix import DesignTag
from src.utils.validators import InputValidator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_COMPUTATION = 2
EXIT_REJECT = 3

USAGE_ERRORS = (ConfigError, SchemaError, DimensionError, FileNotFoundError)


class CliUsageError(Exception):
    pass


class SarArgumentParser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _alpha(value: str) -> float:
    ok, message = InputValidator.validate_alpha(value)
    if not ok:
        raise argparse.ArgumentTypeError(message)
    return float(value)


def _positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# ---------------------------------------------------------------- commands

def cmd_test(args) -> int:
    from src.estimation.lmtest import run_test_with_fit
    from src.simulation.dgp import read_numeric_csv
    from src.spatial.weights_io import read_weights

    W = read_weights(args.w)
    y = InputValidator.as_vector(read_numeric_csv(args.y), "y", W.n)
    X = InputValidator.as_matrix(read_numeric_csv(args.x), "X", W.n)
    Z = read_numeric_csv(args.z) if args.z else None
    spec = None
    if args.p is not None or args.standardize:
        from src.estimation.critical_values import choose_p
        spec = BasisSpec(p=args.p or choose_p(W.n), standardize_argument=args.standardize)

    fit, result = run_test_with_fit(y, X, W, Z, spec, args.alpha,
                                    verify_partitioned=args.verify_partitioned)
    if args.out:
        _write_text(Path(args.out), result.to_json() + "\n")
    print(result.summary())
    print(f"lambda_hat = {fit.lambda_hat:.4f} (robust t {fit.t_stats[0]:.3f})")
    rejects = result.reject_chi2 if args.rule == 'chi2' else result.reject_normal
    return EXIT_REJECT if rejects else EXIT_OK


def _simulate(args, kind: str) -> int:
    from src.simulation.config_loader import load_mc_config
    from src.simulation.mc import run_power_experiment, run_size_experiment
    from src.simulation.tables import emit_table

    config = load_mc_config(args.config, expected_kind=kind)
    if args.workers is not None:
        config.parallel_workers = args.workers
    if args.seed is not None:
        config.master_seed = args.seed
    if args.reps is not None:
        config.reps = args.reps

    run_logger = None
    if args.run_log or run_log_enabled():
        from src.logging import initialize_run_logger
        run_logger = initialize_run_logger(path=args.run_log)
        run_logger.start_run(f"simulate-{kind}", {
            'config': str(args.config),
            'reps': config.reps,
            'alpha': config.alpha,
            'master_seed': config.master_seed,
            'cells': [cell.to_dict() for cell in config.grid],
        })

    experiment = run_size_experiment if kind == 'size' else run_power_experiment
    status = 'failed'
    try:
        report = experiment(config, run_logger)
        status = 'completed'
    finally:
        if run_logger is not None:
            run_logger.end_run(status)
            run_logger.close()

    out = Path(args.out)
    _write_text(out / 'report.json', emit_table(report, 'json'))
    _write_text(out / 'table.csv', emit_table(report, 'csv'))
    markdown = emit_table(report, 'markdown')
    _write_text(out / 'table.md', markdown)
    print(markdown, end="")
    return EXIT_OK


def cmd_simulate_size(args) -> int:
    return _simulate(args, 'size')


def cmd_simulate_power(args) -> int:
    return _simulate(args, 'power')


def cmd_empirical(args) -> int:
    from src.empirical.application import run_application
    from src.empirical.fixture import synthetic_panel
    from src.empirical.panel import load_panel
    from src.models.panel import ApplicationReport
    from src.spatial.weights_io import read_weights

    if args.synthetic is not None:
        panel, W = synthetic_panel(seed=args.synthetic)
    else:
        if not args.panel or not args.w:
            raise CliUsageError("empirical needs --panel and --w, or --synthetic SEED")
        schema = PanelSchema.from_json(args.schema) if args.schema else None
        panel = load_panel(args.panel, schema)
        W = read_weights(args.w)

    forms = list(ModelForm) if args.mode == 'both' else [ModelForm(args.mode)]
    report = ApplicationReport.combine([
        run_application(panel, W, form, args.p, args.alpha,
                        year1=args.year1, year2=args.year2,
                        standardize=not args.raw_basis,
                        policy_lags=not args.no_policy_lags,
                        basis_instruments=not args.no_basis_instruments)
        for form in forms
    ])
    markdown = report.to_markdown()
    if args.out:
        out = Path(args.out)
        _write_text(out / 'report.md', markdown)
        _write_text(out / 'report.csv', report.to_csv())
        _write_text(out / 'report.json', json.dumps(report.to_dict(), indent=2) + "\n")
    print(markdown, end="")
    return EXIT_OK


def cmd_gen_weights(args) -> int:
    from src.simulation.rng import StreamTag, substream
    from src.spatial.weights import generate_weights, row_normalize
    from src.spatial.weights_io import write_weights

    design = DesignTag(args.design)
    lattice = tuple(args.lattice) if args.lattice else None
    if design is DesignTag.LATTICE and lattice is None:
        raise CliUsageError("the lattice design needs --lattice M1 M2")
    if design is not DesignTag.LATTICE and args.n is None:
        raise CliUsageError(f"design {design.value} needs --n")
    rng = substream(args.seed, StreamTag.FIXTURE)
    W = generate_weights(design, args.n, lattice, rng)
    if args.normalize == 'row':
        W = row_normalize(W)
    write_weights(W, args.out)
    print(f"wrote {design.value} weights n={W.n} nnz={W.nnz} to {args.out}")
    return EXIT_OK


def cmd_gen_fixture(args) -> int:
    from src.empirical.fixture import write_fixture
    from src.simulation.dgp import simulate_dataset, write_dataset
    from src.simulation.rng import StreamTag, substream
    from src.spatial.weights import generate_weights

    if args.kind == 'panel':
        write_fixture(args.out, n=args.n or 411, seed=args.seed)
        print(f"wrote synthetic municipal panel to {args.out}")
        return EXIT_OK

    link = {'null': Link.NULL_LINEAR, 'arctan': Link.ARCTAN, 'log': Link.LOG_QUADRATIC}[args.kind]
    design = DesignTag(args.design)
    if link.is_nonlinear:
        design = DesignTag.LATTICE
    lattice = tuple(args.lattice) if args.lattice else None
    if design is DesignTag.LATTICE and lattice is None:
        raise CliUsageError("lattice data needs --lattice M1 M2")
    if design is not DesignTag.LATTICE and args.n is None:
        raise CliUsageError(f"design {design.value} needs --n")

    config = DgpConfig(
        error_family=ErrorFamily(args.family),
        hetero_scheme=HeteroScheme(args.scheme),
        link=link,
        n=None if lattice else args.n,
        lattice=lattice,
        seed=args.seed,
    )
    rng = substream(args.seed, StreamTag.FIXTURE)
    W = generate_weights(design, config.n, lattice, rng)
    dataset = simulate_dataset(config, W, rng,
                               allow_isolated=design is DesignTag.LATTICE)
    write_dataset(dataset, args.out)
    print(f"wrote {args.kind} dataset n={dataset.n} ({design.value}) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> SarArgumentParser:
    parser = SarArgumentParser(
        prog='sar_test',
        description="Heteroskedasticity-robust test of linearity in spatial autoregressions",
    )
    parser.add_argument('--log-level', default=LOG_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    commands = parser.add_subparsers(dest='command', parser_class=SarArgumentParser)
    commands.required = True

    test = commands.add_parser('test', help="test linearity on user data")
    test.add_argument('--y', required=True, help="outcome CSV (one column)")
    test.add_argument('--x', required=True, help="regressor CSV, intercept included")
    test.add_argument('--w', required=True, help="weight matrix (triplets, or dense .csv)")
    test.add_argument('--z', help="instrument CSV; built from X when omitted")
    test.add_argument('--p', type=_positive_int, help="sieve dimension (default n^(1/3))")
    test.add_argument('--alpha', type=_alpha, default=DEFAULT_ALPHA)
    test.add_argument('--rule', choices=['chi2', 'normal'], default='chi2',
                      help="critical value that decides exit code 3")
    test.add_argument('--standardize', action='store_true',
                      help="standardize the sieve argument before evaluating the basis")
    test.add_argument('--verify-partitioned', action='store_true')
    test.add_argument('--out', help="JSON result path")
    test.set_defaults(handler=cmd_test)

    for name, handler in (('simulate-size', cmd_simulate_size),
                          ('simulate-power', cmd_simulate_power)):
        sim = commands.add_parser(name, help=f"Monte Carlo {name.split('-')[1]} experiment")
        sim.add_argument('--config', required=True, help="JSON experiment config")
        sim.add_argument('--out', required=True, help="output directory")
        sim.add_argument('--workers', type=_positive_int)
        sim.add_argument('--seed', type=int, help="master seed (overrides the config)")
        sim.add_argument('--reps', type=_positive_int, help="replications (overrides the config)")
        sim.add_argument('--run-log', help="JSON-lines run log path")
        sim.set_defaults(handler=handler)

    emp = commands.add_parser('empirical', help="municipal tax application")
    emp.add_argument('--panel', help="panel CSV")
    emp.add_argument('--w', help="row-normalized contiguity matrix, rows in id order")
    emp.add_argument('--schema', help="JSON column mapping")
    emp.add_argument('--synthetic', type=int, metavar='SEED',
                     help="use the synthetic panel generated with this seed")
    emp.add_argument('--mode', choices=['differenced', 'level', 'both'], default='both')
    emp.add_argument('--p', type=_positive_int, nargs='+',
                     default=list(EMPIRICAL_DEFAULTS['p_list']))
    emp.add_argument('--alpha', type=_alpha, default=DEFAULT_ALPHA)
    emp.add_argument('--year1', type=int, default=EMPIRICAL_DEFAULTS['year1'])
    emp.add_argument('--year2', type=int, default=EMPIRICAL_DEFAULTS['year2'])
    emp.add_argument('--raw-basis', action='store_true',
                     help="evaluate Hermite terms on unstandardized arguments")
    emp.add_argument('--no-policy-lags', action='store_true')
    emp.add_argument('--no-basis-instruments', action='store_true')
    emp.add_argument('--out', help="output directory")
    emp.set_defaults(handler=cmd_empirical)

    gw = commands.add_parser('gen-weights', help="write a simulation weight matrix")
    gw.add_argument('--design', required=True,
                    choices=[d.value for d in DesignTag.simulation_designs()])
    gw.add_argument('--n', type=_positive_int)
    gw.add_argument('--lattice', type=_positive_int, nargs=2, metavar=('M1', 'M2'))
    gw.add_argument('--seed', type=int, default=MASTER_SEED)
    gw.add_argument('--normalize', choices=['design', 'row'], default='design')
    gw.add_argument('--out', required=True, help="triplet file, or .csv for dense")
    gw.set_defaults(handler=cmd_gen_weights)

    gf = commands.add_parser('gen-fixture', help="write a generated dataset bundle")
    gf.add_argument('--kind', choices=['null', 'arctan', 'log', 'panel'], required=True)
    gf.add_argument('--design', default=DesignTag.CIRCULANT.value,
                    choices=[d.value for d in DesignTag.simulation_designs()])
    gf.add_argument('--n', type=_positive_int)
    gf.add_argument('--lattice', type=_positive_int, nargs=2, metavar=('M1', 'M2'))
    gf.add_argument('--scheme', choices=[s.value for s in HeteroScheme],
                    default=HeteroScheme.A_DEGREE.value)
    gf.add_argument('--family', choices=[f.value for f in ErrorFamily],
                    default=ErrorFamily.GAUSSIAN.value)
    gf.add_argument('--seed', type=int, default=MASTER_SEED)
    gf.add_argument('--out', required=True, help="output directory")
    gf.set_defaults(handler=cmd_gen_fixture)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level, logging.INFO),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except CliUsageError as e:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except USAGE_ERRORS as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (SarTestError, ArithmeticError, np.linalg.LinAlgError) as e:
        print(f"{parser.prog}: computation failed: {e}", file=sys.stderr)
        return EXIT_COMPUTATION
    except ValueError as e:
        print(f"{parser.prog}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
