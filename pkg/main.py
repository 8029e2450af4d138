import sys
import argparse
import logging
from pathlib import Path
from src.config import ROUTES, RunConfig, load_config, resolve_workers
from src.converter import ResultConverter
from src.exceptions import ConfigError, ThermalLinkError
from src.figures import figure, figure_names
from src.sweep import SweepSpec, run_evolution, run_steady, run_sweep, run_trajectory
from src.validate import run_oracle_suite, validate_csv
from src.writer import ResultWriter

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_PARTIAL = 3


def parse_args(argv=None):
    """
    Parse command line arguments.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', type=str, help='Path to a JSON run configuration')
    common.add_argument('--route', choices=ROUTES, help='Override the configured solver route')
    common.add_argument('--seed', type=int, help='Override the configured master seed')
    common.add_argument('--workers', type=int, help='Worker processes (THERMAL_LINK_WORKERS wins)')
    common.add_argument('--out', type=str, help='Output file or directory')
    common.add_argument('--format', choices=['csv', 'json'], default='csv', help='Output format (default: csv)')
    common.add_argument('--verbose', action='store_true', help='Log numerical diagnostics')

    parser = argparse.ArgumentParser(description='Thermal Link - entanglement from filtered thermal light')
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('steady', parents=[common], help='Single steady-state solve')
    commands.add_parser('sweep', parents=[common], help='Parameter sweep over the configured axes')
    commands.add_parser('evolve', parents=[common], help='Exact time evolution from |00>')
    commands.add_parser('trajectory', parents=[common], help='Stochastic ensemble time traces')

    figure_parser = commands.add_parser('figure', parents=[common], help='Data bundle of a published figure')
    figure_parser.add_argument('name', help=f"One of: {', '.join(figure_names())}")
    figure_parser.add_argument('--quick', action='store_true', help='Coarse grids and few trajectories')

    validate_parser = commands.add_parser('validate', parents=[common], help='Cross-route oracle suite')
    validate_parser.add_argument('--slow', action='store_true', help='Include stochastic and long checks')
    validate_parser.add_argument('--file', type=str, help='Validate a result CSV instead')

    convert_parser = commands.add_parser('convert', parents=[common], help='Convert result files')
    convert_parser.add_argument('--to', choices=['json', 'csv'], required=True, help='Target format')
    convert_parser.add_argument('--path', type=str, help='Directory or file to convert')

    return parser.parse_args(argv)


def load_run_config(args) -> RunConfig:
    """
    Config file (or defaults) with the CLI overrides applied.
    """
    config = load_config(args.config) if args.config else RunConfig()
    if args.route:
        config.route = args.route
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be >= 0")
        config.seed = args.seed
    return config


def handle_steady(args) -> int:
    config = load_run_config(args)
    print(f"\nSolving steady state on route '{config.route}'...")
    record = run_steady(config)
    for name, value in record.populations.items():
        print(f"  {name} = {value:.10g}")
    print(f"  concurrence = {record.concurrence:.10g}")
    if args.out:
        writer = ResultWriter(output_format=args.format)
        path = writer.save_records([record], args.out, manifest={
            'config': config.to_dict(), 'timestamp': record.timestamp,
        })
        print(f"✅ Saved record to {path}")
    return EXIT_OK


def handle_sweep(args) -> int:
    config = load_run_config(args)
    spec = SweepSpec.from_config(config, workers=resolve_workers(config.workers, args.workers))
    spec.output = args.out or config.output or 'sweep'
    writer = ResultWriter(output_format=args.format)
    print(f"\nSweeping {len(spec.grid())} points on route '{spec.route}' with {spec.workers} worker(s)...")
    result = run_sweep(spec, writer=writer)
    print(f"✅ Saved {len(result.records)} records to {result.path}")

    # Validate CSV output
    if args.format == 'csv':
        is_valid, errors = validate_csv(result.path)
        if is_valid:
            print(f"✅ {Path(result.path).name} is valid")
        else:
            print(f"❌ {Path(result.path).name} has errors:")
            for error in errors:
                print(f"  - {error}")

    print("\nFinal Status:")
    if result.failed:
        print(f"❌ {len(result.failed)} of {len(result.records)} points failed")
        return EXIT_PARTIAL
    print("✅ All points solved")
    return EXIT_OK


def handle_traces(args, traces_of) -> int:
    config = load_run_config(args)
    frame = traces_of(config)
    writer = ResultWriter(output_format=args.format)
    path = writer.save_data(frame, args.out or args.command)
    print(f"✅ Saved {len(frame)} time points to {path}")
    return EXIT_OK


def handle_figure(args) -> int:
    config = load_run_config(args)
    workers = resolve_workers(config.workers, args.workers)
    writer = ResultWriter(base_dir=args.out or 'output/figures', output_format=args.format)
    print(f"\nComputing figure {args.name}{' (quick)' if args.quick else ''}...")
    bundle = figure(args.name, writer=writer, quick=args.quick, workers=workers, seed=config.seed)
    for panel, path in bundle.paths.items():
        print(f"✅ {panel}: {path}")
    if bundle.failed:
        print(f"❌ {bundle.failed} grid points failed")
        return EXIT_PARTIAL
    return EXIT_OK


def handle_validate(args) -> int:
    if args.file:
        is_valid, errors = validate_csv(args.file)
        if is_valid:
            print(f"✅ {args.file} is a valid result file")
            return EXIT_OK
        print(f"❌ {args.file} validation failed:")
        for error in errors:
            print(f"  - {error}")
        return EXIT_SOLVER

    print(f"\nRunning {'full' if args.slow else 'quick'} oracle suite...")
    checks = run_oracle_suite(quick=not args.slow)
    for check in checks:
        mark = '✅' if check.passed else '❌'
        print(f"{mark} {check.name}: {check.value:.3e} (tolerance {check.tolerance:.1e}) {check.detail}")

    print("\nFinal Status:")
    if all(check.passed for check in checks):
        print("✅ All oracle checks passed")
        return EXIT_OK
    print("❌ Some oracle checks failed")
    return EXIT_SOLVER


def handle_conversion(target_format: str, path: str = None) -> int:
    """
    Handle file format conversion.

    Args:
        target_format: Target format ('csv' or 'json')
        path: Optional directory or file to convert
    """
    converter = ResultConverter()

    print(f"\nConverting files to {target_format.upper()}...")
    if path:
        print(f"Source: {path}")

    results = converter.convert_files(target_format, path)

    if results['success']:
        print("\nSuccessfully converted files:")
        for message in results['success']:
            print(f"✅ {message}")

    if results['errors']:
        print("\nErrors during conversion:")
        for message in results['errors']:
            print(f"❌ {message}")

    return EXIT_OK if not results['errors'] else EXIT_CONFIG


def dispatch(args) -> int:
    if args.command == 'steady':
        return handle_steady(args)
    if args.command == 'sweep':
        return handle_sweep(args)
    if args.command == 'evolve':
        return handle_traces(args, run_evolution)
    if args.command == 'trajectory':
        return handle_traces(args, lambda config: run_trajectory(
            config, resolve_workers(config.workers, args.workers)))
    if args.command == 'figure':
        return handle_figure(args)
    if args.command == 'validate':
        return handle_validate(args)
    return handle_conversion(args.to, args.path)


def main(argv=None):
    """
    Main entry point: run one subcommand and exit with its status code.
    """
    args = parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s')
    try:
        status = dispatch(args)
    except ConfigError as e:
        print(f"❌ Configuration error: {e}")
        status = EXIT_CONFIG
    except (ThermalLinkError, KeyError) as e:
        print(f"❌ {type(e).__name__}: {e}")
        status = EXIT_SOLVER
    sys.exit(status)


if __name__ == "__main__":
    main()
