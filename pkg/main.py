"""
Main entry point for the safety-filtered grid-forming converter simulations
"""

import sys
import os
import argparse
import json
import logging
from pathlib import Path

from dotenv import load_dotenv

# Add src to path
sys.path.insert(0, str(Path(__file__).parent))

from src.orchestrator import ScenarioOrchestrator
from src.runner.config import ScenarioConfig
from src.runner.trace import emit_trace
from src.sfilter.certificate import load_certificates
from src.verifier.checks import band_convergence, check_abc_bound, run_all, write_report
from visualization.visualizer import TraceVisualizer

DEFAULT_CONFIG_FILE = Path(__file__).parent / 'config' / 'default_config.json'


def setup_logging(level=logging.INFO, log_file='logs/simulation.log'):
    """Configure logging"""
    Path(log_file).parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(log_file),
            logging.StreamHandler()
        ]
    )


def load_app_config() -> dict:
    """Application settings from GFM_CONFIG or the packaged default file"""
    path = Path(os.getenv('GFM_CONFIG', DEFAULT_CONFIG_FILE))
    with open(path, 'r') as f:
        return json.load(f)


def scenario_from_args(orchestrator: ScenarioOrchestrator, args) -> ScenarioConfig:
    return orchestrator.base_scenario(args.config)


def build_parser(app_config: dict) -> argparse.ArgumentParser:
    """Command-line surface; verifier defaults come from the application settings"""
    parser = argparse.ArgumentParser(
        description='CBF/CLF safety filter for current limiting in grid-forming converters'
    )

    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    # Run command
    run_parser = subparsers.add_parser('run', help='Run one scenario')
    run_parser.add_argument('--config', type=str, help='Scenario file (key = value)')
    run_parser.add_argument('--out', type=str, help='Trace CSV path')

    # Matrix command
    matrix_parser = subparsers.add_parser('matrix', help='Run every grid/GFM/CLC combination')
    matrix_parser.add_argument('--config', type=str, help='Base scenario file')
    matrix_parser.add_argument('--out-dir', type=str, help='Output directory')
    matrix_parser.add_argument('--workers', type=int, help='Parallel worker processes')

    # Verify command
    verify_parser = subparsers.add_parser('verify', help='Check the certificates by sampling')
    verify_parser.add_argument('--samples', type=int, default=app_config['verifier']['samples'],
                               help='Samples per check')
    verify_parser.add_argument('--seed', type=int, default=app_config['verifier']['seed'],
                               help='Sampling seed')
    verify_parser.add_argument('--band', type=float, default=app_config['verifier']['band'],
                               help='Boundary band half-width')
    verify_parser.add_argument('--sweep', type=int,
                               default=app_config['verifier'].get('sweep', 360),
                               help='Ball-surface points in the joint check cross sweep')
    verify_parser.add_argument('--report', type=str, help='Line-delimited JSON report path')
    verify_parser.add_argument('--certificates', type=str, help='Certificate coefficient file')
    verify_parser.add_argument('--config', type=str, help='Scenario file with parameter overrides')
    verify_parser.add_argument('--paper-sign', '--printed-sign', dest='printed_sign',
                               action='store_true',
                               help='Use the printed sign of the allowable-set constraint')
    verify_parser.add_argument('--convergence', action='store_true',
                               help='Also run the boundary-band convergence study')

    # Compare command
    compare_parser = subparsers.add_parser('compare-clf',
                                           help='Safety filter with and without the CLF row')
    compare_parser.add_argument('--config', type=str, help='Scenario file (clc must be sf)')

    # Visualize command
    viz_parser = subparsers.add_parser('visualize', help='Plot traces and summaries')
    viz_parser.add_argument('--trace', type=str, help='Trace CSV')
    viz_parser.add_argument('--summary', type=str, help='matrix_summary.csv')
    viz_parser.add_argument('--config', type=str, help='Scenario file of the trace')
    viz_parser.add_argument('--output-dir', type=str, default='visualizations',
                            help='Output directory for visualizations')

    return parser


def main():
    """Main entry point"""
    load_dotenv()
    app_config = load_app_config()
    parser = build_parser(app_config)
    args = parser.parse_args()

    # Setup logging
    level = os.getenv('GFM_LOG_LEVEL', app_config['logging']['level']).upper()
    setup_logging(getattr(logging, level, logging.INFO),
                  app_config['logging'].get('file', 'logs/simulation.log'))
    logger = logging.getLogger(__name__)

    output_dir = os.getenv('GFM_OUTPUT_DIR', app_config['output']['directory'])
    orchestrator = ScenarioOrchestrator(app_config)

    try:
        if args.command == 'run':
            cfg = scenario_from_args(orchestrator, args)
            trace, metrics = orchestrator.run_scenario(cfg)
            out = args.out or f"{output_dir}/{cfg.name}.csv"
            emit_trace(trace, out)
            print(json.dumps(metrics.to_dict(), indent=2))

        elif args.command == 'matrix':
            base = scenario_from_args(orchestrator, args)
            summary = orchestrator.run_matrix(base, args.out_dir or f"{output_dir}/matrix",
                                              args.workers)
            print(summary.to_string(index=False))
            orchestrator.print_status()
            orchestrator.export_results(output_dir)

        elif args.command == 'verify':
            cfg = scenario_from_args(orchestrator, args)
            params = cfg.params
            certs = load_certificates(args.certificates)
            region = params.region(printed_sign=args.printed_sign)
            reports = run_all(certs, region, args.samples, args.band,
                              params.filter_params(), args.seed, sweep=args.sweep)
            for name, report in reports.items():
                print(f"{name:<12} {report.to_dict()}")
            for i_0 in (0.0, params.limits.i_0_max):
                worst = check_abc_bound(720, 720, params.limits.i_max - i_0, i_0)
                print(f"abc bound    i_0={i_0}: worst phase {worst:.6f} p.u.")
            if args.convergence:
                for row in band_convergence(certs, region, args.samples,
                                            params=params.filter_params(), seed=args.seed):
                    print(row)
            if args.report:
                write_report(reports.values(), args.report)
            if not all(r.passed for r in reports.values()):
                sys.exit(1)

        elif args.command == 'compare-clf':
            cfg = scenario_from_args(orchestrator, args)
            paired = orchestrator.compare_clf(cfg)
            print(json.dumps({k: m.to_dict() for k, m in paired.items()}, indent=2))

        elif args.command == 'visualize':
            logger.info("Creating visualizations...")
            visualizer = TraceVisualizer()
            cfg = scenario_from_args(orchestrator, args)

            if args.trace:
                output_file = f"{args.output_dir}/{Path(args.trace).stem}.png"
                visualizer.plot_trace(args.trace, output_file, cfg.params.limits.i_max,
                                      cfg.t_fault_on if cfg.fault else None, cfg.t_fault_off)

            if args.summary:
                output_file = f"{args.output_dir}/matrix_overshoot.png"
                visualizer.plot_matrix_summary(args.summary, output_file)

        else:
            parser.print_help()

    except (ValueError, OSError) as e:
        # ConfigError, CertificateFormatError, DegenerateCbfError and
        # SimulationDivergedError all derive from ValueError
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        sys.exit(1)


if __name__ == '__main__':
    main()
