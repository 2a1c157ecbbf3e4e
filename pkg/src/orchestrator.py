"""
Main Orchestrator
Coordinates scenario runs, CLF comparisons, the scenario matrix and result export
"""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd

from src.clc.baselines import ClcKind
from src.gfm.controller import GfmScheme
from src.plant.network import GridKind
from src.runner.config import ScenarioConfig, load_config
from src.runner.metrics import Metrics, compute_metrics
from src.runner.simulation import SimulationDivergedError, run_simulation
from src.runner.trace import SimTrace, emit_trace

logger = logging.getLogger(__name__)

__all__ = ['ScenarioOrchestrator', 'SimulationDivergedError']

MATRIX_GRIDS = (GridKind.HIGH_INERTIA, GridKind.LOW_INERTIA)


def _simulate(cfg: ScenarioConfig) -> Tuple[SimTrace, Metrics, Dict]:
    trace, stats = run_simulation(cfg)
    metrics = compute_metrics(trace, cfg.params.limits.i_max, cfg.t_fault_off)
    return trace, metrics, stats


def _simulate_matrix_entry(cfg: ScenarioConfig) -> Optional[Tuple[SimTrace, Metrics, Dict]]:
    try:
        return _simulate(cfg)
    except SimulationDivergedError as exc:
        logger.error(f"{cfg.name}: {exc}")
        return None


class ScenarioOrchestrator:
    """
    Runs closed-loop scenarios and keeps the results of a session
    """

    def __init__(self, config: Optional[Dict] = None):
        """
        Initialize the orchestrator

        Args:
            config: Application settings; sections given here replace the defaults
        """
        self.config = self._get_default_config()
        for section, values in (config or {}).items():
            if isinstance(values, dict) and isinstance(self.config.get(section), dict):
                self.config[section] = {**self.config[section], **values}
            else:
                self.config[section] = values

        self.results: List[Dict] = []
        self.run_statistics = {
            'scenarios_run': 0,
            'scenarios_diverged': 0,
            'filter_activations': 0,
            'fallback_count': 0,
            'wall_time_seconds': 0.0,
        }

    @staticmethod
    def _get_default_config() -> Dict:
        """Get default configuration"""
        return {
            'simulation': {
                'settle_time': 0.5,
                'divergence_limit': 100.0,
                'workers': 1
            },
            'verifier': {
                'samples': 100000,
                'seed': 0,
                'band': 1e-3,
                'sweep': 360
            },
            'output': {
                'directory': 'results'
            },
            'logging': {
                'level': 'INFO'
            }
        }

    def base_scenario(self, path: Optional[str] = None) -> ScenarioConfig:
        """
        Scenario defaults taken from the simulation settings, overridden by
        the scenario file when one is given
        """
        sim = self.config['simulation']
        base = ScenarioConfig(settle_time=sim.get('settle_time', 0.5),
                              divergence_limit=sim.get('divergence_limit', 100.0))
        return load_config(path, base) if path else base

    def _record(self,
 cfg: ScenarioConfig, metrics: Metrics, stats: Dict, elapsed: float) -> Dict:
        self.run_statistics['scenarios_run'] += 1
        self.run_statistics['filter_activations'] += stats.get('filter_interventions', 0)
        self.run_statistics['fallback_count'] += stats.get('filter_fallbacks', 0)
        self.run_statistics['wall_time_seconds'] += elapsed
        row = {'scenario': cfg.name, 'grid': cfg.grid.value, 'gfm': cfg.gfm.value,
               'clc': cfg.clc.value, **metrics.to_dict(),
               'active_steps': stats.get('active_steps', 0)}
        self.results.append(row)
        return row

    def run_scenario(self, cfg: ScenarioConfig) -> Tuple[SimTrace, Metrics]:
        """
        Run one scenario and compute its metrics

        Raises:
            SimulationDivergedError: If the simulation produces non-finite states
        """
        start = time.time()
        try:
            trace, metrics, stats = _simulate(cfg)
        except SimulationDivergedError:
            self.run_statistics['scenarios_diverged'] += 1
            raise
        self._record(cfg, metrics, stats, time.time() - start)
        logger.info(f"{cfg.name}: max overshoot {metrics.max_overshoot:.4f} p.u., "
                    f"max |dv| {metrics.max_dv:.4f} p.u., recovery "
                    f"{metrics.recovery_time if metrics.recovered else 'not reached'}")
        return trace, metrics

    def compare_clf(self, cfg: ScenarioConfig) -> Dict[str, Metrics]:
        """
        Run the safety filter with and without the Lyapunov row on the same
        scenario

        Raises:
            ValueError: If cfg does not select the safety filter
        """
        if cfg.clc is not ClcKind.SF:
            raise ValueError(f"compare_clf needs clc=sf, got {cfg.clc.value}")
        paired = {}
        for clc in (ClcKind.SF, ClcKind.SF_NOCLF):
            _, paired[clc.value] = self.run_scenario(cfg.with_clc(clc))
        with_clf, without = paired['sf'].recovery_time, paired['sf_noclf'].recovery_time
        logger.info(f"Recovery time with CLF: {with_clf}, without CLF: {without}")
        return paired

    @staticmethod
    def matrix_configs(base: ScenarioConfig,
                       grids: Tuple[GridKind, ...] = MATRIX_GRIDS) -> List[ScenarioConfig]:
        """Every grid x GFM scheme x current-limiting combination"""
        return [replace(base, grid=g, gfm=s, clc=c)
                for g, s, c in product(grids, GfmScheme, ClcKind)]

    def run_matrix(self, base: ScenarioConfig, out_dir: str,
                   workers: Optional[int] = None) -> pd.DataFrame:
        """
        Run the scenario matrix, writing each trace and a summary table

        Args:
            base: Scenario the matrix entries are derived from
            out_dir: Output directory
            workers: Parallel worker processes; 1 runs sequentially

        Returns:
            Summary with one row per scenario
        """
        workers = workers or self.config['simulation'].get('workers', 1)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        configs = self.matrix_configs(base)
        logger.info(f"Running {len(configs)} scenarios with {workers} worker(s)")

        start = time.time()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_simulate_matrix_entry, configs))
        else:
            outcomes = [_simulate_matrix_entry(cfg) for cfg in configs]
        elapsed = (time.time() - start) / len(configs)

        rows = []
        for cfg, outcome in zip(configs, outcomes):
            if outcome is None:
                self.run_statistics['scenarios_diverged'] += 1
                continue
            trace, metrics, stats = outcome
            emit_trace(trace, out / f"{cfg.name}.csv")
            rows.append(self._record(cfg, metrics, stats, elapsed))

        summary = pd.DataFrame(rows)
        summary.to_csv(out / 'matrix_summary.csv', index=False, float_format='%.9g')
        with open(out / 'matrix_summary.json', 'w') as f:
            json.dump(rows, f, indent=2)
        logger.info(f"Matrix summary written to {out}")
        return summary

    def get_statistics(self) -> Dict:
        """Get session statistics"""
        stats = dict(self.run_statistics)
        stats['wall_time_seconds'] = round(stats['wall_time_seconds'], 3)
        if self.results:
            df = pd.DataFrame(self.results)
            stats['max_overshoot'] = float(df['max_overshoot'].max())
            stats['unrecovered'] = int(df['recovery_time'].isna().sum())
            stats['unstable'] = int((~df['stable'].astype(bool)).sum())
        return stats

    def export_results(self, output_dir: Optional[str] = None) -> Path:
        """Export the per-scenario results and the session statistics"""
        output_dir = Path(output_dir or self.config['output']['directory'])
        output_dir.mkdir(parents=True, exist_ok=True)

        timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        summary_file = output_dir / f"summary_{timestamp}.json"
        with open(summary_file, 'w') as f:
            json.dump({'statistics': self.get_statistics(), 'results': self.results},
                      f, indent=2)

        logger.info(f"Results exported to {summary_file}")
        return summary_file

    def print_status(self) -> None:
        """Print session status"""
        stats = self.get_statistics()

        print("\n" + "=" * 60)
        print("SCENARIO SESSION STATUS")
        print("=" * 60)
        print(f"Scenarios Run: {stats['scenarios_run']}")
        print(f"Scenarios Diverged: {stats['scenarios_diverged']}")
        print(f"Filter Activations: {stats['filter_activations']}")
        print(f"Fallback Count: {stats['fallback_count']}")
        print(f"Wall Time: {stats['wall_time_seconds']}s")

        if self.results:
            print("\nResults:")
            for row in self.results:
                recovery = row['recovery_time']
                recovery = f"{recovery:.4f}s" if recovery is not None else "not recovered"
                print(f"  {row['scenario']:<28} overshoot {row['max_overshoot']:.4f}  "
                      f"max|dv| {row['max_dv']:.4f}  recovery {recovery}")

        print("=" * 60 + "\n")
