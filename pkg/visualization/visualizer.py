"""
Visualization Module
Plots scenario traces and matrix summaries
"""

from pathlib import Path
from typing import Optional

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


class TraceVisualizer:
    """Plots the CSV traces and matrix summaries written by the runner"""

    @staticmethod
    def _finish(fig, output_file: Optional[str]) -> None:
        plt.tight_layout()
        if output_file:
            Path(output_file).parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(output_file, dpi=300, bbox_inches='tight')
            print(f"Saved to {output_file}")
            plt.close(fig)
        else:
            plt.show()

    @staticmethod
    def _shade_fault(ax, t_fault_on: Optional[float], t_fault_off: Optional[float]) -> None:
        if t_fault_on is not None and t_fault_off is not None:
            ax.axvspan(t_fault_on, t_fault_off, color='grey', alpha=0.15, label='Fault')

    @classmethod
    def plot_trace(cls, trace_file: str, output_file: Optional[str] = None,
                   i_max: float = 1.3, t_fault_on: Optional[float] = None,
                   t_fault_off: Optional[float] = None) -> None:
        """
        Plot current, voltage modification, frequency, power and certificates

        Args:
            trace_file: Trace CSV
            output_file: Output file path (if None, just display)
            i_max: Current limit drawn as a reference line
            t_fault_on, t_fault_off: Fault interval to shade
        """
        df = pd.read_csv(trace_file)
        if df.empty:
            print("No trace data to plot")
            return
        t = df['t']

        fig, axes = plt.subplots(5, 1, figsize=(12, 14), sharex=True)
        fig.suptitle(Path(trace_file).stem, fontsize=16, fontweight='bold')

        axes[0].plot(t, df['i_phase_max'], label='worst phase |i|', color='#FF6B6B', linewidth=1.5)
        axes[0].plot(t, df['i_norm'], label='|i|', color='#4A90D9', linewidth=1.5)
        axes[0].axhline(y=i_max, color='red', linestyle='--', label=f'i_max ({i_max})', alpha=0.7)
        axes[0].set_ylabel('Current (p.u.)', fontsize=11)

        dv = np.hypot(df['dv_d'], df['dv_q'])
        axes[1].plot(t, dv, label='|v_c - v_cn,lim|', color='#4ECDC4', linewidth=1.5)
        active = df['active'].astype(bool)
        axes[1].fill_between(t, 0, dv.max() if dv.max() > 0 else 1.0, where=active,
                             color='orange', alpha=0.2, label='limiting active')
        axes[1].set_ylabel('Voltage (p.u.)', fontsize=11)

        axes[2].plot(t, df['omega_pll'], label='omega_PLL', color='#6C5B7B', linewidth=1.5)
        axes[2].set_ylabel('Frequency (p.u.)', fontsize=11)

        axes[3].plot(t, df['p'], label='p', color='#F8B195', linewidth=1.5)
        axes[3].plot(t, df['q'], label='q', color='#355C7D', linewidth=1.5)
        axes[3].set_ylabel('Power (p.u.)', fontsize=11)

        axes[4].plot(t, df['B'], label='B', color='#C06C84', linewidth=1.5)
        axes[4].plot(t, df['V'], label='V', color='#95E1D3', linewidth=1.5)
        axes[4].axhline(y=0.0, color='black', linewidth=0.8)
        axes[4].set_ylabel('Certificate', fontsize=11)
        axes[4].set_xlabel('Time (s)', fontsize=11)

        for ax in axes:
            cls._shade_fault(ax, t_fault_on, t_fault_off)
            ax.legend(loc='upper right')
            ax.grid(True, alpha=0.3)

        cls._finish(fig, output_file)

    @classmethod
    def plot_matrix_summary(cls, summary_file: str, output_file: Optional[str] = None) -> None:
        """
        Bar chart of the maximum current overshoot per scenario

        Args:
            summary_file: matrix_summary.csv
            output_file: Output file path (if None, just display)
        """
        df = pd.read_csv(summary_file)
        if df.empty:
            print("No summary data to plot")
            return

        fig, ax = plt.subplots(figsize=(14, 6))
        colors = ['#FF6B6B' if v > 0 else '#4ECDC4' for v in df['max_overshoot']]
        ax.bar(df['scenario'], df['max_overshoot'], color=colors)
        ax.set_ylabel('Max current overshoot (p.u.)', fontsize=11)
        ax.set_title('Current Overshoot per Scenario', fontsize=12, fontweight='bold')
        ax.grid(True, axis='y', alpha=0.3)
        plt.setp(ax.get_xticklabels(), rotation=60, ha='right')

        cls._finish(fig, output_file)
