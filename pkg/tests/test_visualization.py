"""
Tests for the trace and matrix plots
"""

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402

from src.runner.trace import SimTrace, TraceRecord, emit_trace  # noqa: E402
from visualization.visualizer import TraceVisualizer  # noqa: E402


def make_trace():
    trace = SimTrace(dt=0.1)
    for k in range(5):
        trace.append(TraceRecord(
            t=0.1 * k, i_d=1.0, i_q=0.0, i_norm=1.0, i_phase_max=1.0 + 0.05 * k,
            v_cd=1.0, v_cq=0.0, dv_d=0.01 * k, dv_q=0.0, omega_pll=1.0, p=0.5, q=0.0,
            B=-0.3, V=-0.1, active=k in (2, 3),
        ))
    return trace


def test_plot_trace(tmp_path):
    path = emit_trace(make_trace(), tmp_path / "trace.csv")
    out = tmp_path / "plots" / "trace.png"
    TraceVisualizer.plot_trace(str(path), str(out), i_max=1.3, t_fault_on=0.1, t_fault_off=0.3)
    assert out.is_file() and out.stat().st_size > 0


def test_plot_matrix_summary(tmp_path):
    summary = tmp_path / "matrix_summary.csv"
    pd.DataFrame({"scenario": ["high_inertia_vsm_none", "high_inertia_vsm_sf"],
                  "max_overshoot": [0.4, 0.0]}).to_csv(summary, index=False)
    out = tmp_path / "overshoot.png"
    TraceVisualizer.plot_matrix_summary(str(summary), str(out))
    assert out.is_file()


def test_empty_trace_is_skipped(tmp_path, capsys):
    path = emit_trace(SimTrace(dt=0.1), tmp_path / "empty.csv")
    out = tmp_path / "empty.png"
    TraceVisualizer.plot_trace(str(path), str(out))
    assert not out.exists()
    assert "No trace data" in capsys.readouterr().out
