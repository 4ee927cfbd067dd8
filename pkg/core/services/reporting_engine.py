"""
Reporting Engine
CSV tables, deterministic SVG plots and the report.md summary of a run
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from core.models import ConvergenceSeries, DriftFit, FrontTrace, RunManifest, Trajectory, WaveProfile  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.12g'
SVG_SALT = 'lv-lab'

matplotlib.rcParams['svg.hashsalt'] = SVG_SALT


# =============================================================================
# INTERFACES (SOLID: Interface Segregation Principle)
# =============================================================================

class ITableExporter(ABC):
    """Interface for tabular export"""

    @abstractmethod
    def export_csv(self, rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: Path) -> Path:
        pass


class IPlotter(ABC):
    """Interface for file-based plots"""

    @abstractmethod
    def save(self, fig, path: Path) -> Path:
        pass


# =============================================================================
# CONCRETE IMPLEMENTATIONS (SOLID: Single Responsibility Principle)
# =============================================================================

class CsvExporter(ITableExporter):
    """pandas CSV with a fixed column order and float format"""

    def export_csv(self, rows: Sequence[Mapping[str, Any]], columns: Sequence[str], path: Path) -> Path:
        frame = pd.DataFrame(list(rows), columns=list(columns))
        frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
        return path

    def trajectory_rows(self, trajectory: Trajectory) -> List[Dict[str, float]]:
        return [dict(obs) for obs in trajectory.observables]

    def profile_rows(self, w: WaveProfile) -> List[Dict[str, float]]:
        return [{'xi': float(x), 'U': float(u), 'V': float(v)} for x, u, v in zip(w.xi_grid, w.U, w.V)]

    def trace_rows(self, traces: Sequence[FrontTrace]) -> List[Dict[str, float]]:
        """One row per snapshot time with a <species>_front column per trace"""
        rows = [{'t': float(t)} for t in traces[0].times]
        for trace in traces:
            column = f'{trace.species.value}_front'
            for row, position in zip(rows, trace.positions):
                row[column] = float(position)
        return rows

    def convergence_rows(self, series: ConvergenceSeries) -> List[Dict[str, float]]:
        return [{'t': float(t), 'sup_distance': float(dist), 'shift': float(shift)}
                for t, dist, shift in zip(series.times, series.sup_distance, series.shifts)]


class SvgPlotter(IPlotter):
    """Agg-backed SVG output without timestamps"""

    def save(self, fig, path: Path) -> Path:
        fig.savefig(path, format='svg', metadata={'Date': None})
        plt.close(fig)
        return path

    def profile(self, w: WaveProfile, path: Path) -> Path:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.plot(w.xi_grid, w.U, label='U')
        ax.plot(w.xi_grid, w.V, label='V')
        ax.set_xlabel('xi')
        ax.set_title(f'traveling wave, c = {w.c:.6f}')
        ax.legend()
        return self.save(fig, path)

    def snapshots(self, trajectory: Trajectory, path: Path, count: int = 5) -> Path:
        fig, (ax_u, ax_v) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
        x = trajectory.grid.x
        picks = np.unique(np.linspace(0, len(trajectory.states) - 1, count).astype(int))
        for k in picks:
            s = trajectory.states[k]
            ax_u.plot(x, s.u, label=f't = {s.t:g}')
            ax_v.plot(x, s.v)
        ax_u.set_ylabel('u')
        ax_v.set_ylabel('v')
        ax_v.set_xlabel('x')
        ax_u.legend(fontsize='small')
        return self.save(fig, path)

    def fronts(self, traces: Sequence[FrontTrace], path: Path, reference_speeds: Optional[Dict[str, float]] = None) -> Path:
        fig, ax = plt.subplots(figsize=(7, 4))
        for trace in traces:
            ax.plot(trace.times, trace.positions, label=f'{trace.species.value} = {trace.level:g}')
        for name, speed in sorted((reference_speeds or {}).items()):
            if speed is not None and math.isfinite(speed) and len(traces):
                t = traces[0].times
                ax.plot(t, speed * t, linestyle='--', linewidth=0.8, label=f'{name} = {speed:.4f}')
        ax.set_xlabel('t')
        ax.set_ylabel('front position')
        ax.legend(fontsize='small')
        return self.save(fig, path)

    def convergence(self, times: np.ndarray, distance: np.ndarray, path: Path) -> Path:
        fig, ax = plt.subplots(figsize=(7, 4))
        ax.semilogy(times, np.maximum(distance, 1e-16))
        ax.set_xlabel('t')
        ax.set_ylabel('sup distance to shifted wave')
        return self.save(fig, path)

    def drift(self, trace: FrontTrace, fit: DriftFit, path: Path, reference_kappa: Optional[float] = None) -> Path:
        """c t - x(t) against ln t with the fitted kappa ln t - C and its residual"""
        t, x = np.asarray(trace.times), np.asarray(trace.positions)
        keep = (t >= fit.window[0]) & (t <= fit.window[1]) & np.isfinite(x)
        log_t, lag = np.log(t[keep]), fit.c_fixed * t[keep] - x[keep]
        fitted = fit.kappa * log_t - fit.C
        fig, (ax_lag, ax_res) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        ax_lag.plot(log_t, lag, label=f'c t - x(t), c = {fit.c_fixed:.4f}')
        ax_lag.plot(log_t, fitted, linestyle='--', label=f'kappa = {fit.kappa:.4f}')
        if reference_kappa is not None:
            ax_lag.plot(log_t, reference_kappa * (log_t - log_t[0]) + fitted[0], linestyle=':',
                        label=f'predicted slope {reference_kappa:.4f}')
        ax_lag.set_ylabel('lag')
        ax_lag.legend(fontsize='small')
        ax_res.plot(log_t, lag - fitted)
        ax_res.set_xlabel('ln t')
        ax_res.set_ylabel('fit residual')
        return self.save(fig, path)

    def regime_map(self, frame: pd.DataFrame, path: Path) -> Path:
        """Heatmap of c* - 2 sqrt(1 - a) over the (a, b) grid, first d and r values"""
        fig, ax = plt.subplots(figsize=(6, 5))
        if 'gap' in frame and frame['gap'].notna().any():
            first = frame[(frame['d'] == frame['d'].iloc[0]) & (frame['r'] == frame['r'].iloc[0])]
            table = first.pivot_table(index='b', columns='a', values='gap', aggfunc='first')
            image = ax.imshow(table.values, origin='lower', aspect='auto', cmap='viridis')
            ax.set_xticks(range(len(table.columns)), [f'{v:g}' for v in table.columns])
            ax.set_yticks(range(len(table.index)), [f'{v:g}' for v in table.index])
            fig.colorbar(image, ax=ax, label='c* - 2 sqrt(1 - a)')
        else:
            ax.text(0.5, 0.5, 'no minimal speeds computed', ha='center', va='center')
        ax.set_xlabel('a')
        ax.set_ylabel('b')
        return self.save(fig, path)


class ReportRenderer:
    """Markdown summary: manifest, verdicts, key numbers and the file index"""

    def render(self, manifest: RunManifest, results: Optional[Dict[str, Any]] = None) -> str:
        results = results or {}
        lines = [
            f'# Run {manifest.run_id}',
            '',
            f'- command: `{manifest.command}`',
            f'- config_hash: `{manifest.config_hash}`',
            f'- created: {manifest.created_at}',
            f'- finished: {manifest.finished_at or "-"}',
        ]
        if manifest.params:
            lines.append('- params: ' + ', '.join(f'{k}={v:g}' for k, v in manifest.params.items()))
        lines += ['', '## Verdicts', '']
        if manifest.verdicts:
            lines += [f'- {name}: **{verdict}**' for name, verdict in sorted(manifest.verdicts.items())]
        else:
            lines.append('- none recorded')

        firing = results.get('firing_conditions')
        if firing is not None:
            lines += ['', '## Determinacy', '',
                      f"- verdict: {results.get('verdict')}",
                      f"- firing conditions: {', '.join(firing) if firing else 'none'}"]

        failures = results.get('failures') or []
        if failures:
            lines += ['', '## Failed checks', '']
            for failure in failures:
                where = failure.get('worst_location')
                suffix = f' (worst violation at t, x = {where})' if where else ''
                lines.append(f"- {failure['name']}: {failure.get('error')}{suffix}")

        key_numbers = results.get('key_numbers') or {}
        if key_numbers:
            lines += ['', '## Key numbers', '']
            lines += [f'- {name}: {_fmt(value)}' for name, value in sorted(key_numbers.items())]

        if manifest.timings:
            lines += ['', '## Timings (s)', '']
            lines += [f'- {name}: {seconds:.3f}' for name, seconds in manifest.timings.items()]

        lines += ['', '## Files', '']
        lines += [f'- {name}' for name in sorted(manifest.files)]
        plots = [name for name in sorted(manifest.files) if name.endswith('.svg')]
        if plots:
            lines += ['', '## Plots', '']
            lines += [f'- ![{Path(name).stem}]({name})' for name in plots]
        return '\n'.join(lines) + '\n'


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f'{value:.6g}'
    return str(value)


# =============================================================================
# SERVICE COMPOSER (SOLID: Open/Closed Principle)
# =============================================================================

class ReportingEngine:
    """Composes table export, plotting and report rendering"""

    def __init__(self, exporter: CsvExporter, plotter: SvgPlotter, renderer: ReportRenderer):
        self.exporter = exporter
        self.plotter = plotter
        self.renderer = renderer


# =============================================================================
# FACTORY PATTERN (SOLID: Dependency Inversion Principle)
# =============================================================================

class ReportingEngineFactory:
    """Factory for reporting engine"""

    @staticmethod
    def create_reporting_engine() -> ReportingEngine:
        return ReportingEngine(CsvExporter(), SvgPlotter(), ReportRenderer())
