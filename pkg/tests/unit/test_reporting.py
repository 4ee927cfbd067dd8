"""
Tests for run directories, CSV and SVG export and report rendering
"""

import json

import numpy as np

from core.exceptions import ConfigError, UnknownRun
from core.models import ConvergenceSeries, FrontTrace, Species
from core.services.front_analysis import FrontAnalysisFactory
from core.services.reporting_engine import ReportingEngineFactory
from core.utils.monitoring import StageTimer
from core.utils.repositories import FilesystemRunRepository
from tests.fixtures.base import LabTestCase
from tests.fixtures.factories import RunManifestFactory, tanh_profile


class RunRepositoryTestCase(LabTestCase):
    """Run directories and their manifests"""

    def setUp(self):
        """Set up a repository under the temporary runs root"""
        super().setUp()
        self.repository = FilesystemRunRepository(self.runs_root)
        self.manifest = self.repository.create('wave', 'abc123', self.linear.to_dict(), {'numpy': np.__version__})

    def test_create_writes_manifest(self):
        """Test the layout of a fresh run directory"""
        run_dir = self.runs_root / self.manifest.run_id
        self.assertTrue((run_dir / 'manifest.json').is_file())
        self.assertTrue((run_dir / 'data').is_dir())
        self.assertTrue((run_dir / 'plots').is_dir())
        self.assertTrue(self.repository.exists(self.manifest.run_id))

    def test_default_root_comes_from_settings(self):
        """Test RUNS_ROOT as the default root"""
        self.assertEqual(FilesystemRunRepository().root, self.runs_root)

    def test_registered_files_are_listed(self):
        """Test that every write lands in the manifest file list"""
        self.repository.write_json(self.manifest, 'data/numbers.json', {'c_star': 1.5})
        self.repository.write_text(self.manifest, 'notes.txt', 'hello')
        self.repository.save_manifest(self.manifest)

        reloaded = self.repository.get_manifest(self.manifest.run_id)
        self.assertEqual(reloaded.files, ['data/numbers.json', 'notes.txt'])
        self.assertEqual(reloaded.params, self.linear.to_dict())
        data = json.loads((self.runs_root / self.manifest.run_id / 'data/numbers.json').read_text())
        self.assertEqual(data, {'c_star': 1.5})

    def test_refuses_paths_outside_the_run(self):
        """Test that no file escapes its run directory"""
        with self.assertRaises(ConfigError):
            self.repository.register(self.manifest, '../elsewhere.txt')
        with self.assertRaises(ConfigError):
            self.repository.path_for(self.manifest.run_id, '.')

    def test_unknown_run(self):
        """Test UnknownRun for a run id without a directory"""
        with self.assertRaises(UnknownRun):
            self.repository.get_manifest('no-such-run')


class ExportTestCase(LabTestCase):
    """CSV tables and SVG plots"""

    def setUp(self):
        """Set up the reporting engine"""
        super().setUp()
        self.engine = ReportingEngineFactory.create_reporting_engine()

    def test_csv_column_order_and_float_format(self):
        """Test fixed columns and twelve significant digits"""
        path = self.runs_root / 'table.csv'
        self.engine.exporter.export_csv([{'b': 2.0, 'a': 1.0 / 3.0}], ['a', 'b'], path)
        self.assertEqual(path.read_text(), 'a,b\n0.333333333333,2\n')

    def test_profile_rows(self):
        """Test one row per wave grid point"""
        w = tanh_profile(L=10.0, n=101)
        rows = self.engine.exporter.profile_rows(w)
        self.assertEqual(len(rows), 101)
        self.assertEqual(set(rows[0]), {'xi', 'U', 'V'})

    def test_svg_is_reproducible(self):
        """Test that identical plots give identical bytes"""
        w = tanh_profile(L=10.0, n=101)
        first, second = self.runs_root / 'one.svg', self.runs_root / 'two.svg'
        self.engine.plotter.profile(w, first)
        self.engine.plotter.profile(w, second)
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertNotIn(b'<dc:date>', first.read_bytes())

    def test_trace_rows_merge_species(self):
        """Test one row per time with a front column per species"""
        times = np.arange(0.0, 3.0, 1.0)
        traces = [FrontTrace(Species.U, 0.5, times, 1.5 * times),
                  FrontTrace(Species.V, 0.5, times, np.array([0.0, np.nan, 4.0]))]
        rows = self.engine.exporter.trace_rows(traces)
        self.assertEqual(rows[1]['t'], 1.0)
        self.assertEqual(rows[1]['u_front'], 1.5)
        self.assertTrue(np.isnan(rows[1]['v_front']))
        path = self.runs_root / 'fronts.csv'
        self.engine.exporter.export_csv(rows, ['t', 'u_front', 'v_front'], path)
        self.assertEqual(path.read_text().splitlines()[2], '1,1.5,')

    def test_convergence_rows(self):
        """Test the sup-distance table"""
        series = ConvergenceSeries(times=np.array([0.0, 1.0]), sup_distance=np.array([0.2, 0.1]),
                                   shifts=np.array([-3.0, -3.5]))
        rows = self.engine.exporter.convergence_rows(series)
        self.assertEqual(rows[1], {'t': 1.0, 'sup_distance': 0.1, 'shift': -3.5})

    def test_drift_plot(self):
        """Test the kappa diagnostics plot for an exact drift trace"""
        times = np.arange(1.0, 201.0, 1.0)
        trace = FrontTrace(Species.U, 0.5, times, 2.0 * times - 1.5 * np.log(times))
        fit = FrontAnalysisFactory.create_front_analysis_service().fit_log_drift(trace, 2.0, (50.0, 200.0))
        path = self.engine.plotter.drift(trace, fit, self.runs_root / 'drift.svg', reference_kappa=1.5)
        self.assertTrue(path.read_bytes().startswith(b'<?xml'))


class ReportRendererTestCase(LabTestCase):
    """Markdown summaries"""

    def setUp(self):
        """Set up a manifest with verdicts, timings and files"""
        super().setUp()
        repository = FilesystemRunRepository(self.runs_root)
        self.manifest = repository.create('verify', 'f00d', self.linear.to_dict())
        self.manifest.verdicts.update({'sandwich': 'FAIL', 'residuals_sub': 'PASS'})
        self.manifest.timings = {'simulate': 1.25}
        self.manifest.files += ['data/results.json', 'plots/profile.svg']
        self.renderer = ReportingEngineFactory.create_reporting_engine().renderer

    def test_sections(self):
        """Test verdicts, failures, key numbers, timings, files and plots"""
        results = {
            'failures': [{'name': 'sandwich', 'error': 'u left the band', 'worst_location': [12.0, 30.5]}],
            'key_numbers': {'c_star': 1.4142135623},
        }
        text = self.renderer.render(self.manifest, results)
        self.assertIn(f'# Run {self.manifest.run_id}', text)
        self.assertIn('- sandwich: **FAIL**', text)
        self.assertIn('- sandwich: u left the band (worst violation at t, x = [12.0, 30.5])', text)
        self.assertIn('- c_star: 1.41421', text)
        self.assertIn('- simulate: 1.250', text)
        self.assertIn('- ![profile](plots/profile.svg)', text)
        self.assertIn('a=0.5', text)

    def test_determinacy_section(self):
        """Test the classify summary"""
        text = self.renderer.render(self.manifest, {'verdict': 'Linear', 'firing_conditions': ['roques']})
        self.assertIn('## Determinacy', text)
        self.assertIn('- firing conditions: roques', text)

    def test_empty_verdicts(self):
        """Test a run with nothing recorded"""
        self.manifest.verdicts.clear()
        self.assertIn('- none recorded', self.renderer.render(self.manifest))

    def test_manifest_without_params(self):
        """Test a sweep manifest, which carries no single parameter set"""
        manifest = RunManifestFactory.build(command='sweep', params=None, verdicts={'sweep': 'FAIL'})
        text = self.renderer.render(manifest)
        self.assertIn('- command: `sweep`', text)
        self.assertIn(f'- config_hash: `{manifest.config_hash}`', text)
        self.assertIn(f'- finished: {manifest.finished_at}', text)
        self.assertNotIn('- params:', text)
        self.assertIn('- sweep: **FAIL**', text)


class StageTimerTestCase(LabTestCase):
    """Per-stage wall-clock timing"""

    def test_stages_accumulate(self):
        """Test that repeated stages add up and are sorted by name"""
        timer = StageTimer()
        with timer.stage('wave'):
            pass
        with timer.stage('simulate'):
            pass
        with timer.stage('wave'):
            pass
        timings = timer.as_dict()
        self.assertEqual(list(timings), ['simulate', 'wave'])
        self.assertTrue(all(seconds >= 0.0 for seconds in timings.values()))

    def test_stage_recorded_on_error(self):
        """Test that a failing stage is still timed"""
        timer = StageTimer()
        with self.assertRaises(RuntimeError):
            with timer.stage('broken'):
                raise RuntimeError('boom')
        self.assertIn('broken', timer.as_dict())
