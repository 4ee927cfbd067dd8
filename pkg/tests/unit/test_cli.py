"""
Tests for the command-line surface: argument parsing, exit codes and the
files a run leaves behind
"""

import io
import json

from core.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, build_parser, overrides_from_options, run_cli
from core.services.experiment_harness import ExperimentHarness
from core.utils.repositories import FilesystemRunRepository
from tests.fixtures.base import LabTestCase


class _BrokenHarness(ExperimentHarness):
    """Harness whose classify step crashes after the run directory exists"""

    def classify(self, config):
        self.open_run('classify', config, config.params())
        raise RuntimeError('solver exploded')


class CliTestCase(LabTestCase):
    """Exit codes and run artefacts"""

    def setUp(self):
        """Set up output buffers and a harness on the temporary runs root"""
        super().setUp()
        self.out = io.StringIO()
        self.err = io.StringIO()
        self.harness = ExperimentHarness(FilesystemRunRepository(self.runs_root))

    def _run(self, *argv, harness=None):
        return run_cli(list(argv), harness=harness or self.harness, out=self.out, err=self.err)

    def test_no_arguments(self):
        """Test help and exit 2 without a command"""
        self.assertEqual(self._run(), EXIT_USAGE)
        self.assertIn('usage', self.err.getvalue())

    def test_unknown_flag(self):
        """Test exit 2 for a flag the command does not take"""
        self.assertEqual(self._run('classify', '--bogus', '1'), EXIT_USAGE)

    def test_classify_writes_a_run(self):
        """Test exit 0, the one-line verdict and the run files"""
        code = self._run('classify', '--a', '0.5', '--b', '1.5', '--d', '1', '--r', '1')
        self.assertEqual(code, EXIT_OK, self.err.getvalue())
        summary = json.loads(self.out.getvalue().strip())
        run_dir = self.runs_root / summary['run_id']
        self.assertTrue((run_dir / 'manifest.json').is_file())
        self.assertTrue((run_dir / 'data/results.json').is_file())
        self.assertTrue((run_dir / 'report.md').is_file())

        manifest = json.loads((run_dir / 'manifest.json').read_text())
        self.assertEqual(manifest['params'], self.linear.to_dict())
        self.assertIn('determinacy', manifest['verdicts'])
        self.assertIn('config.ini', manifest['files'])
        self.assertIsNotNone(manifest['finished_at'])

    def test_report_of_existing_run(self):
        """Test re-rendering the summary of a finished run"""
        self._run('classify', '--a', '0.5', '--b', '1.5', '--d', '1', '--r', '1')
        run_id = json.loads(self.out.getvalue().strip())['run_id']
        self.out.truncate(0)
        self.out.seek(0)
        self.assertEqual(self._run('report', run_id), EXIT_OK)
        self.assertIn(f'# Run {run_id}', self.out.getvalue())

    def test_report_of_unknown_run(self):
        """Test exit 2 for a run id without a directory"""
        self.assertEqual(self._run('report', 'missing-run'), EXIT_USAGE)
        self.assertIn('error:', self.err.getvalue())

    def test_invalid_parameters(self):
        """Test exit 2 for parameters outside 0 < a < 1 < b"""
        self.assertEqual(self._run('classify', '--a', '0.5', '--b', '0.8', '--d', '1', '--r', '1'), EXIT_USAGE)
        self.assertEqual(self._run('classify', '--a', '-1', '--b', '1.5', '--d', '1', '--r', '1'), EXIT_USAGE)

    def test_missing_parameters(self):
        """Test exit 2 when the parameters are incomplete"""
        self.assertEqual(self._run('classify', '--a', '0.5'), EXIT_USAGE)

    def test_config_file_with_overrides(self):
        """Test that flags override the experiment file"""
        path = self.runs_root / 'experiment.ini'
        path.write_text('[params]\na = 0.5\nb = 0.8\nd = 1\nr = 1\n', encoding='utf-8')
        self.assertEqual(self._run('classify', '--config', str(path)), EXIT_USAGE)
        self.assertEqual(self._run('classify', '--config', str(path), '--b', '1.5'), EXIT_OK)

    def test_internal_error_writes_diagnostic(self):
        """Test exit 1 and a traceback inside the run directory"""
        harness = _BrokenHarness(FilesystemRunRepository(self.runs_root))
        code = self._run('classify', '--a', '0.5', '--b', '1.5', '--d', '1', '--r', '1', harness=harness)
        self.assertEqual(code, EXIT_FAILED)
        diagnostic = self.runs_root / harness.current.manifest.run_id / 'diagnostic.txt'
        self.assertIn('solver exploded', diagnostic.read_text())
        self.assertIn('diagnostic written', self.err.getvalue())


class ParserTestCase(LabTestCase):
    """Flag to config translation"""

    def test_overrides_from_options(self):
        """Test that given flags land in their sections and absent ones are dropped"""
        options = vars(build_parser().parse_args(
            ['track', '--a', '0.5', '--t-end', '50', '--level', '0.4', '--scenario', 'B']))
        overrides = overrides_from_options(options)
        self.assertEqual(overrides['params'], {'a': 0.5})
        self.assertEqual(overrides['simulation'], {'t_end': 50.0, 'scenario': 'B'})
        self.assertEqual(overrides['tracking'], {'level': 0.4})
        self.assertNotIn('verify', overrides)

    def test_sweep_value_lists(self):
        """Test that sweep grids map onto the [sweep] section"""
        options = vars(build_parser().parse_args(['sweep', '--a-values', '0.3,0.5', '--kind', 'wave']))
        overrides = overrides_from_options(options)
        self.assertEqual(overrides['sweep'], {'a': '0.3,0.5', 'kind': 'wave'})
