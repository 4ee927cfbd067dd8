"""
Tests for experiment files, CLI overrides and the config hash
"""

from django.test import override_settings

from core.exceptions import ConfigError
from core.utils.experiment_config import ExperimentConfig, lab_default
from tests.fixtures.base import LabTestCase


class ExperimentConfigTestCase(LabTestCase):
    """Loading, overriding and hashing experiment configurations"""

    def _write(self, name, text):
        path = self.runs_root / name
        path.write_text(text, encoding='utf-8')
        return path

    def test_load_and_read_values(self):
        """Test typed access to file values"""
        path = self._write('run.ini', '[params]\na = 0.5\nb = 1.5\nd = 1\nr = 1\n\n'
                                      '[simulation]\nu_support = -5, 5\nt_end = 50\n')
        config = ExperimentConfig.load(path)
        self.assertEqual(config.params().to_dict(), self.linear.to_dict())
        self.assertEqual(config.get_floats('simulation', 'u_support'), (-5.0, 5.0))
        self.assertEqual(config.get_float('simulation', 't_end'), 50.0)
        self.assertIsNone(config.get_float('simulation', 'dt'))
        self.assertEqual(config.get_int('simulation', 'dt', 7), 7)

    def test_missing_file(self):
        """Test ConfigError for a path that does not exist"""
        with self.assertRaises(ConfigError):
            ExperimentConfig.load(self.runs_root / 'absent.ini')

    def test_unknown_section(self):
        """Test that sections outside the known set are refused"""
        path = self._write('bad.ini', '[database]\nname = x\n')
        with self.assertRaises(ConfigError):
            ExperimentConfig.load(path)

    def test_overrides_win(self):
        """Test that flags replace file values and None leaves them alone"""
        path = self._write('run.ini', '[params]\na = 0.5\nb = 1.5\nd = 1\nr = 1\n')
        config = ExperimentConfig.load(path)
        config.apply_overrides({'params': {'a': 0.25, 'b': None}, 'wave': {'tol': 1e-4}})
        self.assertEqual(config.get_float('params', 'a'), 0.25)
        self.assertEqual(config.get_float('params', 'b'), 1.5)
        self.assertEqual(config.get_float('wave', 'tol'), 1e-4)

    def test_hash_ignores_order(self):
        """Test that the hash depends on content, not on insertion order"""
        first = ExperimentConfig.from_mapping({'params': {'a': 0.5, 'b': 1.5}, 'wave': {'tol': 1e-3}})
        second = ExperimentConfig.from_mapping({'wave': {'tol': 1e-3}, 'params': {'b': 1.5, 'a': 0.5}})
        self.assertEqual(first.config_hash, second.config_hash)
        self.assertEqual(len(first.config_hash), 64)

        changed = ExperimentConfig.from_mapping({'params': {'a': 0.5, 'b': 1.6}, 'wave': {'tol': 1e-3}})
        self.assertNotEqual(first.config_hash, changed.config_hash)

    def test_render_round_trips_through_load(self):
        """Test that the rendered text reloads to the same hash"""
        config = ExperimentConfig.from_mapping({'params': {'a': 0.5, 'b': 1.5, 'd': 1.0, 'r': 1.0},
                                                'simulation': {'v_support': (-5.0, 5.0)}})
        reloaded = ExperimentConfig.load(self._write('rendered.ini', config.render()))
        self.assertEqual(reloaded.config_hash, config.config_hash)

    def test_params_errors(self):
        """Test missing and invalid parameters"""
        with self.assertRaises(ConfigError) as missing:
            ExperimentConfig.from_mapping({'params': {'a': 0.5}}).params()
        self.assertEqual(missing.exception.details['missing'], ['b', 'd', 'r'])
        with self.assertRaises(ConfigError):
            ExperimentConfig.from_mapping({'params': {'a': 0.5, 'b': 1.5, 'd': -1.0, 'r': 1.0}}).params()

    def test_non_numeric_value(self):
        """Test a value that is not a number"""
        config = ExperimentConfig.from_mapping({'simulation': {'dt': 'small'}})
        with self.assertRaises(ConfigError):
            config.get_float('simulation', 'dt')

    def test_lab_default(self):
        """Test defaults read from settings"""
        self.assertEqual(lab_default('wave', 'tol'), 1e-3)
        with override_settings(LV_LAB={'wave': {'tol': 1e-5}}):
            self.assertEqual(lab_default('wave', 'tol'), 1e-5)
        with self.assertRaises(ConfigError):
            lab_default('wave', 'nonexistent')
