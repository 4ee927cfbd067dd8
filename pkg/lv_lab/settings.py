"""
Django settings for the lv_lab project.

The project has no web surface and no database: Django provides settings,
logging configuration and management commands for the experiment harness.
"""

from pathlib import Path

import structlog
from decouple import config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config('SECRET_KEY', default='django-insecure-lv-lab-local-only')

DEBUG = config('DEBUG', default=False, cast=bool)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',
]

DATABASES = {}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Laboratory defaults
# Services read these through django.conf.settings.LV_LAB; experiment files and
# CLI flags override them per run.

RUNS_ROOT = Path(config('LVLAB_RUNS_ROOT', default=str(BASE_DIR / 'runs')))

LV_LAB = {
    'wave': {
        'L': 60.0,
        'n': 6001,
        'tol': 1e-3,
        'scan_points': 9,
        'max_newton_iterations': 50,
        'newton_tol': 1e-9,
        'rate_tolerance': 0.05,
    },
    'simulation': {
        'h': 0.1,
        'dt': 0.05,
        'snapshot_every': 1.0,
        't_end': 200.0,
        'support': 5.0,
        'domain_margin': 50.0,
        'implicit_startup_steps': 4,
        'blowup_bound': 10.0,
        'boundary_warning_fraction': 0.1,
        'positivity_tolerance': 1e-10,
    },
    'tracking': {
        'level': 0.5,
        'window_start': 100.0,
        'window_end': 200.0,
        'min_samples': 20,
        'drift_window_start': 50.0,
        'drift_tolerance': 0.3,
        'convergence_threshold': 0.05,
        'convergence_tail': 100.0,
        'speed_tolerance': 0.03,
    },
    'verify': {
        't_span': 100.0,
        'half_width': 40.0,
        'slack_factor': 10.0,
        'activation_start': 10.0,
        'max_shift': 200.0,
        'ordering_tol': 1e-8,
    },
    'sweep': {
        'max_workers': config('LVLAB_MAX_WORKERS', default=1, cast=int),
    },
}


# Logging

LOG_LEVEL = config('LVLAB_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'core': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}

structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt='iso'),
        structlog.processors.format_exc_info,
        structlog.processors.KeyValueRenderer(key_order=['event', 'run_id', 'command']),
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)
