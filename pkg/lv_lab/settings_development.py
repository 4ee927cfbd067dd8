"""
Development Settings for lv_lab
Environment-specific settings for development
"""

import copy

from .settings import *

# Ensure logs directory exists for FileHandler
LOGS_DIR = BASE_DIR / 'logs'
LOGS_DIR.mkdir(exist_ok=True)

DEBUG = True

# Runs stay inside the checkout during development
RUNS_ROOT = Path(config('LVLAB_RUNS_ROOT', default=str(BASE_DIR / 'runs_dev')))

# Smaller defaults keep interactive experiments fast
LV_LAB = copy.deepcopy(LV_LAB)
LV_LAB['wave']['tol'] = 1e-2
LV_LAB['simulation']['snapshot_every'] = 2.0

# Solver traces from core go to a file as well
LOGGING = copy.deepcopy(LOGGING)
LOGGING['handlers']['console']['formatter'] = 'simple'
LOGGING['handlers']['file'] = {
    'class': 'logging.FileHandler',
    'filename': str(LOGS_DIR / 'development.log'),
    'formatter': 'verbose',
}
LOGGING['loggers']['core'].update(handlers=['console', 'file'], level='DEBUG')
