"""
Production Settings for lv_lab
Settings for long sweeps on batch hosts
"""

import copy

from .settings import *

DEBUG = False

# Log directory configuration
LOG_DIR = Path(config('LOG_DIR', default='/var/log/lv_lab'))
LOG_DIR.mkdir(parents=True, exist_ok=True)

LV_LAB = copy.deepcopy(LV_LAB)
LV_LAB['sweep']['max_workers'] = config('LVLAB_MAX_WORKERS', default=4, cast=int)

# structlog renders JSON lines, the console passes them through unchanged
LOGGING = copy.deepcopy(LOGGING)
LOGGING['formatters']['bare'] = {'format': '{message}', 'style': '{'}
LOGGING['handlers'] = {
    'console': {
        'class': 'logging.StreamHandler',
        'formatter': 'bare',
    },
    'file': {
        'class': 'logging.handlers.RotatingFileHandler',
        'filename': str(LOG_DIR / 'lab.log'),
        'maxBytes': 15 * 1024 * 1024,
        'backupCount': 10,
        'formatter': 'verbose',
    },
}
LOGGING['loggers']['core']['handlers'] = ['console', 'file']

structlog.configure(
    processors=[
        structlog.stdlib.filter_by_level,
        structlog.stdlib.add_logger_name,
        structlog.stdlib.add_log_level,
        structlog.processors.TimeStamper(fmt='iso'),
        structlog.processors.format_exc_info,
        structlog.processors.JSONRenderer(sort_keys=True),
    ],
    logger_factory=structlog.stdlib.LoggerFactory(),
    wrapper_class=structlog.stdlib.BoundLogger,
    cache_logger_on_first_use=True,
)
