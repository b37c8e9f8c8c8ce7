import os
from pathlib import Path
from dotenv import load_dotenv
import dj_database_url
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-wlab-local-only')

DEBUG = os.getenv('DEBUG', 'False') == 'True'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'rest_framework',
    'transforms.apps.TransformsConfig',
    'copulas.apps.CopulasConfig',
    'fitting.apps.FittingConfig',
]


# Database
# https://docs.djangoproject.com/en/4.2/ref/settings/#databases

DATABASES = {
    'default': dj_database_url.config(
        default=os.getenv('DATABASE_URL', f"sqlite:///{BASE_DIR / 'db.sqlite3'}")
    )
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# REST Framework Configuration
# Serializers validate JSON descriptors only; nothing is served over HTTP.
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}


# Logging
# Artifacts go to stdout, diagnostics to stderr.

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'stream': 'ext://sys.stderr',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': os.getenv('WTRANS_LOG_LEVEL', 'INFO'),
    },
}


# ============================================================================
# W-TRANSFORM NUMERICS
# ============================================================================

def _env_float(name, default):
    value = os.getenv(f'WTRANS_{name}')
    return float(value) if value not in (None, '') else default


def _env_int(name, default):
    value = os.getenv(f'WTRANS_{name}')
    return int(value) if value not in (None, '') else default


WTRANS = {
    # Piece inverses by bisection stop at this width (relative to the piece)
    'BISECTION_TOL': _env_float('BISECTION_TOL', 1e-12),
    # Lazy countable pieces are summed until the remaining F_X mass drops below this
    'TRUNCATION_TOL': _env_float('TRUNCATION_TOL', 1e-12),
    'MAX_LAZY_PIECES': _env_int('MAX_LAZY_PIECES', 1024),
    'MAX_PIECES_PER_MARGIN': _env_int('MAX_PIECES_PER_MARGIN', 64),
    # Sum of preimage weights must equal one within this
    'SUM_TOL': _env_float('SUM_TOL', 1e-6),
    'DERIVATIVE_STEP': _env_float('DERIVATIVE_STEP', 1e-6),
    'NUDGE': _env_float('NUDGE', 1e-9),
    'STUDENT_T_NU': _env_float('STUDENT_T_NU', 1.0),
    'QUAD_ABS_TOL': _env_float('QUAD_ABS_TOL', 1e-9),
}

# Dataset lookup for `reproduce danube`
WTRANS_DATA_DIR = Path(os.getenv('WTRANS_DATA_DIR', BASE_DIR / 'data'))
WTRANS_DANUBE_SHA256 = os.getenv('WTRANS_DANUBE_SHA256', '')
