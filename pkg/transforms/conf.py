"""
Numeric defaults, overridable from settings.WTRANS or per run
"""

from contextlib import contextmanager
import threading

from django.conf import settings

DEFAULTS = {
    'BISECTION_TOL': 1e-12,
    'TRUNCATION_TOL': 1e-12,
    'MAX_LAZY_PIECES': 1024,
    'MAX_PIECES_PER_MARGIN': 64,
    'SUM_TOL': 1e-6,
    'DERIVATIVE_STEP': 1e-6,
    'NUDGE': 1e-9,
    'STUDENT_T_NU': 1.0,
    'QUAD_ABS_TOL': 1e-9,
}

_local = threading.local()


def get_setting(name):
    overrides = getattr(_local, 'overrides', None)
    if overrides and name in overrides:
        return overrides[name]
    configured = getattr(settings, 'WTRANS', {}) if settings.configured else {}
    if name in configured:
        return configured[name]
    return DEFAULTS[name]


@contextmanager
def override_tolerances(values):
    """Scope tolerance overrides (CLI --tol) to one run."""
    unknown = set(values) - set(DEFAULTS)
    if unknown:
        raise KeyError(f"Unknown tolerance keys: {', '.join(sorted(unknown))}")
    previous = getattr(_local, 'overrides', None)
    _local.overrides = {**(previous or {}), **values}
    try:
        yield
    finally:
        _local.overrides = previous


def active_overrides():
    """Overrides in force on this thread, for handing to worker threads."""
    return dict(getattr(_local, 'overrides', None) or {})
