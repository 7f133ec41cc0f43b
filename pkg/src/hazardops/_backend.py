"""Selects compiled kernels or their pure-Python twins at import time.

Set ``HAZARDOPS_PURE_PYTHON=1`` to force the fallbacks even when the
extension modules are built.
"""

import importlib
import logging
import os

log = logging.getLogger(__name__)

FORCE_PURE = os.environ.get("HAZARDOPS_PURE_PYTHON", "").strip() not in ("", "0")


def load_compiled(module):
    """Import ``hazardops.<module>`` if compiled and allowed, else return None."""
    if FORCE_PURE:
        return None
    try:
        return importlib.import_module(f"hazardops.{module}")
    except ImportError as exc:
        log.debug("compiled kernel %s unavailable: %s", module, exc)
        return None
