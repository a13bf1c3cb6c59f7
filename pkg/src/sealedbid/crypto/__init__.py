"""Cryptographic kernels with a compiled fast path.

The Cython extension is preferred when importable; otherwise the
pure-Python backend is used. `SEALEDBID_BACKEND=pure` forces the fallback,
`SEALEDBID_BACKEND=compiled` fails loudly if the extension is missing.
"""

import os

from sealedbid._core import _purepy
from sealedbid.errors import ConfigError


def _load_backend():
    choice = os.environ.get("SEALEDBID_BACKEND", "auto").strip().lower()
    if choice in ("pure", "python"):
        return _purepy
    if choice in ("auto", "", "compiled", "cython"):
        try:
            from sealedbid._core import _speedups
            return _speedups
        except ImportError:
            if choice in ("compiled", "cython"):
                raise ConfigError(
                    "SEALEDBID_BACKEND=%s but the compiled extension is not built" % choice
                )
            return _purepy
    raise ConfigError("unknown SEALEDBID_BACKEND value: %r" % choice)


def available_backends():
    """Name -> module map of importable backends (used by benchmarks/tests)."""
    found = {"pure": _purepy}
    try:
        from sealedbid._core import _speedups
        found["compiled"] = _speedups
    except ImportError:
        pass
    return found


backend = _load_backend()
IMPLEMENTATION = backend.IMPLEMENTATION
keccak_256 = backend.keccak_256
