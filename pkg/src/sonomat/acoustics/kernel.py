"""Backend selection for the pressure-field kernel.

The compiled extension is used when it imported cleanly; setting
SONOMAT_PURE_PYTHON=1 forces the numpy fallback. Both backends implement the
same contract and are compared by `sonomat bench` and the backend tests.
"""

from __future__ import annotations

import os

from sonomat.acoustics import _fieldnp

if os.environ.get("SONOMAT_PURE_PYTHON") == "1":
    _impl = _fieldnp
else:
    try:
        from sonomat.acoustics import _fieldcore as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fieldnp

BACKEND: str = _impl.BACKEND
pressure_sum = _impl.pressure_sum


def available_backends() -> dict[str, object]:
    """Name -> pressure_sum callable for every importable backend."""
    backends: dict[str, object] = {"numpy": _fieldnp.pressure_sum}
    try:
        from sonomat.acoustics import _fieldcore

        backends["compiled"] = _fieldcore.pressure_sum
    except ImportError:
        pass
    return backends
