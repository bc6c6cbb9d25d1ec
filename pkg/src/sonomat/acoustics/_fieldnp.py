"""Pure-numpy pressure-superposition kernel (fallback for the compiled core).

Same contract as the compiled kernel: far-field circular-piston
superposition, NaN for probe points coincident with an element center.
Evaluation is chunked over probe points to bound memory; the per-point
summation order is fixed, so repeated calls are bitwise identical.
"""

from __future__ import annotations

import numpy as np
from scipy.special import j1

BACKEND = "numpy"

_CHUNK = 8192


def _directivity(ka_sin: np.ndarray) -> np.ndarray:
    out = np.ones_like(ka_sin)
    nz = ka_sin != 0.0
    out[nz] = 2.0 * j1(ka_sin[nz]) / ka_sin[nz]
    return out


def pressure_sum(
    points: np.ndarray,
    elements: np.ndarray,
    phases: np.ndarray,
    amplitudes: np.ndarray,
    k: float,
    element_radius: float,
    reference_amplitude: float,
) -> np.ndarray:
    """Complex pressure at each probe point; see the compiled kernel."""
    points = np.asarray(points, dtype=np.float64)
    out = np.empty(points.shape[0], dtype=np.complex128)
    ka = k * element_radius
    for start in range(0, points.shape[0], _CHUNK):
        chunk = points[start : start + _CHUNK]
        diff = chunk[:, None, :] - elements[None, :, :]  # (n, m, 3)
        lat = np.hypot(diff[:, :, 0], diff[:, :, 1])
        d = np.sqrt(lat * lat + diff[:, :, 2] ** 2)
        degenerate = (d == 0.0).any(axis=1)
        d_safe = np.where(d == 0.0, 1.0, d)
        direct = _directivity(ka * lat / d_safe)
        arg = k * d + phases[None, :]
        mag = amplitudes[None, :] * reference_amplitude * direct / d_safe
        vals = (mag * np.cos(arg)).sum(axis=1) + 1j * (mag * np.sin(arg)).sum(axis=1)
        vals[degenerate] = complex(np.nan, np.nan)
        out[start : start + _CHUNK] = vals
    return out
