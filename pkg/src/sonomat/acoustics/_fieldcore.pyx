# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pressure-superposition kernel.

Per probe point, sums the far-field circular-piston contribution of every
element in element order (fixed summation order, so repeated calls are
bitwise identical). Points coincident with an element center yield NaN.
"""

from libc.math cimport sqrt, sin, cos, isnan, NAN

import numpy as np
cimport numpy as cnp

from scipy.special.cython_special cimport j1 as c_j1

cnp.import_array()

BACKEND = "compiled"


cdef inline double _directivity(double ka_sin) nogil:
    if ka_sin == 0.0:
        return 1.0
    return 2.0 * c_j1(ka_sin) / ka_sin


def pressure_sum(
    cnp.ndarray[cnp.float64_t, ndim=2] points,
    cnp.ndarray[cnp.float64_t, ndim=2] elements,
    cnp.ndarray[cnp.float64_t, ndim=1] phases,
    cnp.ndarray[cnp.float64_t, ndim=1] amplitudes,
    double k,
    double element_radius,
    double reference_amplitude,
):
    """Complex pressure at each probe point.

    points: (N, 3) world coordinates; elements: (M, 3) element centers.
    Returns complex128 (N,); NaN+NaNj where a point coincides with an element.
    """
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = elements.shape[0]
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] out = np.empty(n, dtype=np.complex128)
    cdef double[:, :] pts = points
    cdef double[:, :] els = elements
    cdef double[:] phs = phases
    cdef double[:] amps = amplitudes
    cdef Py_ssize_t i, j
    cdef double dx, dy, dz, lat, d, ka_sin, arg, mag
    cdef double re, im
    cdef double ka = k * element_radius
    cdef bint degenerate

    for i in range(n):
        re = 0.0
        im = 0.0
        degenerate = False
        for j in range(m):
            dx = pts[i, 0] - els[j, 0]
            dy = pts[i, 1] - els[j, 1]
            dz = pts[i, 2] - els[j, 2]
            lat = sqrt(dx * dx + dy * dy)
            d = sqrt(lat * lat + dz * dz)
            if d == 0.0:
                degenerate = True
                break
            ka_sin = ka * lat / d
            arg = k * d + phs[j]
            mag = amps[j] * reference_amplitude * _directivity(ka_sin) / d
            re += mag * cos(arg)
            im += mag * sin(arg)
        if degenerate:
            out[i] = complex(NAN, NAN)
        else:
            out[i] = complex(re, im)
    return out
