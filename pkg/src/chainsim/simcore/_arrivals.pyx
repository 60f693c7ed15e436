# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of the pure-Python store-day service loop.

Draws doubles straight from the generator's bit stream, with the same
floating-point expressions in the same order as kernels._serve_store_day_py,
so both implementations return byte-identical results for the same stream.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport floor, log1p, sqrt

from numpy.random cimport bitgen_t


def serve_store_day(object bit_generator, double open_t, double close_t,
                    double ia_mean, double ia_lo, double ia_hi,
                    double q_lo, double q_mode, double q_hi, long on_hand):
    """Serve one (store, item) business day; see kernels.serve_store_day."""
    cdef bitgen_t *rng
    cdef const char *capsule_name = "BitGenerator"
    rng = <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, capsule_name)

    cdef double span = q_hi - q_lo
    cdef double left = q_mode - q_lo
    cdef double right = q_hi - q_mode
    cdef double t = open_t
    cdef long served_qty = 0, lost_qty = 0, fso = 0, to = 0, demand = 0
    cdef double x, u, xx
    cdef long q

    while True:
        while True:
            x = -ia_mean * log1p(-rng.next_double(rng.state))
            if ia_lo <= x and x <= ia_hi:
                break
        t = t + x
        if t >= close_t:
            break
        u = rng.next_double(rng.state)
        if u * span < left:
            xx = q_lo + sqrt(u * span * left)
        else:
            xx = q_hi - sqrt((1.0 - u) * span * right)
        q = <long> floor(xx + 0.5)
        to += 1
        demand += q
        if on_hand >= q:
            on_hand -= q
            served_qty += q
            fso += 1
        else:
            lost_qty += q
    return on_hand, served_qty, lost_qty, fso, to, demand
