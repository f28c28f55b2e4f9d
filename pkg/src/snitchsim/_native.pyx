# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled hot kernels; API mirrors snitchsim._pure."""

cdef extern from "math.h":
    double c_fma "fma"(double, double, double) nogil


cpdef double fma(double a, double b, double c):
    return c_fma(a, b, c)


def affine_addresses(long long base, strides, bounds):
    cdef list addrs = [base]
    cdef list nxt
    cdef long long s, a
    cdef long i, n
    for stride, bound in zip(strides, bounds):
        s = stride
        n = bound
        nxt = []
        for i in range(n):
            for a in addrs:
                nxt.append(a + i * s)
        addrs = nxt
    return addrs


def arbitrate(list banks, list pointers, int n_init):
    cdef int nb = len(pointers)
    cdef int i, b, key
    cdef list best = [-1] * nb
    cdef list best_key = [n_init] * nb
    cdef list touched = []
    for i in range(len(banks)):
        b = banks[i]
        if b < 0:
            continue
        key = (i - <int>pointers[b]) % n_init
        if key < 0:
            key += n_init
        if best[b] < 0:
            touched.append(b)
        if key < <int>best_key[b]:
            best[b] = i
            best_key[b] = key
    cdef list out = []
    for b in touched:
        i = best[b]
        pointers[b] = (i + 1) % n_init
        out.append(i)
    out.sort()
    return out
