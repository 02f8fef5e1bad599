# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled confusion accumulation kernel.

Single fused pass over the label pair: ignore filtering, validation,
and counting, with no intermediate arrays. Semantics match
``_confusion_np.update_counts`` exactly.
"""


def update_counts(long long[::1] gt, long long[::1] pred,
                  long long[:, ::1] counts, long long ignore_index):
    """Returns the flat position of the first illegal label, or -1."""
    cdef Py_ssize_t n = gt.shape[0]
    cdef long long k = counts.shape[0]
    cdef Py_ssize_t i
    cdef long long g, p
    with nogil:
        for i in range(n):
            g = gt[i]
            p = pred[i]
            if p < 0 or p >= k:
                with gil:
                    return i
            if g == ignore_index:
                continue
            if g < 0 or g >= k:
                with gil:
                    return i
            counts[g, p] += 1
    return -1
