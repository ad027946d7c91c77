# Compiled backend for the per-trial simulation loop.
#
# The draw sequence is pinned and shared with fallback.py: image i consumes
# stream values at counters 2*i (ground truth) and 2*i+1 (filter decision),
# value(key, j) = splitmix64_finalizer(key + (j+1)*GAMMA mod 2**64), and
# uniforms are the top 53 bits scaled to [0, 1). Any change here must be
# mirrored there, bit for bit.

NAME = "compiled"

cdef extern from *:
    """
    #include <stdint.h>
    """
    ctypedef unsigned long long uint64_t


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _value(uint64_t key, uint64_t counter) noexcept nogil:
    return _mix(key + (counter + 1) * <uint64_t>0x9E3779B97F4A7C15ULL)


cdef inline double _uniform(uint64_t key, uint64_t counter) noexcept nogil:
    return <double>(_value(key, counter) >> 11) * (1.0 / 9007199254740992.0)


def run_fixed(unsigned long long key, long long n_gen, double p_clean,
              double pass_clean, double pass_defect):
    """Simulate a fixed number of generated images; returns (n_gen, tp, fp, tn, fn)."""
    cdef long long i, tp = 0, fp = 0, tn = 0, fn = 0
    cdef uint64_t counter
    cdef double threshold
    cdef bint clean, passed
    with nogil:
        for i in range(n_gen):
            counter = (<uint64_t>i) * 2
            clean = _uniform(key, counter) < p_clean
            threshold = pass_clean if clean else pass_defect
            passed = _uniform(key, counter + 1) < threshold
            if clean:
                if passed:
                    tp += 1
                else:
                    fn += 1
            else:
                if passed:
                    fp += 1
                else:
                    tn += 1
    return n_gen, tp, fp, tn, fn


def run_target(unsigned long long key, long long target, long long cap, long long batch,
               double p_clean, double pass_clean, double pass_defect):
    """Generate until ``target`` acceptances or ``cap`` images; returns
    (n_gen, tp, fp, tn, fn, reached). ``batch`` is accepted for interface
    parity with the vectorized backend; the scalar loop needs no batching."""
    cdef long long i = 0, tp = 0, fp = 0, tn = 0, fn = 0
    cdef uint64_t counter
    cdef double threshold
    cdef bint clean, passed, reached = False
    with nogil:
        while i < cap:
            counter = (<uint64_t>i) * 2
            clean = _uniform(key, counter) < p_clean
            threshold = pass_clean if clean else pass_defect
            passed = _uniform(key, counter + 1) < threshold
            i += 1
            if clean:
                if passed:
                    tp += 1
                    if tp == target:
                        reached = True
                        break
                else:
                    fn += 1
            else:
                if passed:
                    fp += 1
                else:
                    tn += 1
    return i, tp, fp, tn, fn, reached
