"""Double-double accumulation used by the compiled kernels.

Coalition-structure values are sums of table entries.  Plain float addition
is order dependent, so two solvers that find the same partition through
different split trees could disagree in the last bit.  The kernels keep every
running sum as an unevaluated pair ``hi + lo`` (error-free transformations
after Knuth and Dekker); rounding ``hi + lo`` recovers the correctly rounded
sum that :func:`math.fsum` would produce.
"""

from numba import njit


@njit(inline="always")
def two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


@njit(inline="always")
def dd_add(a_hi, a_lo, b_hi, b_lo):
    s, e = two_sum(a_hi, b_hi)
    e += a_lo + b_lo
    hi = s + e
    lo = e - (hi - s)
    return hi, lo


@njit(inline="always")
def dd_add_float(a_hi, a_lo, x):
    s, e = two_sum(a_hi, x)
    e += a_lo
    hi = s + e
    lo = e - (hi - s)
    return hi, lo


@njit(inline="always")
def dd_gt(a_hi, a_lo, b_hi, b_lo):
    # operands are normalised (|lo| <= ulp(hi) / 2), so compare lexicographically
    return a_hi > b_hi or (a_hi == b_hi and a_lo > b_lo)
